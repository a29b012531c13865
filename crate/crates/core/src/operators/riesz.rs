//! Truncated Riesz transforms `R_ε f(x) = ∫_{|x-y|>ε} R(x, y) f(y) dy`.
//!
//! Integrals are taken in polar coordinates around `x` with an antipodally
//! symmetric direction set, so the odd `1/|x-y|^n` part of the kernel
//! cancels pairwise at every radius and the radial integrand stays bounded
//! down to `r = 0`.

use std::f64::consts::PI;

use crate::error::{rejected, Error, Result};
use crate::grid::GridFunction;
use crate::hermite::riesz_kernel_fast;
use crate::quadrature::{extrapolate_to_zero, gauss_legendre, integrate_breaks, AdaptiveOptions};

/// Beyond this distance the kernel is below `1e-20` of its scale.
pub const RADIAL_CUTOFF: f64 = 14.0;

/// Directions and weights integrating over the unit sphere `S^{n-1}`.
#[derive(Debug, Clone)]
pub struct SphereRule {
    pub dirs: Vec<[f64; 3]>,
    pub weights: Vec<f64>,
}

impl SphereRule {
    /// `resolution` is the number of directions on a great circle (even).
    pub fn new(n: usize, resolution: usize) -> Result<Self> {
        let res = resolution.max(2).next_multiple_of(2);
        match n {
            1 => Ok(Self {
                dirs: vec![[1.0, 0.0, 0.0], [-1.0, 0.0, 0.0]],
                weights: vec![1.0, 1.0],
            }),
            2 => {
                let w = 2.0 * PI / res as f64;
                let dirs = (0..res)
                    .map(|k| {
                        let th = (k as f64 + 0.5) * w;
                        [th.cos(), th.sin(), 0.0]
                    })
                    .collect();
                Ok(Self {
                    dirs,
                    weights: vec![w; res],
                })
            }
            3 => {
                let (z, wz) = gauss_legendre(res / 2);
                let dphi = 2.0 * PI / res as f64;
                let mut dirs = Vec::new();
                let mut weights = Vec::new();
                for (zc, wc) in z.iter().zip(&wz) {
                    let rho = (1.0 - zc * zc).sqrt();
                    for k in 0..res {
                        let ph = (k as f64 + 0.5) * dphi;
                        dirs.push([rho * ph.cos(), rho * ph.sin(), *zc]);
                        weights.push(wc * dphi);
                    }
                }
                Ok(Self { dirs, weights })
            }
            _ => Err(Error::Unsupported(format!("Riesz transforms are implemented for n <= 3, got {n}"))),
        }
    }
}

/// Quadrature resolution of the truncated operators.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct RieszOptions {
    /// Directions per great circle for `n >= 2`.
    pub angular: usize,
    /// Gauss-Legendre nodes per radial cell close to the excision.
    pub near_order: usize,
    /// Nodes per cell further out.
    pub far_order: usize,
    /// Number of cells treated as "close".
    pub near_cells: usize,
}

impl Default for RieszOptions {
    fn default() -> Self {
        Self {
            angular: 24,
            near_order: 6,
            far_order: 2,
            near_cells: 16,
        }
    }
}

fn check_axis(f: &GridFunction, axis: usize) -> Result<()> {
    if axis >= f.geom.n {
        return Err(rejected(format!("axis {axis} out of range for dimension {}", f.geom.n)));
    }
    Ok(())
}

/// `R_ε f` for one radius.
pub fn truncated_riesz(f: &GridFunction, axis: usize, eps: f64) -> Result<GridFunction> {
    Ok(truncated_riesz_multi(f, axis, &[eps], &RieszOptions::default())?.remove(0))
}

/// `R_ε f` for several radii at once; the far field is shared.
pub fn truncated_riesz_multi(f: &GridFunction, axis: usize, eps: &[f64], opts: &RieszOptions) -> Result<Vec<GridFunction>> {
    check_axis(f, axis)?;
    let h = f.geom.spacing();
    for &e in eps {
        if !e.is_finite() || e < 2.0 * h * (1.0 - 1e-12) {
            return Err(Error::Resolution(format!(
                "truncation radius {e} is below two grid spacings ({})",
                2.0 * h
            )));
        }
    }
    if eps.is_empty() {
        return Ok(Vec::new());
    }
    let sphere = SphereRule::new(f.geom.n, opts.angular)?;
    let radial = RadialRule::new(eps, h, opts);
    let n = f.geom.n;
    let mut outputs = vec![vec![0.0; f.geom.len()]; eps.len()];
    let mut y = [0.0f64; 3];
    #[allow(clippy::needless_range_loop)]
    for idx in 0..f.geom.len() {
        let x = f.geom.point(idx);
        let mut panel_sums = vec![0.0; radial.panels.len()];
        for (p, panel) in radial.panels.iter().enumerate() {
            let mut acc = 0.0;
            for &(r, wr) in &panel.nodes {
                let mut ang = 0.0;
                for (dir, wd) in sphere.dirs.iter().zip(&sphere.weights) {
                    for d in 0..n {
                        y[d] = x[d] + r * dir[d];
                    }
                    let fy = f.interpolate(&y[..n]);
                    if fy != 0.0 {
                        ang += wd * riesz_kernel_fast(axis, &x, &y[..n]) * fy;
                    }
                }
                acc += wr * r.powi(n as i32 - 1) * ang;
            }
            panel_sums[p] = acc;
        }
        // cumulative from the outside in
        let mut tail = 0.0;
        let mut cum = vec![0.0; radial.panels.len() + 1];
        for p in (0..radial.panels.len()).rev() {
            tail += panel_sums[p];
            cum[p] = tail;
        }
        for (k, &start) in radial.eps_panel.iter().enumerate() {
            outputs[k][idx] = cum[start];
        }
    }
    Ok(outputs
        .into_iter()
        .map(|samples| GridFunction {
            geom: f.geom,
            samples,
            extension: f.extension,
        })
        .collect())
}

/// Principal value `R f` on the grid: `R_ε f` at `ε = 2h, 3h, 4h`
/// extrapolated to `ε = 0` by a quadratic in `ε`.
pub fn riesz_transform(f: &GridFunction, axis: usize) -> Result<GridFunction> {
    let h = f.geom.spacing();
    let eps = [2.0 * h, 3.0 * h, 4.0 * h];
    let outs = truncated_riesz_multi(f, axis, &eps, &RieszOptions::default())?;
    let samples = (0..f.geom.len())
        .map(|i| {
            let ys: Vec<f64> = outs.iter().map(|o| o.samples[i]).collect();
            extrapolate_to_zero(&eps, &ys)
        })
        .collect();
    Ok(GridFunction {
        geom: f.geom,
        samples,
        extension: f.extension,
    })
}

struct Panel {
    nodes: Vec<(f64, f64)>,
}

struct RadialRule {
    panels: Vec<Panel>,
    /// Index of the first panel of each requested radius.
    eps_panel: Vec<usize>,
}

impl RadialRule {
    fn new(eps: &[f64], h: f64, opts: &RieszOptions) -> Self {
        let e_min = eps.iter().cloned().fold(f64::INFINITY, f64::min);
        let mut breaks: Vec<f64> = eps.iter().cloned().filter(|&e| e < RADIAL_CUTOFF).collect();
        let mut k = (e_min / h).ceil() as i64;
        while (k as f64) * h < RADIAL_CUTOFF {
            breaks.push(k as f64 * h);
            k += 1;
        }
        breaks.push(RADIAL_CUTOFF);
        breaks.sort_by(f64::total_cmp);
        breaks.dedup_by(|a, b| (*a - *b).abs() <= 1e-9 * h);
        let near = gauss_legendre(opts.near_order);
        let far = gauss_legendre(opts.far_order);
        let near_limit = e_min + opts.near_cells as f64 * h;
        let panels: Vec<Panel> = breaks
            .windows(2)
            .map(|w| {
                let (x, wt) = if w[0] < near_limit { &near } else { &far };
                let c = 0.5 * (w[0] + w[1]);
                let hw = 0.5 * (w[1] - w[0]);
                Panel {
                    nodes: x.iter().zip(wt).map(|(x, wt)| (c + hw * x, hw * wt)).collect(),
                }
            })
            .collect();
        let eps_panel = eps
            .iter()
            .map(|&e| breaks.iter().position(|&b| (b - e).abs() <= 1e-9 * h).unwrap_or(panels.len()))
            .collect();
        Self { panels, eps_panel }
    }
}

/// `R_i 1(x)` on all of `R^n` together with the truncations `R_{ε_j} 1(x)`
/// for the given radii (any order). Adaptive quadrature in the radius.
pub(crate) fn riesz_on_one(axis: usize, x: &[f64], eps: &[f64], angular: usize) -> Result<(f64, Vec<f64>)> {
    let n = x.len();
    let sphere = SphereRule::new(n, angular)?;
    let mut f = |r: f64| -> f64 {
        if r == 0.0 {
            return 0.0;
        }
        let mut y = [0.0f64; 3];
        let mut ang = 0.0;
        for (dir, wd) in sphere.dirs.iter().zip(&sphere.weights) {
            for d in 0..n {
                y[d] = x[d] + r * dir[d];
            }
            ang += wd * riesz_kernel_fast(axis, x, &y[..n]);
        }
        r.powi(n as i32 - 1) * ang
    };
    let opts = AdaptiveOptions::with_tol(1e-11, 1e-10);
    let mut sorted: Vec<f64> = eps.to_vec();
    sorted.sort_by(f64::total_cmp);
    // Below ~1e-5 the rounding of `x ± r` swamps the antipodal cancellation;
    // the integrand is smooth there, so a fixed rule on (0, r0) avoids
    // sampling it at tiny radii.
    let r0 = sorted.iter().cloned().filter(|&e| e > 0.0).fold(1e-3, |m: f64, e| m.min(0.5 * e));
    let (gx, gw) = gauss_legendre(8);
    let head: f64 = gx.iter().zip(&gw).map(|(x, w)| 0.5 * r0 * w * f(0.5 * r0 * (1.0 + x))).sum();
    let mut bounds = vec![r0];
    bounds.extend(sorted.iter().cloned().filter(|&e| e > r0 && e < RADIAL_CUTOFF));
    bounds.push(RADIAL_CUTOFF);
    let mut seg = Vec::with_capacity(bounds.len() - 1);
    for w in bounds.windows(2) {
        let mut br = vec![w[0]];
        let mut r = 2.0 * w[0];
        while r < w[1] {
            br.push(r);
            r *= 4.0;
        }
        br.push(w[1]);
        seg.push(integrate_breaks(&mut f, &br, opts)?.value);
    }
    let total: f64 = head + seg.iter().sum::<f64>();
    // R_e 1 = integral over (e, cutoff): sum of the segments above e
    let truncs = eps
        .iter()
        .map(|&e| {
            let mut acc = 0.0;
            for (k, w) in bounds.windows(2).enumerate() {
                if w[0] >= e * (1.0 - 1e-15) {
                    acc += seg[k];
                }
            }
            acc
        })
        .collect();
    Ok((total, truncs))
}
