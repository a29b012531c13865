//! Ball averages, oscillations and `BMO_H` norm estimates of grid functions.
//!
//! Means are quadratures over the grid cells that meet the ball, each cell
//! weighted by the measure of its intersection with the ball and the box
//! (exact in one dimension, sub-sampled otherwise).

use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::error::{domain, rejected, Error, Result};
use crate::geometry::{ball_family, critical_radius, dist, Ball, BallKind, FamilyOptions, SpaceContext};
use crate::grid::{GridFunction, GridGeometry};

/// Relative change under family refinement below which an estimate is
/// marked converged.
pub const CONVERGENCE_TOL: f64 = 0.05;

/// Quadrature weights of one ball on a grid.
#[derive(Debug, Clone)]
pub struct BallWeights {
    /// `(flat index, weight)`; weights are measures, not normalised.
    pub entries: Vec<(usize, f64)>,
    /// Measure of the ball clipped to the box.
    pub measure: f64,
    /// Whether the ball sticks out of the box.
    pub clipped: bool,
}

impl BallWeights {
    pub fn mean(&self, values: &[f64]) -> f64 {
        self.entries.iter().map(|&(i, w)| w * values[i]).sum::<f64>() / self.measure
    }

    /// Mean of `|v - mean(v)|`.
    pub fn oscillation(&self, values: &[f64]) -> f64 {
        let m = self.mean(values);
        self.entries.iter().map(|&(i, w)| w * (values[i] - m).abs()).sum::<f64>() / self.measure
    }
}

fn overlap(a: f64, b: f64, c: f64, d: f64) -> f64 {
    (b.min(d) - a.max(c)).max(0.0)
}

fn cell(geom: &GridGeometry, i: usize) -> (f64, f64) {
    let h = geom.spacing();
    let x = geom.coord(i);
    ((x - 0.5 * h).max(-geom.half_width), (x + 0.5 * h).min(geom.half_width))
}

/// Sub-samples per axis for cells cut by the sphere (`n >= 2`).
fn subsamples(n: usize) -> usize {
    if n <= 2 {
        8
    } else {
        4
    }
}

/// Cell weights of `ball` on `geom`. Fails when fewer than `2^n` grid
/// points lie inside the ball.
pub fn ball_weights(geom: &GridGeometry, ball: &Ball) -> Result<BallWeights> {
    let n = geom.n;
    if ball.center.len() != n {
        return Err(rejected("ball and grid differ in dimension"));
    }
    let h = geom.spacing();
    let l = geom.half_width;
    let r = ball.radius;
    let clipped = ball.center.iter().any(|c| c - r < -l || c + r > l);
    // index range per axis of the cells meeting the bounding box
    let mut lo = vec![0usize; n];
    let mut hi = vec![0usize; n];
    for d in 0..n {
        let a = ((ball.center[d] - r + l) / h - 0.5).floor().max(0.0);
        let b = ((ball.center[d] + r + l) / h + 0.5).ceil().min((geom.m - 1) as f64);
        if a > b {
            return Err(Error::Resolution(format!("ball of radius {r} misses the grid box")));
        }
        lo[d] = a as usize;
        hi[d] = b as usize;
    }
    let mut entries = Vec::new();
    let mut inside = 0usize;
    let mut k = lo.clone();
    let k_sub = subsamples(n);
    loop {
        let idx = geom.flat_index(&k);
        let p: Vec<f64> = k.iter().map(|&i| geom.coord(i)).collect();
        if ball.contains(&p) {
            inside += 1;
        }
        let cells: Vec<(f64, f64)> = k.iter().map(|&i| cell(geom, i)).collect();
        let w = if n == 1 {
            overlap(cells[0].0, cells[0].1, ball.center[0] - r, ball.center[0] + r)
        } else {
            cell_ball_measure(&cells, ball, k_sub)
        };
        if w > 0.0 {
            entries.push((idx, w));
        }
        // odometer over the index box
        let mut d = n;
        loop {
            if d == 0 {
                let measure = entries.iter().map(|e| e.1).sum::<f64>();
                if inside < 1 << n || measure <= 0.0 {
                    return Err(Error::Resolution(format!(
                        "ball of radius {r} holds {inside} grid points, need {}",
                        1 << n
                    )));
                }
                return Ok(BallWeights { entries, measure, clipped });
            }
            d -= 1;
            if k[d] < hi[d] {
                k[d] += 1;
                break;
            }
            k[d] = lo[d];
        }
    }
}

fn cell_ball_measure(cells: &[(f64, f64)], ball: &Ball, k_sub: usize) -> f64 {
    let r2 = ball.radius * ball.radius;
    let (mut near, mut far) = (0.0, 0.0);
    for (d, &(a, b)) in cells.iter().enumerate() {
        let c = ball.center[d];
        let nd = if c < a {
            a - c
        } else if c > b {
            c - b
        } else {
            0.0
        };
        let fd = (c - a).abs().max((b - c).abs());
        near += nd * nd;
        far += fd * fd;
    }
    let vol: f64 = cells.iter().map(|(a, b)| b - a).product();
    if vol <= 0.0 || near >= r2 {
        return 0.0;
    }
    if far <= r2 {
        return vol;
    }
    // cut by the sphere: midpoint sub-sampling
    let n = cells.len();
    let total = k_sub.pow(n as u32);
    let mut hit = 0usize;
    for s in 0..total {
        let mut rem = s;
        let mut d2 = 0.0;
        for (d, &(a, b)) in cells.iter().enumerate() {
            let j = rem % k_sub;
            rem /= k_sub;
            let y = a + (j as f64 + 0.5) * (b - a) / k_sub as f64;
            d2 += (y - ball.center[d]).powi(2);
        }
        if d2 < r2 {
            hit += 1;
        }
    }
    vol * hit as f64 / total as f64
}

fn check_dims(f: &GridFunction, ball: &Ball) -> Result<()> {
    if f.geom.n != ball.center.len() {
        return Err(rejected("ball and grid function differ in dimension"));
    }
    Ok(())
}

/// `f_B`, the mean of `f` over the ball (clipped to the box).
pub fn ball_mean(f: &GridFunction, ball: &Ball) -> Result<f64> {
    check_dims(f, ball)?;
    Ok(ball_weights(&f.geom, ball)?.mean(&f.samples))
}

/// Mean of `|f - f_B|` over the ball.
pub fn oscillation(f: &GridFunction, ball: &Ball) -> Result<f64> {
    check_dims(f, ball)?;
    Ok(ball_weights(&f.geom, ball)?.oscillation(&f.samples))
}

/// Weight multiplying oscillations over `B(x, s)`, `s <= gamma(x)`.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum LogWeight {
    /// `1 + log(gamma(x)/s)`: the T1 criterion.
    OnePlusLog,
    /// `log(gamma(x)/s)`: the pointwise multiplier criterion.
    Log,
}

impl LogWeight {
    pub fn eval(self, gamma: f64, s: f64) -> f64 {
        let l = (gamma / s).ln();
        match self {
            LogWeight::OnePlusLog => 1.0 + l,
            LogWeight::Log => l,
        }
    }
}

fn check_small_radius(x: &[f64], s: f64) -> Result<f64> {
    let g = critical_radius(x)?;
    if !(s > 0.0 && s <= g * (1.0 + 1e-12)) {
        return Err(domain(format!("radius {s} must lie in (0, gamma(x) = {g}]")));
    }
    Ok(g)
}

/// `(1 + log(gamma(x)/s))` times the oscillation over `B(x, s)`.
pub fn log_weighted_oscillation(f: &GridFunction, x: &[f64], s: f64) -> Result<f64> {
    let g = check_small_radius(x, s)?;
    let osc = oscillation(f, &Ball::new(x.to_vec(), s)?)?;
    Ok(LogWeight::OnePlusLog.eval(g, s) * osc)
}

/// A ball together with the value it attained.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Witness {
    pub center: Vec<f64>,
    pub radius: f64,
    pub value: f64,
}

/// Lower estimate of `||f||_{BMO_H}` over finite ball families.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct BmoEstimate {
    /// Sup of oscillations over small and critical balls.
    pub osc_sup: f64,
    /// Sup of means of `|f|` over balls of radius at least `gamma(center)`.
    pub mean_sup: f64,
    pub norm: f64,
    pub osc_witness: Option<Witness>,
    pub mean_witness: Option<Witness>,
    /// Balls evaluated.
    pub balls: usize,
    /// Balls of the family with too few grid points, left out.
    pub unresolved: usize,
    /// Balls that stick out of the box and were clipped.
    pub clipped: usize,
    /// Norm over the refined family (halved centre spacing, one more level).
    pub refined_norm: f64,
    /// Relative change under refinement is below [`CONVERGENCE_TOL`].
    pub converged: bool,
}

struct FamilySup {
    value: f64,
    witness: Option<Witness>,
    balls: usize,
    unresolved: usize,
    clipped: usize,
}

fn family_sup(geom: &GridGeometry, balls: &[Ball], score: impl Fn(&BallWeights, &Ball) -> f64 + Sync) -> FamilySup {
    let scored: Vec<Option<(f64, bool)>> = balls
        .par_iter()
        .map(|b| ball_weights(geom, b).ok().map(|w| (score(&w, b), w.clipped)))
        .collect();
    let mut out = FamilySup {
        value: 0.0,
        witness: None,
        balls: 0,
        unresolved: 0,
        clipped: 0,
    };
    for (b, s) in balls.iter().zip(scored) {
        match s {
            None => out.unresolved += 1,
            Some((v, clipped)) => {
                out.balls += 1;
                out.clipped += clipped as usize;
                if out.witness.is_none() || v > out.value {
                    out.value = v;
                    out.witness = Some(Witness {
                        center: b.center.clone(),
                        radius: b.radius,
                        value: v,
                    });
                }
            }
        }
    }
    out
}

fn families(ctx: &SpaceContext, opts: &FamilyOptions) -> Result<(Vec<Ball>, Vec<Ball>)> {
    let mut small = ball_family(ctx, BallKind::Small, opts)?;
    small.extend(ball_family(ctx, BallKind::Critical, opts)?);
    let large = ball_family(ctx, BallKind::Large, opts)?;
    Ok((small, large))
}

fn estimate_once(f: &GridFunction, ctx: &SpaceContext, opts: &FamilyOptions) -> Result<(FamilySup, FamilySup)> {
    if ctx.n != f.geom.n {
        return Err(rejected("context and grid function differ in dimension"));
    }
    if f.samples.iter().any(|v| !v.is_finite()) {
        return Err(rejected("grid function has non-finite samples"));
    }
    let (small, large) = families(ctx, opts)?;
    let abs: Vec<f64> = f.samples.iter().map(|v| v.abs()).collect();
    let osc = family_sup(&f.geom, &small, |w, _| w.oscillation(&f.samples));
    let mean = family_sup(&f.geom, &large, |w, _| w.mean(&abs));
    if osc.balls == 0 || mean.balls == 0 {
        return Err(Error::Resolution("no ball of the family is resolved by the grid".into()));
    }
    Ok((osc, mean))
}

/// [`bmo_h_norm_with`] on the default families.
pub fn bmo_h_norm(f: &GridFunction, ctx: &SpaceContext) -> Result<BmoEstimate> {
    bmo_h_norm_with(f, ctx, &FamilyOptions::default())
}

/// Sup of oscillations over the small and critical families and of means of
/// `|f|` over the large family; also evaluated on the refined families to
/// judge convergence. Balls holding fewer than `2^n` grid points are
/// counted as unresolved and left out.
pub fn bmo_h_norm_with(f: &GridFunction, ctx: &SpaceContext, opts: &FamilyOptions) -> Result<BmoEstimate> {
    let (osc, mean) = estimate_once(f, ctx, opts)?;
    let (osc_r, mean_r) = estimate_once(f, ctx, &opts.refined(ctx))?;
    let norm = osc.value.max(mean.value);
    let refined_norm = osc_r.value.max(mean_r.value);
    let converged = (refined_norm - norm).abs() <= CONVERGENCE_TOL * refined_norm.abs().max(norm.abs()) || refined_norm == norm;
    Ok(BmoEstimate {
        osc_sup: osc.value,
        mean_sup: mean.value,
        norm,
        osc_witness: osc.witness,
        mean_witness: mean.witness,
        balls: osc.balls + mean.balls,
        unresolved: osc.unresolved + mean.unresolved,
        clipped: osc.clipped + mean.clipped,
        refined_norm,
        converged,
    })
}

/// The logarithmic spike around `x0`: `log(gamma(x0)/s)` on `B(x0, s)`,
/// `log(gamma(x0)/|x - x0|)` out to radius `gamma(x0)`, zero beyond.
pub fn test_function(x: &[f64], s: f64, x0: &[f64]) -> Result<f64> {
    if x.len() != x0.len() {
        return Err(rejected("point and centre differ in dimension"));
    }
    let g = check_small_radius(x0, s)?;
    let r = dist(x, x0);
    Ok(if r <= s {
        (g / s).ln()
    } else if r <= g {
        (g / r).ln()
    } else {
        0.0
    })
}

/// Acceptance thresholds of [`multiplier_check`].
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct MultiplierThresholds {
    pub sup_norm: f64,
    pub logosc: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct MultiplierReport {
    pub sup_norm: f64,
    /// Sup over small and critical balls of `log(gamma(x)/s)` times the
    /// oscillation.
    pub logosc_sup: f64,
    pub logosc_witness: Option<Witness>,
    pub passes: bool,
}

/// Checks the two pointwise-multiplier conditions on the grid: `g` bounded,
/// and log-weighted oscillations over balls `B(x, s)`, `s <= gamma(x)`,
/// bounded.
pub fn multiplier_check(g: &GridFunction, ctx: &SpaceContext, thresholds: &MultiplierThresholds) -> Result<MultiplierReport> {
    multiplier_check_with(g, ctx, thresholds, &FamilyOptions::default())
}

pub fn multiplier_check_with(
    g: &GridFunction,
    ctx: &SpaceContext,
    thresholds: &MultiplierThresholds,
    opts: &FamilyOptions,
) -> Result<MultiplierReport> {
    if ctx.n != g.geom.n {
        return Err(rejected("context and grid function differ in dimension"));
    }
    if g.samples.iter().any(|v| !v.is_finite()) {
        return Err(rejected("multiplier has non-finite samples"));
    }
    let (small, _) = families(ctx, opts)?;
    let sup = family_sup(&g.geom, &small, |w, b| {
        let gamma = critical_radius(&b.center).unwrap_or(0.5);
        LogWeight::Log.eval(gamma, b.radius) * w.oscillation(&g.samples)
    });
    let sup_norm = g.max_abs();
    let passes = sup_norm.is_finite() && sup.value.is_finite() && sup_norm <= thresholds.sup_norm && sup.value <= thresholds.logosc;
    Ok(MultiplierReport {
        sup_norm,
        logosc_sup: sup.value,
        logosc_witness: sup.witness,
        passes,
    })
}

/// Multiplier reports of one function on growing boxes.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct MultiplierTrend {
    pub half_widths: Vec<f64>,
    pub reports: Vec<MultiplierReport>,
    /// Last over first sup norm.
    pub sup_norm_growth: f64,
    /// The sup norm increases on every enlargement and grows at least like
    /// the square root of the box size: no box-independent bound exists.
    pub unbounded: bool,
}

/// Runs [`multiplier_check`] for `g` sampled on `[-L, L]^n` for each `L`,
/// at `points_per_unit` grid points per unit length.
pub fn multiplier_trend(
    g: impl Fn(&[f64]) -> f64,
    n: usize,
    half_widths: &[f64],
    points_per_unit: f64,
    thresholds: &MultiplierThresholds,
) -> Result<MultiplierTrend> {
    if half_widths.len() < 2 {
        return Err(rejected("a trend needs at least two box sizes"));
    }
    let mut reports = Vec::with_capacity(half_widths.len());
    for &l in half_widths {
        let m = ((2.0 * l * points_per_unit).ceil() as usize / 2) * 2 + 1;
        let geom = GridGeometry::new(n, l, m)?;
        let f = GridFunction::from_fn(geom, &g)?;
        let ctx = SpaceContext::new(n, l, 1e-8)?;
        reports.push(multiplier_check(&f, &ctx, thresholds)?);
    }
    let first = reports[0].sup_norm;
    let last = reports[reports.len() - 1].sup_norm;
    let growth = if first > 0.0 {
        last / first
    } else if last > 0.0 {
        f64::INFINITY
    } else {
        1.0
    };
    let increasing = reports.windows(2).all(|w| w[1].sup_norm > w[0].sup_norm * (1.0 + 1e-9));
    let box_ratio = half_widths[half_widths.len() - 1] / half_widths[0];
    Ok(MultiplierTrend {
        half_widths: half_widths.to_vec(),
        reports,
        sup_norm_growth: growth,
        unbounded: increasing && growth >= box_ratio.sqrt(),
    })
}
