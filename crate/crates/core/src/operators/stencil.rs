//! One-dimensional heat operators as banded matrices, applied along each
//! axis of a tensor grid.
//!
//! When the kernel is wide compared with the spacing the rows are plain
//! lattice sums of the kernel (the lattice is continued past the box and
//! folded back according to the extension policy). Narrow kernels switch
//! to Gauss-Hermite nodes around the kernel's centre with local Lagrange
//! interpolation of the samples.

use std::f64::consts::PI;
use std::sync::OnceLock;

use crate::grid::{Extension, GridGeometry};
use crate::hermite::MedaParam;
use crate::quadrature::{gauss_hermite, lagrange_weights};

/// Lattice sums are spectrally accurate once the kernel width exceeds this
/// many grid spacings.
const LATTICE_MIN_WIDTH: f64 = 1.5;
/// Kernel support kept in the lattice regime, in standard deviations.
const LATTICE_HALF_SPAN: f64 = 10.0;
const GH_NODES: usize = 24;
const INTERP_ORDER: usize = 10;

fn gh_rule() -> &'static (Vec<f64>, Vec<f64>) {
    static RULE: OnceLock<(Vec<f64>, Vec<f64>)> = OnceLock::new();
    RULE.get_or_init(|| gauss_hermite(GH_NODES))
}

#[derive(Debug, Clone)]
pub(crate) struct Band {
    pub start: usize,
    pub w: Vec<f64>,
}

#[derive(Debug, Clone)]
pub(crate) struct Stencil1d {
    pub rows: Vec<Band>,
    /// Largest kernel mass discarded past the box (Zero extension only).
    pub dropped_mass: f64,
}

impl Stencil1d {
    pub fn apply_line(&self, input: &[f64], out: &mut [f64]) {
        for (o, row) in out.iter_mut().zip(&self.rows) {
            let seg = &input[row.start..row.start + row.w.len()];
            *o = compensated_dot(seg, &row.w);
        }
    }
}

/// Dot product in twice the working precision (error-free products and
/// sums), so outputs far below `sum |a_i b_i|` keep their relative accuracy.
fn compensated_dot(a: &[f64], b: &[f64]) -> f64 {
    let mut sum = 0.0f64;
    let mut err = 0.0f64;
    for (&x, &y) in a.iter().zip(b) {
        let p = x * y;
        let pe = x.mul_add(y, -p);
        let t = sum + p;
        let z = t - sum;
        let se = (sum - (t - z)) + (p - z);
        sum = t;
        err += pe + se;
    }
    sum + err
}

/// Accumulates weights on grid indices, folding or dropping the ones that
/// fall outside `[0, m)`.
struct RowBuilder {
    m: usize,
    ext: Extension,
    lo: usize,
    w: Vec<f64>,
    dropped: f64,
}

impl RowBuilder {
    fn new(m: usize, ext: Extension, lo: i64, hi: i64) -> Self {
        let lo_c = lo.clamp(0, m as i64 - 1) as usize;
        let hi_c = hi.clamp(0, m as i64 - 1) as usize;
        Self {
            m,
            ext,
            lo: lo_c,
            w: vec![0.0; hi_c - lo_c + 1],
            dropped: 0.0,
        }
    }

    fn add(&mut self, j: i64, w: f64) {
        let idx = if j < 0 || j >= self.m as i64 {
            match self.ext {
                Extension::Zero => {
                    self.dropped += w.abs();
                    return;
                }
                Extension::Clamp => j.clamp(0, self.m as i64 - 1) as usize,
            }
        } else {
            j as usize
        };
        self.w[idx - self.lo] += w;
    }

    fn finish(self) -> (Band, f64) {
        (Band { start: self.lo, w: self.w }, self.dropped)
    }
}

/// Row weights of `W_s` (or of `d/ds W_s` when `derivative`) on one axis.
pub(crate) fn heat_stencil(geom: &GridGeometry, p: &MedaParam, ext: Extension, derivative: bool) -> Stencil1d {
    let m = geom.m;
    let h = geom.spacing();
    let l = geom.half_width;
    let s = p.s();
    let q = p.one_minus_s2();
    let s2 = 1.0 + s * s;
    let sigma = (2.0 * s / s2).sqrt();
    let pref = (q / (4.0 * PI * s)).sqrt();
    let mut rows = Vec::with_capacity(m);
    let mut dropped: f64 = 0.0;
    for i in 0..m {
        let x = geom.coord(i);
        let mu = q * x / s2;
        let (band, d) = if sigma >= LATTICE_MIN_WIDTH * h {
            let lo = ((mu - LATTICE_HALF_SPAN * sigma + l) / h).floor() as i64;
            let hi = ((mu + LATTICE_HALF_SPAN * sigma + l) / h).ceil() as i64;
            let mut rb = RowBuilder::new(m, ext, lo, hi);
            // s|x+y|^2 + |x-y|^2/s = 4s x^2/(1+s^2) + (s+1/s)(y-mu)^2; the
            // row factor carries the large part of the exponent, so rounding
            // in it scales the row instead of scattering between weights
            let row = h * pref * (-s * x * x / s2).exp();
            let curv = 0.25 * s2 / s;
            for j in lo..=hi {
                let y = -l + j as f64 * h;
                let u = y - mu;
                let mut w = row * (-curv * u * u).exp();
                if derivative {
                    let a = (x + y) * (x + y);
                    let b = (x - y) * (x - y);
                    w *= 0.5 * (-2.0 * s / q - 1.0 / s) - 0.25 * (a - b / (s * s));
                }
                rb.add(j, w);
            }
            rb.finish()
        } else {
            gauss_hermite_row(geom, p, ext, x, derivative)
        };
        dropped = dropped.max(d);
        rows.push(band);
    }
    Stencil1d {
        rows,
        dropped_mass: dropped,
    }
}

fn gauss_hermite_row(geom: &GridGeometry, p: &MedaParam, ext: Extension, x: f64, derivative: bool) -> (Band, f64) {
    let (nodes, weights) = gh_rule();
    let m = geom.m;
    let h = geom.spacing();
    let l = geom.half_width;
    let s = p.s();
    let q = p.one_minus_s2();
    let s2 = 1.0 + s * s;
    let sigma = (2.0 * s / s2).sqrt();
    let mu = q * x / s2;
    let mass = (q / s2).sqrt() * (-s * x * x / s2).exp();
    // d/ds of log mass, centre and log width
    let dlog_mass = 0.5 * (-2.0 * s / q - 2.0 * s / s2) - x * x * (1.0 - s * s) / (s2 * s2);
    let dmu = -4.0 * s * x / (s2 * s2);
    let dlog_sigma = 0.5 * (1.0 / s - 2.0 * s / s2);
    let order = INTERP_ORDER.min(m);
    let span = nodes[nodes.len() - 1] * std::f64::consts::SQRT_2 * sigma;
    let lo = ((mu - span + l) / h).floor() as i64 - order as i64;
    let hi = ((mu + span + l) / h).ceil() as i64 + order as i64;
    let mut rb = RowBuilder::new(m, ext, lo, hi);
    let mut lw = vec![0.0; order];
    let inv_sqrt_pi = 1.0 / PI.sqrt();
    for (xi, wi) in nodes.iter().zip(weights) {
        let y = mu + std::f64::consts::SQRT_2 * sigma * xi;
        let mut w = mass * wi * inv_sqrt_pi;
        if derivative {
            w *= dlog_mass + dmu * std::f64::consts::SQRT_2 * xi / sigma + dlog_sigma * (2.0 * xi * xi - 1.0);
        }
        if y < -l || y > l {
            // node past the box: the extension decides its value
            let j = if y < -l { -1 } else { m as i64 };
            rb.add(j, w);
            continue;
        }
        let u = (y + l) / h;
        let base = (u.floor() as i64 - (order as i64 / 2 - 1)).clamp(0, (m - order) as i64);
        lagrange_weights(geom.coord(base as usize), h, y, &mut lw);
        for (k, &c) in lw.iter().enumerate() {
            rb.add(base + k as i64, w * c);
        }
    }
    rb.finish()
}

/// Applies a 1-D stencil along `axis` of a row-major tensor array.
pub(crate) fn apply_axis(geom: &GridGeometry, data: &[f64], axis: usize, st: &Stencil1d) -> Vec<f64> {
    let m = geom.m;
    let stride = geom.stride(axis);
    let outer = data.len() / (m * stride);
    let mut out = vec![0.0; data.len()];
    let mut line = vec![0.0; m];
    let mut res = vec![0.0; m];
    for o in 0..outer {
        for inner in 0..stride {
            let base = o * m * stride + inner;
            for k in 0..m {
                line[k] = data[base + k * stride];
            }
            st.apply_line(&line, &mut res);
            for k in 0..m {
                out[base + k * stride] = res[k];
            }
        }
    }
    out
}

/// `W_s f` and optionally `d/ds W_s f` on a tensor grid.
pub(crate) struct HeatStep {
    value: Stencil1d,
    deriv: Option<Stencil1d>,
}

impl HeatStep {
    pub fn new(geom: &GridGeometry, p: &MedaParam, ext: Extension, with_derivative: bool) -> Self {
        Self {
            value: heat_stencil(geom, p, ext, false),
            deriv: with_derivative.then(|| heat_stencil(geom, p, ext, true)),
        }
    }

    pub fn dropped_mass(&self) -> f64 {
        // In n dimensions each axis pass can discard at most this much.
        self.value.dropped_mass
    }

    pub fn apply(&self, geom: &GridGeometry, data: &[f64]) -> Vec<f64> {
        let mut cur = data.to_vec();
        for axis in 0..geom.n {
            cur = apply_axis(geom, &cur, axis, &self.value);
        }
        cur
    }

    /// `d/ds` of the tensor product: one derivative factor per term.
    pub fn apply_ds(&self, geom: &GridGeometry, data: &[f64]) -> Vec<f64> {
        let deriv = self.deriv.as_ref().expect("stencil built without derivative");
        let mut total = vec![0.0; data.len()];
        for d in 0..geom.n {
            let mut cur = data.to_vec();
            for axis in 0..geom.n {
                let st = if axis == d { deriv } else { &self.value };
                cur = apply_axis(geom, &cur, axis, st);
            }
            for (t, c) in total.iter_mut().zip(cur) {
                *t += c;
            }
        }
        total
    }
}
