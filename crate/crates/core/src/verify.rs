//! Numerical checks of the Calderón-Zygmund kernel bounds and of the T1
//! conditions for the operators built on the Hermite semigroups.

use std::fmt;
use std::str::FromStr;

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::bmo::{ball_weights, LogWeight, Witness, CONVERGENCE_TOL};
use crate::error::{rejected, Error, Result};
use crate::geometry::{ball_family, critical_radius, dist, norm, BallKind, FamilyOptions, SpaceContext};
use crate::grid::{GridFunction, GridGeometry, TimeGrid};
use crate::hermite::{action_on_one, action_on_one_log_ds, kernel_from_sums, log_kernel_ds, riesz_kernel_fast, MedaParam};
use crate::operators::{
    f_norm, heat_nodes, node_weights, poisson_on_one, riesz_on_one, riesz_transform, truncated_riesz_multi, variation_operator_fast,
    RieszOptions,
};

/// Operators whose kernels and T1 data the harness knows.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(try_from = "String", into = "String")]
pub enum OperatorId {
    /// `(W_t)_t`, the heat maximal operator's orbit.
    HeatOrbit,
    /// `(P_t)_t`.
    PoissonOrbit,
    /// `(t d/dt W_t)_t`, the heat g-function.
    GHeat,
    /// `(t d/dt P_t)_t`.
    GPoisson,
    /// `R_i`, with a 0-based axis.
    Riesz { axis: usize },
    /// `(R_{i,ε})_ε`.
    RieszTruncations { axis: usize },
    /// The heat orbit measured in `E_ρ`.
    VariationFamily,
    /// The Poisson orbit measured in `E_ρ`.
    PoissonVariation,
}

impl OperatorId {
    /// The norm in which the operator's orbit is measured.
    pub fn default_space(self) -> NormSpace {
        match self {
            OperatorId::HeatOrbit | OperatorId::PoissonOrbit => NormSpace::E,
            OperatorId::GHeat | OperatorId::GPoisson => NormSpace::F,
            OperatorId::Riesz { .. } => NormSpace::Scalar,
            OperatorId::RieszTruncations { .. } | OperatorId::VariationFamily | OperatorId::PoissonVariation => NormSpace::ERho,
        }
    }

    fn is_scalar(self) -> bool {
        matches!(self, OperatorId::Riesz { .. })
    }

    fn axis(self) -> Option<usize> {
        match self {
            OperatorId::Riesz { axis } | OperatorId::RieszTruncations { axis } => Some(axis),
            _ => None,
        }
    }
}

impl fmt::Display for OperatorId {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            OperatorId::HeatOrbit => write!(f, "heat_orbit"),
            OperatorId::PoissonOrbit => write!(f, "poisson_orbit"),
            OperatorId::GHeat => write!(f, "g_heat"),
            OperatorId::GPoisson => write!(f, "g_poisson"),
            OperatorId::Riesz { axis } => write!(f, "riesz({})", axis + 1),
            OperatorId::RieszTruncations { axis } => write!(f, "riesz_truncations({})", axis + 1),
            OperatorId::VariationFamily => write!(f, "variation_family"),
            OperatorId::PoissonVariation => write!(f, "poisson_variation"),
        }
    }
}

impl FromStr for OperatorId {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        let s = s.trim();
        let indexed = |prefix: &str| -> Option<Result<usize>> {
            let inner = s.strip_prefix(prefix)?.strip_prefix('(')?.strip_suffix(')')?;
            Some(match inner.trim().parse::<usize>() {
                Ok(i) if i >= 1 => Ok(i - 1),
                _ => Err(Error::Config(format!("bad axis in operator `{s}` (axes count from 1)"))),
            })
        };
        if let Some(axis) = indexed("riesz_truncations") {
            return Ok(OperatorId::RieszTruncations { axis: axis? });
        }
        if let Some(axis) = indexed("riesz") {
            return Ok(OperatorId::Riesz { axis: axis? });
        }
        match s {
            "heat_orbit" => Ok(OperatorId::HeatOrbit),
            "poisson_orbit" => Ok(OperatorId::PoissonOrbit),
            "g_heat" => Ok(OperatorId::GHeat),
            "g_poisson" => Ok(OperatorId::GPoisson),
            "variation_family" => Ok(OperatorId::VariationFamily),
            "poisson_variation" => Ok(OperatorId::PoissonVariation),
            _ => Err(Error::Config(format!("unknown operator `{s}`"))),
        }
    }
}

impl TryFrom<String> for OperatorId {
    type Error = Error;
    fn try_from(s: String) -> Result<Self> {
        s.parse()
    }
}

impl From<OperatorId> for String {
    fn from(o: OperatorId) -> String {
        o.to_string()
    }
}

/// Banach space in which vector-valued kernels and T1 data are measured.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum NormSpace {
    Scalar,
    /// Sup over the time grid.
    E,
    /// `L^2(dt/t)` by the trapezoid rule in `log t`.
    F,
    /// ρ-variation over the time grid.
    ERho,
}

/// Evaluates the chosen norm of orbits sampled on one time grid.
#[derive(Debug, Clone)]
pub struct OrbitNorm {
    pub space: NormSpace,
    weights: Vec<f64>,
    rho: f64,
}

impl OrbitNorm {
    pub fn new(space: NormSpace, grid: &TimeGrid, rho: f64) -> Result<Self> {
        if space == NormSpace::ERho && !(rho > 2.0 && rho.is_finite()) {
            return Err(rejected(format!("variation exponent must exceed 2, got {rho}")));
        }
        Ok(Self {
            space,
            weights: grid.log_weights(),
            rho,
        })
    }

    pub fn eval(&self, v: &[f64]) -> f64 {
        match self.space {
            NormSpace::Scalar | NormSpace::E => v.iter().fold(0.0f64, |m, x| m.max(x.abs())),
            NormSpace::F => {
                if v.len() == self.weights.len() {
                    f_norm(v, &self.weights)
                } else {
                    v.iter().fold(0.0f64, |m, x| m.max(x.abs()))
                }
            }
            NormSpace::ERho => variation_operator_fast(v, self.rho).unwrap_or(f64::NAN),
        }
    }
}

struct PoissonBank {
    nodes: Vec<MedaParam>,
    values: Vec<Vec<f64>>,
    derivs: Vec<Vec<f64>>,
}

impl PoissonBank {
    fn new(n: usize, grid: &TimeGrid) -> Result<Self> {
        let ts = grid.times();
        let big_t = heat_nodes(n, ts[ts.len() - 1], ts[0]);
        let nodes = big_t.iter().map(|&t| MedaParam::from_t(t)).collect::<Result<Vec<_>>>()?;
        let values = ts.iter().map(|&t| node_weights(&big_t, t, false).0).collect();
        let derivs = ts.iter().map(|&t| node_weights(&big_t, t, true).0).collect();
        Ok(Self { nodes, values, derivs })
    }
}

/// The kernel of an operator as a function of `(x, y)` with values in the
/// orbit space (length 1 for scalar operators).
pub struct OrbitKernel {
    pub op: OperatorId,
    pub n: usize,
    grid: TimeGrid,
    bank: Option<PoissonBank>,
}

impl OrbitKernel {
    /// Times of `grid` are the semigroup times; for the truncation family
    /// they are the truncation radii.
    pub fn new(op: OperatorId, n: usize, grid: &TimeGrid) -> Result<Self> {
        if n == 0 || n > 3 {
            return Err(Error::Unsupported(format!("kernels are implemented for 1 <= n <= 3, got {n}")));
        }
        if let Some(axis) = op.axis() {
            if axis >= n {
                return Err(rejected(format!("axis {} out of range for dimension {n}", axis + 1)));
            }
        }
        let bank = match op {
            OperatorId::PoissonOrbit | OperatorId::GPoisson | OperatorId::PoissonVariation => Some(PoissonBank::new(n, grid)?),
            _ => None,
        };
        Ok(Self {
            op,
            n,
            grid: grid.clone(),
            bank,
        })
    }

    pub fn len(&self) -> usize {
        if self.op.is_scalar() {
            1
        } else {
            self.grid.len()
        }
    }

    pub fn is_empty(&self) -> bool {
        self.len() == 0
    }

    /// Writes the kernel at `(x, y)`, `x != y`, into `out`.
    pub fn eval(&self, x: &[f64], y: &[f64], out: &mut [f64]) {
        let n = self.n;
        let mut a = 0.0;
        let mut b = 0.0;
        for (xi, yi) in x.iter().zip(y) {
            a += (xi + yi) * (xi + yi);
            b += (xi - yi) * (xi - yi);
        }
        match self.op {
            OperatorId::HeatOrbit | OperatorId::VariationFamily => {
                for (o, p) in out.iter_mut().zip(self.grid.params()) {
                    *o = kernel_from_sums(p, n, a, b);
                }
            }
            OperatorId::GHeat => {
                for (o, p) in out.iter_mut().zip(self.grid.params()) {
                    *o = p.t() * p.one_minus_s2() * kernel_from_sums(p, n, a, b) * log_kernel_ds(p, n, a, b);
                }
            }
            OperatorId::PoissonOrbit | OperatorId::GPoisson | OperatorId::PoissonVariation => {
                let bank = self.bank.as_ref().expect("Poisson kernels carry a bank");
                let heat: Vec<f64> = bank.nodes.iter().map(|p| kernel_from_sums(p, n, a, b)).collect();
                let w = if self.op == OperatorId::GPoisson {
                    &bank.derivs
                } else {
                    &bank.values
                };
                for (o, wj) in out.iter_mut().zip(w) {
                    *o = wj.iter().zip(&heat).map(|(w, k)| w * k).sum();
                }
            }
            OperatorId::Riesz { axis } => out[0] = riesz_kernel_fast(axis, x, y),
            OperatorId::RieszTruncations { axis } => {
                let k = riesz_kernel_fast(axis, x, y);
                let d = b.sqrt();
                for (o, &e) in out.iter_mut().zip(self.grid.times()) {
                    *o = if d > e { k } else { 0.0 };
                }
            }
        }
    }
}

/// Pairs `(x, y)` on which kernel bounds are sampled. In one dimension the
/// points are the `points` cell midpoints of `[-L, L]`, paired
/// exhaustively; in higher dimensions `points^2` pairs are drawn uniformly
/// from the box with a seeded generator.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct PairSweep {
    pub half_width: f64,
    pub points: usize,
    /// Seed of the random pairs; set from the run configuration.
    #[serde(skip)]
    pub seed: u64,
}

impl PairSweep {
    pub fn new(half_width: f64, points: usize) -> Self {
        Self {
            half_width,
            points,
            seed: 0,
        }
    }

    /// Twice the box and twice the points per axis (same spacing).
    pub fn doubled(&self) -> Self {
        Self {
            half_width: 2.0 * self.half_width,
            points: 2 * self.points,
            seed: self.seed,
        }
    }

    pub fn pairs(&self, n: usize) -> Vec<(Vec<f64>, Vec<f64>)> {
        let l = self.half_width;
        if n == 1 {
            let h = 2.0 * l / self.points as f64;
            let pts: Vec<f64> = (0..self.points).map(|i| -l + (i as f64 + 0.5) * h).collect();
            let mut out = Vec::with_capacity(self.points * self.points);
            for &x in &pts {
                for &y in &pts {
                    if x != y {
                        out.push((vec![x], vec![y]));
                    }
                }
            }
            out
        } else {
            // x uniform in the box, |x - y| log-uniform between the lattice
            // spacing and the diameter, direction uniform
            let mut rng = ChaCha8Rng::seed_from_u64(self.seed);
            let count = self.points * self.points;
            let d_min = 2.0 * l / self.points as f64;
            let d_max = 2.0 * l * (n as f64).sqrt();
            let mut out = Vec::with_capacity(count);
            while out.len() < count {
                let x: Vec<f64> = (0..n).map(|_| rng.gen_range(-l..l)).collect();
                // uniform in the unit ball, then projected to the sphere
                let dir: Vec<f64> = (0..n).map(|_| rng.gen_range(-1.0..1.0)).collect();
                let norm = dir.iter().map(|v| v * v).sum::<f64>().sqrt();
                if !(norm > 1e-3 && norm <= 1.0) {
                    continue;
                }
                let d = (rng.gen_range(d_min.ln()..d_max.ln())).exp();
                let y: Vec<f64> = x.iter().zip(&dir).map(|(a, u)| a + d * u / norm).collect();
                if y.iter().all(|v| v.abs() <= l) {
                    out.push((x, y));
                }
            }
            out
        }
    }
}

/// Outcome of one kernel-bound sweep.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct KernelBoundReport {
    pub operator: OperatorId,
    pub bound: BoundKind,
    pub norm_space: NormSpace,
    /// Gaussian exponent `c` of the size bound (zero for smoothness).
    pub c_used: f64,
    /// Sweep maximum of the defining ratio.
    pub fitted_c: f64,
    /// Natural log of `fitted_c` (finite even when `fitted_c` overflows).
    pub log_fitted_c: f64,
    /// Size bound only: the same ratio with `|y|` in place of `|x|`.
    pub fitted_c_y_form: Option<f64>,
    /// Points `(x, y)` or `(x, y, z)` attaining the maximum.
    pub worst: Vec<Vec<f64>>,
    pub sweep_size: usize,
    /// Evaluations that were not finite, excluded from the maximum.
    pub failures: usize,
    /// `fitted_c` on the doubled sweep.
    pub refined_fitted_c: f64,
    pub log_refined_fitted_c: f64,
    pub converged: bool,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum BoundKind {
    Size,
    Smoothness,
}

struct SweepMax {
    log_c: f64,
    log_c_y: f64,
    worst: Vec<Vec<f64>>,
    size: usize,
    failures: usize,
}

/// Per-item log ratios (or `None` when not finite), reduced in order.
#[allow(clippy::type_complexity)]
fn reduce(items: Vec<(Option<(f64, f64)>, Vec<Vec<f64>>)>) -> SweepMax {
    let mut out = SweepMax {
        log_c: f64::NEG_INFINITY,
        log_c_y: f64::NEG_INFINITY,
        worst: Vec::new(),
        size: items.len(),
        failures: 0,
    };
    for (r, pts) in items {
        match r {
            None => out.failures += 1,
            Some((lc, ly)) => {
                if lc > out.log_c || out.worst.is_empty() {
                    out.log_c = lc;
                    out.worst = pts;
                }
                out.log_c_y = out.log_c_y.max(ly);
            }
        }
    }
    out
}

fn size_sweep(kernel: &OrbitKernel, nrm: &OrbitNorm, c: f64, sweep: &PairSweep) -> SweepMax {
    let n = kernel.n as f64;
    let items = sweep
        .pairs(kernel.n)
        .into_par_iter()
        .map_init(
            || vec![0.0; kernel.len()],
            |buf, (x, y)| {
                kernel.eval(&x, &y, buf);
                let v = nrm.eval(buf);
                let d = dist(&x, &y);
                let r = if v.is_finite() {
                    let base = v.ln() + n * d.ln();
                    Some((base + c * (norm(&x) * d + d * d), base + c * (norm(&y) * d + d * d)))
                } else {
                    None
                };
                (r, vec![x, y])
            },
        )
        .collect();
    reduce(items)
}

fn check_c(c: f64) -> Result<()> {
    if !(c >= 0.0 && c.is_finite()) {
        return Err(rejected(format!("decay exponent must be finite and non-negative, got {c}")));
    }
    Ok(())
}

fn converged(a: f64, b: f64) -> bool {
    a.is_finite() && b.is_finite() && (b - a).abs() <= CONVERGENCE_TOL * a.abs().max(b.abs())
}

/// Sweep maximum of `||K(x,y)|| |x-y|^n exp(c(|x||x-y| + |x-y|^2))`,
/// repeated on the doubled sweep to judge convergence.
pub fn verify_size_bound(kernel: &OrbitKernel, space: NormSpace, c: f64, sweep: &PairSweep, rho: f64) -> Result<KernelBoundReport> {
    check_c(c)?;
    let nrm = OrbitNorm::new(space, &kernel.grid, rho)?;
    let base = size_sweep(kernel, &nrm, c, sweep);
    let fine = size_sweep(kernel, &nrm, c, &sweep.doubled());
    let fitted = base.log_c.exp();
    let refined = fine.log_c.exp();
    Ok(KernelBoundReport {
        operator: kernel.op,
        bound: BoundKind::Size,
        norm_space: space,
        c_used: c,
        fitted_c: fitted,
        log_fitted_c: base.log_c,
        fitted_c_y_form: Some(base.log_c_y.exp()),
        worst: base.worst,
        sweep_size: base.size,
        failures: base.failures,
        refined_fitted_c: refined,
        log_refined_fitted_c: fine.log_c,
        converged: converged(fitted, refined),
    })
}

/// `log10` of the size ratio on the one-dimensional lattice of `sweep`,
/// indexed `[x][y]`; the diagonal is NaN.
pub fn size_ratio_grid(kernel: &OrbitKernel, space: NormSpace, c: f64, sweep: &PairSweep, rho: f64) -> Result<Vec<Vec<f64>>> {
    check_c(c)?;
    if kernel.n != 1 {
        return Err(Error::Unsupported("ratio grids are one-dimensional".into()));
    }
    let nrm = OrbitNorm::new(space, &kernel.grid, rho)?;
    let l = sweep.half_width;
    let h = 2.0 * l / sweep.points as f64;
    let pts: Vec<f64> = (0..sweep.points).map(|i| -l + (i as f64 + 0.5) * h).collect();
    Ok(pts
        .par_iter()
        .map(|&x| {
            let mut buf = vec![0.0; kernel.len()];
            pts.iter()
                .map(|&y| {
                    if x == y {
                        return f64::NAN;
                    }
                    kernel.eval(&[x], &[y], &mut buf);
                    let d = (x - y).abs();
                    (nrm.eval(&buf).ln() + d.ln() + c * (x.abs() * d + d * d)) / std::f64::consts::LN_10
                })
                .collect()
        })
        .collect())
}

/// Triples `(x, y, z)` with `z = y ± (x - y)/3` from the pairs of a sweep.
pub fn smoothness_triples(sweep: &PairSweep, n: usize) -> Vec<[Vec<f64>; 3]> {
    let mut out = Vec::new();
    for (x, y) in sweep.pairs(n) {
        for sign in [1.0, -1.0] {
            let z: Vec<f64> = x.iter().zip(&y).map(|(xi, yi)| yi + sign * (xi - yi) / 3.0).collect();
            out.push([x.clone(), y.clone(), z]);
        }
    }
    out
}

fn smoothness_max(kernel: &OrbitKernel, nrm: &OrbitNorm, triples: &[[Vec<f64>; 3]]) -> Result<SweepMax> {
    for t in triples {
        let d = dist(&t[0], &t[1]);
        let e = dist(&t[1], &t[2]);
        if !(e > 0.0 && d > 2.0 * e) {
            return Err(rejected(format!("triple violates |x-y| > 2|y-z| > 0 ({d}, {e})")));
        }
    }
    let n = kernel.n as f64;
    let len = kernel.len();
    let items = triples
        .par_iter()
        .map_init(
            || (vec![0.0; len], vec![0.0; len]),
            |(k1, k2), [x, y, z]| {
                kernel.eval(x, y, k1);
                kernel.eval(x, z, k2);
                let d1: Vec<f64> = k1.iter().zip(k2.iter()).map(|(a, b)| a - b).collect();
                kernel.eval(y, x, k1);
                kernel.eval(z, x, k2);
                let d2: Vec<f64> = k1.iter().zip(k2.iter()).map(|(a, b)| a - b).collect();
                let v = nrm.eval(&d1) + nrm.eval(&d2);
                let dxy = dist(x, y);
                let r = v.is_finite().then(|| {
                    let l = v.ln() + (n + 1.0) * dxy.ln() - dist(y, z).ln();
                    (l, l)
                });
                (r, vec![x.clone(), y.clone(), z.clone()])
            },
        )
        .collect();
    Ok(reduce(items))
}

/// Sweep maximum of `(||K(x,y)-K(x,z)|| + ||K(y,x)-K(z,x)||) |x-y|^{n+1} / |y-z|`
/// over explicit triples; each must satisfy `|x-y| > 2|y-z| > 0`.
pub fn verify_smoothness_on(kernel: &OrbitKernel, space: NormSpace, triples: &[[Vec<f64>; 3]], rho: f64) -> Result<f64> {
    let nrm = OrbitNorm::new(space, &kernel.grid, rho)?;
    Ok(smoothness_max(kernel, &nrm, triples)?.log_c.exp())
}

/// Smoothness ratio over the triples of `sweep` and of its doubling.
pub fn verify_smoothness_bound(kernel: &OrbitKernel, space: NormSpace, sweep: &PairSweep, rho: f64) -> Result<KernelBoundReport> {
    let nrm = OrbitNorm::new(space, &kernel.grid, rho)?;
    let base = smoothness_max(kernel, &nrm, &smoothness_triples(sweep, kernel.n))?;
    let fine = smoothness_max(kernel, &nrm, &smoothness_triples(&sweep.doubled(), kernel.n))?;
    let fitted = base.log_c.exp();
    let refined = fine.log_c.exp();
    Ok(KernelBoundReport {
        operator: kernel.op,
        bound: BoundKind::Smoothness,
        norm_space: space,
        c_used: 0.0,
        fitted_c: fitted,
        log_fitted_c: base.log_c,
        fitted_c_y_form: None,
        worst: base.worst,
        sweep_size: base.size,
        failures: base.failures,
        refined_fitted_c: refined,
        log_refined_fitted_c: fine.log_c,
        converged: converged(fitted, refined),
    })
}

/// Angular resolution of the adaptive Riesz routes.
const T1_ANGULAR: usize = 24;

/// `T1(x)`: the orbit (or the scalar, as a one-element vector) of the
/// operator applied to the constant one, at a single point. Closed forms
/// for the semigroups, adaptive radial quadrature for the Riesz family.
pub fn compute_t1(op: OperatorId, x: &[f64], grid: &TimeGrid) -> Result<Vec<f64>> {
    let n = x.len();
    if n == 0 || x.iter().any(|v| !v.is_finite()) {
        return Err(rejected("T1 needs a finite point"));
    }
    if let Some(axis) = op.axis() {
        if axis >= n {
            return Err(rejected(format!("axis {} out of range for dimension {n}", axis + 1)));
        }
    }
    let xx: f64 = x.iter().map(|v| v * v).sum();
    Ok(match op {
        OperatorId::HeatOrbit | OperatorId::VariationFamily => grid.params().iter().map(|p| action_on_one(p, n, xx)).collect(),
        OperatorId::GHeat => grid
            .params()
            .iter()
            .map(|p| p.t() * p.one_minus_s2() * action_on_one(p, n, xx) * action_on_one_log_ds(p, n, xx))
            .collect(),
        OperatorId::PoissonOrbit | OperatorId::PoissonVariation => grid.times().iter().map(|&t| poisson_on_one(n, xx, t).0).collect(),
        OperatorId::GPoisson => grid.times().iter().map(|&t| poisson_on_one(n, xx, t).1).collect(),
        OperatorId::Riesz { axis } => vec![riesz_on_one(axis, x, &[], T1_ANGULAR)?.0],
        OperatorId::RieszTruncations { axis } => riesz_on_one(axis, x, grid.times(), T1_ANGULAR)?.1,
    })
}

/// `T1` at every point of `geom`; outer index is the grid point. The Riesz
/// family goes through the grid operators applied to the sampled constant.
pub fn t1_field(op: OperatorId, geom: &GridGeometry, grid: &TimeGrid) -> Result<Vec<Vec<f64>>> {
    match op {
        OperatorId::Riesz { axis } => {
            let one = GridFunction::from_fn(*geom, |_| 1.0)?;
            Ok(riesz_transform(&one, axis)?.samples.into_iter().map(|v| vec![v]).collect())
        }
        OperatorId::RieszTruncations { axis } => {
            let one = GridFunction::from_fn(*geom, |_| 1.0)?;
            let outs = truncated_riesz_multi(&one, axis, grid.times(), &RieszOptions::default())?;
            Ok((0..geom.len()).map(|i| outs.iter().map(|o| o.samples[i]).collect()).collect())
        }
        _ => (0..geom.len())
            .into_par_iter()
            .map(|i| compute_t1(op, &geom.point(i), grid))
            .collect(),
    }
}

/// Sample grid and ball families of a T1 check.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct T1Options {
    /// Sample points per axis on the context's box.
    pub points: usize,
    pub family: FamilyOptions,
    pub rho: f64,
}

impl Default for T1Options {
    fn default() -> Self {
        Self {
            points: 401,
            family: FamilyOptions {
                j_max: 3,
                ..FamilyOptions::default()
            },
            rho: 3.0,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct T1Report {
    pub operator: Option<OperatorId>,
    pub norm_space: NormSpace,
    /// Sup over critical balls of the mean of `||T1||`.
    pub cond_i_sup: f64,
    /// Sup over `B(x, s)`, `s <= gamma(x)`, of `(1 + log(gamma/s))` times the
    /// mean of `||T1 - (T1)_B||`, centring componentwise.
    pub cond_ii_sup: f64,
    pub cond_i_witness: Option<Witness>,
    pub cond_ii_witness: Option<Witness>,
    pub refined_cond_i_sup: f64,
    pub refined_cond_ii_sup: f64,
    /// Balls left out for holding too few sample points.
    pub unresolved: usize,
    pub converged: bool,
}

#[allow(clippy::type_complexity)]
fn t1_sups(
    values: &[Vec<f64>],
    geom: &GridGeometry,
    ctx: &SpaceContext,
    nrm: &OrbitNorm,
    family: &FamilyOptions,
) -> Result<(f64, Option<Witness>, f64, Option<Witness>, usize)> {
    let norms: Vec<f64> = values.iter().map(|v| nrm.eval(v)).collect();
    let critical = ball_family(ctx, BallKind::Critical, family)?;
    let mut small = ball_family(ctx, BallKind::Small, family)?;
    small.extend(critical.iter().cloned());
    let len = values.first().map_or(0, |v| v.len());
    let cond_i: Vec<Option<f64>> = critical
        .par_iter()
        .map(|b| ball_weights(geom, b).ok().map(|w| w.mean(&norms)))
        .collect();
    let cond_ii: Vec<Option<f64>> = small
        .par_iter()
        .map(|b| {
            let w = ball_weights(geom, b).ok()?;
            let mut mean = vec![0.0; len];
            for &(i, wi) in &w.entries {
                for (m, v) in mean.iter_mut().zip(&values[i]) {
                    *m += wi * v;
                }
            }
            mean.iter_mut().for_each(|m| *m /= w.measure);
            let mut diff = vec![0.0; len];
            let mut acc = 0.0;
            for &(i, wi) in &w.entries {
                for ((d, v), m) in diff.iter_mut().zip(&values[i]).zip(&mean) {
                    *d = v - m;
                }
                acc += wi * nrm.eval(&diff);
            }
            let gamma = critical_radius(&b.center).ok()?;
            Some(LogWeight::OnePlusLog.eval(gamma, b.radius) * acc / w.measure)
        })
        .collect();
    let mut unresolved = 0;
    let mut pick = |balls: &[crate::geometry::Ball], vals: Vec<Option<f64>>| {
        let mut best = 0.0f64;
        let mut wit = None;
        for (b, v) in balls.iter().zip(vals) {
            match v {
                None => unresolved += 1,
                Some(v) => {
                    if wit.is_none() || v > best {
                        best = v;
                        wit = Some(Witness {
                            center: b.center.clone(),
                            radius: b.radius,
                            value: v,
                        });
                    }
                }
            }
        }
        (best, wit)
    };
    let (ci, wi) = pick(&critical, cond_i);
    let (cii, wii) = pick(&small, cond_ii);
    if wi.is_none() || wii.is_none() {
        return Err(Error::Resolution("no ball of the family is resolved by the sample grid".into()));
    }
    Ok((ci, wi, cii, wii, unresolved))
}

/// Both T1 conditions for data already sampled on `geom` (outer index =
/// grid point, inner = orbit), on the configured families and their
/// refinement.
pub fn verify_t1_on_samples(
    values: &[Vec<f64>],
    geom: &GridGeometry,
    ctx: &SpaceContext,
    nrm: &OrbitNorm,
    family: &FamilyOptions,
) -> Result<T1Report> {
    if values.len() != geom.len() {
        return Err(rejected("T1 samples do not match the sample grid"));
    }
    if ctx.n != geom.n {
        return Err(rejected("context and sample grid differ in dimension"));
    }
    let (ci, wi, cii, wii, unresolved) = t1_sups(values, geom, ctx, nrm, family)?;
    let (rci, _, rcii, _, _) = t1_sups(values, geom, ctx, nrm, &family.refined(ctx))?;
    let ok = |a: f64, b: f64| converged(a, b) || (a == 0.0 && b == 0.0);
    Ok(T1Report {
        operator: None,
        norm_space: nrm.space,
        cond_i_sup: ci,
        cond_ii_sup: cii,
        cond_i_witness: wi,
        cond_ii_witness: wii,
        refined_cond_i_sup: rci,
        refined_cond_ii_sup: rcii,
        unresolved,
        converged: ok(ci, rci) && ok(cii, rcii),
    })
}

/// Computes T1 on the sample grid of the context's box and checks both
/// conditions in `space`.
pub fn verify_t1_conditions(op: OperatorId, ctx: &SpaceContext, grid: &TimeGrid, space: NormSpace, opts: &T1Options) -> Result<T1Report> {
    let geom = GridGeometry::new(ctx.n, ctx.half_width, opts.points)?;
    let values = t1_field(op, &geom, grid)?;
    let nrm = OrbitNorm::new(space, grid, opts.rho)?;
    let mut report = verify_t1_on_samples(&values, &geom, ctx, &nrm, &opts.family)?;
    report.operator = Some(op);
    Ok(report)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::hermite::heat_kernel_meda;

    fn heat_grid() -> TimeGrid {
        TimeGrid::log_spaced(96, 1e-6, 1.0 - 1e-6).unwrap()
    }

    #[test]
    fn operator_ids_round_trip() {
        for s in [
            "heat_orbit",
            "poisson_orbit",
            "g_heat",
            "g_poisson",
            "riesz(1)",
            "riesz_truncations(2)",
            "variation_family",
            "poisson_variation",
        ] {
            let op: OperatorId = s.parse().unwrap();
            assert_eq!(op.to_string(), s);
        }
        assert!("riesz(0)".parse::<OperatorId>().is_err());
        assert!("heat".parse::<OperatorId>().is_err());
        assert_eq!(serde_json::to_string(&OperatorId::Riesz { axis: 0 }).unwrap(), "\"riesz(1)\"");
    }

    #[test]
    fn kernel_orbits_match_pointwise_kernels() {
        let grid = TimeGrid::log_spaced(8, 1e-3, 0.9).unwrap();
        let k = OrbitKernel::new(OperatorId::HeatOrbit, 2, &grid).unwrap();
        let (x, y) = ([0.3, -0.4], [1.0, 0.2]);
        let mut out = vec![0.0; k.len()];
        k.eval(&x, &y, &mut out);
        for (o, p) in out.iter().zip(grid.params()) {
            assert_eq!(*o, heat_kernel_meda(p, &x, &y).unwrap());
        }
    }

    #[test]
    fn poisson_kernel_integrates_like_poisson_of_one() {
        // ∫ P_t(x, y) dy = P_t 1(x)
        let grid = TimeGrid::geometric(4, 0.3, 2.0).unwrap();
        let k = OrbitKernel::new(OperatorId::PoissonOrbit, 1, &grid).unwrap();
        let x = [0.7];
        let h = 1e-3;
        let mut acc = [0.0; 4];
        let mut out = [0.0; 4];
        for i in 0..20000 {
            let y = [-10.0 + (i as f64 + 0.5) * h];
            k.eval(&x, &y, &mut out);
            for (a, o) in acc.iter_mut().zip(&out) {
                *a += h * o;
            }
        }
        for (j, &t) in grid.times().iter().enumerate() {
            let want = poisson_on_one(1, 0.49, t).0;
            assert!((acc[j] - want).abs() < 1e-6, "t={t} {} {want}", acc[j]);
        }
    }

    #[test]
    fn heat_size_bound_is_finite_and_monotone_in_c() {
        let k = OrbitKernel::new(OperatorId::HeatOrbit, 1, &heat_grid()).unwrap();
        let sweep = PairSweep::new(3.0, 48);
        let mut last = 0.0;
        for c in [0.0, 1.0 / 32.0, 1.0 / 16.0] {
            let r = verify_size_bound(&k, NormSpace::E, c, &sweep, 3.0).unwrap();
            assert!(r.fitted_c.is_finite() && r.converged, "{r:?}");
            assert!(r.fitted_c >= last);
            last = r.fitted_c;
        }
        let r = verify_size_bound(&k, NormSpace::E, 10.0, &sweep, 3.0).unwrap();
        assert!(!r.converged);
    }

    #[test]
    fn size_ratio_near_the_diagonal() {
        // sup_t of the Euclidean heat kernel is (2 pi e)^{-1/2} / |x - y| in 1-D
        let k = OrbitKernel::new(OperatorId::HeatOrbit, 1, &TimeGrid::log_spaced(2000, 1e-7, 0.5).unwrap()).unwrap();
        let mut out = vec![0.0; k.len()];
        k.eval(&[0.0], &[0.01], &mut out);
        let sup = out.iter().cloned().fold(0.0, f64::max) * 0.01;
        let want = 1.0 / (2.0 * std::f64::consts::PI * std::f64::consts::E).sqrt();
        assert!((sup - want).abs() < 1e-3 * want, "{sup} {want}");
    }

    #[test]
    fn degenerate_triples_are_rejected() {
        let k = OrbitKernel::new(OperatorId::Riesz { axis: 0 }, 1, &heat_grid()).unwrap();
        let t = [vec![0.0], vec![1.0], vec![1.0]];
        assert!(verify_smoothness_on(&k, NormSpace::Scalar, &[t], 3.0).is_err());
        let t = [vec![0.0], vec![1.0], vec![1.6]];
        assert!(verify_smoothness_on(&k, NormSpace::Scalar, &[t], 3.0).is_err());
        let t = [vec![0.0], vec![1.0], vec![1.2]];
        assert!(verify_smoothness_on(&k, NormSpace::Scalar, &[t], 3.0).unwrap().is_finite());
    }

    #[test]
    fn riesz_t1_is_odd_and_routes_agree() {
        let grid = TimeGrid::geometric(6, 0.05, 1.0).unwrap();
        let at0 = compute_t1(OperatorId::Riesz { axis: 0 }, &[0.0], &grid).unwrap();
        assert!(at0[0].abs() < 1e-6);
        let geom = GridGeometry::new(1, 4.0, 401).unwrap();
        let field = t1_field(OperatorId::Riesz { axis: 0 }, &geom, &grid).unwrap();
        for i in [50, 120, 200, 260, 330] {
            let adaptive = compute_t1(OperatorId::Riesz { axis: 0 }, &geom.point(i), &grid).unwrap()[0];
            assert!(
                (field[i][0] - adaptive).abs() < 1e-3 * adaptive.abs().max(0.1),
                "i={i} {} {adaptive}",
                field[i][0]
            );
            let j = geom.m - 1 - i;
            assert!((field[i][0] + field[j][0]).abs() < 1e-12);
        }
        let truncs = t1_field(OperatorId::RieszTruncations { axis: 0 }, &geom, &grid).unwrap();
        for i in [80, 150] {
            let adaptive = compute_t1(OperatorId::RieszTruncations { axis: 0 }, &geom.point(i), &grid).unwrap();
            for (a, b) in truncs[i].iter().zip(&adaptive) {
                assert!((a - b).abs() < 1e-6, "{a} {b}");
            }
        }
    }

    #[test]
    fn heat_t1_conditions() {
        let ctx = SpaceContext::new(1, 4.0, 1e-8).unwrap();
        let grid = TimeGrid::log_spaced(64, 1e-9, 1.0 - 1e-4).unwrap();
        let r = verify_t1_conditions(OperatorId::HeatOrbit, &ctx, &grid, NormSpace::E, &T1Options::default()).unwrap();
        assert!((r.cond_i_sup - 1.0).abs() < 1e-6, "{r:?}");
        assert!(r.cond_ii_sup.is_finite() && r.cond_ii_sup > 0.0);
        assert!(r.converged, "{r:?}");
    }

    #[test]
    fn zero_data_gives_zero_sups() {
        let ctx = SpaceContext::new(1, 3.0, 1e-8).unwrap();
        let geom = GridGeometry::new(1, 3.0, 301).unwrap();
        let grid = TimeGrid::log_spaced(8, 1e-3, 0.9).unwrap();
        let zeros = vec![vec![0.0; 8]; geom.len()];
        for space in [NormSpace::E, NormSpace::F, NormSpace::ERho] {
            let nrm = OrbitNorm::new(space, &grid, 3.0).unwrap();
            let r = verify_t1_on_samples(&zeros, &geom, &ctx, &nrm, &T1Options::default().family).unwrap();
            assert_eq!((r.cond_i_sup, r.cond_ii_sup), (0.0, 0.0));
            assert!(r.converged);
        }
    }
}
