//! Mehler heat kernel of `H = -Δ + |x|^2`, its derivatives, the Riesz
//! kernels and the Hermite function basis.
//!
//! Most routines work in the variable `s = tanh t`, where the kernel reads
//!
//! ```text
//! W_t(x, y) = ((1 - s^2) / (4 pi s))^{n/2} exp(-(s |x + y|^2 + |x - y|^2 / s) / 4).
//! ```
//!
//! [`MedaParam`] carries `1 - s^2` separately so that large times keep
//! their precision after `s` itself has rounded to one.

use std::f64::consts::PI;

use crate::error::{domain, rejected, Error, Result};
use crate::quadrature::{integrate, integrate_breaks, AdaptiveOptions};

/// Time parameter in the `s = tanh t` form.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct MedaParam {
    s: f64,
    q: f64,
}

impl MedaParam {
    /// Requires `0 < s < 1`.
    pub fn new(s: f64) -> Result<Self> {
        if !(s > 0.0 && s < 1.0) {
            return Err(domain(format!("s must lie in (0, 1), got {s}")));
        }
        Ok(Self {
            s,
            q: (1.0 - s) * (1.0 + s),
        })
    }

    /// From the semigroup time `t > 0`.
    pub fn from_t(t: f64) -> Result<Self> {
        if !(t > 0.0 && t.is_finite()) {
            return Err(domain(format!("time must be positive and finite, got {t}")));
        }
        let em = (-2.0 * t).exp_m1();
        let e2 = (-2.0 * t).exp();
        let denom = 1.0 + e2;
        let q = 4.0 * e2 / (denom * denom);
        if q <= 0.0 {
            return Err(domain(format!("time {t} is too large to represent")));
        }
        Ok(Self { s: -em / denom, q })
    }

    /// From `w = sqrt(1 - s)`, accurate near `s = 1`.
    pub(crate) fn from_sqrt_gap(w: f64) -> Self {
        let w2 = w * w;
        Self {
            s: 1.0 - w2,
            q: w2 * (2.0 - w2),
        }
    }

    pub fn s(&self) -> f64 {
        self.s
    }

    /// `1 - s^2`.
    pub fn one_minus_s2(&self) -> f64 {
        self.q
    }

    pub fn t(&self) -> f64 {
        if self.s < 0.5 {
            0.5 * (self.s.ln_1p() - (-self.s).ln_1p())
        } else {
            (1.0 + self.s).ln() - 0.5 * self.q.ln()
        }
    }

    /// Parameter of `W_{t1 + t2}`.
    pub fn compose(&self, other: &MedaParam) -> MedaParam {
        let den = 1.0 + self.s * other.s;
        MedaParam {
            s: (self.s + other.s) / den,
            q: self.q * other.q / (den * den),
        }
    }
}

fn check_pair(x: &[f64], y: &[f64]) -> Result<()> {
    if x.len() != y.len() || x.is_empty() {
        return Err(rejected("points must share a positive dimension"));
    }
    if x.iter().chain(y).any(|v| !v.is_finite()) {
        return Err(domain("non-finite coordinate"));
    }
    Ok(())
}

/// `v^{n/2}`.
#[inline]
pub(crate) fn half_pow(v: f64, n: usize) -> f64 {
    let p = v.powi((n / 2) as i32);
    if n % 2 == 1 {
        p * v.sqrt()
    } else {
        p
    }
}

#[inline]
fn sums(x: &[f64], y: &[f64]) -> (f64, f64) {
    let mut a = 0.0;
    let mut b = 0.0;
    for (xi, yi) in x.iter().zip(y) {
        a += (xi + yi) * (xi + yi);
        b += (xi - yi) * (xi - yi);
    }
    (a, b)
}

#[inline]
pub(crate) fn kernel_from_sums(p: &MedaParam, n: usize, a: f64, b: f64) -> f64 {
    half_pow(p.q / (4.0 * PI * p.s), n) * (-0.25 * (p.s * a + b / p.s)).exp()
}

/// `d/ds log W` given `|x + y|^2` and `|x - y|^2`.
#[inline]
pub(crate) fn log_kernel_ds(p: &MedaParam, n: usize, a: f64, b: f64) -> f64 {
    let s = p.s;
    0.5 * n as f64 * (-2.0 * s / p.q - 1.0 / s) - 0.25 * (a - b / (s * s))
}

/// Heat kernel in the `s` variable.
pub fn heat_kernel_meda(p: &MedaParam, x: &[f64], y: &[f64]) -> Result<f64> {
    check_pair(x, y)?;
    let (a, b) = sums(x, y);
    Ok(kernel_from_sums(p, x.len(), a, b))
}

/// Heat kernel in the original time variable, evaluated from the Mehler
/// formula in terms of `exp(-2t)`.
pub fn heat_kernel(t: f64, x: &[f64], y: &[f64]) -> Result<f64> {
    check_pair(x, y)?;
    if !(t > 0.0 && t.is_finite()) {
        return Err(domain(format!("time must be positive and finite, got {t}")));
    }
    let e2 = (-2.0 * t).exp();
    let d = -(-4.0 * t).exp_m1();
    let xx: f64 = x.iter().map(|v| v * v).sum();
    let yy: f64 = y.iter().map(|v| v * v).sum();
    let xy: f64 = x.iter().zip(y).map(|(a, b)| a * b).sum();
    let coth = (2.0 - d) / d;
    let csch = 4.0 * e2 / d;
    let pref = half_pow(e2 / (PI * d), x.len());
    Ok(pref * (-0.5 * (coth * (xx + yy) - csch * xy)).exp())
}

/// `d/ds W`.
pub fn heat_kernel_ds(p: &MedaParam, x: &[f64], y: &[f64]) -> Result<f64> {
    check_pair(x, y)?;
    let (a, b) = sums(x, y);
    let n = x.len();
    Ok(kernel_from_sums(p, n, a, b) * log_kernel_ds(p, n, a, b))
}

/// `t d/dt W`, using `dt = ds / (1 - s^2)`.
pub fn heat_kernel_t_dt(p: &MedaParam, x: &[f64], y: &[f64]) -> Result<f64> {
    Ok(p.t() * p.q * heat_kernel_ds(p, x, y)?)
}

/// Gradient of `W` in the first variable.
pub fn heat_kernel_grad_x(p: &MedaParam, x: &[f64], y: &[f64]) -> Result<Vec<f64>> {
    check_pair(x, y)?;
    let (a, b) = sums(x, y);
    let w = kernel_from_sums(p, x.len(), a, b);
    Ok(x.iter()
        .zip(y)
        .map(|(xi, yi)| -0.5 * (p.s * (xi + yi) + (xi - yi) / p.s) * w)
        .collect())
}

/// `W_t 1(x)`, the heat semigroup applied to the constant one.
pub fn heat_action_on_one(p: &MedaParam, x: &[f64]) -> Result<f64> {
    if x.iter().any(|v| !v.is_finite()) || x.is_empty() {
        return Err(domain("bad point"));
    }
    let xx: f64 = x.iter().map(|v| v * v).sum();
    Ok(action_on_one(p, x.len(), xx))
}

#[inline]
pub(crate) fn action_on_one(p: &MedaParam, n: usize, xx: f64) -> f64 {
    let s2 = 1.0 + p.s * p.s;
    half_pow(p.q / s2, n) * (-p.s * xx / s2).exp()
}

/// `d/ds log W_t 1(x)` as a function of `|x|^2`.
#[inline]
pub(crate) fn action_on_one_log_ds(p: &MedaParam, n: usize, xx: f64) -> f64 {
    let s = p.s;
    let s2 = 1.0 + s * s;
    0.5 * n as f64 * (-2.0 * s / p.q - 2.0 * s / s2) - xx * (1.0 - s * s) / (s2 * s2)
}

/// `t d/dt W_t 1(x)`.
pub fn heat_action_on_one_t_dt(p: &MedaParam, x: &[f64]) -> Result<f64> {
    let xx: f64 = x.iter().map(|v| v * v).sum();
    let v = heat_action_on_one(p, x)?;
    Ok(p.t() * p.q * v * action_on_one_log_ds(p, x.len(), xx))
}

/// How the time integral of the Riesz kernel is evaluated.
#[derive(Debug, Clone, Copy, PartialEq)]
pub enum RieszQuadrature {
    /// Adaptive Gauss-Kronrod in `s`, split at `1/2`, with `u = |x-y|^2/(4s)`
    /// on the lower half and `s = 1 - w^2` on the upper half.
    Adaptive { tol: f64 },
    /// Trapezoid rule in `log t`; the integrand decays double exponentially
    /// at both ends so the rule converges geometrically in the step.
    LogTrapezoid { step: f64 },
}

impl Default for RieszQuadrature {
    fn default() -> Self {
        RieszQuadrature::Adaptive { tol: 1e-10 }
    }
}

/// Default step of the log-time trapezoid rule.
pub const LOG_TRAPEZOID_STEP: f64 = 0.15;

/// Kernel of the `axis`-th Riesz transform `d/dx_i H^{-1/2}` off the diagonal.
pub fn riesz_kernel(axis: usize, x: &[f64], y: &[f64], quad: RieszQuadrature) -> Result<f64> {
    check_pair(x, y)?;
    if axis >= x.len() {
        return Err(rejected(format!("axis {axis} out of range for dimension {}", x.len())));
    }
    if x == y {
        return Err(Error::SingularPoint);
    }
    match quad {
        RieszQuadrature::Adaptive { tol } => riesz_adaptive(axis, x, y, tol),
        RieszQuadrature::LogTrapezoid { step } => {
            let (full, half) = riesz_log_trapezoid(axis, x, y, step);
            // Geometric convergence: the error at step h is about the square
            // of the relative error at step 2h.
            let diff = (full - half).abs();
            let est = diff * (diff / full.abs().max(1e-300)).min(1.0);
            if est > 1e-8 * (1.0 + full.abs()) {
                return Err(Error::Accuracy {
                    what: "Riesz kernel log-time trapezoid".into(),
                    estimate: est,
                    tolerance: 1e-8 * (1.0 + full.abs()),
                });
            }
            Ok(full)
        }
    }
}

/// Riesz kernel via the log-time trapezoid with the default step, for
/// inner loops. The caller guarantees `x != y` and matching dimensions.
#[inline]
pub fn riesz_kernel_fast(axis: usize, x: &[f64], y: &[f64]) -> f64 {
    riesz_log_trapezoid(axis, x, y, LOG_TRAPEZOID_STEP).0
}

/// Returns the rule at `step` and the rule at `2 * step` on the even nodes.
fn riesz_log_trapezoid(axis: usize, x: &[f64], y: &[f64], step: f64) -> (f64, f64) {
    let n = x.len();
    let nf = n as f64;
    let (a, b) = sums(x, y);
    let u = x[axis] + y[axis];
    let v = x[axis] - y[axis];
    let t_lo = b / (4.0 * (50.0 + 2.0 * nf));
    let t_hi = (50.0 + nf) / nf;
    if !(t_lo < t_hi) {
        return (0.0, 0.0);
    }
    let count = ((t_hi / t_lo).ln() / step).ceil() as usize;
    let ratio = step.exp();
    let norm = 1.0 / (4.0 * PI);
    let mut t = t_lo;
    let mut all = 0.0;
    let mut even = 0.0;
    for k in 0..=count {
        let em = (-2.0 * t).exp_m1();
        let e2 = (-2.0 * t).exp();
        let denom = 1.0 + e2;
        let s = -em / denom;
        let q = 4.0 * e2 / (denom * denom);
        let w = half_pow(norm * q / s, n) * (-0.25 * (s * a + b / s)).exp();
        let g = -0.5 * (s * u + v / s) * w * t.sqrt();
        all += g;
        if k % 2 == 0 {
            even += g;
        }
        t *= ratio;
    }
    let c = 1.0 / PI.sqrt();
    (c * step * all, c * 2.0 * step * even)
}

fn riesz_adaptive(axis: usize, x: &[f64], y: &[f64], tol: f64) -> Result<f64> {
    let n = x.len();
    let (a, b) = sums(x, y);
    let u = x[axis] + y[axis];
    let v = x[axis] - y[axis];
    let c = 1.0 / PI.sqrt();
    // integrand in s, including dt = ds / (1 - s^2) and t^{-1/2}
    let g = move |p: MedaParam| -> f64 {
        let w = kernel_from_sums(&p, n, a, b);
        let d = -0.5 * (p.s * u + v / p.s) * w;
        c * d / (p.q * p.t().sqrt())
    };
    let opts = AdaptiveOptions::with_tol(0.25 * tol, 0.25 * tol);
    // s in (0, 1/2]: s = b / (4 u), u = b/2 + r
    let span = 80.0 + 4.0 * n as f64;
    // The integrand changes shape on the scale r ~ b (where s leaves 1/2),
    // which a single panel over [0, span] would never sample.
    let mut breaks = vec![0.0];
    let mut r = 0.25 * b;
    while r < span {
        breaks.push(r);
        r *= 4.0;
    }
    breaks.push(span);
    let lower = integrate_breaks(
        &mut |r: f64| {
            let uu = 0.5 * b + r;
            let s = b / (4.0 * uu);
            if s <= 0.0 {
                return 0.0;
            }
            let p = MedaParam {
                s,
                q: (1.0 - s) * (1.0 + s),
            };
            g(p) * b / (4.0 * uu * uu)
        },
        &breaks,
        opts,
    )?;
    // s in [1/2, 1): s = 1 - w^2
    let upper = integrate(
        |w: f64| {
            if w <= 0.0 {
                return 0.0;
            }
            g(MedaParam::from_sqrt_gap(w)) * 2.0 * w
        },
        0.0,
        std::f64::consts::FRAC_1_SQRT_2,
        opts,
    )?;
    let value = lower.value + upper.value;
    let err = lower.error + upper.error;
    if err > tol * (1.0 + value.abs()) {
        return Err(Error::Accuracy {
            what: "Riesz kernel adaptive quadrature".into(),
            estimate: err,
            tolerance: tol * (1.0 + value.abs()),
        });
    }
    Ok(value)
}

/// Double-double value `hi + lo`.
#[derive(Clone, Copy)]
struct Dd(f64, f64);

impl Dd {
    fn renorm(hi: f64, lo: f64) -> Dd {
        let s = hi + lo;
        Dd(s, lo - (s - hi))
    }

    /// `num / den` to twice the working precision.
    fn ratio(num: f64, den: f64) -> Dd {
        let q = num / den;
        Dd(q, (-q).mul_add(den, num) / den)
    }

    fn sqrt(self) -> Dd {
        let c = self.0.sqrt();
        Dd::renorm(c, ((-c).mul_add(c, self.0) + self.1) / (2.0 * c))
    }

    fn mul(self, o: Dd) -> Dd {
        let p = self.0 * o.0;
        let e = self.0.mul_add(o.0, -p) + (self.0 * o.1 + self.1 * o.0);
        Dd::renorm(p, e)
    }

    fn scale(self, x: f64) -> Dd {
        self.mul(Dd(x, 0.0))
    }

    fn sub(self, o: Dd) -> Dd {
        let s = self.0 - o.0;
        let z = s - self.0;
        let e = (self.0 - (s - z)) - (o.0 + z);
        Dd::renorm(s, e + (self.1 - o.1))
    }
}

/// Normalised one-dimensional Hermite functions `h_0..=h_kmax` at `x`.
///
/// The three-term recurrence runs on `h_k / h_0` in double-double
/// arithmetic, so values near the zeros keep an absolute error of about one
/// ulp of `max |h_k|`.
pub fn hermite_functions(kmax: usize, x: f64) -> Vec<f64> {
    let h0 = PI.powf(-0.25) * (-0.5 * x * x).exp();
    let mut out = Vec::with_capacity(kmax + 1);
    out.push(h0);
    if kmax == 0 {
        return out;
    }
    let mut prev = Dd(1.0, 0.0);
    let mut cur = Dd::ratio(2.0, 1.0).sqrt().scale(x);
    out.push(cur.0 * h0);
    for k in 1..kmax {
        let a = Dd::ratio(2.0, (k + 1) as f64).sqrt();
        let b = Dd::ratio(k as f64, (k + 1) as f64).sqrt();
        let next = a.scale(x).mul(cur).sub(b.mul(prev));
        out.push((next.0 + next.1) * h0);
        prev = cur;
        cur = next;
    }
    out
}

/// `h_k(x)` in one dimension.
pub fn hermite_function(k: usize, x: f64) -> f64 {
    hermite_functions(k, x)[k]
}

/// Tensor-product Hermite functions up to a total degree.
#[derive(Debug, Clone, PartialEq)]
pub struct HermiteBasis {
    pub n: usize,
    pub max_degree: usize,
}

impl HermiteBasis {
    pub fn new(n: usize, max_degree: usize) -> Result<Self> {
        if n == 0 {
            return Err(rejected("dimension must be at least 1"));
        }
        Ok(Self { n, max_degree })
    }

    /// Multi-indices with `|k| <= max_degree`, graded then lexicographic.
    pub fn indices(&self) -> Vec<Vec<usize>> {
        let mut out = Vec::new();
        for total in 0..=self.max_degree {
            let mut cur = vec![0; self.n];
            push_compositions(total, 0, &mut cur, &mut out);
        }
        out
    }

    pub fn eigenvalue(&self, k: &[usize]) -> f64 {
        (2 * k.iter().sum::<usize>() + self.n) as f64
    }

    pub fn eval(&self, k: &[usize], x: &[f64]) -> Result<f64> {
        if k.len() != self.n || x.len() != self.n {
            return Err(rejected("multi-index or point has the wrong dimension"));
        }
        let deg: usize = k.iter().sum();
        if deg > self.max_degree {
            return Err(domain(format!("degree {deg} exceeds the basis limit {}", self.max_degree)));
        }
        Ok(k.iter().zip(x).map(|(&ki, &xi)| hermite_function(ki, xi)).product())
    }
}

fn push_compositions(remaining: usize, pos: usize, cur: &mut Vec<usize>, out: &mut Vec<Vec<usize>>) {
    if pos + 1 == cur.len() {
        cur[pos] = remaining;
        out.push(cur.clone());
        return;
    }
    for v in (0..=remaining).rev() {
        cur[pos] = v;
        push_compositions(remaining - v, pos + 1, cur, out);
    }
    cur[pos] = 0;
}
