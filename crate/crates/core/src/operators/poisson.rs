//! Poisson semigroup `e^{-t sqrt(H)}` by subordination to the heat
//! semigroup.
//!
//! With heat time `T = t^2 / (4u)` the subordination integral becomes
//!
//! ```text
//! P_t f = t / (2 sqrt(pi)) ∫_0^∞ W_T f  exp(-t^2 / (4T)) T^{-1/2} d(log T),
//! ```
//!
//! whose integrand decays double exponentially at both ends of the
//! `log T` axis. A trapezoid rule in `log T` therefore converges
//! geometrically, and one bank of heat applications serves every `t` at
//! once, together with the analytic `t d/dt` derivative.

use std::f64::consts::PI;

use crate::error::{domain, Error, Result};
use crate::grid::{GridFunction, TimeGrid};
use crate::hermite::{action_on_one, MedaParam};

use super::heat::check_truncation;
use super::stencil::HeatStep;

/// Step of the trapezoid rule in `log T`.
pub const LOG_STEP: f64 = 0.125;
/// Decay exponent at which the `log T` axis is cut at both ends.
const CUTOFF: f64 = 40.0;
/// Accepted error estimate, relative to `max(1, max |f|)`.
pub const POISSON_TOL: f64 = 1e-8;

/// Heat-time nodes covering the subordination integrals of all `t` in
/// `[t_min, t_max]`.
pub(crate) fn heat_nodes(n: usize, t_min: f64, t_max: f64) -> Vec<f64> {
    let lo = (t_min * t_min / (4.0 * CUTOFF)).ln();
    let hi = (CUTOFF / n as f64 + 2.0).max(t_max * t_max / (4.0 * CUTOFF)).ln();
    let count = ((hi - lo) / LOG_STEP).ceil() as usize;
    (0..=count).map(|k| (lo + k as f64 * LOG_STEP).exp()).collect()
}

/// Trapezoid weights for `P_t` (or `t d/dt P_t`) on the bank nodes; the
/// second vector is the rule with twice the step on the even nodes.
pub(crate) fn node_weights(nodes: &[f64], t: f64, derivative: bool) -> (Vec<f64>, Vec<f64>) {
    let c = t / (2.0 * PI.sqrt()) * LOG_STEP;
    let mut full = Vec::with_capacity(nodes.len());
    let mut half = Vec::with_capacity(nodes.len());
    for (k, &big_t) in nodes.iter().enumerate() {
        let r = t * t / (4.0 * big_t);
        let mut w = c * (-r).exp() / big_t.sqrt();
        if derivative {
            w *= 1.0 - 2.0 * r;
        }
        full.push(w);
        half.push(if k % 2 == 0 { 2.0 * w } else { 0.0 });
    }
    (full, half)
}

struct Bank {
    nodes: Vec<f64>,
    outputs: Vec<Vec<f64>>,
}

fn build_bank(f: &GridFunction, t_min: f64, t_max: f64) -> Result<Bank> {
    let nodes = heat_nodes(f.geom.n, t_min, t_max);
    let mut outputs = Vec::with_capacity(nodes.len());
    for &big_t in &nodes {
        let p = MedaParam::from_t(big_t)?;
        let step = HeatStep::new(&f.geom, &p, f.extension, false);
        check_truncation(f, &step)?;
        outputs.push(step.apply(&f.geom, &f.samples));
    }
    Ok(Bank { nodes, outputs })
}

impl Bank {
    fn combine(&self, t: f64, derivative: bool) -> (Vec<f64>, f64) {
        let (wf, wh) = node_weights(&self.nodes, t, derivative);
        let len = self.outputs[0].len();
        let mut full = vec![0.0; len];
        let mut half = vec![0.0; len];
        for (k, out) in self.outputs.iter().enumerate() {
            for i in 0..len {
                full[i] += wf[k] * out[i];
                half[i] += wh[k] * out[i];
            }
        }
        let scale = full.iter().fold(0.0f64, |m, v| m.max(v.abs())).max(1e-300);
        let diff = full.iter().zip(&half).fold(0.0f64, |m, (a, b)| m.max((a - b).abs()));
        (full, diff * (diff / scale).min(1.0))
    }
}

fn check_t(t: f64) -> Result<()> {
    if !(t > 0.0 && t.is_finite()) {
        return Err(domain(format!("Poisson time must be positive and finite, got {t}")));
    }
    Ok(())
}

fn accept(f: &GridFunction, estimate: f64) -> Result<()> {
    let tol = POISSON_TOL * f.max_abs().max(1.0);
    if estimate > tol {
        return Err(Error::Accuracy {
            what: "Poisson subordination quadrature".into(),
            estimate,
            tolerance: tol,
        });
    }
    Ok(())
}

/// `P_t f` together with the quadrature error estimate.
pub fn apply_poisson_with_estimate(f: &GridFunction, t: f64) -> Result<(GridFunction, f64)> {
    check_t(t)?;
    let bank = build_bank(f, t, t)?;
    let (samples, est) = bank.combine(t, false);
    accept(f, est)?;
    Ok((
        GridFunction {
            geom: f.geom,
            samples,
            extension: f.extension,
        },
        est,
    ))
}

/// `P_t f`.
pub fn apply_poisson(f: &GridFunction, t: f64) -> Result<GridFunction> {
    apply_poisson_with_estimate(f, t).map(|r| r.0)
}

/// `t d/dt P_t f`, differentiating the subordination weights.
pub fn apply_poisson_t_dt(f: &GridFunction, t: f64) -> Result<GridFunction> {
    check_t(t)?;
    let bank = build_bank(f, t, t)?;
    let (samples, est) = bank.combine(t, true);
    accept(f, est)?;
    Ok(GridFunction {
        geom: f.geom,
        samples,
        extension: f.extension,
    })
}

/// `P_{t_j} f` and optionally `t_j d/dt P_{t_j} f` for every time of the grid.
pub(crate) fn poisson_orbit(f: &GridFunction, times: &TimeGrid, derivative: bool) -> Result<super::OrbitSamples> {
    let ts = times.times();
    let bank = build_bank(f, ts[ts.len() - 1], ts[0])?;
    let mut values = Vec::with_capacity(ts.len());
    let mut derivs = Vec::new();
    for &t in ts {
        let (v, est) = bank.combine(t, false);
        accept(f, est)?;
        values.push(v);
        if derivative {
            let (d, est) = bank.combine(t, true);
            accept(f, est)?;
            derivs.push(d);
        }
    }
    Ok((values, derivs))
}

/// `P_t 1(x)` and `t d/dt P_t 1(x)` on `R^n` from the closed form of `W_T 1`.
pub(crate) fn poisson_on_one(n: usize, xx: f64, t: f64) -> (f64, f64) {
    let nodes = heat_nodes(n, t, t);
    let (wv, _) = node_weights(&nodes, t, false);
    let (wd, _) = node_weights(&nodes, t, true);
    let mut v = 0.0;
    let mut d = 0.0;
    for (k, &big_t) in nodes.iter().enumerate() {
        let p = MedaParam::from_t(big_t).expect("bank times are positive");
        let w1 = action_on_one(&p, n, xx);
        v += wv[k] * w1;
        d += wd[k] * w1;
    }
    (v, d)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::grid::GridGeometry;
    use crate::hermite::hermite_function;
    use crate::quadrature::{integrate, AdaptiveOptions};

    #[test]
    fn subordination_weights_reproduce_the_spectral_factor() {
        // sum_k w_k e^{-lambda T_k} should equal e^{-t sqrt(lambda)}
        for lam in [1.0, 3.0, 9.0, 40.0] {
            for t in [1e-4, 0.1, 1.0, 5.0] {
                let nodes = heat_nodes(1, t, t);
                let (w, _) = node_weights(&nodes, t, false);
                let v: f64 = nodes.iter().zip(&w).map(|(tk, wk)| wk * (-lam * tk).exp()).sum();
                let want = (-t * f64::sqrt(lam)).exp();
                assert!((v - want).abs() < 1e-12, "lam={lam} t={t} {v} {want}");
                let (wd, _) = node_weights(&nodes, t, true);
                let d: f64 = nodes.iter().zip(&wd).map(|(tk, wk)| wk * (-lam * tk).exp()).sum();
                let want_d = -t * f64::sqrt(lam) * want;
                assert!((d - want_d).abs() < 1e-12, "lam={lam} t={t}");
            }
        }
    }

    #[test]
    fn poisson_of_one_matches_direct_subordination() {
        // independent route: the u-form of the subordination integral
        let (n, xx, t) = (1usize, 0.8f64, 0.7f64);
        let direct = integrate(
            |v: f64| {
                // u = v^2 removes the u^{-1/2} singularity
                let u = v * v;
                let p = MedaParam::from_t(t * t / (4.0 * u)).unwrap();
                2.0 / PI.sqrt() * action_on_one(&p, n, xx) * (-u).exp()
            },
            // below this v the heat time exceeds 60 and W_T 1 is negligible
            t / 240f64.sqrt(),
            7.0,
            AdaptiveOptions::with_tol(1e-13, 1e-12),
        )
        .unwrap()
        .value;
        let (v, _) = poisson_on_one(n, xx, t);
        assert!((v - direct).abs() < 1e-11, "{v} {direct}");
    }

    #[test]
    fn poisson_on_hermite_functions() {
        let geom = GridGeometry::new(1, 10.0, 257).unwrap();
        for k in [0, 2, 4] {
            let f = GridFunction::from_fn(geom, |x| hermite_function(k, x[0])).unwrap();
            for t in [0.1, 1.0] {
                let (out, est) = apply_poisson_with_estimate(&f, t).unwrap();
                let decay = (-t * (2.0 * k as f64 + 1.0).sqrt()).exp();
                let err = out
                    .samples
                    .iter()
                    .zip(&f.samples)
                    .fold(0.0f64, |m, (a, b)| m.max((a - decay * b).abs()));
                assert!(err < 1e-7 * decay, "k={k} t={t} err={err}");
                assert!(est < 1e-8);
            }
        }
    }

    #[test]
    fn derivative_matches_central_difference_in_log_t() {
        let geom = GridGeometry::new(1, 8.0, 161).unwrap();
        let f = GridFunction::from_fn(geom, |x| (0.5 * x[0]).sin() * (-0.2 * x[0] * x[0]).exp()).unwrap();
        let t = 0.6;
        let delta: f64 = 1e-3;
        let plus = apply_poisson(&f, t * delta.exp()).unwrap();
        let minus = apply_poisson(&f, t * (-delta).exp()).unwrap();
        let an = apply_poisson_t_dt(&f, t).unwrap();
        for i in (0..geom.m).step_by(5) {
            let fd = (plus.samples[i] - minus.samples[i]) / (2.0 * delta);
            assert!((fd - an.samples[i]).abs() < 1e-6, "{fd} {}", an.samples[i]);
        }
    }

    #[test]
    fn rejects_bad_time() {
        let geom = GridGeometry::new(1, 2.0, 9).unwrap();
        let f = GridFunction::from_fn(geom, |_| 1.0).unwrap();
        assert!(apply_poisson(&f, 0.0).is_err());
        assert!(apply_poisson(&f, f64::NAN).is_err());
    }
}
