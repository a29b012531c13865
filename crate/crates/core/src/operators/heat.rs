use crate::error::{Error, Result};
use crate::grid::{Extension, GridFunction, TimeGrid};
use crate::hermite::MedaParam;

use super::stencil::HeatStep;

/// Relative size of the box-truncation estimate that is still accepted when
/// a function is continued by zero.
pub const TRUNCATION_TOL: f64 = 1e-8;

fn boundary_max(f: &GridFunction) -> f64 {
    let g = &f.geom;
    let mut worst: f64 = 0.0;
    for idx in 0..g.len() {
        let k = g.multi_index(idx);
        if k.iter().any(|&i| i == 0 || i == g.m - 1) {
            worst = worst.max(f.samples[idx].abs());
        }
    }
    worst
}

pub(crate) fn check_truncation(f: &GridFunction, step: &HeatStep) -> Result<()> {
    if f.extension != Extension::Zero {
        return Ok(());
    }
    let estimate = f.geom.n as f64 * step.dropped_mass() * boundary_max(f);
    let tol = TRUNCATION_TOL * f.max_abs().max(1.0);
    if estimate > tol {
        return Err(Error::Accuracy {
            what: "heat semigroup box truncation".into(),
            estimate,
            tolerance: tol,
        });
    }
    Ok(())
}

/// `W_t f` on the grid of `f`.
pub fn apply_heat(f: &GridFunction, p: &MedaParam) -> Result<GridFunction> {
    let step = HeatStep::new(&f.geom, p, f.extension, false);
    check_truncation(f, &step)?;
    let samples = step.apply(&f.geom, &f.samples);
    Ok(GridFunction {
        geom: f.geom,
        samples,
        extension: f.extension,
    })
}

/// `t d/dt W_t f`.
pub fn apply_heat_t_dt(f: &GridFunction, p: &MedaParam) -> Result<GridFunction> {
    let step = HeatStep::new(&f.geom, p, f.extension, true);
    check_truncation(f, &step)?;
    let scale = p.t() * p.one_minus_s2();
    let samples = step.apply_ds(&f.geom, &f.samples).into_iter().map(|v| scale * v).collect();
    Ok(GridFunction {
        geom: f.geom,
        samples,
        extension: f.extension,
    })
}

/// Values `W_{t_j} f` for every time of the grid, and optionally
/// `t_j d/dt W_{t_j} f`; outer index is the time.
pub(crate) fn heat_orbit(f: &GridFunction, times: &TimeGrid, derivative: bool) -> Result<super::OrbitSamples> {
    let mut values = Vec::with_capacity(times.len());
    let mut derivs = Vec::new();
    for p in times.params() {
        let step = HeatStep::new(&f.geom, p, f.extension, derivative);
        check_truncation(f, &step)?;
        values.push(step.apply(&f.geom, &f.samples));
        if derivative {
            let scale = p.t() * p.one_minus_s2();
            derivs.push(step.apply_ds(&f.geom, &f.samples).into_iter().map(|v| scale * v).collect());
        }
    }
    Ok((values, derivs))
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::grid::GridGeometry;
    use crate::hermite::{heat_action_on_one, hermite_function};
    use proptest::prelude::*;

    fn rel_err(a: &[f64], b: &[f64]) -> f64 {
        let scale = b.iter().fold(0.0f64, |m, v| m.max(v.abs()));
        a.iter().zip(b).fold(0.0f64, |m, (x, y)| m.max((x - y).abs())) / scale
    }

    #[test]
    fn hermite_functions_decay_spectrally_1d() {
        let geom = GridGeometry::new(1, 10.0, 513).unwrap();
        for k in [0, 3, 8] {
            let f = GridFunction::from_fn(geom, |x| hermite_function(k, x[0])).unwrap();
            for s in [1e-4, 0.1, 0.9] {
                let p = MedaParam::new(s).unwrap();
                let out = apply_heat(&f, &p).unwrap();
                let decay = (-(2.0 * k as f64 + 1.0) * p.t()).exp();
                let err = out
                    .samples
                    .iter()
                    .zip(&f.samples)
                    .fold(0.0f64, |m, (a, b)| m.max((a - decay * b).abs()));
                assert!(err < 1e-8 * decay + 1e-13, "k={k} s={s} err={err}");
            }
        }
    }

    #[test]
    fn constant_in_two_dimensions() {
        let geom = GridGeometry::new(2, 4.0, 33).unwrap();
        let f = GridFunction::from_fn(geom, |_| 1.0).unwrap();
        let p = MedaParam::new(0.37).unwrap();
        let out = apply_heat(&f, &p).unwrap();
        for (i, v) in out.samples.iter().enumerate() {
            let exact = heat_action_on_one(&p, &geom.point(i)).unwrap();
            assert!((v - exact).abs() < 1e-12);
        }
    }

    #[test]
    fn t_derivative_of_eigenfunction() {
        let geom = GridGeometry::new(2, 8.0, 129).unwrap();
        let f = GridFunction::from_fn(geom, |x| hermite_function(2, x[0]) * hermite_function(1, x[1])).unwrap();
        let p = MedaParam::new(0.4).unwrap();
        let out = apply_heat_t_dt(&f, &p).unwrap();
        let lam = 2.0 * 3.0 + 2.0;
        let t = p.t();
        let want: Vec<f64> = f.samples.iter().map(|v| -lam * t * (-lam * t).exp() * v).collect();
        assert!(rel_err(&out.samples, &want) < 1e-8);
    }

    #[test]
    fn zero_extension_of_a_constant_is_rejected() {
        let geom = GridGeometry::new(1, 3.0, 61).unwrap();
        let f = GridFunction::from_fn(geom, |_| 1.0).unwrap().with_extension(Extension::Zero);
        assert!(matches!(apply_heat(&f, &MedaParam::new(0.5).unwrap()), Err(Error::Accuracy { .. })));
        let g = GridFunction::from_fn(geom, |x| hermite_function(0, x[0] * 3.0))
            .unwrap()
            .with_extension(Extension::Zero);
        assert!(apply_heat(&g, &MedaParam::new(0.5).unwrap()).is_ok());
    }

    proptest! {
        #![proptest_config(ProptestConfig::with_cases(24))]

        #[test]
        fn semigroup_law(s1 in 0.01f64..0.6, s2 in 0.01f64..0.6, c in -1.0f64..1.0) {
            let geom = GridGeometry::new(1, 8.0, 161).unwrap();
            let f = GridFunction::from_fn(geom, |x| (c * x[0]).cos() * (-0.5 * x[0] * x[0]).exp()).unwrap();
            let p1 = MedaParam::new(s1).unwrap();
            let p2 = MedaParam::new(s2).unwrap();
            let two = apply_heat(&apply_heat(&f, &p1).unwrap(), &p2).unwrap();
            let one = apply_heat(&f, &p1.compose(&p2)).unwrap();
            let err = two.samples.iter().zip(&one.samples).fold(0.0f64, |m, (a, b)| m.max((a - b).abs()));
            prop_assert!(err < 1e-9, "err {err}");
        }

        #[test]
        fn positivity_and_linearity(s in 0.001f64..0.99, a in -3.0f64..3.0) {
            let geom = GridGeometry::new(1, 6.0, 121).unwrap();
            let f = GridFunction::from_fn(geom, |x| 1.0 + x[0].sin().powi(2)).unwrap();
            let g = GridFunction::from_fn(geom, |x| (x[0] * 0.3).cos()).unwrap();
            let fg = GridFunction::from_fn(geom, |x| (1.0 + x[0].sin().powi(2)) + a * (x[0] * 0.3).cos()).unwrap();
            let p = MedaParam::new(s).unwrap();
            let wf = apply_heat(&f, &p).unwrap();
            let wg = apply_heat(&g, &p).unwrap();
            let wfg = apply_heat(&fg, &p).unwrap();
            prop_assert!(wf.samples.iter().all(|v| *v > 0.0));
            for i in 0..geom.m {
                prop_assert!((wfg.samples[i] - wf.samples[i] - a * wg.samples[i]).abs() < 1e-12);
            }
        }
    }
}
