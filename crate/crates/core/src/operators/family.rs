//! Maximal operators, g-functions and variation fields built from sampled
//! orbits `t -> T_t f`.

use serde::{Deserialize, Serialize};

use crate::error::{rejected, Error, Result};
use crate::grid::{GridFunction, TimeGrid};

use super::heat::heat_orbit;
use super::poisson::poisson_orbit;
use super::riesz::{truncated_riesz_multi, RieszOptions};
use super::variation::{f_norm, variation_operator_fast};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Semigroup {
    Heat,
    Poisson,
}

/// An indexed family of operators whose orbit can be sampled.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Family {
    Heat,
    Poisson,
    /// `R_ε` with `ε` running through the grid's times.
    RieszTruncations {
        axis: usize,
    },
}

impl From<Semigroup> for Family {
    fn from(s: Semigroup) -> Self {
        match s {
            Semigroup::Heat => Family::Heat,
            Semigroup::Poisson => Family::Poisson,
        }
    }
}

/// Relative tail mass of the `dt/t` integral beyond the time grid that
/// [`g_function`] accepts.
pub const G_TAIL_TOL: f64 = 1e-4;

/// Samples of the orbit, outer index = time; `derivs` holds
/// `t d/dt T_t f` when requested (semigroups only).
pub(crate) fn orbit(f: &GridFunction, grid: &TimeGrid, family: Family, derivative: bool) -> Result<super::OrbitSamples> {
    match family {
        Family::Heat => heat_orbit(f, grid, derivative),
        Family::Poisson => poisson_orbit(f, grid, derivative),
        Family::RieszTruncations { axis } => {
            if derivative {
                return Err(rejected("the truncation family has no time derivative"));
            }
            let outs = truncated_riesz_multi(f, axis, grid.times(), &RieszOptions::default())?;
            Ok((outs.into_iter().map(|g| g.samples).collect(), Vec::new()))
        }
    }
}

fn pointwise(f: &GridFunction, values: &[Vec<f64>], op: impl Fn(&[f64]) -> Result<f64>) -> Result<GridFunction> {
    let mut samples = Vec::with_capacity(f.geom.len());
    let mut column = vec![0.0; values.len()];
    for i in 0..f.geom.len() {
        for (c, v) in column.iter_mut().zip(values) {
            *c = v[i];
        }
        samples.push(op(&column)?);
    }
    Ok(GridFunction {
        geom: f.geom,
        samples,
        extension: f.extension,
    })
}

/// `sup_j |T_{t_j} f|` pointwise.
pub fn maximal_operator(f: &GridFunction, grid: &TimeGrid, semigroup: Semigroup) -> Result<GridFunction> {
    let (values, _) = orbit(f, grid, semigroup.into(), false)?;
    pointwise(f, &values, |c| Ok(c.iter().fold(0.0f64, |m, v| m.max(v.abs()))))
}

/// `(∫ |t d/dt T_t f|^2 dt/t)^{1/2}` pointwise, trapezoid in `log t`.
///
/// The parts of the integral outside the grid are estimated from the end
/// samples (linear growth near `t = 0`, exponential decay at the spectral
/// gap for large `t`) and added; the call fails when they are not small.
pub fn g_function(f: &GridFunction, grid: &TimeGrid, semigroup: Semigroup) -> Result<GridFunction> {
    if grid.len() < 8 {
        return Err(rejected("g-function needs a time grid with at least 8 points"));
    }
    let (_, derivs) = orbit(f, grid, semigroup.into(), true)?;
    let w = grid.log_weights();
    let t_max = grid.times()[0];
    let gap = match semigroup {
        Semigroup::Heat => f.geom.n as f64,
        Semigroup::Poisson => (f.geom.n as f64).sqrt(),
    };
    let last = derivs.len() - 1;
    let mut worst_tail: f64 = 0.0;
    let mut worst_sq: f64 = 0.0;
    let mut samples = Vec::with_capacity(f.geom.len());
    let mut column = vec![0.0; derivs.len()];
    for i in 0..f.geom.len() {
        for (c, d) in column.iter_mut().zip(&derivs) {
            *c = d[i];
        }
        let body = f_norm(&column, &w).powi(2);
        let tail = 0.5 * column[last].powi(2) + column[0].powi(2) / (2.0 * gap * t_max);
        worst_tail = worst_tail.max(tail);
        worst_sq = worst_sq.max(body + tail);
        samples.push((body + tail).sqrt());
    }
    if worst_tail > G_TAIL_TOL * worst_sq {
        return Err(Error::Accuracy {
            what: "g-function time-grid tails".into(),
            estimate: worst_tail,
            tolerance: G_TAIL_TOL * worst_sq,
        });
    }
    Ok(GridFunction {
        geom: f.geom,
        samples,
        extension: f.extension,
    })
}

/// ρ-variation of the sampled orbit at every grid point.
pub fn variation_field(f: &GridFunction, grid: &TimeGrid, family: Family, rho: f64) -> Result<GridFunction> {
    let (values, _) = orbit(f, grid, family, false)?;
    pointwise(f, &values, |c| variation_operator_fast(c, rho))
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::grid::GridGeometry;
    use crate::hermite::{heat_action_on_one, hermite_function, MedaParam};

    #[test]
    fn maximal_heat_of_one_and_ground_state() {
        let geom = GridGeometry::new(1, 8.0, 161).unwrap();
        let grid = TimeGrid::log_spaced(100, 1e-9, 0.99).unwrap();
        let one = GridFunction::from_fn(geom, |_| 1.0).unwrap();
        let m = maximal_operator(&one, &grid, Semigroup::Heat).unwrap();
        assert!(m.samples.iter().all(|v| (v - 1.0).abs() < 1e-7));
        let h0 = GridFunction::from_fn(geom, |x| hermite_function(0, x[0])).unwrap();
        let m = maximal_operator(&h0, &grid, Semigroup::Heat).unwrap();
        for (a, b) in m.samples.iter().zip(&h0.samples) {
            assert!((a - b).abs() < 1e-8);
        }
    }

    #[test]
    fn maximal_never_decreases_under_refinement() {
        let geom = GridGeometry::new(1, 5.0, 81).unwrap();
        let f = GridFunction::from_fn(geom, |x| (2.0 * x[0]).sin()).unwrap();
        let grid = TimeGrid::log_spaced(16, 1e-4, 0.9).unwrap();
        for sg in [Semigroup::Heat, Semigroup::Poisson] {
            let coarse = maximal_operator(&f, &grid, sg).unwrap();
            let fine = maximal_operator(&f, &grid.refined(), sg).unwrap();
            for (a, b) in coarse.samples.iter().zip(&fine.samples) {
                assert!(b >= a);
            }
        }
    }

    #[test]
    fn g_function_of_hermite_functions() {
        let geom = GridGeometry::new(1, 8.0, 161).unwrap();
        let grid = TimeGrid::log_spaced(256, 1e-6, 1.0 - 1e-6).unwrap();
        for k in [0, 1, 3] {
            let f = GridFunction::from_fn(geom, |x| hermite_function(k, x[0])).unwrap();
            for sg in [Semigroup::Heat, Semigroup::Poisson] {
                let g = g_function(&f, &grid, sg).unwrap();
                for (a, b) in g.samples.iter().zip(&f.samples) {
                    assert!((a - 0.5 * b.abs()).abs() < 1e-5, "k={k} {sg:?} {a} {b}");
                }
            }
        }
        let zero = GridFunction::from_fn(geom, |_| 0.0).unwrap();
        let g = g_function(&zero, &grid, Semigroup::Heat).unwrap();
        assert!(g.samples.iter().all(|v| *v == 0.0));
        assert!(g_function(&zero, &TimeGrid::log_spaced(4, 0.1, 0.5).unwrap(), Semigroup::Heat).is_err());
    }

    #[test]
    fn heat_variation_of_one_is_orbit_range() {
        let geom = GridGeometry::new(1, 4.0, 41).unwrap();
        let grid = TimeGrid::log_spaced(128, 1e-6, 1.0 - 1e-4).unwrap();
        let one = GridFunction::from_fn(geom, |_| 1.0).unwrap();
        let v = variation_field(&one, &grid, Family::Heat, 3.0).unwrap();
        let p_min = MedaParam::new(1e-6).unwrap();
        let p_max = MedaParam::new(1.0 - 1e-4).unwrap();
        for (i, val) in v.samples.iter().enumerate() {
            let x = [geom.coord(i)];
            let want = heat_action_on_one(&p_min, &x).unwrap() - heat_action_on_one(&p_max, &x).unwrap();
            assert!((val - want).abs() < 1e-10, "{val} {want}");
        }
    }

    #[test]
    fn heat_variation_of_ground_state_at_origin() {
        let geom = GridGeometry::new(1, 6.0, 61).unwrap();
        let grid = TimeGrid::log_spaced(64, 1e-6, 0.95).unwrap();
        let h0 = GridFunction::from_fn(geom, |x| hermite_function(0, x[0])).unwrap();
        let v = variation_field(&h0, &grid, Family::Heat, 3.0).unwrap();
        let (t_max, t_min) = (grid.times()[0], grid.times()[63]);
        let want = hermite_function(0, 0.0) * ((-t_min).exp() - (-t_max).exp());
        assert!((v.samples[30] - want).abs() < 1e-9);
    }
}
