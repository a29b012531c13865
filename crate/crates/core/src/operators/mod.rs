//! Operators acting on grid functions: the heat and Poisson semigroups,
//! Riesz transforms, and the square, maximal and variation functionals of
//! their orbits.

mod family;
mod heat;
mod poisson;
mod riesz;
mod stencil;
mod variation;

pub use family::{g_function, maximal_operator, variation_field, Family, Semigroup, G_TAIL_TOL};
pub use heat::{apply_heat, apply_heat_t_dt, TRUNCATION_TOL};
pub use poisson::{apply_poisson, apply_poisson_t_dt, apply_poisson_with_estimate, POISSON_TOL};
pub use riesz::{riesz_transform, truncated_riesz, truncated_riesz_multi, RieszOptions};
pub use variation::{orbit_norms, turning_points, variation_operator, variation_operator_fast, variation_power_sum, OrbitNorms};

pub(crate) use poisson::{heat_nodes, node_weights, poisson_on_one};
pub(crate) use riesz::riesz_on_one;
pub(crate) use variation::f_norm;

/// Orbit samples and their `t d/dt` samples, one vector per time.
pub(crate) type OrbitSamples = (Vec<Vec<f64>>, Vec<Vec<f64>>);
