//! ρ-variation of sampled orbits and the orbit norms `E`, `F`, `E_ρ`.

use serde::{Deserialize, Serialize};

use crate::error::{domain, rejected, Result};

fn check(values: &[f64], rho: f64) -> Result<()> {
    if !(rho > 2.0 && rho.is_finite()) {
        return Err(domain(format!("variation exponent must exceed 2, got {rho}")));
    }
    if values.is_empty() {
        return Err(rejected("orbit must contain at least one sample"));
    }
    if values.iter().any(|v| !v.is_finite()) {
        return Err(rejected("orbit contains a non-finite sample"));
    }
    Ok(())
}

/// Largest `sum |v_{i_k} - v_{i_{k+1}}|^rho` over index subsequences,
/// before the final root.
///
/// `best[i]` is the best sum over subsequences starting at `i`; sums are
/// accumulated right to left so the result is bit-identical to brute force
/// enumeration with the same association.
pub fn variation_power_sum(values: &[f64], rho: f64) -> Result<f64> {
    check(values, rho)?;
    Ok(power_sum_dp(values, rho))
}

fn power_sum_dp(values: &[f64], rho: f64) -> f64 {
    let m = values.len();
    let mut best = vec![0.0f64; m];
    let mut top = 0.0f64;
    for i in (0..m.saturating_sub(1)).rev() {
        let vi = values[i];
        let mut b = 0.0f64;
        for j in i + 1..m {
            let cand = (vi - values[j]).abs().powf(rho) + best[j];
            if cand > b {
                b = cand;
            }
        }
        best[i] = b;
        top = top.max(b);
    }
    top
}

/// Exact ρ-variation of a finite orbit: the supremum over all of its
/// subsequences.
pub fn variation_operator(values: &[f64], rho: f64) -> Result<f64> {
    Ok(variation_power_sum(values, rho)?.powf(1.0 / rho))
}

/// Keeps the endpoints and the strict local extrema (plateaus collapsed).
pub fn turning_points(values: &[f64]) -> Vec<f64> {
    let mut dedup: Vec<f64> = Vec::with_capacity(values.len());
    for &v in values {
        if dedup.last() != Some(&v) {
            dedup.push(v);
        }
    }
    if dedup.len() <= 2 {
        return dedup;
    }
    let mut out = vec![dedup[0]];
    for w in dedup.windows(3) {
        if (w[1] - w[0]) * (w[2] - w[1]) < 0.0 {
            out.push(w[1]);
        }
    }
    out.push(dedup[dedup.len() - 1]);
    out
}

/// Same supremum as [`variation_operator`], computed on the turning points.
///
/// For `rho >= 1` the sum `|a - v|^rho + |v - b|^rho` is convex in `v`, so
/// an interior point of a monotone run can always be moved to one of the
/// run's ends without loss; an optimal subsequence therefore lives on the
/// turning points. Agrees with the full DP up to rounding.
pub fn variation_operator_fast(values: &[f64], rho: f64) -> Result<f64> {
    check(values, rho)?;
    Ok(power_sum_dp(&turning_points(values), rho).powf(1.0 / rho))
}

/// Norms of one vector-valued orbit.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct OrbitNorms {
    /// Sup of the samples' absolute values.
    pub e_norm: f64,
    /// `(sum_j w_j |t_j d/dt T_{t_j} f|^2)^{1/2}` when derivatives are given.
    pub f_norm: Option<f64>,
    pub e_rho_norm: f64,
    pub rho: f64,
}

/// `E`, `F` and `E_ρ` norms of one orbit. `derivative` holds
/// `t_j d/dt T_{t_j} f` and `f_weights` the `dt/t` quadrature weights.
pub fn orbit_norms(values: &[f64], derivative: Option<(&[f64], &[f64])>, rho: f64) -> Result<OrbitNorms> {
    check(values, rho)?;
    let e_norm = values.iter().fold(0.0f64, |m, v| m.max(v.abs()));
    let f_norm = match derivative {
        Some((d, w)) => {
            if d.len() != w.len() {
                return Err(rejected("derivative samples and weights differ in length"));
            }
            Some(f_norm(d, w))
        }
        None => None,
    };
    Ok(OrbitNorms {
        e_norm,
        f_norm,
        e_rho_norm: variation_operator_fast(values, rho)?,
        rho,
    })
}

pub(crate) fn f_norm(d: &[f64], w: &[f64]) -> f64 {
    d.iter().zip(w).map(|(d, w)| w * d * d).sum::<f64>().sqrt()
}

#[cfg(test)]
mod tests {
    use super::*;
    use proptest::prelude::*;
    use rand::{Rng, SeedableRng};

    /// Brute force over all index subsets of size >= 2; sums associate from
    /// the right like the DP.
    #[allow(clippy::assign_op_pattern)]
    fn enumerate(values: &[f64], rho: f64) -> f64 {
        let m = values.len();
        let mut best = 0.0f64;
        for mask in 0u32..(1u32 << m) {
            let idx: Vec<usize> = (0..m).filter(|i| mask & (1 << i) != 0).collect();
            if idx.len() < 2 {
                continue;
            }
            let mut sum = 0.0;
            for k in (0..idx.len() - 1).rev() {
                // right-associated, like the dynamic programme
                sum = (values[idx[k]] - values[idx[k + 1]]).abs().powf(rho) + sum;
            }
            best = best.max(sum);
        }
        best
    }

    #[test]
    fn documented_examples() {
        assert_eq!(variation_operator(&[2.0, 2.0, 2.0], 3.0).unwrap(), 0.0);
        let v = variation_operator(&[0.0, 1.0, 0.0], 3.0).unwrap();
        assert!((v - 2f64.powf(1.0 / 3.0)).abs() < 1e-15);
        assert!((v - 1.259921).abs() < 1e-6);
        let v = variation_operator(&[3.0, 1.0, 0.0], 3.0).unwrap();
        assert!((v - 3.0).abs() < 1e-15);
        assert!(variation_operator(&[1.0, 2.0], 2.0).is_err());
        assert!(variation_operator(&[], 3.0).is_err());
    }

    #[test]
    fn dp_is_bit_identical_to_enumeration() {
        let mut rng = rand_chacha::ChaCha8Rng::seed_from_u64(5);
        for _ in 0..500 {
            let m = rng.gen_range(1..=12);
            let rho = rng.gen_range(2.01..6.0);
            let v: Vec<f64> = (0..m).map(|_| rng.gen_range(-1.0..1.0)).collect();
            let dp = variation_power_sum(&v, rho).unwrap();
            assert_eq!(dp.to_bits(), enumerate(&v, rho).to_bits(), "{v:?} {rho}");
            let fast = variation_operator_fast(&v, rho).unwrap();
            let exact = dp.powf(1.0 / rho);
            assert!((fast - exact).abs() <= 1e-12 * exact.max(1e-300), "{v:?}");
        }
    }

    #[test]
    fn orbit_norm_examples() {
        let n = orbit_norms(&[-0.7], None, 3.0).unwrap();
        assert_eq!(n.e_norm, 0.7);
        assert_eq!(n.e_rho_norm, 0.0);
        for rho in [2.5, 3.0, 10.0] {
            let n = orbit_norms(&[1.0, 0.0], None, rho).unwrap();
            assert_eq!(n.e_norm, 1.0);
            assert_eq!(n.e_rho_norm, 1.0);
        }
        let n = orbit_norms(&[1.0, 0.5], Some((&[3.0, 4.0], &[1.0, 1.0])), 3.0).unwrap();
        assert_eq!(n.f_norm, Some(5.0));
    }

    #[test]
    fn turning_points_collapse_runs() {
        assert_eq!(turning_points(&[0.0, 1.0, 2.0, 2.0, 1.0, 3.0]), vec![0.0, 2.0, 1.0, 3.0]);
        assert_eq!(turning_points(&[5.0]), vec![5.0]);
    }

    proptest! {
        #[test]
        fn monotone_orbits_vary_by_their_range(mut v in prop::collection::vec(-10.0f64..10.0, 1..40), rho in 2.1f64..8.0) {
            v.sort_by(|a, b| b.total_cmp(a));
            let var = variation_operator(&v, rho).unwrap();
            let range = v[0] - v[v.len() - 1];
            prop_assert!((var - range).abs() <= 1e-12 * range.max(1.0));
        }

        #[test]
        fn decreasing_in_rho(v in prop::collection::vec(-1.0f64..1.0, 2..30), r in 2.1f64..5.0) {
            let a = variation_operator(&v, r).unwrap();
            let b = variation_operator(&v, r + 1.0).unwrap();
            prop_assert!(b <= a * (1.0 + 1e-12));
        }

        #[test]
        fn fast_path_agrees(v in prop::collection::vec(-1.0f64..1.0, 1..60), rho in 2.1f64..5.0) {
            let a = variation_operator(&v, rho).unwrap();
            let b = variation_operator_fast(&v, rho).unwrap();
            prop_assert!((a - b).abs() <= 1e-12 * a.max(1e-300));
        }

        #[test]
        fn dominated_by_range_bound(v in prop::collection::vec(-1.0f64..1.0, 1..30), rho in 2.1f64..5.0) {
            // every term is at most the range, and at most m-1 terms
            let var = variation_operator(&v, rho).unwrap();
            let hi = v.iter().cloned().fold(f64::MIN, f64::max);
            let lo = v.iter().cloned().fold(f64::MAX, f64::min);
            let bound = (hi - lo) * ((v.len() - 1).max(1) as f64).powf(1.0 / rho);
            prop_assert!(var <= bound * (1.0 + 1e-12) + 1e-300);
        }
    }
}
