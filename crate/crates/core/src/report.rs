//! Verification summaries: assembly, pass/fail lines and JSON emission.

use serde::{Deserialize, Serialize};

use crate::bmo::BmoEstimate;
use crate::config::{Checks, RadiusGridSpec, RunConfig, TimeGridSpec};
use crate::error::Result;
use crate::geometry::FamilyOptions;
use crate::verify::{
    verify_size_bound, verify_smoothness_bound, verify_t1_conditions, BoundKind, KernelBoundReport, OrbitKernel, PairSweep, T1Report,
};

/// The inputs a summary was computed from.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Provenance {
    pub n: usize,
    pub half_width: f64,
    pub points: usize,
    pub time_grid: TimeGridSpec,
    pub radii: RadiusGridSpec,
    pub rho: f64,
    pub tol: f64,
    pub c: f64,
    pub checks: Checks,
    pub sweep: PairSweep,
    pub family: FamilyOptions,
    pub seed: u64,
}

impl From<&RunConfig> for Provenance {
    fn from(c: &RunConfig) -> Self {
        Self {
            n: c.n,
            half_width: c.half_width,
            points: c.points,
            time_grid: c.time_grid.clone(),
            radii: c.radii.clone(),
            rho: c.rho,
            tol: c.tol,
            c: c.c,
            checks: c.checks,
            sweep: c.sweep,
            family: c.family.clone(),
            seed: c.seed,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct NamedEstimate {
    pub label: String,
    pub estimate: BmoEstimate,
}

/// Verdict for one operator (or one labelled BMO estimate).
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SummaryLine {
    pub subject: String,
    pub passed: bool,
    pub problems: Vec<String>,
}

#[derive(Debug, Clone, PartialEq, Default, Serialize, Deserialize)]
pub struct VerificationSummary {
    pub provenance: Option<Provenance>,
    pub kernel_bounds: Vec<KernelBoundReport>,
    pub t1: Vec<T1Report>,
    pub bmo: Vec<NamedEstimate>,
    pub lines: Vec<SummaryLine>,
}

impl VerificationSummary {
    pub fn passed(&self) -> bool {
        self.lines.iter().all(|l| l.passed)
    }

    /// Pretty JSON; field order is fixed, so equal summaries give equal bytes.
    pub fn to_json(&self) -> String {
        serde_json::to_string_pretty(self).expect("summaries serialize")
    }
}

fn line_for<'a>(lines: &'a mut Vec<SummaryLine>, subject: &str) -> &'a mut SummaryLine {
    match lines.iter().position(|l| l.subject == subject) {
        Some(i) => &mut lines[i],
        None => {
            lines.push(SummaryLine {
                subject: subject.to_string(),
                passed: true,
                problems: Vec::new(),
            });
            lines.last_mut().expect("just pushed")
        }
    }
}

fn flag(line: &mut SummaryLine, problem: String) {
    line.passed = false;
    line.problems.push(problem);
}

/// Collects reports into one summary with a pass/fail line per subject, in
/// order of first appearance. A line passes when every constant behind it
/// is finite and converged.
pub fn assemble_report(
    provenance: Option<Provenance>,
    kernel_bounds: Vec<KernelBoundReport>,
    t1: Vec<T1Report>,
    bmo: Vec<NamedEstimate>,
) -> VerificationSummary {
    let mut lines = Vec::new();
    for r in &kernel_bounds {
        let line = line_for(&mut lines, &r.operator.to_string());
        let what = match r.bound {
            BoundKind::Size => "size bound",
            BoundKind::Smoothness => "smoothness bound",
        };
        if !r.log_fitted_c.is_finite() {
            flag(line, format!("{what}: constant is not finite"));
        } else if !r.converged {
            flag(
                line,
                format!(
                    "{what}: not converged (log C {:.6} -> {:.6})",
                    r.log_fitted_c, r.log_refined_fitted_c
                ),
            );
        }
        if r.failures > 0 {
            flag(line, format!("{what}: {} kernel evaluations failed", r.failures));
        }
    }
    for r in &t1 {
        let subject = r.operator.map_or_else(|| "sampled data".to_string(), |o| o.to_string());
        let line = line_for(&mut lines, &subject);
        if !(r.cond_i_sup.is_finite() && r.cond_ii_sup.is_finite()) {
            flag(line, "T1 conditions: supremum is not finite".into());
        } else if !r.converged {
            flag(
                line,
                format!(
                    "T1 conditions: not converged (({:e}, {:e}) -> ({:e}, {:e}))",
                    r.cond_i_sup, r.cond_ii_sup, r.refined_cond_i_sup, r.refined_cond_ii_sup
                ),
            );
        }
    }
    for b in &bmo {
        let line = line_for(&mut lines, &b.label);
        if !b.estimate.norm.is_finite() {
            flag(line, "BMO estimate is not finite".into());
        } else if !b.estimate.converged {
            flag(
                line,
                format!(
                    "BMO estimate not converged ({:e} -> {:e})",
                    b.estimate.norm, b.estimate.refined_norm
                ),
            );
        }
    }
    VerificationSummary {
        provenance,
        kernel_bounds,
        t1,
        bmo,
        lines,
    }
}

/// Runs the configured checks for every configured operator, each in its
/// natural norm.
pub fn run_verification(cfg: &RunConfig) -> Result<VerificationSummary> {
    cfg.validate()?;
    let ctx = cfg.context()?;
    let sweep = PairSweep {
        seed: cfg.seed,
        ..cfg.sweep
    };
    let mut kernel_bounds = Vec::new();
    let mut t1 = Vec::new();
    for &op in &cfg.operators {
        let grid = cfg.grid_for(op)?;
        let space = op.default_space();
        if cfg.checks.size || cfg.checks.smoothness {
            let kernel = OrbitKernel::new(op, cfg.n, &grid)?;
            if cfg.checks.size {
                kernel_bounds.push(verify_size_bound(&kernel, space, cfg.c, &sweep, cfg.rho)?);
            }
            if cfg.checks.smoothness {
                kernel_bounds.push(verify_smoothness_bound(&kernel, space, &sweep, cfg.rho)?);
            }
        }
        if cfg.checks.t1 {
            t1.push(verify_t1_conditions(op, &ctx, &grid, space, &cfg.t1_options())?);
        }
    }
    Ok(assemble_report(Some(cfg.into()), kernel_bounds, t1, Vec::new()))
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::verify::OperatorId;

    #[test]
    fn empty_input_gives_empty_summary() {
        let s = assemble_report(None, Vec::new(), Vec::new(), Vec::new());
        assert_eq!(s, VerificationSummary::default());
        assert!(s.passed());
    }

    #[test]
    fn lines_follow_reports() {
        let cfg = RunConfig {
            operators: vec![OperatorId::Riesz { axis: 0 }],
            sweep: PairSweep::new(2.0, 16),
            checks: Checks {
                size: true,
                smoothness: false,
                t1: false,
            },
            ..RunConfig::default()
        };
        let s = run_verification(&cfg).unwrap();
        assert_eq!(s.lines.len(), 1);
        assert_eq!(s.lines[0].subject, "riesz(1)");
        let mut bad = s.kernel_bounds[0].clone();
        bad.converged = false;
        let s2 = assemble_report(None, vec![bad], Vec::new(), Vec::new());
        assert!(!s2.passed());
        assert!(s2.lines[0].problems[0].contains("not converged"));
        assert_eq!(s.to_json(), run_verification(&cfg).unwrap().to_json());
    }
}
