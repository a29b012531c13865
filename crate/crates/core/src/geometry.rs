//! Critical radius, balls, ball families and the critical-ball covering.

use serde::{Deserialize, Serialize};

use crate::error::{domain, rejected, Result};

/// Problem setting shared by the sweeps: dimension, box `[-L, L]^n`
/// and the default numerical tolerance.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SpaceContext {
    pub n: usize,
    pub half_width: f64,
    pub tol: f64,
}

impl SpaceContext {
    pub fn new(n: usize, half_width: f64, tol: f64) -> Result<Self> {
        if n == 0 {
            return Err(rejected("dimension must be at least 1"));
        }
        if !(half_width.is_finite() && half_width > 0.0) {
            return Err(rejected(format!("box half-width must be positive, got {half_width}")));
        }
        if !(tol.is_finite() && tol > 0.0) {
            return Err(rejected(format!("tolerance must be positive, got {tol}")));
        }
        Ok(Self { n, half_width, tol })
    }

    /// Smallest critical radius attained in the box (at a corner).
    pub fn min_critical_radius(&self) -> f64 {
        let corner = self.half_width * (self.n as f64).sqrt();
        radius_of_norm(corner)
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Ball {
    pub center: Vec<f64>,
    pub radius: f64,
}

impl Ball {
    pub fn new(center: Vec<f64>, radius: f64) -> Result<Self> {
        if !(radius.is_finite() && radius > 0.0) {
            return Err(rejected(format!("ball radius must be positive, got {radius}")));
        }
        if center.iter().any(|c| !c.is_finite()) {
            return Err(rejected("ball center must be finite"));
        }
        Ok(Self { center, radius })
    }

    pub fn contains(&self, p: &[f64]) -> bool {
        dist2(&self.center, p) < self.radius * self.radius
    }

    pub fn volume(&self) -> f64 {
        unit_ball_volume(self.center.len()) * self.radius.powi(self.center.len() as i32)
    }
}

/// Volume of the unit ball in `R^n`.
pub fn unit_ball_volume(n: usize) -> f64 {
    // omega_n = pi^{n/2} / Gamma(n/2 + 1), via the two-step recurrence.
    let mut v = [1.0, 2.0];
    for k in 2..=n {
        let next = 2.0 * std::f64::consts::PI / k as f64 * v[0];
        v = [v[1], next];
    }
    if n == 0 {
        1.0
    } else {
        v[1]
    }
}

pub fn norm(x: &[f64]) -> f64 {
    x.iter().map(|v| v * v).sum::<f64>().sqrt()
}

pub fn dist2(x: &[f64], y: &[f64]) -> f64 {
    x.iter().zip(y).map(|(a, b)| (a - b) * (a - b)).sum()
}

pub fn dist(x: &[f64], y: &[f64]) -> f64 {
    dist2(x, y).sqrt()
}

fn radius_of_norm(r: f64) -> f64 {
    if r < 1.0 {
        0.5
    } else {
        1.0 / (1.0 + r)
    }
}

/// The critical radius: `1/2` inside the unit ball, `1/(1+|x|)` outside.
pub fn critical_radius(x: &[f64]) -> Result<f64> {
    if x.iter().any(|v| !v.is_finite()) {
        return Err(domain("critical radius of a non-finite point"));
    }
    Ok(radius_of_norm(norm(x)))
}

/// Returns `max(g(y)/g(x), g(x)/g(y))` for `|x - y| <= c * g(x)`.
pub fn gamma_comparability(x: &[f64], y: &[f64], c: f64) -> Result<f64> {
    if !(c.is_finite() && c > 0.0) {
        return Err(rejected(format!("comparability constant must be positive, got {c}")));
    }
    let gx = critical_radius(x)?;
    let gy = critical_radius(y)?;
    if dist(x, y) > c * gx {
        return Err(domain(format!(
            "points are {} apart, beyond {c} critical radii ({})",
            dist(x, y),
            c * gx
        )));
    }
    Ok((gy / gx).max(gx / gy))
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum BallKind {
    /// Radii `gamma(x) 2^-j` for `j = 1..=j_max`.
    Small,
    /// Radius exactly `gamma(x)`.
    Critical,
    /// Radii `gamma(x) 2^j`, `j >= 0`, up to the box half-width.
    Large,
}

/// Which centres and how many dyadic levels a family uses.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct FamilyOptions {
    /// Lattice spacing for the centres; defaults to a quarter of the smallest
    /// critical radius in the box.
    pub center_spacing: Option<f64>,
    /// Explicit centres, overriding the lattice.
    pub centers: Option<Vec<Vec<f64>>>,
    /// Number of dyadic refinements below the critical radius.
    pub j_max: usize,
}

impl Default for FamilyOptions {
    fn default() -> Self {
        Self {
            center_spacing: None,
            centers: None,
            j_max: 5,
        }
    }
}

impl FamilyOptions {
    /// Halves the centre spacing and adds one dyadic level.
    pub fn refined(&self, ctx: &SpaceContext) -> Self {
        let spacing = self.spacing(ctx);
        Self {
            center_spacing: Some(0.5 * spacing),
            centers: self.centers.clone(),
            j_max: self.j_max + 1,
        }
    }

    pub fn spacing(&self, ctx: &SpaceContext) -> f64 {
        self.center_spacing.unwrap_or(0.25 * ctx.min_critical_radius())
    }

    pub fn center_list(&self, ctx: &SpaceContext) -> Vec<Vec<f64>> {
        match &self.centers {
            Some(c) => c.clone(),
            None => symmetric_lattice(ctx.n, ctx.half_width, self.spacing(ctx)),
        }
    }
}

/// Points `k * spacing` of the box, `k` an integer vector; row-major order.
pub fn symmetric_lattice(n: usize, half_width: f64, spacing: f64) -> Vec<Vec<f64>> {
    let k = (half_width / spacing + 1e-9).floor() as i64;
    let axis: Vec<f64> = (-k..=k).map(|i| i as f64 * spacing).collect();
    let mut out = vec![Vec::with_capacity(n)];
    for _ in 0..n {
        let mut next = Vec::with_capacity(out.len() * axis.len());
        for p in &out {
            for &a in &axis {
                let mut q = p.clone();
                q.push(a);
                next.push(q);
            }
        }
        out = next;
    }
    out
}

/// Enumerates the balls of one kind around every centre of the family.
pub fn ball_family(ctx: &SpaceContext, kind: BallKind, opts: &FamilyOptions) -> Result<Vec<Ball>> {
    let mut balls = Vec::new();
    for c in opts.center_list(ctx) {
        if c.len() != ctx.n {
            return Err(rejected("family centre has the wrong dimension"));
        }
        let g = critical_radius(&c)?;
        match kind {
            BallKind::Critical => balls.push(Ball::new(c, g)?),
            BallKind::Small => {
                for j in 1..=opts.j_max {
                    balls.push(Ball::new(c.clone(), g * 0.5f64.powi(j as i32))?);
                }
            }
            BallKind::Large => {
                let mut r = g;
                while r <= ctx.half_width * (1.0 + 1e-12) {
                    balls.push(Ball::new(c.clone(), r)?);
                    r *= 2.0;
                }
            }
        }
    }
    Ok(balls)
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct CriticalCovering {
    pub centers: Vec<Vec<f64>>,
    pub radii: Vec<f64>,
    pub overlap_bound: usize,
}

impl CriticalCovering {
    pub fn covers(&self, p: &[f64]) -> bool {
        self.centers.iter().zip(&self.radii).any(|(c, r)| dist2(c, p) < r * r)
    }
}

/// Greedy covering of the box by critical balls.
///
/// Lattice points are visited by increasing distance from the origin; an
/// uncovered point becomes the next centre. A point only counts as covered
/// when it sits half a lattice diagonal inside a ball, so every point of the
/// box (not only lattice points) ends up covered.
pub fn build_critical_covering(ctx: &SpaceContext) -> Result<CriticalCovering> {
    let n = ctx.n;
    let spacing = 0.25 * ctx.min_critical_radius();
    let margin = 0.5 * spacing * (n as f64).sqrt();
    let k = (ctx.half_width / spacing).ceil() as i64;
    let per_axis = (2 * k + 1) as usize;
    let total = per_axis
        .checked_pow(n as u32)
        .filter(|t| *t <= 50_000_000)
        .ok_or_else(|| rejected("covering lattice too large for this box"))?;
    // Lattice clamped to the box so the corners are represented exactly.
    let coord = |i: usize| -> f64 { ((i as i64 - k) as f64 * spacing).clamp(-ctx.half_width, ctx.half_width) };
    let point = |mut idx: usize| -> Vec<f64> {
        let mut p = vec![0.0; n];
        for d in (0..n).rev() {
            p[d] = coord(idx % per_axis);
            idx /= per_axis;
        }
        p
    };
    let mut order: Vec<usize> = (0..total).collect();
    let norms: Vec<f64> = (0..total).map(|i| norm(&point(i))).collect();
    order.sort_by(|&a, &b| norms[a].total_cmp(&norms[b]).then(a.cmp(&b)));

    let mut covered = vec![false; total];
    let mut centers = Vec::new();
    let mut radii = Vec::new();
    for &i in &order {
        if covered[i] {
            continue;
        }
        let c = point(i);
        let g = critical_radius(&c)?;
        let reach = g - margin;
        debug_assert!(reach > 0.0);
        // Visit the index box around the centre.
        let span = (reach / spacing).ceil() as i64 + 1;
        let base: Vec<i64> = {
            let mut idx = i;
            let mut b = vec![0i64; n];
            for d in (0..n).rev() {
                b[d] = (idx % per_axis) as i64;
                idx /= per_axis;
            }
            b
        };
        let mut offs = vec![-span; n];
        'outer: loop {
            let mut flat = 0usize;
            let mut inside = true;
            for d in 0..n {
                let j = base[d] + offs[d];
                if j < 0 || j >= per_axis as i64 {
                    inside = false;
                    break;
                }
                flat = flat * per_axis + j as usize;
            }
            if inside && !covered[flat] && dist(&point(flat), &c) <= reach {
                covered[flat] = true;
            }
            for d in (0..n).rev() {
                offs[d] += 1;
                if offs[d] <= span {
                    continue 'outer;
                }
                offs[d] = -span;
            }
            break;
        }
        centers.push(c);
        radii.push(g);
    }

    let mut overlap = 0;
    for a in 0..centers.len() {
        let count = (0..centers.len())
            .filter(|&b| dist(&centers[a], &centers[b]) < 4.0 * (radii[a] + radii[b]))
            .count();
        overlap = overlap.max(count);
    }
    Ok(CriticalCovering {
        centers,
        radii,
        overlap_bound: overlap,
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use proptest::prelude::*;
    use rand::{Rng, SeedableRng};
    use rand_chacha::ChaCha8Rng;

    #[test]
    fn critical_radius_values() {
        assert_eq!(critical_radius(&[0.0]).unwrap(), 0.5);
        assert_eq!(critical_radius(&[3.0, 4.0]).unwrap(), 1.0 / 6.0);
        assert_eq!(critical_radius(&[0.999]).unwrap(), 0.5);
        assert_eq!(critical_radius(&[1.0]).unwrap(), 0.5);
        assert!(critical_radius(&[f64::NAN]).is_err());
    }

    #[test]
    fn unit_ball_volumes() {
        let pi = std::f64::consts::PI;
        assert!((unit_ball_volume(1) - 2.0).abs() < 1e-15);
        assert!((unit_ball_volume(2) - pi).abs() < 1e-15);
        assert!((unit_ball_volume(3) - 4.0 * pi / 3.0).abs() < 1e-14);
    }

    #[test]
    fn comparability_sweep_is_bounded() {
        let mut rng = ChaCha8Rng::seed_from_u64(7);
        let mut worst: f64 = 1.0;
        for _ in 0..10_000 {
            let x = [rng.gen_range(-10.0..10.0), rng.gen_range(-10.0..10.0)];
            let g = critical_radius(&x).unwrap();
            let r = rng.gen_range(0.0..2.0) * g;
            let a: f64 = rng.gen_range(0.0..std::f64::consts::TAU);
            let y = [x[0] + r * a.cos(), x[1] + r * a.sin()];
            worst = worst.max(gamma_comparability(&x, &y, 2.0).unwrap());
        }
        assert!(worst < 4.0, "{worst}");
        assert!(gamma_comparability(&[0.0], &[5.0], 2.0).is_err());
    }

    #[test]
    fn critical_family_on_small_lattice() {
        let ctx = SpaceContext::new(1, 1.0, 1e-10).unwrap();
        let opts = FamilyOptions {
            center_spacing: Some(1.0),
            ..Default::default()
        };
        let balls = ball_family(&ctx, BallKind::Critical, &opts).unwrap();
        let radii: Vec<f64> = balls.iter().map(|b| b.radius).collect();
        assert_eq!(radii, vec![0.5, 0.5, 0.5]);
    }

    #[test]
    fn large_family_stops_at_box() {
        let ctx = SpaceContext::new(1, 4.0, 1e-10).unwrap();
        let opts = FamilyOptions {
            centers: Some(vec![vec![0.0]]),
            ..Default::default()
        };
        let balls = ball_family(&ctx, BallKind::Large, &opts).unwrap();
        let radii: Vec<f64> = balls.iter().map(|b| b.radius).collect();
        assert_eq!(radii, vec![0.5, 1.0, 2.0, 4.0]);
    }

    #[test]
    fn covering_of_small_box_is_one_ball() {
        let ctx = SpaceContext::new(1, 0.4, 1e-10).unwrap();
        let cov = build_critical_covering(&ctx).unwrap();
        assert_eq!(cov.centers, vec![vec![0.0]]);
        assert_eq!(cov.radii, vec![0.5]);
        assert_eq!(cov.overlap_bound, 1);
    }

    #[test]
    fn covering_contains_random_points() {
        let ctx = SpaceContext::new(1, 5.0, 1e-10).unwrap();
        let cov = build_critical_covering(&ctx).unwrap();
        let mut rng = ChaCha8Rng::seed_from_u64(11);
        for _ in 0..10_000 {
            let p = [rng.gen_range(-5.0..=5.0)];
            assert!(cov.covers(&p), "{p:?}");
        }
        for (c, r) in cov.centers.iter().zip(&cov.radii) {
            assert_eq!(*r, critical_radius(c).unwrap());
        }
    }

    #[test]
    fn covering_overlap_matches_pairwise_count_2d() {
        let ctx = SpaceContext::new(2, 3.0, 1e-10).unwrap();
        let cov = build_critical_covering(&ctx).unwrap();
        assert!(cov.overlap_bound >= 1 && cov.overlap_bound < cov.centers.len());
        // Independent count: balls of radius 4 gamma intersect iff the
        // centres are closer than the sum of radii.
        let mut brute = 0;
        for (i, ci) in cov.centers.iter().enumerate() {
            let mut c = 0;
            for (j, cj) in cov.centers.iter().enumerate() {
                let d = ((ci[0] - cj[0]).powi(2) + (ci[1] - cj[1]).powi(2)).sqrt();
                if d < 4.0 * cov.radii[i] + 4.0 * cov.radii[j] {
                    c += 1;
                }
            }
            brute = brute.max(c);
        }
        assert_eq!(brute, cov.overlap_bound);
        let mut rng = ChaCha8Rng::seed_from_u64(3);
        for _ in 0..5_000 {
            let p = [rng.gen_range(-3.0..=3.0), rng.gen_range(-3.0..=3.0)];
            assert!(cov.covers(&p));
        }
    }

    proptest! {
        #[test]
        fn critical_radius_is_positive_and_capped(x in -1e6f64..1e6, y in -1e6f64..1e6) {
            let g = critical_radius(&[x, y]).unwrap();
            prop_assert!(g > 0.0 && g <= 0.5);
        }

        #[test]
        fn comparable_within_one_radius(x in -50.0f64..50.0, t in -1.0f64..1.0) {
            let g = critical_radius(&[x]).unwrap();
            let m = gamma_comparability(&[x], &[x + t * g], 1.0).unwrap();
            prop_assert!((1.0..4.0).contains(&m));
        }
    }
}
