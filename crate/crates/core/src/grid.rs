//! Uniform tensor grids on `[-L, L]^n`, sampled functions and time grids.

use serde::{Deserialize, Serialize};

use crate::error::{rejected, Result};
use crate::hermite::MedaParam;

/// `m` equispaced points per axis on `[-L, L]`, row-major with the last
/// axis fastest.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct GridGeometry {
    pub n: usize,
    pub half_width: f64,
    pub m: usize,
}

impl GridGeometry {
    pub fn new(n: usize, half_width: f64, m: usize) -> Result<Self> {
        if n == 0 || n > 3 {
            return Err(rejected(format!("grids support dimensions 1 to 3, got {n}")));
        }
        if m < 2 {
            return Err(rejected("a grid needs at least two points per axis"));
        }
        if !(half_width.is_finite() && half_width > 0.0) {
            return Err(rejected(format!("box half-width must be positive, got {half_width}")));
        }
        m.checked_pow(n as u32)
            .filter(|&t| t <= 1 << 28)
            .ok_or_else(|| rejected("grid too large"))?;
        Ok(Self { n, half_width, m })
    }

    pub fn spacing(&self) -> f64 {
        2.0 * self.half_width / (self.m - 1) as f64
    }

    pub fn coord(&self, i: usize) -> f64 {
        -self.half_width + i as f64 * self.spacing()
    }

    pub fn axis(&self) -> Vec<f64> {
        (0..self.m).map(|i| self.coord(i)).collect()
    }

    pub fn len(&self) -> usize {
        self.m.pow(self.n as u32)
    }

    pub fn is_empty(&self) -> bool {
        false
    }

    pub fn multi_index(&self, mut idx: usize) -> Vec<usize> {
        let mut out = vec![0; self.n];
        for d in (0..self.n).rev() {
            out[d] = idx % self.m;
            idx /= self.m;
        }
        out
    }

    pub fn flat_index(&self, k: &[usize]) -> usize {
        k.iter().fold(0, |acc, &v| acc * self.m + v)
    }

    pub fn point(&self, idx: usize) -> Vec<f64> {
        self.multi_index(idx).into_iter().map(|i| self.coord(i)).collect()
    }

    pub fn points(&self) -> Vec<Vec<f64>> {
        (0..self.len()).map(|i| self.point(i)).collect()
    }

    /// Distance between consecutive samples along `axis` in the flat layout.
    pub fn stride(&self, axis: usize) -> usize {
        self.m.pow((self.n - 1 - axis) as u32)
    }
}

/// How a grid function continues past the box.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Extension {
    /// Zero outside the box: integrals only see the box.
    Zero,
    /// Nearest boundary value (constant continuation along each axis).
    #[default]
    Clamp,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct GridFunction {
    pub geom: GridGeometry,
    pub samples: Vec<f64>,
    pub extension: Extension,
}

impl GridFunction {
    pub fn new(n: usize, half_width: f64, m: usize, samples: Vec<f64>) -> Result<Self> {
        let geom = GridGeometry::new(n, half_width, m)?;
        Self::from_samples(geom, samples)
    }

    pub fn from_samples(geom: GridGeometry, samples: Vec<f64>) -> Result<Self> {
        if samples.len() != geom.len() {
            return Err(rejected(format!(
                "expected {} samples for the grid, got {}",
                geom.len(),
                samples.len()
            )));
        }
        if let Some(i) = samples.iter().position(|v| !v.is_finite()) {
            return Err(rejected(format!("sample {i} is not finite")));
        }
        Ok(Self {
            geom,
            samples,
            extension: Extension::default(),
        })
    }

    pub fn from_fn(geom: GridGeometry, f: impl Fn(&[f64]) -> f64) -> Result<Self> {
        let samples = (0..geom.len()).map(|i| f(&geom.point(i))).collect();
        Self::from_samples(geom, samples)
    }

    pub fn with_extension(mut self, extension: Extension) -> Self {
        self.extension = extension;
        self
    }

    pub fn max_abs(&self) -> f64 {
        self.samples.iter().fold(0.0, |m, v| m.max(v.abs()))
    }

    /// Tensor cubic Lagrange interpolation, continued past the box
    /// according to the extension policy.
    pub fn interpolate(&self, p: &[f64]) -> f64 {
        const ORDER: usize = 4;
        let g = &self.geom;
        let h = g.spacing();
        let l = g.half_width;
        let mut starts = [0usize; 3];
        let mut weights = [[0.0f64; ORDER]; 3];
        for d in 0..g.n {
            let mut x = p[d];
            if x < -l || x > l {
                match self.extension {
                    Extension::Zero => {
                        if x < -l - 1e-12 * l || x > l + 1e-12 * l {
                            return 0.0;
                        }
                    }
                    Extension::Clamp => {}
                }
                x = x.clamp(-l, l);
            }
            let u = (x + l) / h;
            let base = (u.floor() as i64 - 1).clamp(0, g.m as i64 - ORDER as i64) as usize;
            starts[d] = base;
            crate::quadrature::lagrange_weights(g.coord(base), h, x, &mut weights[d]);
        }
        let mut total = 0.0;
        let count = ORDER.pow(g.n as u32);
        for c in 0..count {
            let mut rem = c;
            let mut idx = 0usize;
            let mut w = 1.0;
            for d in 0..g.n {
                let k = rem % ORDER;
                rem /= ORDER;
                idx = idx * g.m + starts[d] + k;
                w *= weights[d][k];
            }
            total += w * self.samples[idx];
        }
        total
    }
}

/// Decreasing sequence of times `t_0 > t_1 > ... > 0`, stored with the
/// matching `s = tanh t` parameters.
#[derive(Debug, Clone, PartialEq)]
pub struct TimeGrid {
    t: Vec<f64>,
    params: Vec<MedaParam>,
}

impl TimeGrid {
    /// `count` times, geometric in `t`, between `atanh(s_max)` and `atanh(s_min)`.
    pub fn log_spaced(count: usize, s_min: f64, s_max: f64) -> Result<Self> {
        let lo = MedaParam::new(s_min)?.t();
        let hi = MedaParam::new(s_max)?.t();
        if !(lo < hi) || count < 2 {
            return Err(rejected("time grid needs s_min < s_max and at least two points"));
        }
        Self::geometric(count, lo, hi)
    }

    /// Geometric times in `[t_min, t_max]`; also used for truncation radii.
    pub fn geometric(count: usize, t_min: f64, t_max: f64) -> Result<Self> {
        if !(t_min > 0.0 && t_min < t_max && t_max.is_finite()) || count < 2 {
            return Err(rejected("time grid needs 0 < t_min < t_max and at least two points"));
        }
        let ratio = (t_min / t_max).ln() / (count - 1) as f64;
        let t: Vec<f64> = (0..count)
            .map(|j| if j == count - 1 { t_min } else { t_max * (ratio * j as f64).exp() })
            .collect();
        Self::from_times(t)
    }

    pub fn from_times(t: Vec<f64>) -> Result<Self> {
        if t.len() < 2 {
            return Err(rejected("time grid needs at least two points"));
        }
        if t.windows(2).any(|w| !(w[0] > w[1])) {
            return Err(rejected("times must be strictly decreasing"));
        }
        let params = t.iter().map(|&v| MedaParam::from_t(v)).collect::<Result<Vec<_>>>()?;
        Ok(Self { t, params })
    }

    pub fn from_s_values(s: &[f64]) -> Result<Self> {
        let params = s.iter().map(|&v| MedaParam::new(v)).collect::<Result<Vec<_>>>()?;
        let t: Vec<f64> = params.iter().map(|p| p.t()).collect();
        if t.len() < 2 || t.windows(2).any(|w| !(w[0] > w[1])) {
            return Err(rejected("s values must be strictly decreasing with at least two points"));
        }
        Ok(Self { t, params })
    }

    pub fn len(&self) -> usize {
        self.t.len()
    }

    pub fn is_empty(&self) -> bool {
        self.t.is_empty()
    }

    pub fn times(&self) -> &[f64] {
        &self.t
    }

    pub fn params(&self) -> &[MedaParam] {
        &self.params
    }

    pub fn s_values(&self) -> Vec<f64> {
        self.params.iter().map(|p| p.s()).collect()
    }

    /// Inserts the geometric midpoint between neighbours; a superset grid.
    pub fn refined(&self) -> Self {
        let mut t = Vec::with_capacity(2 * self.t.len() - 1);
        for w in self.t.windows(2) {
            t.push(w[0]);
            t.push((w[0] * w[1]).sqrt());
        }
        t.push(*self.t.last().expect("non-empty"));
        Self::from_times(t).expect("midpoints keep the grid valid")
    }

    /// Trapezoid weights for `∫ g(t) dt / t` over `[t_min, t_max]` in `log t`.
    pub fn log_weights(&self) -> Vec<f64> {
        let k = self.t.len();
        let mut w = vec![0.0; k];
        for j in 0..k - 1 {
            let d = 0.5 * (self.t[j] / self.t[j + 1]).ln();
            w[j] += d;
            w[j + 1] += d;
        }
        w
    }
}
