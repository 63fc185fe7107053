//! Densities, wrap-around pushforwards, equidistribution diagnostics and
//! time-averaged phases.

use crate::error::{Error, Result};
use crate::quad::gauss_legendre_on;
use num_complex::Complex64;
use rand::Rng;

/// Default number of grid samples for a density.
pub const DEFAULT_RESOLUTION: usize = 1 << 14;
/// Default number of angular bins for circular laws.
pub const DEFAULT_ANGULAR_BINS: usize = 1 << 12;

const NORMALIZATION_TOL: f64 = 1e-9;
// Interior grid points whose second difference exceeds this fraction of the peak
// density are treated as breakpoints by the δ-quadrature.
const KINK_THRESHOLD: f64 = 1e-6;
const MAX_PANELS: usize = 64;

/// A real random variable with a piecewise-linear density on a closed interval.
///
/// The density is the linear interpolant of uniform-grid samples, so the
/// trapezoidal sum over the grid is the exact integral and equals one.
#[derive(Debug, Clone, PartialEq)]
pub struct DensityRV {
    lo: f64,
    hi: f64,
    step: f64,
    values: Vec<f64>,
    // prefix[i] = mass of the cells left of grid point i
    prefix: Vec<f64>,
}

impl DensityRV {
    /// Builds a density from unnormalized samples on a uniform grid of `[lo, hi]`.
    pub fn from_samples(lo: f64, hi: f64, samples: Vec<f64>) -> Result<Self> {
        if !(lo.is_finite() && hi.is_finite() && hi > lo) {
            return Err(Error::InvalidInput(format!(
                "support [{lo}, {hi}] must have strictly positive length"
            )));
        }
        if samples.len() < 2 {
            return Err(Error::InvalidInput("grid resolution must be at least 2".into()));
        }
        if let Some(bad) = samples.iter().find(|v| !v.is_finite() || **v < 0.0) {
            return Err(Error::InvalidInput(format!("density value {bad} is negative or non-finite")));
        }
        let step = (hi - lo) / (samples.len() - 1) as f64;
        let raw = trapezoid(&samples, step);
        if !(raw > 0.0) {
            return Err(Error::InvalidInput("density has zero total mass".into()));
        }
        let values: Vec<f64> = samples.iter().map(|v| v / raw).collect();
        let mut prefix = Vec::with_capacity(values.len());
        let mut acc = 0.0;
        prefix.push(0.0);
        for w in values.windows(2) {
            acc += 0.5 * step * (w[0] + w[1]);
            prefix.push(acc);
        }
        if (acc - 1.0).abs() > NORMALIZATION_TOL {
            return Err(Error::InvalidInput(format!("normalization drifted to {acc}")));
        }
        Ok(Self { lo, hi, step, values, prefix })
    }

    /// Samples `f` at `resolution` uniformly spaced points of `[lo, hi]`.
    pub fn from_fn<F: Fn(f64) -> f64>(lo: f64, hi: f64, resolution: usize, f: F) -> Result<Self> {
        if resolution < 2 {
            return Err(Error::InvalidInput("grid resolution must be at least 2".into()));
        }
        let step = (hi - lo) / (resolution - 1) as f64;
        let samples = (0..resolution).map(|i| f(grid_point(lo, hi, step, i, resolution))).collect();
        Self::from_samples(lo, hi, samples)
    }

    /// Uniform law on `[lo, hi]` at the default resolution.
    pub fn uniform(lo: f64, hi: f64) -> Result<Self> {
        Self::from_fn(lo, hi, DEFAULT_RESOLUTION, |_| 1.0)
    }

    /// Weighted mixture of component laws, resampled on the hull of their supports.
    pub fn mixture(components: &[(f64, &DensityRV)], resolution: usize) -> Result<Self> {
        if components.is_empty() {
            return Err(Error::InvalidInput("mixture needs at least one component".into()));
        }
        if components.iter().any(|(w, _)| !(w.is_finite() && *w >= 0.0)) {
            return Err(Error::InvalidInput("mixture weights must be nonnegative".into()));
        }
        let lo = components.iter().map(|(_, d)| d.lo).fold(f64::INFINITY, f64::min);
        let hi = components.iter().map(|(_, d)| d.hi).fold(f64::NEG_INFINITY, f64::max);
        Self::from_fn(lo, hi, resolution, |x| components.iter().map(|(w, d)| w * d.density(x)).sum())
    }

    pub fn support(&self) -> (f64, f64) {
        (self.lo, self.hi)
    }

    pub fn resolution(&self) -> usize {
        self.values.len()
    }

    pub fn grid_values(&self) -> &[f64] {
        &self.values
    }

    fn x_at(&self, i: usize) -> f64 {
        grid_point(self.lo, self.hi, self.step, i, self.values.len())
    }

    // Cell index and its left grid point; x must lie within the support.
    fn locate(&self, x: f64) -> usize {
        let s = ((x - self.lo) / self.step).floor();
        (s.max(0.0) as usize).min(self.values.len() - 2)
    }

    fn value_in_cell(&self, i: usize, x: f64) -> f64 {
        let frac = ((x - self.x_at(i)) / self.step).clamp(0.0, 1.0);
        self.values[i] + frac * (self.values[i + 1] - self.values[i])
    }

    /// Density value; zero outside the support.
    pub fn density(&self, x: f64) -> f64 {
        let slack = 1e-12 * (self.hi - self.lo);
        if x < self.lo - slack || x > self.hi + slack {
            return 0.0;
        }
        let x = x.clamp(self.lo, self.hi);
        self.value_in_cell(self.locate(x), x)
    }

    /// Exact mass of the interpolated density on `[a, b]`.
    pub fn mass_between(&self, a: f64, b: f64) -> f64 {
        let a = a.max(self.lo);
        let b = b.min(self.hi);
        if !(b > a) {
            return 0.0;
        }
        let ia = self.locate(a);
        let ib = self.locate(b);
        let ra = self.value_in_cell(ia, a);
        let rb = self.value_in_cell(ib, b);
        if ia == ib {
            return 0.5 * (b - a) * (ra + rb);
        }
        let end_a = self.x_at(ia + 1);
        let start_b = self.x_at(ib);
        0.5 * (end_a - a).max(0.0) * (ra + self.values[ia + 1])
            + (self.prefix[ib] - self.prefix[ia + 1])
            + 0.5 * (b - start_b).max(0.0) * (self.values[ib] + rb)
    }

    pub fn cdf(&self, x: f64) -> f64 {
        self.mass_between(self.lo, x).min(1.0)
    }

    pub fn mean(&self) -> f64 {
        // exact for the piecewise-linear interpolant
        let h = self.step;
        (0..self.values.len() - 1)
            .map(|i| {
                let (x0, v0, v1) = (self.x_at(i), self.values[i], self.values[i + 1]);
                h * (x0 * 0.5 * (v0 + v1) + h * (v0 / 6.0 + v1 / 3.0))
            })
            .sum()
    }

    /// Inverse-CDF draw.
    pub fn sample<R: Rng + ?Sized>(&self, rng: &mut R) -> f64 {
        let u: f64 = rng.gen::<f64>() * self.prefix[self.prefix.len() - 1];
        let i = match self.prefix.binary_search_by(|p| p.partial_cmp(&u).expect("finite prefix")) {
            Ok(i) => i.min(self.values.len() - 2),
            Err(i) => i.saturating_sub(1).min(self.values.len() - 2),
        };
        let m = (u - self.prefix[i]).max(0.0);
        let (v0, v1, h) = (self.values[i], self.values[i + 1], self.step);
        let slope = (v1 - v0) / h;
        // solve v0 s + slope s²/2 = m for s in [0, h]
        let s = if slope.abs() * h <= 1e-12 * (v0 + v1) || slope == 0.0 {
            if v0 > 0.0 { m / v0 } else { 0.5 * h }
        } else {
            let disc = (v0 * v0 + 2.0 * slope * m).max(0.0);
            2.0 * m / (v0 + disc.sqrt())
        };
        (self.x_at(i) + s.clamp(0.0, h)).clamp(self.lo, self.hi)
    }

    /// Probability mass within `margin` of `x0`.
    pub fn mass_near(&self, x0: f64, margin: f64) -> f64 {
        self.mass_between(x0 - margin, x0 + margin)
    }

    /// Maximal intervals on which the density is not identically zero.
    pub fn positive_segments(&self) -> Vec<(f64, f64)> {
        let mut out = Vec::new();
        let mut start: Option<usize> = None;
        for i in 0..self.values.len() - 1 {
            let active = self.values[i] > 0.0 || self.values[i + 1] > 0.0;
            match (active, start) {
                (true, None) => start = Some(i),
                (false, Some(s)) => {
                    out.push((self.x_at(s), self.x_at(i)));
                    start = None;
                }
                _ => {}
            }
        }
        if let Some(s) = start {
            out.push((self.x_at(s), self.hi));
        }
        out
    }

    /// Nodes and density-weighted weights integrating smooth functions against this law.
    ///
    /// Panels break at the positive-segment ends and at grid points where the
    /// interpolant has a significant kink; each panel gets a Gauss–Legendre
    /// rule with a share of `n_nodes` proportional to its length (at least 8).
    /// Densities with many kinks fall back to two nodes per grid cell, which
    /// is exact for linear integrands on each cell.
    pub fn quadrature_nodes(&self, n_nodes: usize) -> Vec<(f64, f64)> {
        let peak = self.values.iter().cloned().fold(0.0, f64::max);
        let n = self.values.len();
        let mut breaks: Vec<usize> = Vec::new();
        let mut active = vec![false; n - 1];
        for i in 0..n - 1 {
            active[i] = self.values[i] > 0.0 || self.values[i + 1] > 0.0;
        }
        for j in 0..n {
            let left = j > 0 && active[j - 1];
            let right = j + 1 < n && active[j];
            if left != right {
                breaks.push(j);
            } else if left && right {
                let d2 = self.values[j - 1] - 2.0 * self.values[j] + self.values[j + 1];
                if d2.abs() > KINK_THRESHOLD * peak {
                    breaks.push(j);
                }
            }
        }
        let mut panels: Vec<(usize, usize)> = Vec::new();
        for w in breaks.windows(2) {
            if active[w[0]] {
                panels.push((w[0], w[1]));
            }
        }
        if panels.len() > MAX_PANELS {
            return self.cellwise_nodes();
        }
        let total: f64 = panels.iter().map(|(a, b)| (b - a) as f64).sum();
        let mut out = Vec::new();
        for &(a, b) in &panels {
            let share = ((n_nodes as f64) * (b - a) as f64 / total).round() as usize;
            let (xa, xb) = (self.x_at(a), self.x_at(b));
            for (x, w) in gauss_legendre_on(share.max(8), xa, xb) {
                out.push((x, w * self.density(x)));
            }
        }
        out
    }

    fn cellwise_nodes(&self) -> Vec<(f64, f64)> {
        let mut out = Vec::new();
        for i in 0..self.values.len() - 1 {
            if self.values[i] > 0.0 || self.values[i + 1] > 0.0 {
                for (x, w) in gauss_legendre_on(2, self.x_at(i), self.x_at(i + 1)) {
                    out.push((x, w * self.value_in_cell(i, x)));
                }
            }
        }
        out
    }
}

fn grid_point(lo: f64, hi: f64, step: f64, i: usize, n: usize) -> f64 {
    if i + 1 == n {
        hi
    } else {
        lo + i as f64 * step
    }
}

fn trapezoid(values: &[f64], step: f64) -> f64 {
    values.windows(2).map(|w| 0.5 * step * (w[0] + w[1])).sum()
}

/// A probability law on the circle `[0, period)`, stored as bin-averaged densities.
#[derive(Debug, Clone, PartialEq)]
pub struct CircularLaw {
    period: f64,
    density: Vec<f64>,
}

impl CircularLaw {
    pub fn new(period: f64, density: Vec<f64>) -> Result<Self> {
        if !(period.is_finite() && period > 0.0) {
            return Err(Error::InvalidArgument(format!("period {period} must be positive")));
        }
        if density.is_empty() {
            return Err(Error::InvalidInput("circular law needs at least one bin".into()));
        }
        if density.iter().any(|d| !d.is_finite() || *d < 0.0) {
            return Err(Error::InvalidInput("circular density must be finite and nonnegative".into()));
        }
        let width = period / density.len() as f64;
        let total: f64 = density.iter().sum::<f64>() * width;
        if (total - 1.0).abs() > NORMALIZATION_TOL {
            return Err(Error::InvalidInput(format!("circular law integrates to {total}")));
        }
        Ok(Self { period, density })
    }

    pub fn uniform(period: f64, bins: usize) -> Result<Self> {
        Self::new(period, vec![1.0 / period; bins])
    }

    pub fn period(&self) -> f64 {
        self.period
    }

    pub fn density(&self) -> &[f64] {
        &self.density
    }

    pub fn bin_width(&self) -> f64 {
        self.period / self.density.len() as f64
    }

    pub fn total_mass(&self) -> f64 {
        self.density.iter().sum::<f64>() * self.bin_width()
    }
}

/// Law of `(ω t) mod period` for ω distributed as `rv`, at the default bin count.
pub fn pushforward_mod(rv: &DensityRV, t: f64, period: f64) -> Result<CircularLaw> {
    pushforward_mod_with(rv, t, period, DEFAULT_ANGULAR_BINS)
}

/// Law of `(ω t) mod period` with `bins` angular bins.
///
/// Every bin mass is the exact integral of the density over the preimages of
/// that bin on all wrap-around branches meeting the support.
pub fn pushforward_mod_with(rv: &DensityRV, t: f64, period: f64, bins: usize) -> Result<CircularLaw> {
    if !(t.is_finite() && t > 0.0) {
        return Err(Error::InvalidArgument(format!("t = {t} must be positive")));
    }
    if !(period.is_finite() && period > 0.0) {
        return Err(Error::InvalidArgument(format!("period = {period} must be positive")));
    }
    if bins == 0 {
        return Err(Error::InvalidArgument("at least one angular bin is required".into()));
    }
    let (lo, hi) = rv.support();
    let k_min = (t * lo / period).floor() as i64;
    let k_max = (t * hi / period).floor() as i64;
    let branches = (k_max - k_min + 1) as f64;
    let cap = (t * (hi - lo) / period).ceil() + 2.0;
    assert!(branches <= cap, "branch count {branches} exceeds cap {cap}");

    let width = period / bins as f64;
    let m = bins as i64;
    let mut mass = vec![0.0; bins];
    for k in k_min..=k_max {
        for (j, slot) in mass.iter_mut().enumerate() {
            // global bin index keeps shared boundaries bitwise identical
            let g = k * m + j as i64;
            let a = g as f64 * width / t;
            let b = (g + 1) as f64 * width / t;
            if b < lo || a > hi {
                continue;
            }
            *slot += rv.mass_between(a, b);
        }
    }
    let total: f64 = mass.iter().sum();
    if (total - 1.0).abs() > NORMALIZATION_TOL {
        return Err(Error::Numeric(format!("pushforward lost mass: total {total}")));
    }
    CircularLaw::new(period, mass.into_iter().map(|q| q / width).collect())
}

/// Total-variation distance to the uniform law on the same circle.
pub fn tv_distance(law: &CircularLaw) -> f64 {
    let target = 1.0 / law.period;
    let w = law.bin_width();
    (0.5 * law.density.iter().map(|d| (d - target).abs()).sum::<f64>() * w).clamp(0.0, 1.0)
}

/// Characteristic function `E[e^{iωt}]`, integrated exactly against the interpolated density.
pub fn char_fn(rv: &DensityRV, t: f64) -> Complex64 {
    let h = rv.step;
    let z = Complex64::new(0.0, t * h);
    let (p1, p2) = (phi1(z), phi2(z));
    let n = rv.values.len();
    let mut s0 = Complex64::new(0.0, 0.0);
    let mut s1 = Complex64::new(0.0, 0.0);
    for i in 0..n - 1 {
        let e = Complex64::cis(t * rv.x_at(i));
        s0 += e * rv.values[i];
        s1 += e * rv.values[i + 1];
    }
    (s0 * (p1 - p2) + s1 * p2) * h
}

/// Modulus of the characteristic function.
pub fn char_fn_magnitude(rv: &DensityRV, t: f64) -> f64 {
    char_fn(rv, t).norm()
}

/// Five bounded-variation densities: jumps, kinks, a gap in the support and a smooth bump.
pub fn bounded_variation_family() -> Result<Vec<(&'static str, DensityRV)>> {
    let low = DensityRV::uniform(0.5, 1.0)?;
    let high = DensityRV::uniform(2.0, 3.0)?;
    Ok(vec![
        ("uniform_1_2", DensityRV::uniform(1.0, 2.0)?),
        ("triangle_1_3", DensityRV::from_fn(1.0, 3.0, DEFAULT_RESOLUTION, |x| 1.0 - (x - 2.0).abs())?),
        ("ramp_0.5_1.5", DensityRV::from_fn(0.5, 1.5, DEFAULT_RESOLUTION, |x| 0.2 + (x - 0.5))?),
        ("split_uniform", DensityRV::mixture(&[(0.5, &low), (0.5, &high)], DEFAULT_RESOLUTION)?),
        (
            "cosine_bump_2_4",
            DensityRV::from_fn(2.0, 4.0, DEFAULT_RESOLUTION, |x| (0.5 * std::f64::consts::PI * (x - 3.0)).cos().powi(2))?,
        ),
    ])
}

/// Exact average of `e^{iνs}` over `s ∈ [0, T]`.
pub fn time_average_phase(nu: f64, t_max: f64) -> Complex64 {
    assert!(t_max > 0.0, "averaging window must be positive");
    if nu == 0.0 {
        return Complex64::new(1.0, 0.0);
    }
    phi1(Complex64::new(0.0, nu * t_max))
}

/// `min(1, 2/(|ν|T))`, the modulus bound for [`time_average_phase`].
pub fn phase_average_bound(nu: f64, t_max: f64) -> f64 {
    if nu == 0.0 {
        1.0
    } else {
        (2.0 / (nu.abs() * t_max)).min(1.0)
    }
}

/// Constant `C` of a `|d(T)| ≈ C/T` law, calibrated on the first decade of a sweep.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct InverseTimeFit {
    pub c: f64,
    /// Largest averaging time used for calibration, `10·T_min`.
    pub calibration_end: f64,
}

impl InverseTimeFit {
    /// `C = max T·|d(T)|` over `T ≤ 10·T_min`; later times are out-of-sample for the law.
    pub fn calibrate(times: &[f64], differences: &[f64]) -> Result<Self> {
        if times.len() != differences.len() || times.len() < 2 {
            return Err(Error::InvalidArgument("need matching time and difference lists".into()));
        }
        if times.iter().any(|t| !(t.is_finite() && *t > 0.0)) || times.windows(2).any(|w| !(w[1] > w[0])) {
            return Err(Error::InvalidArgument("averaging times must be positive and increasing".into()));
        }
        let calibration_end = 10.0 * times[0] * (1.0 + 1e-12);
        let c = times
            .iter()
            .zip(differences)
            .filter(|(t, _)| **t <= calibration_end)
            .map(|(t, d)| t * d.abs())
            .fold(0.0, f64::max);
        Ok(Self { c, calibration_end })
    }

    /// Times whose difference exceeds `factor·C/T`.
    pub fn violations(&self, times: &[f64], differences: &[f64], factor: f64) -> Vec<f64> {
        times.iter().zip(differences).filter(|(t, d)| d.abs() > factor * self.c / **t).map(|(t, _)| *t).collect()
    }
}

// (e^z − 1)/z
fn phi1(z: Complex64) -> Complex64 {
    if z.norm() < 0.5 {
        let mut term = Complex64::new(1.0, 0.0);
        let mut sum = term;
        for k in 1..24 {
            term = term * z / (k as f64 + 1.0);
            sum += term;
        }
        sum
    } else {
        (z.exp() - 1.0) / z
    }
}

// (z e^z − e^z + 1)/z² = ∫₀¹ s e^{zs} ds
fn phi2(z: Complex64) -> Complex64 {
    if z.norm() < 0.5 {
        // Σ z^k / (k! (k+2))
        let mut fact = Complex64::new(1.0, 0.0);
        let mut sum = Complex64::new(0.5, 0.0);
        for k in 1..24 {
            fact = fact * z / k as f64;
            sum += fact / (k as f64 + 2.0);
        }
        sum
    } else {
        let e = z.exp();
        (z * e - e + 1.0) / (z * z)
    }
}
