use crate::error::{Error, Result};
use num_complex::Complex64;

const NORM_TOL: f64 = 1e-9;
const BOUNDARY_TOL: f64 = 1e-8;
const DECIMATION_TOL: f64 = 1e-6;

/// Uniform grid on `[x_min, x_max]` with a power-of-two number of points.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Grid1D {
    x_min: f64,
    x_max: f64,
    n_points: usize,
}

impl Grid1D {
    pub fn new(x_min: f64, x_max: f64, n_points: usize) -> Result<Self> {
        if !(x_min.is_finite() && x_max.is_finite() && x_max > x_min) {
            return Err(Error::InvalidArgument(format!("grid bounds [{x_min}, {x_max}] are not increasing")));
        }
        if n_points < 2 || !n_points.is_power_of_two() {
            return Err(Error::InvalidArgument(format!("grid size {n_points} must be a power of two >= 2")));
        }
        Ok(Self { x_min, x_max, n_points })
    }

    pub fn x_min(&self) -> f64 {
        self.x_min
    }

    pub fn x_max(&self) -> f64 {
        self.x_max
    }

    pub fn n_points(&self) -> usize {
        self.n_points
    }

    pub fn spacing(&self) -> f64 {
        (self.x_max - self.x_min) / (self.n_points - 1) as f64
    }

    pub fn x(&self, i: usize) -> f64 {
        if i + 1 == self.n_points {
            self.x_max
        } else {
            self.x_min + i as f64 * self.spacing()
        }
    }

    pub fn points(&self) -> Vec<f64> {
        (0..self.n_points).map(|i| self.x(i)).collect()
    }

    /// Index of the grid point closest to `x` (clamped to the grid).
    pub fn nearest_index(&self, x: f64) -> usize {
        let s = ((x - self.x_min) / self.spacing()).round();
        (s.max(0.0) as usize).min(self.n_points - 1)
    }

    /// Whether `x ↦ −x` maps grid points onto grid points.
    pub fn is_symmetric(&self) -> bool {
        (self.x_min + self.x_max).abs() <= 1e-12 * (self.x_max - self.x_min)
    }

    pub fn trapezoid_weights(&self) -> Vec<f64> {
        let h = self.spacing();
        let mut w = vec![h; self.n_points];
        w[0] *= 0.5;
        w[self.n_points - 1] *= 0.5;
        w
    }

    /// Every `stride`-th point starting at `x_min`.
    pub fn decimated(&self, stride: usize) -> Result<Self> {
        if stride == 0 || !stride.is_power_of_two() || stride >= self.n_points {
            return Err(Error::InvalidArgument(format!("decimation stride {stride} is not a power of two below the grid size")));
        }
        let n = self.n_points / stride;
        Grid1D::new(self.x_min, self.x((n - 1) * stride), n)
    }

    /// Same bounds with `factor` times as many points (power-of-two factor).
    pub fn refined(&self, factor: usize) -> Result<Self> {
        Grid1D::new(self.x_min, self.x_max, self.n_points * factor)
    }
}

/// A normalized wavefunction sampled on a [`Grid1D`].
#[derive(Debug, Clone, PartialEq)]
pub struct WaveFn {
    grid: Grid1D,
    values: Vec<Complex64>,
    hbar: f64,
}

impl WaveFn {
    /// Validates unit norm and boundary decay.
    pub fn new(grid: Grid1D, values: Vec<Complex64>, hbar: f64) -> Result<Self> {
        Self::checked(grid, values, hbar, 0.0, 0.0)
    }

    /// Rescales `values` to unit norm, then validates.
    pub fn normalized(grid: Grid1D, mut values: Vec<Complex64>, hbar: f64) -> Result<Self> {
        let n2 = weighted_norm_sqr(&grid, &values);
        if !(n2 > 0.0 && n2.is_finite()) {
            return Err(Error::InvalidInput("wavefunction has zero or non-finite norm".into()));
        }
        let s = 1.0 / n2.sqrt();
        values.iter_mut().for_each(|v| *v *= s);
        Self::new(grid, values, hbar)
    }

    /// Samples `f` on the grid and normalizes.
    pub fn from_fn<F: Fn(f64) -> Complex64>(grid: Grid1D, hbar: f64, f: F) -> Result<Self> {
        Self::normalized(grid, grid.points().into_iter().map(f).collect(), hbar)
    }

    /// A truncated expansion whose squared norm may fall short of one by at most `max_deficit`.
    pub fn subnormalized(grid: Grid1D, values: Vec<Complex64>, hbar: f64, max_deficit: f64) -> Result<Self> {
        Self::checked(grid, values, hbar, max_deficit, 0.0)
    }

    fn checked(grid: Grid1D, values: Vec<Complex64>, hbar: f64, max_deficit: f64, max_excess: f64) -> Result<Self> {
        if values.len() != grid.n_points() {
            return Err(Error::InvalidInput(format!("{} values for a {}-point grid", values.len(), grid.n_points())));
        }
        if !(hbar.is_finite() && hbar > 0.0) {
            return Err(Error::InvalidArgument(format!("hbar = {hbar} must be positive")));
        }
        if values.iter().any(|v| !v.re.is_finite() || !v.im.is_finite()) {
            return Err(Error::InvalidInput("wavefunction has non-finite values".into()));
        }
        let n2 = weighted_norm_sqr(&grid, &values);
        if n2 > 1.0 + max_excess + NORM_TOL || n2 < 1.0 - max_deficit - NORM_TOL {
            return Err(Error::InvalidInput(format!("squared norm {n2} outside [1 - {max_deficit}, 1 + {max_excess}]")));
        }
        let edge = values[0].norm().max(values[values.len() - 1].norm());
        if edge >= BOUNDARY_TOL {
            return Err(Error::InvalidInput(format!("wavefunction reaches {edge:.2e} at the grid boundary")));
        }
        Ok(Self { grid, values, hbar })
    }

    pub fn grid(&self) -> &Grid1D {
        &self.grid
    }

    pub fn values(&self) -> &[Complex64] {
        &self.values
    }

    pub fn hbar(&self) -> f64 {
        self.hbar
    }

    pub fn norm_sqr(&self) -> f64 {
        weighted_norm_sqr(&self.grid, &self.values)
    }

    pub fn density(&self) -> Vec<f64> {
        self.values.iter().map(|v| v.norm_sqr()).collect()
    }

    /// `⟨self, other⟩`, antilinear in `self`.
    pub fn inner(&self, other: &WaveFn) -> Result<Complex64> {
        if self.grid != other.grid {
            return Err(Error::InvalidInput("inner product of wavefunctions on different grids".into()));
        }
        Ok(inner_on(&self.grid, &self.values, &other.values))
    }

    /// `∫_{x > 0} |ψ|²`; a grid point at the origin contributes half of its weight.
    pub fn right_mass(&self) -> f64 {
        self.signed_mass(1.0)
    }

    /// `∫_{x < 0} |ψ|²`.
    pub fn left_mass(&self) -> f64 {
        self.signed_mass(-1.0)
    }

    fn signed_mass(&self, side: f64) -> f64 {
        let w = self.grid.trapezoid_weights();
        let mut acc = 0.0;
        for (i, v) in self.values.iter().enumerate() {
            let s = side * self.grid.x(i);
            let share = if s > 0.0 {
                1.0
            } else if s == 0.0 {
                0.5
            } else {
                0.0
            };
            acc += share * w[i] * v.norm_sqr();
        }
        acc
    }

    /// `x ↦ −x`; the grid must be symmetric.
    pub fn reflect(&self) -> Result<WaveFn> {
        if !self.grid.is_symmetric() {
            return Err(Error::InvalidInput("reflection needs a grid symmetric about 0".into()));
        }
        let mut values = self.values.clone();
        values.reverse();
        Ok(WaveFn { grid: self.grid, values, hbar: self.hbar })
    }

    /// Every `stride`-th sample on the coarser grid; the norm may move by the
    /// coarse trapezoid error (at most 1e-6) on top of any existing deficit.
    pub fn decimate(&self, stride: usize) -> Result<WaveFn> {
        let grid = self.grid.decimated(stride)?;
        let values = (0..grid.n_points()).map(|j| self.values[j * stride]).collect();
        let deficit = (1.0 - self.norm_sqr()).max(0.0);
        WaveFn::checked(grid, values, self.hbar, deficit + DECIMATION_TOL, DECIMATION_TOL)
    }
}

pub(crate) fn weighted_norm_sqr(grid: &Grid1D, values: &[Complex64]) -> f64 {
    let h = grid.spacing();
    let n = values.len();
    let inner: f64 = values.iter().map(|v| v.norm_sqr()).sum();
    h * (inner - 0.5 * (values[0].norm_sqr() + values[n - 1].norm_sqr()))
}

pub(crate) fn inner_on(grid: &Grid1D, a: &[Complex64], b: &[Complex64]) -> Complex64 {
    let h = grid.spacing();
    let n = a.len();
    let mut acc: Complex64 = a.iter().zip(b).map(|(x, y)| x.conj() * y).sum();
    acc -= 0.5 * (a[0].conj() * b[0] + a[n - 1].conj() * b[n - 1]);
    acc * h
}

#[cfg(test)]
mod tests {
    use super::*;

    fn gaussian(grid: Grid1D, hbar: f64, x0: f64) -> WaveFn {
        WaveFn::from_fn(grid, hbar, |x| Complex64::new((-(x - x0).powi(2) / (2.0 * hbar)).exp(), 0.0)).unwrap()
    }

    #[test]
    fn grid_rejects_bad_shapes() {
        assert!(Grid1D::new(0.0, 1.0, 100).is_err());
        assert!(Grid1D::new(1.0, 0.0, 128).is_err());
        let g = Grid1D::new(-3.0, 3.0, 4096).unwrap();
        assert!((g.spacing() - 6.0 / 4095.0).abs() < 1e-15);
        assert_eq!(g.x(4095), 3.0);
        assert!(g.is_symmetric());
    }

    #[test]
    fn wavefn_checks_norm_and_boundary() {
        let g = Grid1D::new(-5.0, 5.0, 256).unwrap();
        assert!(WaveFn::new(g, vec![Complex64::new(0.0, 0.0); 256], 1.0).is_err());
        let wide = WaveFn::from_fn(g, 1.0, |x| Complex64::new((-x * x / 20.0).exp(), 0.0));
        assert!(wide.is_err());
        let psi = gaussian(g, 0.5, 0.0);
        assert!((psi.norm_sqr() - 1.0).abs() < 1e-12);
        assert!((psi.right_mass() - 0.5).abs() < 1e-12);
        assert!((psi.right_mass() + psi.left_mass() - 1.0).abs() < 1e-12);
    }

    #[test]
    fn reflection_and_decimation() {
        let g = Grid1D::new(-6.0, 6.0, 1024).unwrap();
        let psi = gaussian(g, 0.3, 1.0);
        let r = psi.reflect().unwrap();
        assert!((r.left_mass() - psi.right_mass()).abs() < 1e-14);
        let d = psi.decimate(4).unwrap();
        assert_eq!(d.grid().n_points(), 256);
        assert!((d.norm_sqr() - 1.0).abs() < 1e-9);
    }
}
