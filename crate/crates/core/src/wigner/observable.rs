use super::transform::{CrossWignerField, PhaseGrid, WignerField};
use crate::error::{Error, Result};
use num_complex::Complex64;
use std::fmt;
use std::sync::Arc;

/// Axis-aligned phase-space rectangle.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct PhaseRect {
    pub x_min: f64,
    pub x_max: f64,
    pub p_min: f64,
    pub p_max: f64,
}

impl PhaseRect {
    pub fn new(x_min: f64, x_max: f64, p_min: f64, p_max: f64) -> Result<Self> {
        if !(x_max > x_min && p_max > p_min) {
            return Err(Error::InvalidArgument("phase rectangle must have positive extent".into()));
        }
        Ok(Self { x_min, x_max, p_min, p_max })
    }

    pub fn contains(&self, x: f64, p: f64) -> bool {
        x >= self.x_min && x <= self.x_max && p >= self.p_min && p <= self.p_max
    }

    fn within(&self, g: &PhaseGrid) -> bool {
        let tol = 1e-12 * (1.0 + g.x_max().abs().max(g.p_max().abs()));
        self.x_min >= g.x_min - tol && self.x_max <= g.x_max() + tol && self.p_min >= g.p_min - tol && self.p_max <= g.p_max() + tol
    }
}

type PhaseFn = Arc<dyn Fn(f64, f64) -> f64 + Send + Sync>;

/// Smooth compactly supported phase-space test function.
#[derive(Clone)]
pub struct TestObservable {
    label: String,
    support: PhaseRect,
    f: PhaseFn,
}

impl fmt::Debug for TestObservable {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.debug_struct("TestObservable").field("label", &self.label).field("support", &self.support).finish()
    }
}

/// `exp(1 − 1/(1 − r²))` for `r² < 1`, else 0; equals 1 at the centre.
pub fn bump_profile(r2: f64) -> f64 {
    if r2 >= 1.0 {
        0.0
    } else {
        (1.0 - 1.0 / (1.0 - r2)).exp()
    }
}

// Smooth step: 0 for u ≤ 0, 1 for u ≥ 1.
fn smooth_step(u: f64) -> f64 {
    let g = |t: f64| if t <= 0.0 { 0.0 } else { (-1.0 / t).exp() };
    let (a, b) = (g(u), g(1.0 - u));
    if a + b == 0.0 {
        0.0
    } else {
        a / (a + b)
    }
}

impl TestObservable {
    /// Wraps `f`; evaluation returns 0 outside `support`.
    pub fn new<F>(label: impl Into<String>, support: PhaseRect, f: F) -> Self
    where
        F: Fn(f64, f64) -> f64 + Send + Sync + 'static,
    {
        Self { label: label.into(), support, f: Arc::new(f) }
    }

    /// Elliptic bump of peak `amplitude` centred at `(x0, p0)` with semi-axes `rx`, `rp`.
    pub fn bump(label: impl Into<String>, x0: f64, p0: f64, rx: f64, rp: f64, amplitude: f64) -> Result<Self> {
        let support = PhaseRect::new(x0 - rx, x0 + rx, p0 - rp, p0 + rp)?;
        Ok(Self::new(label, support, move |x, p| {
            let u = (x - x0) / rx;
            let v = (p - p0) / rp;
            amplitude * bump_profile(u * u + v * v)
        }))
    }

    /// Equal to 1 inside the ellipse scaled by `inner` and decaying smoothly to 0 on the full ellipse.
    pub fn plateau(label: impl Into<String>, x0: f64, p0: f64, rx: f64, rp: f64, inner: f64) -> Result<Self> {
        if !(0.0..1.0).contains(&inner) {
            return Err(Error::InvalidArgument(format!("plateau fraction {inner} must lie in [0, 1)")));
        }
        let support = PhaseRect::new(x0 - rx, x0 + rx, p0 - rp, p0 + rp)?;
        Ok(Self::new(label, support, move |x, p| {
            let u = (x - x0) / rx;
            let v = (p - p0) / rp;
            let r = (u * u + v * v).sqrt();
            smooth_step((1.0 - r) / (1.0 - inner))
        }))
    }

    pub fn label(&self) -> &str {
        &self.label
    }

    pub fn support(&self) -> &PhaseRect {
        &self.support
    }

    pub fn eval(&self, x: f64, p: f64) -> f64 {
        if self.support.contains(x, p) {
            (self.f)(x, p)
        } else {
            0.0
        }
    }
}

/// Finite convex combination of phase-space point masses.
#[derive(Debug, Clone, PartialEq)]
pub struct PointMassMixture {
    atoms: Vec<(f64, f64, f64)>,
}

impl PointMassMixture {
    pub fn new(atoms: Vec<(f64, f64, f64)>) -> Result<Self> {
        if atoms.is_empty() || atoms.iter().any(|a| !(a.2 >= 0.0) || !a.0.is_finite() || !a.1.is_finite()) {
            return Err(Error::InvalidInput("atoms need finite positions and nonnegative weights".into()));
        }
        let total: f64 = atoms.iter().map(|a| a.2).sum();
        if (total - 1.0).abs() > 1e-12 {
            return Err(Error::InvalidInput(format!("atom weights sum to {total}")));
        }
        Ok(Self { atoms })
    }

    /// `alpha2·δ(a, 0) + (1 − alpha2)·δ(−a, 0)`.
    pub fn two_well(alpha2: f64, a: f64) -> Result<Self> {
        Self::new(vec![(a, 0.0, alpha2), (-a, 0.0, 1.0 - alpha2)])
    }

    pub fn atoms(&self) -> &[(f64, f64, f64)] {
        &self.atoms
    }

    /// `Σ w·g(x, p)`.
    pub fn pair_fn<G: PhaseSpaceFn + ?Sized>(&self, g: &G) -> Result<f64> {
        let mut acc = 0.0;
        for &(x, p, w) in &self.atoms {
            acc += w * g.value(x, p)?;
        }
        Ok(acc)
    }
}

/// Anything evaluable at a phase-space point.
pub trait PhaseSpaceFn: Sync {
    fn value(&self, x: f64, p: f64) -> Result<f64>;
}

impl PhaseSpaceFn for TestObservable {
    fn value(&self, x: f64, p: f64) -> Result<f64> {
        Ok(self.eval(x, p))
    }
}

impl PhaseSpaceFn for WignerField {
    fn value(&self, x: f64, p: f64) -> Result<f64> {
        self.interpolate(x, p)
    }
}

/// Adapter turning a closure into a [`PhaseSpaceFn`].
pub struct FnPhase<F>(pub F);

impl<F: Fn(f64, f64) -> f64 + Sync> PhaseSpaceFn for FnPhase<F> {
    fn value(&self, x: f64, p: f64) -> Result<f64> {
        Ok((self.0)(x, p))
    }
}

fn check_support(f: &TestObservable, g: &PhaseGrid) -> Result<()> {
    if !f.support.within(g) {
        return Err(Error::Domain(format!(
            "support of {:?} [{}, {}]x[{}, {}] exceeds the grid [{}, {}]x[{}, {}]",
            f.label,
            f.support.x_min,
            f.support.x_max,
            f.support.p_min,
            f.support.p_max,
            g.x_min,
            g.x_max(),
            g.p_min,
            g.p_max()
        )));
    }
    Ok(())
}

fn index_range(lo: f64, hi: f64, start: f64, step: f64, n: usize) -> (usize, usize) {
    let a = ((lo - start) / step).floor().max(0.0) as usize;
    let b = (((hi - start) / step).ceil().max(0.0) as usize).min(n - 1);
    (a.min(n - 1), b)
}

/// `∬ f W dx dp` by the trapezoidal rule on the field's grid.
pub fn pair(f: &TestObservable, w: &WignerField) -> Result<f64> {
    let g = w.grid();
    check_support(f, g)?;
    let (i0, i1) = index_range(f.support.x_min, f.support.x_max, g.x_min, g.dx, g.nx);
    let (j0, j1) = index_range(f.support.p_min, f.support.p_max, g.p_min, g.dp, g.np);
    let mut acc = 0.0;
    for i in i0..=i1 {
        let x = g.x(i);
        let mut row = 0.0;
        for j in j0..=j1 {
            row += g.p_weight(j) * f.eval(x, g.p(j)) * w.at(i, j);
        }
        acc += g.x_weight(i) * row;
    }
    Ok(acc)
}

/// `∬ f W_{φψ} dx dp` for a cross-Wigner field.
pub fn pair_cross(f: &TestObservable, w: &CrossWignerField) -> Result<Complex64> {
    Ok(TabulatedObservable::new(f, w.grid())?.pair_values(w.values()))
}

/// Quadrature-weighted samples of an observable on the cells of a phase grid it fits in.
#[derive(Debug, Clone)]
pub(crate) struct TabulatedObservable {
    np: usize,
    i0: usize,
    j0: usize,
    width: usize,
    weights: Vec<f64>,
}

impl TabulatedObservable {
    pub(crate) fn new(f: &TestObservable, g: &PhaseGrid) -> Result<Self> {
        check_support(f, g)?;
        let (i0, i1) = index_range(f.support.x_min, f.support.x_max, g.x_min, g.dx, g.nx);
        let (j0, j1) = index_range(f.support.p_min, f.support.p_max, g.p_min, g.dp, g.np);
        let width = j1 - j0 + 1;
        let mut weights = Vec::with_capacity((i1 - i0 + 1) * width);
        for i in i0..=i1 {
            let x = g.x(i);
            for j in j0..=j1 {
                weights.push(g.x_weight(i) * g.p_weight(j) * f.eval(x, g.p(j)));
            }
        }
        Ok(Self { np: g.np, i0, j0, width, weights })
    }

    /// `Σ weight·value` over the tabulated cells of a row-major field.
    pub(crate) fn pair_values(&self, values: &[Complex64]) -> Complex64 {
        let mut acc = Complex64::new(0.0, 0.0);
        for (r, wrow) in self.weights.chunks(self.width).enumerate() {
            let start = (self.i0 + r) * self.np + self.j0;
            let vrow = &values[start..start + self.width];
            let mut row = Complex64::new(0.0, 0.0);
            for (w, v) in wrow.iter().zip(vrow) {
                row += v * w;
            }
            acc += row;
        }
        acc
    }
}

/// Trapezoidal `∬ f·g` over the support of `f` with `n × n` nodes.
pub fn integrate_product<G: PhaseSpaceFn + ?Sized>(f: &TestObservable, g: &G, n: usize) -> Result<f64> {
    let s = f.support;
    let hx = (s.x_max - s.x_min) / (n - 1) as f64;
    let hp = (s.p_max - s.p_min) / (n - 1) as f64;
    let w = |i: usize| if i == 0 || i + 1 == n { 0.5 } else { 1.0 };
    let mut acc = 0.0;
    for i in 0..n {
        let x = s.x_min + i as f64 * hx;
        for j in 0..n {
            let p = s.p_min + j as f64 * hp;
            let fv = f.eval(x, p);
            if fv != 0.0 {
                acc += w(i) * w(j) * fv * g.value(x, p)?;
            }
        }
    }
    Ok(acc * hx * hp)
}
