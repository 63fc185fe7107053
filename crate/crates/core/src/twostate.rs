//! Exact two-level flea model on the span of the left and right well states.
//!
//! Basis order is (left, right): index 0 is the left-well state, index 1 the
//! right-well state.

use crate::arbfun::{time_average_phase, DensityRV};
use crate::error::{Error, Result};
use crate::quad::adaptive_simpson;
use num_complex::Complex64;
use rand::Rng;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};
use std::f64::consts::{E, PI};

/// Default number of δ-quadrature nodes.
pub const DEFAULT_NODES: usize = 256;
/// Default exclusion margin around δ = 0.
pub const DEFAULT_ZERO_MARGIN: f64 = 1e-3;
const ZERO_MASS_TOL: f64 = 1e-12;
const UNIT_TOL: f64 = 1e-12;

/// Physical parameters of the symmetric double well.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct ModelParams {
    pub hbar: f64,
    pub a: f64,
    pub lambda: f64,
    pub mass: f64,
}

impl ModelParams {
    pub fn new(hbar: f64, a: f64, lambda: f64, mass: f64) -> Result<Self> {
        let p = Self { hbar, a, lambda, mass };
        p.validate()?;
        Ok(p)
    }

    /// Unit well position, coupling and mass.
    pub fn unit(hbar: f64) -> Result<Self> {
        Self::new(hbar, 1.0, 1.0, 1.0)
    }

    pub fn with_hbar(&self, hbar: f64) -> Result<Self> {
        Self::new(hbar, self.a, self.lambda, self.mass)
    }

    pub fn validate(&self) -> Result<()> {
        for (name, v) in [("hbar", self.hbar), ("a", self.a), ("lambda", self.lambda), ("mass", self.mass)] {
            if !(v.is_finite() && v > 0.0) {
                return Err(Error::InvalidArgument(format!("{name} = {v} must be strictly positive")));
            }
        }
        Ok(())
    }

    /// Unperturbed quartic potential ¼λ(x² − a²)².
    pub fn potential(&self, x: f64) -> f64 {
        let s = x * x - self.a * self.a;
        0.25 * self.lambda * s * s
    }
}

/// Asymptotic tunnelling gap and the action factor controlling it.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Splitting {
    pub delta_hbar: f64,
    pub d_v: f64,
}

/// `∫₋ₐᵃ √V₀` for the unperturbed well.
pub fn wkb_factor(a: f64, lambda: f64) -> Result<f64> {
    let v = |x: f64| {
        let s = x * x - a * a;
        (0.25 * lambda * s * s).sqrt()
    };
    adaptive_simpson(v, -a, a, 1e-13)
}

/// `ħ√(2a²λ/(eπ))·e^{−d_V/ħ}`.
pub fn splitting(params: &ModelParams) -> Result<Splitting> {
    params.validate()?;
    let d_v = wkb_factor(params.a, params.lambda)?;
    let prefactor = (2.0 * params.a * params.a * params.lambda / (E * PI)).sqrt();
    let delta_hbar = params.hbar * prefactor * (-d_v / params.hbar).exp();
    if !(delta_hbar > 0.0) {
        return Err(Error::Numeric(format!("splitting underflowed at hbar = {}", params.hbar)));
    }
    Ok(Splitting { delta_hbar, d_v })
}

/// Eigenpairs of `[[δ, −Δ/2], [−Δ/2, 0]]`.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct SpectralPair2 {
    pub e0: f64,
    pub e1: f64,
    pub v0: [f64; 2],
    pub v1: [f64; 2],
    pub gap: f64,
}

/// Closed-form spectrum of the flea-perturbed two-level Hamiltonian.
///
/// Eigenvectors keep the sign pattern `v0 ∝ (Δ, δ + r)` and `v1 ∝ (Δ, δ − r)`
/// with `r = √(δ² + Δ²)`, evaluated in cancellation-free form for either sign of δ.
pub fn eigensystem2(delta: f64, delta_hbar: f64) -> Result<SpectralPair2> {
    if !delta.is_finite() || !delta_hbar.is_finite() || delta_hbar < 0.0 {
        return Err(Error::InvalidArgument(format!("delta = {delta}, delta_hbar = {delta_hbar}")));
    }
    if delta == 0.0 && delta_hbar == 0.0 {
        return Err(Error::DegenerateSpectrum("delta and delta_hbar both vanish".into()));
    }
    let r = delta.hypot(delta_hbar);
    let (e0, e1) = if delta >= 0.0 {
        let s = delta + r;
        (-delta_hbar * delta_hbar / (2.0 * s), 0.5 * s)
    } else {
        let s = delta - r;
        (0.5 * s, -delta_hbar * delta_hbar / (2.0 * s))
    };
    let (u0, u1) = if delta >= 0.0 {
        ([delta_hbar, delta + r], [delta + r, -delta_hbar])
    } else {
        ([r - delta, delta_hbar], [delta_hbar, delta - r])
    };
    Ok(SpectralPair2 { e0, e1, v0: normalize2(u0), v1: normalize2(u1), gap: r })
}

fn normalize2(v: [f64; 2]) -> [f64; 2] {
    let n = v[0].hypot(v[1]);
    [v[0] / n, v[1] / n]
}

/// Unit vector `amp_minus·(1,0) + amp_plus·(0,1)`.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct QState2 {
    amp_minus: Complex64,
    amp_plus: Complex64,
}

impl QState2 {
    pub fn new(amp_minus: Complex64, amp_plus: Complex64) -> Result<Self> {
        let norm2 = amp_minus.norm_sqr() + amp_plus.norm_sqr();
        if !((norm2 - 1.0).abs() <= UNIT_TOL) {
            return Err(Error::InvalidInput(format!("state has squared norm {norm2}")));
        }
        Ok(Self { amp_minus, amp_plus })
    }

    /// `α·right + β·left` with real `α = √alpha2`, `β = √(1 − alpha2)`.
    pub fn from_right_weight(alpha2: f64) -> Result<Self> {
        if !(0.0..=1.0).contains(&alpha2) {
            return Err(Error::InvalidArgument(format!("alpha2 = {alpha2} must lie in [0, 1]")));
        }
        Self::new(Complex64::new((1.0 - alpha2).sqrt(), 0.0), Complex64::new(alpha2.sqrt(), 0.0))
    }

    pub fn amp_minus(&self) -> Complex64 {
        self.amp_minus
    }

    pub fn amp_plus(&self) -> Complex64 {
        self.amp_plus
    }

    pub fn components(&self) -> [Complex64; 2] {
        [self.amp_minus, self.amp_plus]
    }

    pub fn norm_sqr(&self) -> f64 {
        self.amp_minus.norm_sqr() + self.amp_plus.norm_sqr()
    }

    fn project(&self, v: &[f64; 2]) -> Complex64 {
        self.amp_minus * v[0] + self.amp_plus * v[1]
    }
}

/// Schrödinger evolution by the spectral pair over time `t`.
pub fn evolve2(state0: &QState2, spec: &SpectralPair2, hbar: f64, t: f64) -> QState2 {
    let c0 = state0.project(&spec.v0) * Complex64::cis(-spec.e0 * t / hbar);
    let c1 = state0.project(&spec.v1) * Complex64::cis(-spec.e1 * t / hbar);
    QState2 {
        amp_minus: c0 * spec.v0[0] + c1 * spec.v1[0],
        amp_plus: c0 * spec.v0[1] + c1 * spec.v1[1],
    }
}

/// A 2×2 observable in the (left, right) basis.
#[derive(Debug, Clone, PartialEq)]
pub struct Observable2 {
    entries: [[Complex64; 2]; 2],
    label: String,
}

impl Observable2 {
    pub fn new(entries: [[Complex64; 2]; 2], label: impl Into<String>) -> Result<Self> {
        if entries.iter().flatten().any(|z| !z.re.is_finite() || !z.im.is_finite()) {
            return Err(Error::InvalidInput("observable entries must be finite".into()));
        }
        Ok(Self { entries, label: label.into() })
    }

    fn unit_entry(row: usize, col: usize, label: &str) -> Self {
        let mut entries = [[Complex64::new(0.0, 0.0); 2]; 2];
        entries[row][col] = Complex64::new(1.0, 0.0);
        Self { entries, label: label.into() }
    }

    pub fn identity() -> Self {
        let one = Complex64::new(1.0, 0.0);
        let zero = Complex64::new(0.0, 0.0);
        Self { entries: [[one, zero], [zero, one]], label: "I".into() }
    }

    /// Position sign: −1 on the left state, +1 on the right state.
    pub fn position_sign() -> Self {
        let zero = Complex64::new(0.0, 0.0);
        Self { entries: [[Complex64::new(-1.0, 0.0), zero], [zero, Complex64::new(1.0, 0.0)]], label: "Q".into() }
    }

    /// Projector onto the right-well state.
    pub fn right_projector() -> Self {
        Self::unit_entry(1, 1, "Pi_plus")
    }

    /// Projector onto the left-well state.
    pub fn left_projector() -> Self {
        Self::unit_entry(0, 0, "Pi_minus")
    }

    /// `|right⟩⟨left|`.
    pub fn left_to_right() -> Self {
        Self::unit_entry(1, 0, "A_plus_minus")
    }

    /// `|left⟩⟨right|`.
    pub fn right_to_left() -> Self {
        Self::unit_entry(0, 1, "A_minus_plus")
    }

    /// The matrix-unit basis used for Born-gap reports.
    pub fn matrix_unit_basis() -> [Self; 4] {
        [Self::right_projector(), Self::left_projector(), Self::left_to_right(), Self::right_to_left()]
    }

    pub fn label(&self) -> &str {
        &self.label
    }

    pub fn entries(&self) -> &[[Complex64; 2]; 2] {
        &self.entries
    }

    /// `⟨u, A w⟩` for complex vectors.
    pub fn sandwich(&self, u: &[Complex64; 2], w: &[Complex64; 2]) -> Complex64 {
        let mut acc = Complex64::new(0.0, 0.0);
        for i in 0..2 {
            for j in 0..2 {
                acc += u[i].conj() * self.entries[i][j] * w[j];
            }
        }
        acc
    }

    fn sandwich_real(&self, u: &[f64; 2], w: &[f64; 2]) -> Complex64 {
        let mut acc = Complex64::new(0.0, 0.0);
        for i in 0..2 {
            for j in 0..2 {
                acc += self.entries[i][j] * (u[i] * w[j]);
            }
        }
        acc
    }

    pub fn expectation(&self, state: &QState2) -> Complex64 {
        let c = state.components();
        self.sandwich(&c, &c)
    }

    /// Largest singular value.
    pub fn operator_norm(&self) -> f64 {
        let m = &self.entries;
        let f2: f64 = m.iter().flatten().map(|z| z.norm_sqr()).sum();
        let det = (m[0][0] * m[1][1] - m[0][1] * m[1][0]).norm();
        let disc = (f2 * f2 - 4.0 * det * det).max(0.0).sqrt();
        (0.5 * (f2 + disc)).sqrt()
    }
}

/// Convex combination of the left and right pure states.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct MixtureState2 {
    weight_plus: f64,
    weight_minus: f64,
}

impl MixtureState2 {
    pub fn new(weight_plus: f64, weight_minus: f64) -> Result<Self> {
        let ok = (0.0..=1.0).contains(&weight_plus)
            && (0.0..=1.0).contains(&weight_minus)
            && (weight_plus + weight_minus - 1.0).abs() <= UNIT_TOL;
        if !ok {
            return Err(Error::InvalidInput(format!("mixture weights {weight_plus}, {weight_minus}")));
        }
        Ok(Self { weight_plus, weight_minus })
    }

    /// The Born mixture `|α|²·right + |β|²·left` of a pure state.
    pub fn born(state: &QState2) -> Self {
        let wp = state.amp_plus.norm_sqr() / state.norm_sqr();
        Self { weight_plus: wp, weight_minus: 1.0 - wp }
    }

    pub fn weight_plus(&self) -> f64 {
        self.weight_plus
    }

    pub fn weight_minus(&self) -> f64 {
        self.weight_minus
    }

    pub fn expectation(&self, a: &Observable2) -> Complex64 {
        a.entries[1][1] * self.weight_plus + a.entries[0][0] * self.weight_minus
    }
}

/// How the long-time limit is taken.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub enum TimeMode {
    /// Cross terms dropped exactly.
    Diagonal,
    /// Expectation averaged over `[0, T]`.
    FiniteT(f64),
}

impl TimeMode {
    pub fn label(&self) -> String {
        match self {
            TimeMode::Diagonal => "diag".into(),
            TimeMode::FiniteT(t) => format!("{t}"),
        }
    }
}

/// Quadrature controls for δ-averaged expectations.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct MixtureOptions {
    pub nodes: usize,
    pub zero_margin: f64,
}

impl Default for MixtureOptions {
    fn default() -> Self {
        Self { nodes: DEFAULT_NODES, zero_margin: DEFAULT_ZERO_MARGIN }
    }
}

/// Rejects flea laws that put mass near δ = 0.
pub fn check_flea_law(mu: &DensityRV, zero_margin: f64) -> Result<()> {
    let near = mu.mass_near(0.0, zero_margin);
    if near > ZERO_MASS_TOL {
        return Err(Error::InvalidMeasure(format!(
            "mass {near:.3e} within {zero_margin} of delta = 0; fleas must take real nonzero values of delta"
        )));
    }
    Ok(())
}

fn pointwise_expectation(
    a: &Observable2,
    state0: &QState2,
    delta: f64,
    delta_hbar: f64,
    hbar: f64,
    mode: TimeMode,
) -> Result<Complex64> {
    let sp = eigensystem2(delta, delta_hbar)?;
    let c = [state0.project(&sp.v0), state0.project(&sp.v1)];
    let v = [sp.v0, sp.v1];
    let mut acc = Complex64::new(0.0, 0.0);
    for i in 0..2 {
        acc += a.sandwich_real(&v[i], &v[i]) * c[i].norm_sqr();
    }
    if let TimeMode::FiniteT(t_max) = mode {
        let e = [sp.e0, sp.e1];
        for (i, j) in [(0usize, 1usize), (1, 0)] {
            let phase = time_average_phase((e[i] - e[j]) / hbar, t_max);
            acc += c[i].conj() * c[j] * a.sandwich_real(&v[i], &v[j]) * phase;
        }
    }
    Ok(acc)
}

fn check_mode(mode: TimeMode) -> Result<()> {
    if let TimeMode::FiniteT(t) = mode {
        if !(t.is_finite() && t > 0.0) {
            return Err(Error::InvalidArgument(format!("averaging time T = {t} must be positive")));
        }
    }
    Ok(())
}

/// δ-averaged long-time expectation `∫⟨Ψ_δ(t), A Ψ_δ(t)⟩ dμ(δ)` with the default quadrature.
pub fn mixture_expectation(
    a: &Observable2,
    state0: &QState2,
    mu: &DensityRV,
    params: &ModelParams,
    mode: TimeMode,
) -> Result<Complex64> {
    mixture_expectation_with(a, state0, mu, params, mode, &MixtureOptions::default())
}

/// As [`mixture_expectation`] with explicit quadrature controls.
pub fn mixture_expectation_with(
    a: &Observable2,
    state0: &QState2,
    mu: &DensityRV,
    params: &ModelParams,
    mode: TimeMode,
    opts: &MixtureOptions,
) -> Result<Complex64> {
    params.validate()?;
    check_mode(mode)?;
    check_flea_law(mu, opts.zero_margin)?;
    let delta_hbar = splitting(params)?.delta_hbar;
    let nodes = mu.quadrature_nodes(opts.nodes);
    let terms: Vec<Result<Complex64>> = nodes
        .par_iter()
        .map(|&(d, w)| Ok(pointwise_expectation(a, state0, d, delta_hbar, params.hbar, mode)? * w))
        .collect();
    let mut acc = Complex64::new(0.0, 0.0);
    for t in terms {
        acc += t?;
    }
    Ok(acc)
}

/// Monte Carlo estimate with per-component standard errors.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct McEstimate {
    pub mean: Complex64,
    pub std_err_re: f64,
    pub std_err_im: f64,
}

/// Sampling alternative to [`mixture_expectation`].
pub fn mixture_expectation_mc<R: Rng + ?Sized>(
    a: &Observable2,
    state0: &QState2,
    mu: &DensityRV,
    params: &ModelParams,
    mode: TimeMode,
    n_samples: usize,
    rng: &mut R,
) -> Result<McEstimate> {
    params.validate()?;
    check_mode(mode)?;
    check_flea_law(mu, DEFAULT_ZERO_MARGIN)?;
    if n_samples < 2 {
        return Err(Error::InvalidArgument("Monte Carlo needs at least two samples".into()));
    }
    let delta_hbar = splitting(params)?.delta_hbar;
    let mut values = Vec::with_capacity(n_samples);
    for _ in 0..n_samples {
        let d = mu.sample(rng);
        values.push(pointwise_expectation(a, state0, d, delta_hbar, params.hbar, mode)?);
    }
    let n = n_samples as f64;
    let mean = values.iter().sum::<Complex64>() / n;
    let var_re = values.iter().map(|v| (v.re - mean.re).powi(2)).sum::<f64>() / (n - 1.0);
    let var_im = values.iter().map(|v| (v.im - mean.im).powi(2)).sum::<f64>() / (n - 1.0);
    Ok(McEstimate { mean, std_err_re: (var_re / n).sqrt(), std_err_im: (var_im / n).sqrt() })
}

/// One observable's mixture value next to its Born value.
#[derive(Debug, Clone, PartialEq)]
pub struct BornComparison {
    pub label: String,
    pub mixture_value: Complex64,
    pub born_value: Complex64,
    pub abs_gap: f64,
}

/// Mixture and Born values for every element of the matrix-unit basis.
pub fn born_comparison(
    state0: &QState2,
    mu: &DensityRV,
    params: &ModelParams,
    mode: TimeMode,
) -> Result<Vec<BornComparison>> {
    let born = MixtureState2::born(state0);
    Observable2::matrix_unit_basis()
        .iter()
        .map(|a| {
            let m = mixture_expectation(a, state0, mu, params, mode)?;
            let b = born.expectation(a);
            Ok(BornComparison { label: a.label().to_string(), mixture_value: m, born_value: b, abs_gap: (m - b).norm() })
        })
        .collect()
}

/// Largest deviation from the Born mixture over the matrix-unit basis.
pub fn born_gap(state0: &QState2, mu: &DensityRV, params: &ModelParams, mode: TimeMode) -> Result<f64> {
    Ok(born_comparison(state0, mu, params, mode)?.iter().map(|c| c.abs_gap).fold(0.0, f64::max))
}
