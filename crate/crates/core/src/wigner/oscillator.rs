//! Harmonic flow, orbit averages, the Hermite eigenbasis, and the
//! frequency-averaged pairing of an evolved state against the orbit-averaged
//! classical limit.

use super::grid::{inner_on, Grid1D, WaveFn};
use super::observable::{PhaseRect, PhaseSpaceFn, PointMassMixture, TabulatedObservable, TestObservable};
use super::transform::{WignerOptions, WignerPlan};
use crate::arbfun::{char_fn, DensityRV};
use crate::error::{Error, Result};
use num_complex::Complex64;
use rayon::prelude::*;
use std::f64::consts::PI;

/// Quadrature nodes per closed orbit.
pub const ORBIT_NODES: usize = 128;

/// Exact harmonic flow `(x cos ωt + p/(mω) sin ωt, −mωx sin ωt + p cos ωt)`.
pub fn classical_flow_ho(x: f64, p: f64, m: f64, omega: f64, t: f64) -> (f64, f64) {
    let (s, c) = (omega * t).sin_cos();
    let mw = m * omega;
    (x * c + p / mw * s, -mw * x * s + p * c)
}

/// Period average of a phase-space function along unit-frequency orbits.
pub struct OrbitAverage<'a, F: ?Sized> {
    inner: &'a F,
    m_omega: f64,
}

/// `(x, p) ↦ (1/2π)∫₀^{2π} F(flow_t(x, p)) dt` with the flow of mass `m_omega` and unit frequency.
pub fn orbit_average<F: PhaseSpaceFn + ?Sized>(f: &F, m_omega: f64) -> Result<OrbitAverage<'_, F>> {
    if !(m_omega.is_finite() && m_omega > 0.0) {
        return Err(Error::InvalidArgument(format!("m_omega = {m_omega} must be positive")));
    }
    Ok(OrbitAverage { inner: f, m_omega })
}

impl<F: PhaseSpaceFn + ?Sized> PhaseSpaceFn for OrbitAverage<'_, F> {
    fn value(&self, x: f64, p: f64) -> Result<f64> {
        let mut acc = 0.0;
        for k in 0..ORBIT_NODES {
            let t = 2.0 * PI * k as f64 / ORBIT_NODES as f64;
            let (xt, pt) = classical_flow_ho(x, p, self.m_omega, 1.0, t);
            acc += self.inner.value(xt, pt)?;
        }
        Ok(acc / ORBIT_NODES as f64)
    }
}

/// The orbit average of a test function, itself a test function supported on
/// the bounding box of the orbit-swept support.
pub fn orbit_average_observable(f: &TestObservable, m_omega: f64) -> Result<TestObservable> {
    if !(m_omega.is_finite() && m_omega > 0.0) {
        return Err(Error::InvalidArgument(format!("m_omega = {m_omega} must be positive")));
    }
    let s = *f.support();
    // the orbit invariant x² + (p/mω)² is maximized over a rectangle at a corner
    let r2 = [(s.x_min, s.p_min), (s.x_min, s.p_max), (s.x_max, s.p_min), (s.x_max, s.p_max)]
        .iter()
        .map(|(x, p)| x * x + (p / m_omega).powi(2))
        .fold(0.0, f64::max);
    let r = r2.sqrt();
    let support = PhaseRect::new(-r, r, -m_omega * r, m_omega * r)?;
    let inner = f.clone();
    Ok(TestObservable::new(format!("orbit_avg({})", f.label()), support, move |x, p| {
        let mut acc = 0.0;
        for k in 0..ORBIT_NODES {
            let t = 2.0 * PI * k as f64 / ORBIT_NODES as f64;
            let (xt, pt) = classical_flow_ho(x, p, m_omega, 1.0, t);
            acc += inner.eval(xt, pt);
        }
        acc / ORBIT_NODES as f64
    }))
}

/// Oscillator eigenfunctions for fixed `mω`, sampled on a grid.
#[derive(Debug, Clone)]
pub struct HermiteBasis {
    grid: Grid1D,
    hbar: f64,
    m_omega: f64,
    functions: Vec<Vec<f64>>,
}

impl HermiteBasis {
    /// Functions `0..n_functions` by the normalized three-term recurrence.
    pub fn new(grid: Grid1D, hbar: f64, m_omega: f64, n_functions: usize) -> Result<Self> {
        if !(hbar > 0.0 && m_omega > 0.0) || n_functions == 0 {
            return Err(Error::InvalidArgument("hbar, m_omega and basis size must be positive".into()));
        }
        let scale = (m_omega / hbar).sqrt();
        let norm0 = (m_omega / (PI * hbar)).powf(0.25);
        let xs = grid.points();
        let mut functions: Vec<Vec<f64>> = Vec::with_capacity(n_functions);
        functions.push(xs.iter().map(|x| norm0 * (-0.5 * (scale * x).powi(2)).exp()).collect());
        if n_functions > 1 {
            functions.push(xs.iter().zip(&functions[0]).map(|(x, f0)| 2f64.sqrt() * scale * x * f0).collect());
        }
        for n in 1..n_functions.saturating_sub(1) {
            let a = (2.0 / (n as f64 + 1.0)).sqrt();
            let b = (n as f64 / (n as f64 + 1.0)).sqrt();
            let next: Vec<f64> = xs
                .iter()
                .enumerate()
                .map(|(i, x)| a * scale * x * functions[n][i] - b * functions[n - 1][i])
                .collect();
            functions.push(next);
        }
        for (n, f) in functions.iter().enumerate() {
            let edge = f[0].abs().max(f[f.len() - 1].abs());
            if edge > 1e-8 {
                return Err(Error::DomainTooSmall {
                    reason: format!("oscillator level {n} reaches {edge:.2e} at the grid edge"),
                    suggested_min: 1.5 * grid.x_min(),
                    suggested_max: 1.5 * grid.x_max(),
                });
            }
        }
        Ok(Self { grid, hbar, m_omega, functions })
    }

    pub fn len(&self) -> usize {
        self.functions.len()
    }

    pub fn is_empty(&self) -> bool {
        self.functions.is_empty()
    }

    pub fn function(&self, n: usize) -> &[f64] {
        &self.functions[n]
    }

    pub fn grid(&self) -> &Grid1D {
        &self.grid
    }

    pub fn hbar(&self) -> f64 {
        self.hbar
    }

    pub fn m_omega(&self) -> f64 {
        self.m_omega
    }

    fn complex(&self, n: usize) -> Vec<Complex64> {
        self.functions[n].iter().map(|&v| Complex64::new(v, 0.0)).collect()
    }

    /// `⟨φ_n, ψ⟩` for every basis function.
    pub fn coefficients(&self, psi: &WaveFn) -> Result<Vec<Complex64>> {
        if *psi.grid() != self.grid {
            return Err(Error::InvalidInput("state and basis live on different grids".into()));
        }
        Ok((0..self.len()).map(|n| inner_on(&self.grid, &self.complex(n), psi.values())).collect())
    }

    /// `Σ c_n e^{−iω(n+½)t} φ_n`.
    pub fn evolve(&self, coeffs: &[Complex64], omega: f64, t: f64) -> Result<WaveFn> {
        let mut values = vec![Complex64::new(0.0, 0.0); self.grid.n_points()];
        for (n, c) in coeffs.iter().enumerate().take(self.len()) {
            let a = c * Complex64::cis(-omega * (n as f64 + 0.5) * t);
            for (v, f) in values.iter_mut().zip(&self.functions[n]) {
                *v += a * f;
            }
        }
        let captured: f64 = coeffs.iter().map(|c| c.norm_sqr()).sum();
        WaveFn::subnormalized(self.grid, values, self.hbar, (1.0 - captured).max(0.0) + 1e-9)
    }
}

/// Minimum-uncertainty state centred at `(x0, p0)` for the oscillator with the given `mω`.
pub fn coherent_state(grid: Grid1D, hbar: f64, m_omega: f64, x0: f64, p0: f64) -> Result<WaveFn> {
    WaveFn::from_fn(grid, hbar, |x| {
        let g = (-m_omega * (x - x0).powi(2) / (2.0 * hbar)).exp();
        Complex64::from_polar(g, p0 * (x - 0.5 * x0) / hbar)
    })
}

/// Pairings `F_{nm} = ⟨f, W_{φ_n φ_m}⟩` of one observable with all basis cross-Wigner functions.
#[derive(Debug, Clone)]
pub struct PairingMatrix {
    n: usize,
    entries: Vec<Complex64>,
}

impl PairingMatrix {
    pub fn get(&self, n: usize, m: usize) -> Complex64 {
        self.entries[n * self.n + m]
    }

    /// `⟨f, W^Ψ⟩` for `Ψ = Σ a_n φ_n`.
    pub fn pair_state(&self, a: &[Complex64]) -> f64 {
        let mut acc = Complex64::new(0.0, 0.0);
        for n in 0..self.n {
            for m in 0..self.n {
                acc += a[n].conj() * a[m] * self.get(n, m);
            }
        }
        acc.re
    }

    /// `Σ |c_n|² F_{nn}`, the `T → ∞` limit of [`Self::frequency_averaged`].
    pub fn dephased(&self, c: &[Complex64]) -> f64 {
        (0..self.n).map(|n| c[n].norm_sqr() * self.get(n, n).re).sum()
    }

    /// `∫⟨f, W^{Ψ_ω(T)}⟩ dμ(ω)` where `Ψ_ω(T)` evolves `Σ c_n φ_n` with frequency ω.
    pub fn frequency_averaged(&self, c: &[Complex64], mu_omega: &DensityRV, t: f64) -> f64 {
        let chi: Vec<Complex64> = (0..self.n).map(|k| char_fn(mu_omega, k as f64 * t)).collect();
        let mut acc = Complex64::new(0.0, 0.0);
        for n in 0..self.n {
            for m in 0..self.n {
                let k = n as i64 - m as i64;
                let phase = if k >= 0 { chi[k as usize] } else { chi[(-k) as usize].conj() };
                acc += c[n].conj() * c[m] * self.get(n, m) * phase;
            }
        }
        acc.re
    }
}

/// Pairing matrices for several observables, sharing the cross-Wigner transforms.
pub fn pairing_matrices(basis: &HermiteBasis, observables: &[TestObservable], p_extent: f64) -> Result<Vec<PairingMatrix>> {
    if observables.is_empty() {
        return Ok(Vec::new());
    }
    let lo = observables.iter().map(|f| f.support().x_min).fold(f64::INFINITY, f64::min);
    let hi = observables.iter().map(|f| f.support().x_max).fold(f64::NEG_INFINITY, f64::max);
    let h = basis.grid.spacing();
    let opts = WignerOptions::new(p_extent, 3).with_window(lo - h, hi + h);
    let plan = WignerPlan::new(&basis.grid, basis.hbar, &opts)?;
    let tables: Vec<TabulatedObservable> =
        observables.iter().map(|f| TabulatedObservable::new(f, &plan.phase_grid())).collect::<Result<_>>()?;
    let n = basis.len();
    let pairs: Vec<(usize, usize)> = (0..n).flat_map(|a| (a..n).map(move |b| (a, b))).collect();
    let values: Vec<Vec<Complex64>> = pairs
        .par_iter()
        .map(|&(a, b)| {
            let field = plan.cross_values_serial(&basis.complex(a), &basis.complex(b));
            tables.iter().map(|t| t.pair_values(&field)).collect()
        })
        .collect();
    let mut out: Vec<PairingMatrix> =
        observables.iter().map(|_| PairingMatrix { n, entries: vec![Complex64::new(0.0, 0.0); n * n] }).collect();
    for (&(a, b), v) in pairs.iter().zip(values) {
        for (mat, z) in out.iter_mut().zip(v) {
            // real basis functions: W_{ba} = conj W_{ab}
            mat.entries[a * n + b] = z;
            mat.entries[b * n + a] = z.conj();
        }
    }
    Ok(out)
}

/// Coherent states centred at a fixed phase-space point, one per ħ.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct CoherentFamily {
    pub x0: f64,
    pub p0: f64,
    pub m_omega: f64,
}

/// Resolution chosen for one ħ of the sweep.
#[derive(Debug, Clone)]
pub struct OscillatorSetup {
    pub hbar: f64,
    pub state: WaveFn,
    pub basis: HermiteBasis,
    pub coefficients: Vec<Complex64>,
    pub p_extent: f64,
}

impl CoherentFamily {
    /// The ħ → 0 limit: a point mass at the centre.
    pub fn classical_limit(&self) -> PointMassMixture {
        PointMassMixture::new(vec![(self.x0, self.p0, 1.0)]).expect("single unit atom")
    }

    /// Grid, basis and coefficients resolving the state and every observable's support.
    pub fn setup(&self, hbar: f64, observables: &[TestObservable]) -> Result<OscillatorSetup> {
        let mw = self.m_omega;
        let z2 = (mw * self.x0 * self.x0 + self.p0 * self.p0 / mw) / (2.0 * hbar);
        // Poisson tail of the coherent state beyond this index is below 1e-10
        let n_max = (z2 + 8.0 * z2.sqrt() + 12.0).ceil() as usize;
        let turning = (hbar * (2.0 * n_max as f64 + 1.0) / mw).sqrt();
        let sigma = (hbar / mw).sqrt();
        let obs_x = observables.iter().map(|f| f.support().x_min.abs().max(f.support().x_max.abs())).fold(0.0, f64::max);
        let obs_p = observables.iter().map(|f| f.support().p_min.abs().max(f.support().p_max.abs())).fold(0.0, f64::max);
        let half = (turning + 10.0 * sigma).max(obs_x + 4.0 * sigma);
        let p_extent = (mw * turning + 10.0 * (hbar * mw).sqrt()).max(obs_p);
        let h_max = PI * hbar / (4.0 * p_extent);
        let n_points = (((2.0 * half / h_max).ceil() as usize) + 1).next_power_of_two().max(256);
        let grid = Grid1D::new(-half, half, n_points)?;
        let state = coherent_state(grid, hbar, mw, self.x0, self.p0)?;
        let basis = HermiteBasis::new(grid, hbar, mw, n_max + 1)?;
        let coefficients = basis.coefficients(&state)?;
        let captured: f64 = coefficients.iter().map(|c| c.norm_sqr()).sum();
        if captured < 1.0 - 1e-9 {
            return Err(Error::Truncation { captured, required: 1.0 - 1e-9 });
        }
        Ok(OscillatorSetup { hbar, state, basis, coefficients, p_extent })
    }
}

/// One residual of the frequency-averaged pairing against the orbit-averaged limit.
#[derive(Debug, Clone, PartialEq)]
pub struct Prop1Row {
    pub hbar: f64,
    pub t: f64,
    pub observable: String,
    pub paired_mean: f64,
    /// Infinite-time value of the frequency-averaged pairing at this ħ.
    pub dephased_value: f64,
    pub limit_value: f64,
    pub residual: f64,
}

impl Prop1Row {
    /// Part of the residual that persists as `T → ∞`.
    pub fn dephasing_remainder(&self) -> f64 {
        (self.paired_mean - self.dephased_value).abs()
    }
}

/// For each ħ and averaging time T, `|∫⟨f, W^{Ψ_ω(T)}⟩dμ(ω) − ⟨orbit_average(f), ρ₀⟩|`
/// where `ρ₀` is the classical limit of the family.
pub fn prop1_residuals(
    family: &CoherentFamily,
    mu_omega: &DensityRV,
    hbar_list: &[f64],
    t_list: &[f64],
    observables: &[TestObservable],
) -> Result<Vec<Prop1Row>> {
    let (lo, hi) = mu_omega.support();
    if !(lo > 0.0) || !(hi - lo > 1e-9 * hi) {
        return Err(Error::InvalidMeasure(format!(
            "frequency law on [{lo}, {hi}] must be a density on positive frequencies"
        )));
    }
    if t_list.iter().any(|t| !(t.is_finite() && *t > 0.0)) || hbar_list.iter().any(|h| !(h.is_finite() && *h > 0.0)) {
        return Err(Error::InvalidArgument("hbar and T values must be positive".into()));
    }
    let limit = family.classical_limit();
    let limits: Vec<f64> = observables
        .iter()
        .map(|f| limit.pair_fn(&orbit_average(f, family.m_omega)?))
        .collect::<Result<_>>()?;
    let mut rows = Vec::new();
    for &hbar in hbar_list {
        let setup = family.setup(hbar, observables)?;
        let mats = pairing_matrices(&setup.basis, observables, setup.p_extent)?;
        let dephased: Vec<f64> = mats.iter().map(|m| m.dephased(&setup.coefficients)).collect();
        for &t in t_list {
            for (((f, mat), &lim), &deph) in observables.iter().zip(&mats).zip(&limits).zip(&dephased) {
                let mean = mat.frequency_averaged(&setup.coefficients, mu_omega, t);
                rows.push(Prop1Row {
                    hbar,
                    t,
                    observable: f.label().to_string(),
                    paired_mean: mean,
                    dephased_value: deph,
                    limit_value: lim,
                    residual: (mean - lim).abs(),
                });
            }
        }
    }
    Ok(rows)
}

/// Six smooth observables probing the unit orbit through `(1, 0)` and its surroundings.
pub fn standard_observables() -> Vec<TestObservable> {
    let r = std::f64::consts::FRAC_1_SQRT_2;
    vec![
        TestObservable::bump("bump_east", 1.0, 0.0, 1.0, 1.0, 1.0),
        TestObservable::bump("bump_north", 0.0, 1.0, 1.0, 1.0, 1.0),
        TestObservable::bump("bump_southwest", -r, -r, 1.0, 1.0, 1.0),
        TestObservable::bump("bump_center", 0.0, 0.0, 2.0, 2.0, 1.0),
        TestObservable::plateau("plateau_disk", 0.0, 0.0, 2.2, 2.2, 0.6),
        TestObservable::bump("bump_outside", 2.6, 0.0, 0.8, 0.8, 1.0),
    ]
    .into_iter()
    .collect::<Result<Vec<_>>>()
    .expect("fixed observable parameters are valid")
}
