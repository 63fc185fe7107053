use super::eigen::{lowest_eigenpairs, SymTridiagonal};
use super::potential::{FleaSpec, Potential, PotentialSpec};
use crate::arbfun::time_average_phase;
use crate::error::{Error, Result};
use crate::twostate::{splitting, ModelParams};
use crate::wigner::{Grid1D, WaveFn};
use num_complex::Complex64;
use serde::{Deserialize, Serialize};

/// Boundary potential must exceed this multiple of the highest retained level.
pub const DOMAIN_FACTOR: f64 = 20.0;
/// Eigenfunction values below this fraction of the peak do not fix a sign.
pub const SIGN_TOL: f64 = 1e-12;
/// Minimum captured weight before expansions count as truncated.
pub const CAPTURE_MIN: f64 = 0.999;
/// Right-mass band in which a flea is not classified.
pub const AMBIGUOUS_BAND: (f64, f64) = (0.45, 0.55);
/// Retained eigenfunctions must have decayed below this amplitude at the walls.
pub const BOUNDARY_DECAY: f64 = 1e-8;
const ORTHO_TOL: f64 = 1e-8;
const DEFAULT_HALF_WIDTH: f64 = 3.0;
const DEFAULT_POINTS: usize = 4096;

/// Finite-difference Hamiltonian `−(ħ²/2m)∂² + V` with Dirichlet walls beyond the grid ends.
#[derive(Debug, Clone, PartialEq)]
pub struct Hamiltonian {
    grid: Grid1D,
    hbar: f64,
    mass: f64,
    matrix: SymTridiagonal,
    potential: Vec<f64>,
    anchor: f64,
}

impl Hamiltonian {
    pub fn grid(&self) -> &Grid1D {
        &self.grid
    }

    pub fn hbar(&self) -> f64 {
        self.hbar
    }

    pub fn mass(&self) -> f64 {
        self.mass
    }

    pub fn matrix(&self) -> &SymTridiagonal {
        &self.matrix
    }

    pub fn potential_values(&self) -> &[f64] {
        &self.potential
    }

    fn boundary_potential(&self) -> f64 {
        self.potential[0].min(self.potential[self.potential.len() - 1])
    }

    // Bounds at which a potential growing like the sampled tail reaches `target`.
    fn suggest_bounds(&self, target: f64) -> (f64, f64) {
        let g = &self.grid;
        let centre = 0.5 * (g.x_min() + g.x_max());
        let half = 0.5 * (g.x_max() - g.x_min());
        let n = self.potential.len();
        let inner = g.nearest_index(centre - 0.8 * half).min(n - 1);
        let inner_r = g.nearest_index(centre + 0.8 * half).min(n - 1);
        let exponent = |edge: f64, mid: f64| {
            if edge > mid && mid > 0.0 {
                ((edge / mid).ln() / (1.0f64 / 0.8).ln()).max(1.0)
            } else {
                2.0
            }
        };
        let grow = |edge: f64, mid: f64| {
            let q = exponent(edge, mid);
            (target / edge.max(f64::MIN_POSITIVE)).powf(1.0 / q).max(1.0) * 1.05
        };
        let left = grow(self.potential[0], self.potential[inner]);
        let right = grow(self.potential[n - 1], self.potential[inner_r]);
        (centre - half * left, centre + half * right)
    }
}

/// Central-difference Hamiltonian on `grid`.
pub fn build_hamiltonian<P: Potential + ?Sized>(grid: Grid1D, pot: &P, hbar: f64, mass: f64) -> Result<Hamiltonian> {
    if !(hbar.is_finite() && hbar > 0.0 && mass.is_finite() && mass > 0.0) {
        return Err(Error::InvalidArgument(format!("hbar = {hbar} and mass = {mass} must be positive")));
    }
    let h = grid.spacing();
    let kinetic = hbar * hbar / (2.0 * mass * h * h);
    let potential: Vec<f64> = grid.points().iter().map(|&x| pot.value(x)).collect();
    if potential.iter().any(|v| !v.is_finite()) {
        return Err(Error::InvalidInput("potential is not finite on the grid".into()));
    }
    let diag = potential.iter().map(|v| 2.0 * kinetic + v).collect();
    let matrix = SymTridiagonal::new(diag, vec![-kinetic; grid.n_points() - 1])?;
    let ham = Hamiltonian { grid, hbar, mass, matrix, potential, anchor: pot.sign_anchor() };
    let floor = DOMAIN_FACTOR * pot.level_estimate(0, hbar, mass);
    if ham.boundary_potential() < floor {
        let (lo, hi) = ham.suggest_bounds(floor);
        return Err(Error::DomainTooSmall {
            reason: format!(
                "boundary potential {:.4} is below {DOMAIN_FACTOR}x the ground-level estimate",
                ham.boundary_potential()
            ),
            suggested_min: lo,
            suggested_max: hi,
        });
    }
    Ok(ham)
}

/// Lowest eigenpairs of a Hamiltonian.
#[derive(Debug, Clone, PartialEq)]
pub struct SpectralDecomposition {
    grid: Grid1D,
    hbar: f64,
    energies: Vec<f64>,
    vectors: Vec<Vec<f64>>,
    states: Vec<WaveFn>,
    residuals: Vec<f64>,
    sign_fallback: Vec<bool>,
}

impl SpectralDecomposition {
    pub fn len(&self) -> usize {
        self.energies.len()
    }

    pub fn is_empty(&self) -> bool {
        self.energies.is_empty()
    }

    pub fn grid(&self) -> &Grid1D {
        &self.grid
    }

    pub fn hbar(&self) -> f64 {
        self.hbar
    }

    pub fn energies(&self) -> &[f64] {
        &self.energies
    }

    pub fn states(&self) -> &[WaveFn] {
        &self.states
    }

    /// Real samples of state `k`, unit in the trapezoidal L² norm.
    pub fn real_state(&self, k: usize) -> &[f64] {
        &self.vectors[k]
    }

    /// `‖HΨ − EΨ‖` per level.
    pub fn residuals(&self) -> &[f64] {
        &self.residuals
    }

    /// Whether level `k` had to take its sign from its largest component.
    pub fn sign_fallback(&self, k: usize) -> bool {
        self.sign_fallback[k]
    }

    /// `E₁ − E₀`.
    pub fn gap(&self) -> f64 {
        self.energies[1] - self.energies[0]
    }
}

/// The lowest `k` eigenpairs with signs fixed at the potential's anchor.
pub fn solve_eigen(h: &Hamiltonian, k: usize) -> Result<SpectralDecomposition> {
    solve_eigen_seeded(h, k, 0)
}

/// As [`solve_eigen`] with inverse-iteration start vectors drawn from `seed`.
pub fn solve_eigen_seeded(h: &Hamiltonian, k: usize, seed: u64) -> Result<SpectralDecomposition> {
    let n = h.grid.n_points();
    if k < 2 || 4 * k > n {
        return Err(Error::InvalidArgument(format!("need 2 <= K << grid size, got K = {k} for {n} points")));
    }
    let pairs = lowest_eigenpairs(&h.matrix, k, seed)?;
    let energies: Vec<f64> = pairs.iter().map(|p| p.value).collect();
    for w in energies.windows(2) {
        if !(w[1] > w[0]) {
            return Err(Error::DegenerateSpectrum(format!("levels {} and {} coincide", w[0], w[1])));
        }
    }
    let weights = h.grid.trapezoid_weights();
    let anchor_idx = h.grid.nearest_index(h.anchor);
    let mut vectors = Vec::with_capacity(k);
    let mut states = Vec::with_capacity(k);
    let mut residuals = Vec::with_capacity(k);
    let mut sign_fallback = Vec::with_capacity(k);
    for (idx, p) in pairs.into_iter().enumerate() {
        let mut v = p.vector;
        let peak = v.iter().fold(0.0f64, |m, x| m.max(x.abs()));
        let at_anchor = v[anchor_idx];
        let fallback = at_anchor.abs() < SIGN_TOL * peak;
        let sign_source = if fallback {
            *v.iter().max_by(|a, b| a.abs().total_cmp(&b.abs())).expect("nonempty")
        } else {
            at_anchor
        };
        let norm = v.iter().zip(&weights).map(|(x, w)| w * x * x).sum::<f64>().sqrt();
        let scale = sign_source.signum() / norm;
        v.iter_mut().for_each(|x| *x *= scale);
        let edge = v[0].abs().max(v[n - 1].abs());
        if edge > BOUNDARY_DECAY {
            let top = energies[k - 1];
            let (lo, hi) = h.suggest_bounds((DOMAIN_FACTOR * top).max(1.5 * h.boundary_potential()));
            return Err(Error::DomainTooSmall {
                reason: format!("level {idx} still has amplitude {edge:.2e} at the Dirichlet wall"),
                suggested_min: lo,
                suggested_max: hi,
            });
        }
        let bound = 1e-6 * p.value.abs() + 1e-8;
        if p.residual > bound {
            return Err(Error::Numeric(format!("level {idx} residual {:.3e} exceeds {bound:.3e}", p.residual)));
        }
        let state = WaveFn::new(h.grid, v.iter().map(|&x| Complex64::new(x, 0.0)).collect(), h.hbar)?;
        vectors.push(v);
        states.push(state);
        residuals.push(p.residual);
        sign_fallback.push(fallback);
    }
    for a in 0..k {
        for b in 0..=a {
            let ip: f64 = (0..n).map(|i| weights[i] * vectors[a][i] * vectors[b][i]).sum();
            let expect = if a == b { 1.0 } else { 0.0 };
            if (ip - expect).abs() > ORTHO_TOL {
                return Err(Error::Numeric(format!("levels {a}, {b} overlap {ip:.3e}")));
            }
        }
    }
    Ok(SpectralDecomposition { grid: h.grid, hbar: h.hbar, energies, vectors, states, residuals, sign_fallback })
}

/// `Ψ± = (Ψ⁽⁰⁾ ± Ψ⁽¹⁾)/√2` of an unperturbed decomposition.
pub fn localized_states(sd: &SpectralDecomposition) -> Result<(WaveFn, WaveFn)> {
    if sd.len() < 2 {
        return Err(Error::InvalidArgument("localized states need two levels".into()));
    }
    for k in 0..2 {
        if sd.sign_fallback[k] {
            return Err(Error::PhaseConvention(format!("level {k} vanishes at the sign anchor")));
        }
    }
    let r = std::f64::consts::FRAC_1_SQRT_2;
    let combine = |s: f64| -> Result<WaveFn> {
        let values = sd.vectors[0].iter().zip(&sd.vectors[1]).map(|(a, b)| Complex64::new(r * (a + s * b), 0.0)).collect();
        WaveFn::new(sd.grid, values, sd.hbar)
    };
    Ok((combine(1.0)?, combine(-1.0)?))
}

/// Half-line of position space.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Region {
    Right,
    Left,
}

/// Trapezoidal weights restricted to a half-line, a point at `x = 0` counting half.
pub fn region_weights(grid: &Grid1D, region: Region) -> Vec<f64> {
    let side = if region == Region::Right { 1.0 } else { -1.0 };
    grid.trapezoid_weights()
        .iter()
        .enumerate()
        .map(|(i, w)| {
            let s = side * grid.x(i);
            w * if s > 0.0 {
                1.0
            } else if s == 0.0 {
                0.5
            } else {
                0.0
            }
        })
        .collect()
}

/// `R_jk = ∫_region Ψ⁽ʲ⁾Ψ⁽ᵏ⁾`.
pub fn region_matrix(sd: &SpectralDecomposition, region: Region) -> Vec<Vec<f64>> {
    let w = region_weights(&sd.grid, region);
    let k = sd.len();
    let mut m = vec![vec![0.0; k]; k];
    for a in 0..k {
        for b in 0..=a {
            let v: f64 = w.iter().zip(&sd.vectors[a]).zip(&sd.vectors[b]).map(|((w, x), y)| w * x * y).sum();
            m[a][b] = v;
            m[b][a] = v;
        }
    }
    m
}

/// Expansion `c⁽ᵏ⁾ = ⟨Ψ⁽ᵏ⁾, ψ₀⟩` in a truncated eigenbasis.
#[derive(Debug, Clone, PartialEq)]
pub struct ExpansionCoefficients {
    pub values: Vec<Complex64>,
    pub captured: f64,
}

impl ExpansionCoefficients {
    /// `Σ_{k ≥ from} |c⁽ᵏ⁾|²`.
    pub fn tail_weight(&self, from: usize) -> f64 {
        self.values.iter().skip(from).map(|c| c.norm_sqr()).sum()
    }

    pub fn weight(&self, k: usize) -> f64 {
        self.values[k].norm_sqr()
    }

    /// True when less than [`CAPTURE_MIN`] of the state lies in the retained levels.
    pub fn truncation_warning(&self) -> bool {
        self.captured < CAPTURE_MIN
    }

    pub fn require_captured(&self) -> Result<()> {
        if self.truncation_warning() {
            return Err(Error::Truncation { captured: self.captured, required: CAPTURE_MIN });
        }
        Ok(())
    }
}

pub fn coefficients(psi0: &WaveFn, sd: &SpectralDecomposition) -> Result<ExpansionCoefficients> {
    if psi0.grid() != &sd.grid {
        return Err(Error::InvalidInput("initial state and eigenbasis live on different grids".into()));
    }
    let values: Vec<Complex64> = sd.states.iter().map(|s| s.inner(psi0)).collect::<Result<_>>()?;
    let captured: f64 = values.iter().map(|c| c.norm_sqr()).sum();
    if captured > 1.0 + 1e-8 {
        return Err(Error::Numeric(format!("expansion weight {captured} exceeds the state norm")));
    }
    Ok(ExpansionCoefficients { values, captured })
}

/// `Σ c⁽ᵏ⁾ e^{−iE⁽ᵏ⁾t/ħ} Ψ⁽ᵏ⁾`.
pub fn evolve_dw(psi0: &WaveFn, sd: &SpectralDecomposition, t: f64) -> Result<WaveFn> {
    let c = coefficients(psi0, sd)?;
    c.require_captured()?;
    let n = sd.grid.n_points();
    let mut values = vec![Complex64::new(0.0, 0.0); n];
    for (k, ck) in c.values.iter().enumerate() {
        let a = ck * Complex64::cis(-sd.energies[k] * t / sd.hbar);
        for (v, x) in values.iter_mut().zip(&sd.vectors[k]) {
            *v += a * x;
        }
    }
    WaveFn::subnormalized(sd.grid, values, sd.hbar, (1.0 - c.captured).max(0.0) + 1e-9)
}

/// `Σ_k |c⁽ᵏ⁾|² ∫_region |Ψ⁽ᵏ⁾|²`, the infinite-time average of the region occupation.
pub fn diagonal_ensemble_occupation(c: &ExpansionCoefficients, sd: &SpectralDecomposition, region: Region) -> f64 {
    let m = region_matrix(sd, region);
    diagonal_occupation_from(c, &m)
}

pub(crate) fn diagonal_occupation_from(c: &ExpansionCoefficients, m: &[Vec<f64>]) -> f64 {
    c.values.iter().enumerate().map(|(k, ck)| ck.norm_sqr() * m[k][k]).sum()
}

/// `(1/T)∫₀ᵀ ∫_region |Ψ(t)|² dt` in closed form over the retained levels.
pub fn finite_time_occupation(c: &ExpansionCoefficients, sd: &SpectralDecomposition, region: Region, t_max: f64) -> Result<f64> {
    if !(t_max.is_finite() && t_max > 0.0) {
        return Err(Error::InvalidArgument(format!("averaging time {t_max} must be positive")));
    }
    let m = region_matrix(sd, region);
    Ok(finite_occupation_from(c, &m, &sd.energies, sd.hbar, t_max))
}

pub(crate) fn finite_occupation_from(c: &ExpansionCoefficients, m: &[Vec<f64>], energies: &[f64], hbar: f64, t_max: f64) -> f64 {
    let k = c.values.len();
    let mut acc = 0.0;
    for a in 0..k {
        acc += c.values[a].norm_sqr() * m[a][a];
        for b in 0..a {
            let nu = (energies[a] - energies[b]) / hbar;
            let term = c.values[a].conj() * c.values[b] * m[a][b] * time_average_phase(nu, t_max);
            acc += 2.0 * term.re;
        }
    }
    acc
}

/// Ground-state localization class of a flea.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub enum FleaClass {
    DPlus,
    DMinus,
}

impl FleaClass {
    pub fn label(&self) -> &'static str {
        match self {
            FleaClass::DPlus => "D_plus",
            FleaClass::DMinus => "D_minus",
        }
    }

    fn from_right_mass(right_mass: f64) -> Result<Self> {
        if right_mass >= AMBIGUOUS_BAND.0 && right_mass <= AMBIGUOUS_BAND.1 {
            return Err(Error::AmbiguousFlea { right_mass });
        }
        Ok(if right_mass > 0.5 { FleaClass::DPlus } else { FleaClass::DMinus })
    }
}

/// Class with the ground-state right mass that decided it.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct FleaClassification {
    pub class: FleaClass,
    pub right_mass: f64,
}

/// Classifies by the right mass of the perturbed ground state.
pub fn classify_flea(flea: &FleaSpec, params: &ModelParams, grid: Grid1D) -> Result<FleaClassification> {
    let pot = PotentialSpec::with_flea(params, *flea)?;
    let sd = solve_eigen(&build_hamiltonian(grid, &pot, params.hbar, params.mass)?, 2)?;
    classify_ground(&sd)
}

pub(crate) fn classify_ground(sd: &SpectralDecomposition) -> Result<FleaClassification> {
    let right_mass = sd.states[0].right_mass();
    Ok(FleaClassification { class: FleaClass::from_right_mass(right_mass)?, right_mass })
}

/// Convergence diagnostics of one flea at one ħ.
#[derive(Debug, Clone, PartialEq)]
pub struct FleaDiagnostic {
    pub hbar: f64,
    pub right_mass: f64,
    pub class: Option<FleaClass>,
    /// `min_± ‖Ψ⁽⁰⁾_δ ∓ Ψ_target‖` against the localized state of the class.
    pub distance: f64,
    /// `distance / ħ`.
    pub scaled_distance: f64,
}

/// `‖φ − ψ‖` minimized over the sign of `ψ`, for unit vectors.
pub fn sign_free_distance(phi: &WaveFn, psi: &WaveFn) -> Result<f64> {
    Ok((2.0 - 2.0 * phi.inner(psi)?.norm()).max(0.0).sqrt())
}

/// Class and distance to the matching localized state along an ħ sweep.
pub fn flea_diagnostics(flea: &FleaSpec, params: &ModelParams, hbar_list: &[f64]) -> Result<Vec<FleaDiagnostic>> {
    let mut rows = Vec::with_capacity(hbar_list.len());
    for &hbar in hbar_list {
        let p = params.with_hbar(hbar)?;
        let grid = auto_grid(&p, 2, flea.amplitude.max(0.0))?;
        let unperturbed = solve_eigen(&build_hamiltonian(grid, &PotentialSpec::unperturbed(&p)?, hbar, p.mass)?, 2)?;
        let (plus, minus) = localized_states(&unperturbed)?;
        let pot = PotentialSpec::with_flea(&p, *flea)?;
        let sd = solve_eigen(&build_hamiltonian(grid, &pot, hbar, p.mass)?, 2)?;
        let right_mass = sd.states[0].right_mass();
        let class = FleaClass::from_right_mass(right_mass).ok();
        let target = if right_mass > 0.5 { &plus } else { &minus };
        let distance = sign_free_distance(&sd.states[0], target)?;
        rows.push(FleaDiagnostic { hbar, right_mass, class, distance, scaled_distance: distance / hbar });
    }
    Ok(rows)
}

/// Symmetric grid `[−L, L]` with the default spacing `6a/4095`, widened until the
/// unperturbed levels below `k` (raised by `energy_margin`) satisfy the domain condition.
pub fn auto_grid(params: &ModelParams, k: usize, energy_margin: f64) -> Result<Grid1D> {
    params.validate()?;
    let pot = PotentialSpec::unperturbed(params)?;
    let spacing = 2.0 * DEFAULT_HALF_WIDTH * params.a / (DEFAULT_POINTS - 1) as f64;
    let mut half = DEFAULT_HALF_WIDTH * params.a;
    for _ in 0..8 {
        let n = (((2.0 * half / spacing).ceil() as usize) + 1).next_power_of_two();
        let grid = Grid1D::new(-half, half, n)?;
        let ham = match build_hamiltonian(grid, &pot, params.hbar, params.mass) {
            Ok(h) => h,
            Err(Error::DomainTooSmall { suggested_min, suggested_max, .. }) => {
                half = suggested_max.max(-suggested_min);
                continue;
            }
            Err(e) => return Err(e),
        };
        let top = match solve_eigen(&ham, k.max(2)) {
            Ok(sd) => sd.energies[sd.len() - 1],
            Err(Error::DomainTooSmall { suggested_min, suggested_max, .. }) => {
                half = suggested_max.max(-suggested_min);
                continue;
            }
            Err(e) => return Err(e),
        };
        let needed = DOMAIN_FACTOR * (top + energy_margin);
        if pot.base(half) >= needed {
            return Ok(grid);
        }
        // the quartic tail grows like x⁴
        half = (half * (needed / pot.base(half)).powf(0.25) * 1.02).max(half * 1.02);
    }
    Err(Error::Domain("grid selection did not settle".into()))
}

/// Numeric versus asymptotic tunnelling gap at one ħ.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct SplittingRow {
    pub hbar: f64,
    pub numeric: f64,
    pub asymptotic: f64,
    pub ratio: f64,
    pub d_v: f64,
}

/// `E⁽¹⁾ − E⁽⁰⁾` of the unperturbed well against the closed-form asymptotic gap, per ħ.
pub fn delta_splitting_check(params: &ModelParams, hbar_list: &[f64]) -> Result<Vec<SplittingRow>> {
    hbar_list
        .iter()
        .map(|&hbar| {
            let p = params.with_hbar(hbar)?;
            let grid = auto_grid(&p, 2, 0.0)?;
            let sd = solve_eigen(&build_hamiltonian(grid, &PotentialSpec::unperturbed(&p)?, hbar, p.mass)?, 2)?;
            let numeric = sd.gap();
            if !(numeric > 0.0) {
                return Err(Error::DegenerateSpectrum(format!("non-positive gap {numeric} at hbar {hbar}")));
            }
            let s = splitting(&p)?;
            Ok(SplittingRow { hbar, numeric, asymptotic: s.delta_hbar, ratio: numeric / s.delta_hbar, d_v: s.d_v })
        })
        .collect()
}

/// Grid-doubling shifts of the lowest `k` levels.
#[derive(Debug, Clone, PartialEq)]
pub struct GridCertificate {
    pub coarse: Vec<f64>,
    pub fine: Vec<f64>,
    pub spacing_ratio: f64,
}

impl GridCertificate {
    pub fn shifts(&self) -> Vec<f64> {
        self.coarse.iter().zip(&self.fine).map(|(a, b)| (a - b).abs()).collect()
    }

    /// Largest shift among the first `levels` levels.
    pub fn max_shift(&self, levels: usize) -> f64 {
        self.shifts().into_iter().take(levels).fold(0.0, f64::max)
    }

    /// Second-order extrapolation `(r²E_fine − E_coarse)/(r² − 1)`.
    pub fn extrapolated(&self) -> Vec<f64> {
        let r2 = self.spacing_ratio * self.spacing_ratio;
        self.coarse.iter().zip(&self.fine).map(|(c, f)| (r2 * f - c) / (r2 - 1.0)).collect()
    }
}

/// Solves on `grid` and on its refinement with twice the points.
pub fn certify_grid<P: Potential + ?Sized>(grid: Grid1D, pot: &P, hbar: f64, mass: f64, k: usize) -> Result<GridCertificate> {
    let fine_grid = grid.refined(2)?;
    let coarse = solve_eigen(&build_hamiltonian(grid, pot, hbar, mass)?, k)?.energies;
    let fine = solve_eigen(&build_hamiltonian(fine_grid, pot, hbar, mass)?, k)?.energies;
    Ok(GridCertificate { coarse, fine, spacing_ratio: grid.spacing() / fine_grid.spacing() })
}
