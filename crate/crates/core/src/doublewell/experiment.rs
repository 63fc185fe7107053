use super::potential::{FleaSpec, PotentialSpec};
use super::spectrum::{
    auto_grid, build_hamiltonian, classify_ground, coefficients, diagonal_occupation_from, finite_occupation_from, localized_states,
    region_matrix, solve_eigen, ExpansionCoefficients, FleaClass, Region, SpectralDecomposition,
};
use crate::arbfun::DensityRV;
use crate::error::{Error, Result};
use crate::twostate::ModelParams;
use crate::wigner::{pair, wigner_transform_with, TestObservable, WaveFn, WignerOptions};
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rayon::prelude::*;

/// Flea widths: a fixed value or a law.
#[derive(Debug, Clone, PartialEq)]
pub enum WidthLaw {
    Fixed(f64),
    Law(DensityRV),
}

impl WidthLaw {
    fn max(&self) -> f64 {
        match self {
            WidthLaw::Fixed(w) => *w,
            WidthLaw::Law(d) => d.support().1,
        }
    }

    fn min(&self) -> f64 {
        match self {
            WidthLaw::Fixed(w) => *w,
            WidthLaw::Law(d) => d.support().0,
        }
    }
}

/// Law of a random flea: `sign · |amplitude|` with independent magnitude, center and width.
#[derive(Debug, Clone, PartialEq)]
pub struct FleaDistribution {
    magnitude: DensityRV,
    center: DensityRV,
    width: WidthLaw,
    positive_fraction: f64,
}

impl FleaDistribution {
    /// Rejects laws that could place a flea over a minimum `±a` or with vanishing amplitude.
    pub fn new(magnitude: DensityRV, center: DensityRV, width: WidthLaw, positive_fraction: f64, a: f64) -> Result<Self> {
        if !(0.0..=1.0).contains(&positive_fraction) {
            return Err(Error::InvalidArgument(format!("positive fraction {positive_fraction} must lie in [0, 1]")));
        }
        let (m_lo, _) = magnitude.support();
        if !(m_lo > 0.0) {
            return Err(Error::InvalidMeasure(format!("amplitude magnitudes must be bounded away from 0, law starts at {m_lo}")));
        }
        if !(width.min() > 0.0) {
            return Err(Error::InvalidArgument("flea widths must be positive".into()));
        }
        for (c_lo, c_hi) in center.positive_segments() {
            let (lo, hi) = (c_lo - width.max(), c_hi + width.max());
            for m in [a, -a] {
                if m > lo && m < hi {
                    return Err(Error::InvalidArgument(format!(
                        "flea supports can reach ({lo}, {hi}) which contains the minimum {m}"
                    )));
                }
            }
        }
        Ok(Self { magnitude, center, width, positive_fraction })
    }

    pub fn positive_fraction(&self) -> f64 {
        self.positive_fraction
    }

    /// Flea number `sample_id`, drawn from the ChaCha8 stream `sample_id` of `seed`.
    pub fn sample(&self, seed: u64, sample_id: u64, a: f64) -> Result<FleaSpec> {
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        rng.set_stream(sample_id);
        let positive = rng.gen::<f64>() < self.positive_fraction;
        let magnitude = self.magnitude.sample(&mut rng);
        let center = self.center.sample(&mut rng);
        let width = match &self.width {
            WidthLaw::Fixed(w) => *w,
            WidthLaw::Law(d) => d.sample(&mut rng),
        };
        FleaSpec::new(if positive { magnitude } else { -magnitude }, center, width, a)
    }
}

/// Options shared by every flea of an experiment.
#[derive(Debug, Clone, PartialEq)]
pub struct BornOptions {
    pub a: f64,
    pub lambda: f64,
    pub mass: f64,
    /// Retained eigenpairs.
    pub levels: usize,
    /// Finite averaging window as a multiple of `ħ/(E⁽¹⁾ − E⁽⁰⁾)` of each flea.
    pub finite_t_gap_multiple: f64,
    /// Whether to compute the phase-space right weight.
    pub wigner: bool,
    pub wigner_stride: usize,
    pub wigner_p_extent: f64,
}

impl Default for BornOptions {
    fn default() -> Self {
        Self {
            a: 1.0,
            lambda: 1.0,
            mass: 1.0,
            levels: 8,
            finite_t_gap_multiple: 1e5,
            wigner: true,
            wigner_stride: 8,
            wigner_p_extent: 1.7,
        }
    }
}

impl BornOptions {
    fn params(&self, hbar: f64) -> Result<ModelParams> {
        ModelParams::new(hbar, self.a, self.lambda, self.mass)
    }
}

/// Per-flea result, one CSV row.
#[derive(Debug, Clone, PartialEq)]
pub struct BornRow {
    pub hbar: f64,
    pub sample_id: u64,
    pub flea: FleaSpec,
    /// `None` for ambiguous fleas.
    pub class: Option<FleaClass>,
    pub ground_right_mass: f64,
    pub c0_sq: f64,
    pub c1_sq: f64,
    pub tail_sq: f64,
    pub occ_right_diag: f64,
    pub occ_right_finite_t: f64,
    pub finite_t: f64,
    pub wigner_right_weight: Option<f64>,
    pub gap: f64,
}

impl BornRow {
    pub fn class_label(&self) -> &'static str {
        self.class.map_or("ambiguous", |c| c.label())
    }
}

/// Ensemble statistics at one ħ over the classified fleas.
#[derive(Debug, Clone, PartialEq)]
pub struct BornSummary {
    pub hbar: f64,
    pub n_used: usize,
    pub n_ambiguous: usize,
    pub mean_right: f64,
    pub std_err: f64,
    pub gap_to_target: f64,
    pub mean_right_finite_t: f64,
    pub mean_wigner_right: Option<f64>,
    pub std_err_wigner: Option<f64>,
    pub mean_tail: f64,
    pub max_tail: f64,
    pub gap_histogram: GapHistogram,
}

#[derive(Debug, Clone, PartialEq)]
pub struct BornReport {
    pub alpha2: f64,
    pub rows: Vec<BornRow>,
    pub summaries: Vec<BornSummary>,
}

/// Unperturbed data shared by all fleas at one ħ.
pub struct WellContext {
    pub params: ModelParams,
    pub grid: crate::wigner::Grid1D,
    pub psi0: WaveFn,
    pub plus: WaveFn,
    pub minus: WaveFn,
    right_observable: TestObservable,
    left_observable: TestObservable,
}

/// Smooth indicator of the well at `(x0, 0)` used for the phase-space weights.
pub fn well_observable(label: &str, x0: f64, a: f64) -> Result<TestObservable> {
    TestObservable::plateau(label, x0, 0.0, 0.95 * a, 1.6, 0.6)
}

impl WellContext {
    /// Grid, localized states and `ψ₀ = √α²Ψ⁺ + √(1−α²)Ψ⁻`.
    pub fn new(opts: &BornOptions, hbar: f64, alpha2: f64, energy_margin: f64) -> Result<Self> {
        if !(alpha2 > 0.0 && alpha2 < 1.0) {
            return Err(Error::InvalidArgument(format!("alpha2 = {alpha2} must lie in (0, 1)")));
        }
        let params = opts.params(hbar)?;
        let grid = auto_grid(&params, opts.levels, energy_margin)?;
        let sd = solve_eigen(&build_hamiltonian(grid, &PotentialSpec::unperturbed(&params)?, hbar, params.mass)?, 2)?;
        let (plus, minus) = localized_states(&sd)?;
        let (alpha, beta) = (alpha2.sqrt(), (1.0 - alpha2).sqrt());
        let values = plus.values().iter().zip(minus.values()).map(|(p, m)| p * alpha + m * beta).collect();
        let psi0 = WaveFn::normalized(grid, values, hbar)?;
        Ok(Self {
            params,
            grid,
            psi0,
            plus,
            minus,
            right_observable: well_observable("right_well", opts.a, opts.a)?,
            left_observable: well_observable("left_well", -opts.a, opts.a)?,
        })
    }
}

/// Everything computed for one flea at one ħ.
pub struct FleaOutcome {
    pub sd: SpectralDecomposition,
    pub coefficients: ExpansionCoefficients,
    pub right_matrix: Vec<Vec<f64>>,
    pub class: Option<FleaClass>,
    pub ground_right_mass: f64,
}

impl FleaOutcome {
    pub fn diagonal_right(&self) -> f64 {
        diagonal_occupation_from(&self.coefficients, &self.right_matrix)
    }

    pub fn finite_right(&self, t_max: f64) -> f64 {
        finite_occupation_from(&self.coefficients, &self.right_matrix, self.sd.energies(), self.sd.hbar(), t_max)
    }
}

/// Eigenbasis, expansion and right-occupation matrix for one flea.
pub fn flea_outcome(ctx: &WellContext, flea: &FleaSpec, levels: usize) -> Result<FleaOutcome> {
    let pot = PotentialSpec::with_flea(&ctx.params, *flea)?;
    let sd = solve_eigen(&build_hamiltonian(ctx.grid, &pot, ctx.params.hbar, ctx.params.mass)?, levels)?;
    let (class, ground_right_mass) = match classify_ground(&sd) {
        Ok(c) => (Some(c.class), c.right_mass),
        Err(Error::AmbiguousFlea { right_mass }) => (None, right_mass),
        Err(e) => return Err(e),
    };
    let c = coefficients(&ctx.psi0, &sd)?;
    c.require_captured()?;
    let right_matrix = region_matrix(&sd, Region::Right);
    Ok(FleaOutcome { sd, coefficients: c, right_matrix, class, ground_right_mass })
}

/// `P_R/(P_R + P_L)` where `P` pairs the well indicators with the dephased Wigner function `Σ|c⁽ᵏ⁾|²W_kk`.
pub fn wigner_right_weight(ctx: &WellContext, outcome: &FleaOutcome, opts: &BornOptions) -> Result<f64> {
    let a = opts.a;
    let wopts = WignerOptions::new(opts.wigner_p_extent, 3).with_window(-2.0 * a, 2.0 * a);
    let (mut right, mut left) = (0.0, 0.0);
    for (k, state) in outcome.sd.states().iter().enumerate() {
        let weight = outcome.coefficients.weight(k);
        if weight < 1e-12 {
            continue;
        }
        let w = wigner_transform_with(&state.decimate(opts.wigner_stride)?, &wopts)?;
        right += weight * pair(&ctx.right_observable, &w)?;
        left += weight * pair(&ctx.left_observable, &w)?;
    }
    if !(right + left > 0.0) {
        return Err(Error::Numeric("well indicators see no phase-space weight".into()));
    }
    Ok(right / (right + left))
}

fn born_row(ctx: &WellContext, dist: &FleaDistribution, opts: &BornOptions, seed: u64, sample_id: u64) -> Result<BornRow> {
    let flea = dist.sample(seed, sample_id, opts.a)?;
    let out = flea_outcome(ctx, &flea, opts.levels)?;
    let gap = out.sd.gap();
    let finite_t = opts.finite_t_gap_multiple * ctx.params.hbar / gap;
    let wigner_right_weight = if opts.wigner { Some(wigner_right_weight(ctx, &out, opts)?) } else { None };
    Ok(BornRow {
        hbar: ctx.params.hbar,
        sample_id,
        flea,
        class: out.class,
        ground_right_mass: out.ground_right_mass,
        c0_sq: out.coefficients.weight(0),
        c1_sq: out.coefficients.weight(1),
        tail_sq: out.coefficients.tail_weight(2),
        occ_right_diag: out.diagonal_right(),
        occ_right_finite_t: out.finite_right(finite_t),
        finite_t,
        wigner_right_weight,
        gap,
    })
}

fn mean_and_se(values: &[f64]) -> (f64, f64) {
    let n = values.len() as f64;
    let mean = values.iter().sum::<f64>() / n;
    if values.len() < 2 {
        return (mean, f64::NAN);
    }
    let var = values.iter().map(|v| (v - mean).powi(2)).sum::<f64>() / (n - 1.0);
    (mean, (var / n).sqrt())
}

/// Samples `n_samples` fleas per ħ, evolves `√α²Ψ⁺ + √(1−α²)Ψ⁻` in each perturbed
/// well, and averages the long-time right occupations over the classified fleas.
pub fn born_experiment(
    dist: &FleaDistribution,
    alpha2: f64,
    hbar_list: &[f64],
    n_samples: usize,
    seed: u64,
    opts: &BornOptions,
) -> Result<BornReport> {
    if n_samples == 0 {
        return Err(Error::InvalidArgument("n_samples must be at least 1".into()));
    }
    let margin = dist.magnitude.support().1;
    let mut rows = Vec::with_capacity(n_samples * hbar_list.len());
    let mut summaries = Vec::with_capacity(hbar_list.len());
    for &hbar in hbar_list {
        let ctx = WellContext::new(opts, hbar, alpha2, margin)?;
        let batch: Vec<BornRow> =
            (0..n_samples as u64).into_par_iter().map(|id| born_row(&ctx, dist, opts, seed, id)).collect::<Result<_>>()?;
        let used: Vec<&BornRow> = batch.iter().filter(|r| r.class.is_some()).collect();
        if used.is_empty() {
            return Err(Error::ExperimentFailed(format!("every flea at hbar = {hbar} was ambiguous")));
        }
        let diag: Vec<f64> = used.iter().map(|r| r.occ_right_diag).collect();
        let (mean_right, std_err) = mean_and_se(&diag);
        let finite: Vec<f64> = used.iter().map(|r| r.occ_right_finite_t).collect();
        let tails: Vec<f64> = used.iter().map(|r| r.tail_sq).collect();
        let (mean_wigner_right, std_err_wigner) = if opts.wigner {
            let w: Vec<f64> = used.iter().filter_map(|r| r.wigner_right_weight).collect();
            let (m, s) = mean_and_se(&w);
            (Some(m), Some(s))
        } else {
            (None, None)
        };
        let gaps: Vec<f64> = used.iter().map(|r| r.gap).collect();
        summaries.push(BornSummary {
            hbar,
            n_used: used.len(),
            n_ambiguous: batch.len() - used.len(),
            mean_right,
            std_err,
            gap_to_target: (mean_right - alpha2).abs(),
            mean_right_finite_t: finite.iter().sum::<f64>() / finite.len() as f64,
            mean_wigner_right,
            std_err_wigner,
            mean_tail: tails.iter().sum::<f64>() / tails.len() as f64,
            max_tail: tails.iter().fold(0.0, |m: f64, t| m.max(*t)),
            gap_histogram: GapHistogram::new(&gaps, 20)?,
        });
        rows.extend(batch);
    }
    Ok(BornReport { alpha2, rows, summaries })
}

/// Ensemble-averaged finite-window versus dephased right occupation at one averaging time.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct FiniteTimeRow {
    pub t: f64,
    pub mean_finite: f64,
    pub mean_diagonal: f64,
    pub difference: f64,
}

/// `|E_flea[occupation averaged over [0, T]] − E_flea[dephased occupation]|` for each `T`.
pub fn ensemble_finite_time_sweep(
    dist: &FleaDistribution,
    alpha2: f64,
    hbar: f64,
    n_samples: usize,
    seed: u64,
    t_list: &[f64],
    opts: &BornOptions,
) -> Result<Vec<FiniteTimeRow>> {
    if n_samples == 0 || t_list.iter().any(|t| !(t.is_finite() && *t > 0.0)) {
        return Err(Error::InvalidArgument("need samples and positive averaging times".into()));
    }
    let ctx = WellContext::new(opts, hbar, alpha2, dist.magnitude.support().1)?;
    let per_flea: Vec<(f64, Vec<f64>)> = (0..n_samples as u64)
        .into_par_iter()
        .map(|id| {
            let flea = dist.sample(seed, id, opts.a)?;
            let out = flea_outcome(&ctx, &flea, opts.levels)?;
            Ok((out.diagonal_right(), t_list.iter().map(|&t| out.finite_right(t)).collect()))
        })
        .collect::<Result<_>>()?;
    let n = per_flea.len() as f64;
    let mean_diagonal = per_flea.iter().map(|p| p.0).sum::<f64>() / n;
    Ok(t_list
        .iter()
        .enumerate()
        .map(|(i, &t)| {
            let mean_finite = per_flea.iter().map(|p| p.1[i]).sum::<f64>() / n;
            FiniteTimeRow { t, mean_finite, mean_diagonal, difference: (mean_finite - mean_diagonal).abs() }
        })
        .collect())
}

/// Histogram of ensemble energy gaps with simple continuity diagnostics.
#[derive(Debug, Clone, PartialEq)]
pub struct GapHistogram {
    pub lo: f64,
    pub hi: f64,
    pub counts: Vec<usize>,
    /// Fraction of samples sharing their gap with another sample (relative tolerance 1e-12).
    pub tied_fraction: f64,
}

impl GapHistogram {
    pub fn new(gaps: &[f64], bins: usize) -> Result<Self> {
        if gaps.is_empty() || bins == 0 {
            return Err(Error::InvalidArgument("histogram needs samples and bins".into()));
        }
        let lo = gaps.iter().cloned().fold(f64::INFINITY, f64::min);
        let hi = gaps.iter().cloned().fold(f64::NEG_INFINITY, f64::max);
        let mut counts = vec![0; bins];
        let width = (hi - lo) / bins as f64;
        for g in gaps {
            let b = if width > 0.0 { (((g - lo) / width) as usize).min(bins - 1) } else { 0 };
            counts[b] += 1;
        }
        let mut sorted = gaps.to_vec();
        sorted.sort_by(f64::total_cmp);
        let mut tied = vec![false; sorted.len()];
        for i in 1..sorted.len() {
            if (sorted[i] - sorted[i - 1]).abs() <= 1e-12 * sorted[i].abs() {
                tied[i] = true;
                tied[i - 1] = true;
            }
        }
        let tied_fraction = tied.iter().filter(|t| **t).count() as f64 / gaps.len() as f64;
        Ok(Self { lo, hi, counts, tied_fraction })
    }

    /// Largest single-bin share of the samples.
    pub fn max_bin_fraction(&self) -> f64 {
        let total: usize = self.counts.iter().sum();
        *self.counts.iter().max().unwrap_or(&0) as f64 / total as f64
    }

    /// No atoms among the gaps and no bin holding half of them.
    pub fn looks_absolutely_continuous(&self) -> bool {
        self.tied_fraction == 0.0 && self.max_bin_fraction() < 0.5
    }
}
