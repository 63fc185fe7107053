use super::config::{ExperimentConfig, ExperimentKind, TimeSpec};
use super::table::*;
use crate::arbfun::{char_fn_magnitude, pushforward_mod, tv_distance};
use crate::doublewell::{born_experiment, delta_splitting_check, BornOptions};
use crate::error::Error;
use crate::twostate::{born_comparison, ModelParams, QState2, TimeMode};
use crate::wigner::{prop1_residuals, standard_observables, CoherentFamily};
use num_complex::Complex64;
use sha2::{Digest, Sha256};
use std::f64::consts::PI;

/// A module failure tagged with the experiment that raised it.
#[derive(Debug, Clone, PartialEq, thiserror::Error)]
#[error("{experiment} failed: {source}")]
pub struct RunError {
    pub experiment: ExperimentKind,
    #[source]
    pub source: Error,
}

/// Hex SHA-256 of the canonical JSON of `cfg` with the output path removed.
pub fn config_digest(cfg: &ExperimentConfig) -> String {
    let mut canonical = cfg.clone();
    canonical.output = None;
    let text = serde_json::to_string(&canonical).expect("configs serialize");
    Sha256::digest(text.as_bytes()).iter().map(|b| format!("{b:02x}")).collect()
}

/// Runs a validated config; identical configs give identical tables.
pub fn run(cfg: &ExperimentConfig) -> Result<ResultTable, RunError> {
    let mut table = dispatch(cfg).map_err(|source| RunError { experiment: cfg.experiment, source })?;
    table.add_provenance("bornflea", env!("CARGO_PKG_VERSION"));
    table.add_provenance("experiment", cfg.experiment.name());
    table.add_provenance("config_sha256", config_digest(cfg));
    table.add_provenance("seed", cfg.seed.to_string());
    Ok(table)
}

fn missing(what: &str) -> Error {
    Error::InvalidInput(format!("config lacks {what}; run it through validate_config first"))
}

fn well_params(cfg: &ExperimentConfig, hbar: f64) -> crate::Result<ModelParams> {
    let m = &cfg.model;
    ModelParams::new(hbar, m.a.ok_or_else(|| missing("model.a"))?, m.lambda.ok_or_else(|| missing("model.lambda"))?, m.mass.ok_or_else(|| missing("model.mass"))?)
}

fn dispatch(cfg: &ExperimentConfig) -> crate::Result<ResultTable> {
    let hbars = || cfg.model.hbar.clone().ok_or_else(|| missing("model.hbar"));
    match cfg.experiment {
        ExperimentKind::TwostateBorn => {
            let alpha2 = cfg.model.alpha2.ok_or_else(|| missing("model.alpha2"))?;
            let mu = cfg.distribution.as_ref().ok_or_else(|| missing("distribution"))?.build()?;
            let state = QState2::new(Complex64::new((1.0 - alpha2).sqrt(), 0.0), Complex64::new(alpha2.sqrt(), 0.0))?;
            let modes: Vec<TimeMode> = match cfg.model.time.as_ref().ok_or_else(|| missing("model.time"))? {
                TimeSpec::Diagonal => vec![TimeMode::Diagonal],
                TimeSpec::FiniteT { t } => t.iter().map(|&t| TimeMode::FiniteT(t)).collect(),
            };
            let mut table = ResultTable::new(TWOSTATE_COLUMNS);
            for hbar in hbars()? {
                let params = well_params(cfg, hbar)?;
                for mode in &modes {
                    for c in born_comparison(&state, &mu, &params, *mode)? {
                        table.push(vec![
                            fmt_f64(hbar),
                            mode.label(),
                            c.label,
                            fmt_f64(c.mixture_value.re),
                            fmt_f64(c.mixture_value.im),
                            fmt_f64(c.born_value.re),
                            fmt_f64(c.abs_gap),
                        ]);
                    }
                }
            }
            Ok(table)
        }
        ExperimentKind::DoublewellBorn => {
            let m = &cfg.model;
            let opts = BornOptions {
                a: m.a.ok_or_else(|| missing("model.a"))?,
                lambda: m.lambda.ok_or_else(|| missing("model.lambda"))?,
                mass: m.mass.ok_or_else(|| missing("model.mass"))?,
                levels: m.levels.ok_or_else(|| missing("model.levels"))?,
                ..BornOptions::default()
            };
            let dist = cfg.flea_distribution.as_ref().ok_or_else(|| missing("flea_distribution"))?.build(opts.a)?;
            let alpha2 = m.alpha2.ok_or_else(|| missing("model.alpha2"))?;
            let n = cfg.n_samples.ok_or_else(|| missing("n_samples"))?;
            let report = born_experiment(&dist, alpha2, &hbars()?, n, cfg.seed, &opts)?;
            let mut table = ResultTable::new(DOUBLEWELL_COLUMNS);
            for r in &report.rows {
                table.push(vec![
                    fmt_f64(r.hbar),
                    r.sample_id.to_string(),
                    fmt_f64(r.flea.amplitude),
                    fmt_f64(r.flea.center),
                    fmt_f64(r.flea.width),
                    r.class_label().to_string(),
                    fmt_f64(r.c0_sq),
                    fmt_f64(r.c1_sq),
                    fmt_f64(r.tail_sq),
                    fmt_f64(r.occ_right_diag),
                    fmt_f64(r.occ_right_finite_t),
                    r.wigner_right_weight.map(fmt_f64).unwrap_or_default(),
                ]);
            }
            Ok(table)
        }
        ExperimentKind::Prop1Oscillator => {
            let c = cfg.coherent.ok_or_else(|| missing("coherent"))?;
            let family = CoherentFamily { x0: c.x0, p0: c.p0, m_omega: c.m_omega };
            let mu = cfg.distribution.as_ref().ok_or_else(|| missing("distribution"))?.build()?;
            let t_list = cfg.t_list.as_ref().ok_or_else(|| missing("t_list"))?;
            let rows = prop1_residuals(&family, &mu, &hbars()?, t_list, &standard_observables())?;
            let mut table = ResultTable::new(PROP1_COLUMNS);
            for r in rows {
                table.push(vec![
                    fmt_f64(r.hbar),
                    fmt_f64(r.t),
                    r.observable.clone(),
                    fmt_f64(r.paired_mean),
                    fmt_f64(r.dephased_value),
                    fmt_f64(r.limit_value),
                    fmt_f64(r.residual),
                ]);
            }
            Ok(table)
        }
        ExperimentKind::Equidistribution => {
            let rv = cfg.distribution.as_ref().ok_or_else(|| missing("distribution"))?.build()?;
            let mut table = ResultTable::new(EQUIDISTRIBUTION_COLUMNS);
            for &t in cfg.t_list.as_ref().ok_or_else(|| missing("t_list"))? {
                let tv = tv_distance(&pushforward_mod(&rv, t, 2.0 * PI)?);
                table.push(vec![fmt_f64(t), fmt_f64(tv), fmt_f64(char_fn_magnitude(&rv, t))]);
            }
            Ok(table)
        }
        ExperimentKind::SplittingCheck => {
            let hbar_list = hbars()?;
            let first = *hbar_list.first().ok_or_else(|| missing("model.hbar entries"))?;
            let mut table = ResultTable::new(SPLITTING_COLUMNS);
            for r in delta_splitting_check(&well_params(cfg, first)?, &hbar_list)? {
                table.push(vec![fmt_f64(r.hbar), fmt_f64(r.numeric), fmt_f64(r.asymptotic), fmt_f64(r.ratio), fmt_f64(r.d_v)]);
            }
            Ok(table)
        }
    }
}
