use crate::arbfun::{DensityRV, DEFAULT_RESOLUTION};
use crate::doublewell::{FleaDistribution, WidthLaw};
use crate::twostate::check_flea_law;
use serde::{Deserialize, Serialize};
use std::fmt;

/// Smallest ħ the discretized double well is run at.
pub const DOUBLEWELL_HBAR_FLOOR: f64 = 0.1;
/// Required distance of the δ law from zero.
pub const DELTA_ZERO_MARGIN: f64 = 1e-3;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum ExperimentKind {
    TwostateBorn,
    DoublewellBorn,
    Prop1Oscillator,
    Equidistribution,
    SplittingCheck,
}

impl ExperimentKind {
    pub fn name(&self) -> &'static str {
        match self {
            ExperimentKind::TwostateBorn => "twostate_born",
            ExperimentKind::DoublewellBorn => "doublewell_born",
            ExperimentKind::Prop1Oscillator => "prop1_oscillator",
            ExperimentKind::Equidistribution => "equidistribution",
            ExperimentKind::SplittingCheck => "splitting_check",
        }
    }
}

impl fmt::Display for ExperimentKind {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.name())
    }
}

/// A scalar law with a density.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case", deny_unknown_fields)]
pub enum LawSpec {
    Uniform { lo: f64, hi: f64 },
    Triangular { lo: f64, peak: f64, hi: f64 },
    /// Unnormalized density samples on a uniform grid of `[lo, hi]`.
    Samples { lo: f64, hi: f64, values: Vec<f64> },
    Mixture { components: Vec<MixtureComponent> },
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct MixtureComponent {
    pub weight: f64,
    pub law: LawSpec,
}

impl LawSpec {
    pub fn build(&self) -> crate::Result<DensityRV> {
        match self {
            LawSpec::Uniform { lo, hi } => DensityRV::uniform(*lo, *hi),
            LawSpec::Triangular { lo, peak, hi } => {
                if !(lo <= peak && peak <= hi) {
                    return Err(crate::Error::InvalidInput(format!("peak {peak} outside [{lo}, {hi}]")));
                }
                let (lo, peak, hi) = (*lo, *peak, *hi);
                DensityRV::from_fn(lo, hi, DEFAULT_RESOLUTION, move |x| {
                    if x <= peak {
                        if peak > lo { (x - lo) / (peak - lo) } else { 1.0 }
                    } else if hi > peak {
                        (hi - x) / (hi - peak)
                    } else {
                        1.0
                    }
                })
            }
            LawSpec::Samples { lo, hi, values } => DensityRV::from_samples(*lo, *hi, values.clone()),
            LawSpec::Mixture { components } => {
                let built = components.iter().map(|c| c.law.build()).collect::<crate::Result<Vec<_>>>()?;
                let pairs: Vec<(f64, &DensityRV)> = components.iter().map(|c| c.weight).zip(built.iter()).collect();
                DensityRV::mixture(&pairs, DEFAULT_RESOLUTION)
            }
        }
    }
}

/// Flea width: a constant or a law.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(untagged)]
pub enum WidthSpec {
    Fixed(f64),
    Law(LawSpec),
}

/// Law of bump fleas: magnitude, center and width laws and the share of positive amplitudes.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct FleaLawSpec {
    pub magnitude: LawSpec,
    pub center: LawSpec,
    pub width: WidthSpec,
    pub positive_fraction: f64,
}

impl FleaLawSpec {
    pub fn build(&self, a: f64) -> crate::Result<FleaDistribution> {
        let width = match &self.width {
            WidthSpec::Fixed(w) => WidthLaw::Fixed(*w),
            WidthSpec::Law(l) => WidthLaw::Law(l.build()?),
        };
        FleaDistribution::new(self.magnitude.build()?, self.center.build()?, width, self.positive_fraction, a)
    }

    /// Mixed-sign fleas over the left well with skew toward positive amplitudes.
    pub fn default_asymmetric() -> Self {
        Self {
            magnitude: LawSpec::Uniform { lo: 0.06, hi: 0.12 },
            center: LawSpec::Uniform { lo: -0.9, hi: -0.75 },
            width: WidthSpec::Law(LawSpec::Uniform { lo: 0.08, hi: 0.1 }),
            positive_fraction: 0.55,
        }
    }
}

/// How the long-time limit of the two-state model is taken.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "mode", rename_all = "snake_case", deny_unknown_fields)]
pub enum TimeSpec {
    Diagonal,
    FiniteT { t: Vec<f64> },
}

#[derive(Debug, Clone, PartialEq, Default, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ModelSpec {
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub hbar: Option<Vec<f64>>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub a: Option<f64>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub lambda: Option<f64>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub mass: Option<f64>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub alpha2: Option<f64>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub time: Option<TimeSpec>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub levels: Option<usize>,
}

impl ModelSpec {
    fn is_empty(&self) -> bool {
        self == &ModelSpec::default()
    }
}

/// Coherent initial state of the oscillator experiment.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct CoherentSpec {
    pub x0: f64,
    pub p0: f64,
    pub m_omega: f64,
}

/// One experiment invocation. After [`validate_config`] every field the
/// experiment uses is present and every other field is absent.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ExperimentConfig {
    pub experiment: ExperimentKind,
    #[serde(default, skip_serializing_if = "ModelSpec::is_empty")]
    pub model: ModelSpec,
    /// Law of δ (two-state) or of the frequency ω (equidistribution, oscillator).
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub distribution: Option<LawSpec>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub flea_distribution: Option<FleaLawSpec>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub coherent: Option<CoherentSpec>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub t_list: Option<Vec<f64>>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub n_samples: Option<usize>,
    #[serde(default)]
    pub seed: u64,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub output: Option<String>,
}

/// One semantic problem, located by a dotted field path.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct Violation {
    pub path: String,
    pub message: String,
}

impl fmt::Display for Violation {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "{}: {}", self.path, self.message)
    }
}

/// Why a config was rejected.
#[derive(Debug, Clone, PartialEq, thiserror::Error)]
pub enum ConfigError {
    #[error("syntax error at line {line}, column {column}: {message}")]
    Syntax { line: usize, column: usize, message: String },
    #[error("{} violation(s):\n{}", .0.len(), .0.iter().map(|v| format!("  {v}")).collect::<Vec<_>>().join("\n"))]
    Invalid(Vec<Violation>),
}

/// Parses, fills defaults and checks every precondition, reporting all violations.
pub fn validate_config(raw: &str) -> Result<ExperimentConfig, ConfigError> {
    let mut cfg: ExperimentConfig = serde_json::from_str(raw)
        .map_err(|e| {
            let text = e.to_string();
            // serde_json appends the position, which is reported separately
            let message = text.rsplit_once(" at line ").map_or(text.as_str(), |(m, _)| m).to_string();
            ConfigError::Syntax { line: e.line(), column: e.column(), message }
        })?;
    let mut v = Vec::new();
    check_unused(&cfg, &mut v);
    resolve_defaults(&mut cfg);
    check_values(&cfg, &mut v);
    if v.is_empty() {
        Ok(cfg)
    } else {
        Err(ConfigError::Invalid(v))
    }
}

struct Uses {
    model: bool,
    alpha2: bool,
    time: bool,
    levels: bool,
    distribution: bool,
    flea: bool,
    coherent: bool,
    t_list: bool,
    n_samples: bool,
}

fn uses(kind: ExperimentKind) -> Uses {
    let none = Uses {
        model: false,
        alpha2: false,
        time: false,
        levels: false,
        distribution: false,
        flea: false,
        coherent: false,
        t_list: false,
        n_samples: false,
    };
    match kind {
        ExperimentKind::TwostateBorn => Uses { model: true, alpha2: true, time: true, distribution: true, ..none },
        ExperimentKind::DoublewellBorn => Uses { model: true, alpha2: true, levels: true, flea: true, n_samples: true, ..none },
        ExperimentKind::Prop1Oscillator => Uses { model: true, distribution: true, coherent: true, t_list: true, ..none },
        ExperimentKind::Equidistribution => Uses { distribution: true, t_list: true, ..none },
        ExperimentKind::SplittingCheck => Uses { model: true, ..none },
    }
}

fn check_unused(cfg: &ExperimentConfig, v: &mut Vec<Violation>) {
    let u = uses(cfg.experiment);
    let kind = cfg.experiment;
    let mut unused = |present: bool, used: bool, path: &str| {
        if present && !used {
            v.push(Violation { path: path.into(), message: format!("not used by {kind}") });
        }
    };
    let m = &cfg.model;
    unused(!m.is_empty(), u.model, "model");
    if u.model {
        // the oscillator has its own frequency law and ignores the well geometry
        let geometry = !matches!(kind, ExperimentKind::Prop1Oscillator);
        unused(m.a.is_some(), geometry, "model.a");
        unused(m.lambda.is_some(), geometry, "model.lambda");
        unused(m.mass.is_some(), geometry, "model.mass");
        unused(m.alpha2.is_some(), u.alpha2, "model.alpha2");
        unused(m.time.is_some(), u.time, "model.time");
        unused(m.levels.is_some(), u.levels, "model.levels");
    }
    unused(cfg.distribution.is_some(), u.distribution, "distribution");
    unused(cfg.flea_distribution.is_some(), u.flea, "flea_distribution");
    unused(cfg.coherent.is_some(), u.coherent, "coherent");
    unused(cfg.t_list.is_some(), u.t_list, "t_list");
    unused(cfg.n_samples.is_some(), u.n_samples, "n_samples");
}

fn resolve_defaults(cfg: &mut ExperimentConfig) {
    let kind = cfg.experiment;
    let u = uses(kind);
    if !u.model {
        cfg.model = ModelSpec::default();
    } else {
        let m = &mut cfg.model;
        let hbar = match kind {
            ExperimentKind::TwostateBorn => vec![0.3, 0.2, 0.15, 0.1],
            ExperimentKind::DoublewellBorn => vec![0.3, 0.2, 0.15],
            ExperimentKind::Prop1Oscillator => vec![0.05],
            _ => vec![0.5, 0.4, 0.3, 0.25],
        };
        m.hbar.get_or_insert(hbar);
        if kind != ExperimentKind::Prop1Oscillator {
            m.a.get_or_insert(1.0);
            m.lambda.get_or_insert(1.0);
            m.mass.get_or_insert(1.0);
        }
        if u.alpha2 {
            m.alpha2.get_or_insert(0.7);
        }
        if u.time {
            m.time.get_or_insert(TimeSpec::Diagonal);
        }
        if u.levels {
            m.levels.get_or_insert(8);
        }
    }
    if u.distribution && cfg.distribution.is_none() {
        cfg.distribution = Some(match kind {
            ExperimentKind::TwostateBorn => LawSpec::Uniform { lo: 0.5, hi: 1.5 },
            _ => LawSpec::Uniform { lo: 1.0, hi: 2.0 },
        });
    }
    if u.flea && cfg.flea_distribution.is_none() {
        cfg.flea_distribution = Some(FleaLawSpec::default_asymmetric());
    }
    if u.coherent && cfg.coherent.is_none() {
        cfg.coherent = Some(CoherentSpec { x0: 1.0, p0: 0.0, m_omega: 1.0 });
    }
    if u.t_list && cfg.t_list.is_none() {
        cfg.t_list = Some(match kind {
            ExperimentKind::Equidistribution => vec![10.0, 100.0, 1000.0, 10000.0],
            _ => vec![10.0, 100.0, 1000.0],
        });
    }
    if u.n_samples && cfg.n_samples.is_none() {
        cfg.n_samples = Some(200);
    }
}

fn positive(v: &mut Vec<Violation>, path: &str, x: f64, what: &str) {
    if !(x.is_finite() && x > 0.0) {
        v.push(Violation { path: path.into(), message: format!("{what} must be positive, got {x}") });
    }
}

fn positive_list(v: &mut Vec<Violation>, path: &str, xs: &[f64], what: &str) {
    if xs.is_empty() {
        v.push(Violation { path: path.into(), message: "list must not be empty".into() });
    }
    for (i, &x) in xs.iter().enumerate() {
        positive(v, &format!("{path}[{i}]"), x, what);
    }
}

fn check_law(v: &mut Vec<Violation>, path: &str, law: &LawSpec) -> Option<DensityRV> {
    if let LawSpec::Mixture { components } = law {
        if components.is_empty() {
            v.push(Violation { path: format!("{path}.components"), message: "mixture needs components".into() });
            return None;
        }
        let mut ok = true;
        for (i, c) in components.iter().enumerate() {
            if !(c.weight.is_finite() && c.weight >= 0.0) {
                v.push(Violation { path: format!("{path}.components[{i}].weight"), message: "weight must be nonnegative".into() });
                ok = false;
            }
            ok &= check_law(v, &format!("{path}.components[{i}].law"), &c.law).is_some();
        }
        if !ok {
            return None;
        }
    }
    match law.build() {
        Ok(d) => Some(d),
        Err(e) => {
            v.push(Violation { path: path.into(), message: e.to_string() });
            None
        }
    }
}

fn check_values(cfg: &ExperimentConfig, v: &mut Vec<Violation>) {
    let kind = cfg.experiment;
    let m = &cfg.model;
    if let Some(h) = &m.hbar {
        positive_list(v, "model.hbar", h, "hbar");
        if kind == ExperimentKind::DoublewellBorn {
            for (i, &x) in h.iter().enumerate() {
                if x > 0.0 && x < DOUBLEWELL_HBAR_FLOOR {
                    v.push(Violation {
                        path: format!("model.hbar[{i}]"),
                        message: format!("{x} is below the double-well sweep floor {DOUBLEWELL_HBAR_FLOOR}"),
                    });
                }
            }
        }
    }
    for (path, x) in [("model.a", m.a), ("model.lambda", m.lambda), ("model.mass", m.mass)] {
        if let Some(x) = x {
            positive(v, path, x, path.trim_start_matches("model."));
        }
    }
    if let Some(a2) = m.alpha2 {
        if !(a2 > 0.0 && a2 < 1.0) {
            v.push(Violation { path: "model.alpha2".into(), message: format!("must lie in (0, 1), got {a2}") });
        }
    }
    if let Some(TimeSpec::FiniteT { t }) = &m.time {
        positive_list(v, "model.time.t", t, "averaging time");
    }
    if let Some(k) = m.levels {
        if k < 2 {
            v.push(Violation { path: "model.levels".into(), message: format!("need at least 2 levels, got {k}") });
        }
    }
    if let Some(law) = &cfg.distribution {
        if let Some(d) = check_law(v, "distribution", law) {
            match kind {
                ExperimentKind::TwostateBorn => {
                    if let Err(e) = check_flea_law(&d, DELTA_ZERO_MARGIN) {
                        v.push(Violation { path: "distribution".into(), message: e.to_string() });
                    }
                }
                ExperimentKind::Prop1Oscillator => {
                    if !(d.support().0 > 0.0) {
                        v.push(Violation {
                            path: "distribution".into(),
                            message: "oscillator frequencies must be positive".into(),
                        });
                    }
                }
                _ => {}
            }
        }
    }
    if let Some(f) = &cfg.flea_distribution {
        let mut ok = check_law(v, "flea_distribution.magnitude", &f.magnitude).is_some();
        ok &= check_law(v, "flea_distribution.center", &f.center).is_some();
        match &f.width {
            WidthSpec::Fixed(w) => positive(v, "flea_distribution.width", *w, "flea width"),
            WidthSpec::Law(l) => ok &= check_law(v, "flea_distribution.width", l).is_some(),
        }
        if !(0.0..=1.0).contains(&f.positive_fraction) {
            v.push(Violation {
                path: "flea_distribution.positive_fraction".into(),
                message: format!("must lie in [0, 1], got {}", f.positive_fraction),
            });
            ok = false;
        }
        if ok {
            if let Err(e) = f.build(m.a.unwrap_or(1.0)) {
                v.push(Violation { path: "flea_distribution".into(), message: e.to_string() });
            }
        }
    }
    if let Some(c) = &cfg.coherent {
        positive(v, "coherent.m_omega", c.m_omega, "m_omega");
        for (path, x) in [("coherent.x0", c.x0), ("coherent.p0", c.p0)] {
            if !x.is_finite() {
                v.push(Violation { path: path.into(), message: "must be finite".into() });
            }
        }
    }
    if let Some(t) = &cfg.t_list {
        positive_list(v, "t_list", t, "time");
    }
    if let Some(n) = cfg.n_samples {
        if n == 0 {
            v.push(Violation { path: "n_samples".into(), message: "need at least one sample".into() });
        }
    }
}
