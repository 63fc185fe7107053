//! Configuration, dispatch and CSV emission for the experiments.

mod config;
mod runner;
mod table;

pub use config::{
    validate_config, CoherentSpec, ConfigError, ExperimentConfig, ExperimentKind, FleaLawSpec, LawSpec, MixtureComponent,
    ModelSpec, TimeSpec, Violation, WidthSpec, DELTA_ZERO_MARGIN, DOUBLEWELL_HBAR_FLOOR,
};
pub use runner::{config_digest, run, RunError};
pub use table::{
    fmt_f64, ResultTable, DOUBLEWELL_COLUMNS, EQUIDISTRIBUTION_COLUMNS, PROP1_COLUMNS, SPLITTING_COLUMNS, TWOSTATE_COLUMNS,
};
