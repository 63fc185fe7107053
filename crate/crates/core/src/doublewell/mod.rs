//! Flea-perturbed double well: finite-difference eigenproblem, localized
//! states, flea classification, eigenexpansion dynamics and the ensemble
//! Born experiment.

mod eigen;
mod experiment;
mod potential;
mod spectrum;

pub use eigen::{lowest_eigenpairs, SymTridiagonal, TridiagonalEigenpair};
pub use experiment::{
    born_experiment, ensemble_finite_time_sweep, flea_outcome, well_observable, wigner_right_weight, BornOptions, BornReport, BornRow,
    BornSummary, FiniteTimeRow, FleaDistribution, FleaOutcome, GapHistogram, WellContext, WidthLaw,
};
pub use potential::{FleaSpec, HarmonicPotential, Potential, PotentialSpec};
pub use spectrum::{
    auto_grid, build_hamiltonian, certify_grid, classify_flea, coefficients, delta_splitting_check, diagonal_ensemble_occupation,
    evolve_dw, finite_time_occupation, flea_diagnostics, localized_states, region_matrix, region_weights, sign_free_distance,
    solve_eigen, solve_eigen_seeded, ExpansionCoefficients, FleaClass, FleaClassification, FleaDiagnostic, GridCertificate,
    Hamiltonian, Region, SpectralDecomposition, SplittingRow, AMBIGUOUS_BAND, BOUNDARY_DECAY, CAPTURE_MIN, DOMAIN_FACTOR, SIGN_TOL,
};
