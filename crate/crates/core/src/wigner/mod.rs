//! Grid wavefunctions, Wigner transforms and Weyl pairings, harmonic flow and
//! orbit averages.

mod grid;
mod observable;
mod oscillator;
mod transform;

pub use grid::{Grid1D, WaveFn};
pub use observable::{
    bump_profile, integrate_product, pair, pair_cross, FnPhase, PhaseRect, PhaseSpaceFn, PointMassMixture, TestObservable,
};
pub use oscillator::{
    classical_flow_ho, coherent_state, orbit_average, orbit_average_observable, pairing_matrices, prop1_residuals,
    standard_observables, CoherentFamily, HermiteBasis, OrbitAverage, OscillatorSetup, PairingMatrix, Prop1Row, ORBIT_NODES,
};
pub use transform::{
    cross_wigner, omega_matrix_element, wigner_transform, wigner_transform_with, CrossWignerField, PhaseGrid, WignerField,
    WignerOptions, WignerPlan,
};
