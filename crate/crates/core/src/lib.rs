//! Consistent-amplitude laboratory for a spinless particle on a 1D lattice.
//!
//! Setups are composed with the physical AND / OR connectives
//! ([`setup`]), mapped to complex amplitudes by the product and sum rules
//! ([`amplitude`]), and turned into predictions through the weighted inner
//! product ([`hilbert`]) and the ensemble form of the Born rule ([`born`]).

pub mod amplitude;
pub mod born;
pub mod checks;
pub mod format;
pub mod hilbert;
pub mod lattice;
pub mod setup;
pub mod state;
pub mod statespec;

pub use amplitude::{
    amplitude_chain, amplitude_expr, amplitude_pathsum, build_superposition, evolve, schrodinger_residual, Amplitude,
    AmplitudeError,
};
pub use born::{
    born, born_argmax, convergence_sweep, ensemble_distance_exact, ensemble_distance_oracle, null_detection_check,
    refine_cell, BornError, FractionFilterSpec, NullCheckMode, ProbabilityReport,
};
pub use hilbert::{apply_filter, decompose, inner_product, Projector, WeightedInnerProduct};
pub use lattice::{build_hamiltonian, build_kernel, Boundary, Hamiltonian, LatticeConfig, StepKernel};
pub use setup::{and_compose, canonicalize, or_compose, parse, CanonicalSetup, Filter, SetupExpr, SpacetimePoint};
pub use state::WaveState;
pub use statespec::{StateSpec, StateSpecError};
