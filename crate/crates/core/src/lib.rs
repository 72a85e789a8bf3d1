//! Decoherence-free-subspace simulator for coupled oscillator/spin networks.
//!
//! The crate models small networks of truncated bosonic modes and fermionic
//! (two-level) modes, builds number-conserving quadratic Hamiltonians over
//! them, diagonalizes the one-particle coupling into quasiparticle modes, and
//! propagates states either exactly (dense eigendecomposition) or through the
//! quasiparticle phase engine. On top of that sit supersymmetric pairings of
//! boson/fermion sectors, protected-subspace state constructors, dephasing
//! models, stochastic phase-kick ensembles, and the density-matrix metrics
//! (coherence, relative phase) used to quantify protection.
//!
//! All generators use the ħ = 2 convention: the conventional (ħ/2) prefactor
//! of each quadratic form is exactly 1, and the propagator is e^{−iHt/2}.

// Link the system BLAS/LAPACK: the `-src` crate only emits its link flags
// when it is referenced.
use netlib_src as _;

pub mod error;
pub mod evolution;
pub mod fock;
pub mod metrics;
pub mod ops;
pub mod hamiltonians;
pub mod quasiparticle;
pub mod runner;
pub mod scenario;
pub mod susy;
pub mod verify;

pub use error::{Error, Result};
pub use evolution::{
    dense_guard, embed_state, evolve_observable, phase_kick_ensemble, predicted_kick_coherence,
    propagate_dense, propagate_quasi, truncation_flux, DensePropagator, Engine, EnsembleResult,
    KickDistribution, Observable, PhaseKickModel, SeriesPoint, TimeGrid, DENSE_GUARD_DEFAULT,
    DENSE_GUARD_ENV, TAINT_THRESHOLD,
};
pub use metrics::{
    coherence, density_from_state, partial_trace, partial_trace_state, relative_phase,
    relative_phase_from_density, CoherencePair, DensityMatrix,
};
pub use runner::{
    build_version, results_csv, results_json, run_metadata, run_scenario, write_outputs,
    OutputFormat, ResultRecord, RunMetadata, RunOutput, WrittenFiles, RESULTS_HEADER,
};
pub use scenario::{emit_scenario, load_scenario, EngineSpec, Scenario, SCHEMA_VERSION};
pub use verify::{run_suite, suite_passed, CheckReport, Suite};
pub use susy::{
    build_dfs_state, build_quasi_dfs_state, build_supercharge, susy_hamiltonian,
    susy_pair_hamiltonian, susy_qubit_evolution, verify_susy_algebra, QubitSign,
    SusyAlgebraCheck, SusyNetworkSpec, SusyQubit, SusyQubitPoint,
};
pub use fock::{
    enumerate_basis, singlet_state, single_excitation, triplet_state, FermionRepresentation,
    LadderKind, ModeSpec, NetworkSpec, OccupationKet, PauliAxis, StateVector,
};
pub use hamiltonians::{
    boson_hopping, build_boson_network, build_dephasing_interaction,
    build_fermion_network_ladder, build_fermion_network_spin, build_mixed_interaction,
    fermion_hopping, number_total, single_boson_mode, single_fermion_mode, CouplingMatrix,
};
pub use ops::{
    expectation, operator_matrix, FactorKind, HamiltonianSum, OpTerm, OperatorSum,
};
pub use quasiparticle::{
    block_diagonalize, diagonalize_coupling, minimal_transformed_cutoff,
    quasi_site_frequencies, transform_state, transform_state_to_spec, with_boson_cutoffs,
    BlockQuasiBasis, QuasiBasis, TransformBasis, TransformDirection, TransformOptions,
    Transformed,
};
