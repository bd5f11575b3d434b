//! Lindblad dynamics of a three-level Λ system coupled to a lossy two-mode
//! cavity: initial field states, the matrix-free generator, fixed-step RK4
//! evolution, steady-state detection, reference formulas and sweeps.
//!
//! Time is measured in units of `hbar/g` and the loss rate `kappa` in units
//! of `g/hbar`.

pub mod analytics;
pub mod density;
pub mod error;
pub mod fock;
pub mod integrator;
pub mod liouvillian;
pub mod output;
pub mod sweep;

pub use analytics::{
    extract_pn_pi, pn_from_p211_double_integral, single_photon_steady_states, two_photon_p211,
    two_photon_pn_closed_form, PnClosedForm, TwoPhotonSplit,
};
pub use density::{
    classify_element, initial_density_matrix, BasisIndex, DensityMatrix, Dims, ElementClass,
    ElementIndex,
};
pub use error::{Error, Result};
pub use fock::{
    coherent_amplitudes, fock_amplitudes, mean_photon_number, squeezed_vacuum_amplitudes,
    AmplitudeVector, FieldKind, FieldSpec,
};
pub use integrator::{
    detect_steady_state, evolve, rk4_step, run_steady_state, Diagnostics, ElementTrace, Evolution,
    PopulationTrace, Propagator, ResolvedConfig, Sample, SimulationConfig, SteadyStateResult,
    SteadyStateRun,
};
pub use liouvillian::{apply_liouvillian, nie_rhs, CompiledLiouvillian, NieElement, Sector};
pub use sweep::{log_grid, run_sweep, SweepRow, SweepSpec, SweepTable, Variant};
pub use num_complex::Complex64;
