//! Shared fixtures for the benchmarks.

use lqed::{initial_density_matrix, AmplitudeVector, Complex64, DensityMatrix, FieldSpec};

/// Coherent state with `mean` photons on average in mode 1, vacuum in mode 2,
/// at the default cutoffs.
pub fn coherent_start(mean: f64) -> DensityMatrix {
    let field = FieldSpec::coherent(Complex64::new(mean.sqrt(), 0.0));
    let kmax = field.default_kmax(1e-6).expect("cutoff");
    let psi1 = field.amplitudes(kmax, 1e-6).expect("amplitudes");
    initial_density_matrix(&psi1, &AmplitudeVector::vacuum(1))
}
