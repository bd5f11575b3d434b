//! Steady-state sweeps over the loss rate and the initial state of mode 1.

use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::fock::FieldSpec;
use crate::integrator::{detect_steady_state, SimulationConfig};

pub const DEFAULT_GRID_POINTS: usize = 40;
pub const DEFAULT_GRID_RANGE: (f64, f64) = (0.05, 5.0);

/// `n` logarithmically spaced points from `lo` to `hi` inclusive.
pub fn log_grid(lo: f64, hi: f64, n: usize) -> Vec<f64> {
    match n {
        0 => Vec::new(),
        1 => vec![lo],
        _ => {
            let (a, b) = (lo.ln(), hi.ln());
            (0..n)
                .map(|i| match i {
                    0 => lo,
                    i if i == n - 1 => hi,
                    i => (a + (b - a) * i as f64 / (n - 1) as f64).exp(),
                })
                .collect()
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Variant {
    pub label: String,
    pub field1: FieldSpec,
}

impl Variant {
    pub fn new(label: impl Into<String>, field1: FieldSpec) -> Self {
        Self {
            label: label.into(),
            field1,
        }
    }

    /// Labelled by the field's own textual form.
    pub fn from_field(field1: FieldSpec) -> Self {
        Self {
            label: field1.to_string(),
            field1,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct SweepSpec {
    pub kappa_grid: Vec<f64>,
    pub variants: Vec<Variant>,
    pub field2: FieldSpec,
    /// Template for every run; its fields and `kappa` are overwritten per point.
    pub base: SimulationConfig,
}

impl SweepSpec {
    pub fn new(kappa_grid: Vec<f64>, variants: Vec<Variant>, field2: FieldSpec) -> Self {
        let base = SimulationConfig::new(field2.clone(), field2.clone(), 1.0);
        Self {
            kappa_grid,
            variants,
            field2,
            base,
        }
    }

    /// Fock, coherent and squeezed-vacuum inputs with ten photons on average,
    /// each against a vacuum mode 2.
    pub fn ten_photon_comparison(kappa_grid: Vec<f64>) -> Self {
        let variants = vec![
            Variant::new("fock", FieldSpec::fock(10)),
            Variant::new("coherent", FieldSpec::coherent(10f64.sqrt().into())),
            Variant::new("squeezed", FieldSpec::squeezed_vacuum(10f64.sqrt().asinh(), 0.0)),
        ];
        Self::new(kappa_grid, variants, FieldSpec::vacuum())
    }

    pub fn validate(&self) -> Result<()> {
        if self.kappa_grid.is_empty() || self.variants.is_empty() {
            return Err(Error::Config("sweep needs at least one kappa and one variant".into()));
        }
        if let Some(k) = self.kappa_grid.iter().find(|k| !(**k > 0.0) || !k.is_finite()) {
            return Err(Error::Config(format!("sweep kappa values must be > 0, got {k}")));
        }
        if self.kappa_grid.windows(2).any(|w| w[1] <= w[0]) {
            return Err(Error::Config("sweep kappa grid must be strictly increasing".into()));
        }
        Ok(())
    }

    /// Configuration for one grid point.
    pub fn point(&self, variant: usize, kappa: usize) -> SimulationConfig {
        SimulationConfig {
            field1: self.variants[variant].field1.clone(),
            field2: self.field2.clone(),
            kappa: self.kappa_grid[kappa],
            ..self.base.clone()
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SweepRow {
    pub field1: String,
    pub kappa: f64,
    pub o1_st: f64,
    pub o2_st: f64,
    pub converged: bool,
    pub t_converged: f64,
}

#[derive(Debug, Clone, Default, PartialEq, Serialize, Deserialize)]
pub struct SweepTable {
    pub rows: Vec<SweepRow>,
}

impl SweepTable {
    pub fn variant<'a>(&'a self, label: &'a str) -> impl Iterator<Item = &'a SweepRow> + 'a {
        self.rows.iter().filter(move |r| r.field1 == label)
    }
}

/// Runs every (variant, kappa) point independently and in parallel. Rows are
/// ordered by variant, then by kappa. Points that do not converge by `t_max`
/// are kept with `converged = false`; any other error aborts the sweep.
pub fn run_sweep(spec: &SweepSpec) -> Result<SweepTable> {
    spec.validate()?;
    let nk = spec.kappa_grid.len();
    let rows = (0..spec.variants.len() * nk)
        .into_par_iter()
        .map(|i| {
            let (v, k) = (i / nk, i % nk);
            let r = detect_steady_state(&spec.point(v, k))?;
            Ok(SweepRow {
                field1: spec.variants[v].label.clone(),
                kappa: spec.kappa_grid[k],
                o1_st: r.o1_st,
                o2_st: r.o2_st,
                converged: r.converged,
                t_converged: r.t_converged,
            })
        })
        .collect::<Result<Vec<_>>>()?;
    Ok(SweepTable { rows })
}
