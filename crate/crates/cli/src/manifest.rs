//! Run configuration as read from flags and JSON files, and the manifest
//! written next to every run's outputs.

use std::path::Path;
use std::time::{SystemTime, UNIX_EPOCH};

use lqed::density::ElementIndex;
use lqed::integrator::SimulationConfig;
use lqed::sweep::{log_grid, SweepSpec, Variant, DEFAULT_GRID_POINTS, DEFAULT_GRID_RANGE};
use lqed::{Complex64, Error, FieldSpec, Result, Sector};
use serde::{Deserialize, Serialize};
use sha2::{Digest, Sha256};

pub const TOOL: &str = "lqed";
pub const VERSION: &str = env!("CARGO_PKG_VERSION");

/// Every setting a run can take. Keys mirror the command-line flags; unset
/// keys fall through to the next layer (flags, then file, then defaults).
#[derive(Debug, Clone, Default, PartialEq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case", deny_unknown_fields)]
pub struct RunConfig {
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub field1: Option<FieldSpec>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub field2: Option<FieldSpec>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub kappa: Option<f64>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub dt: Option<f64>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub tmax: Option<f64>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub kmax: Option<usize>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub mmax: Option<usize>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub record_every: Option<usize>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub watch_elements: Option<Vec<ElementIndex>>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub sector: Option<Sector>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub steady_tol_pop: Option<f64>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub steady_tol_photon: Option<f64>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub leak_budget: Option<f64>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub truncation_tolerance: Option<f64>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub kappa_grid: Option<Vec<f64>>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub variants: Option<Vec<FieldSpec>>,
}

macro_rules! overlay_fields {
    ($top:expr, $base:expr, $($f:ident),*) => {
        RunConfig { $($f: $top.$f.or($base.$f)),* }
    };
}

impl RunConfig {
    /// Fields set in `self` win over those in `base`.
    pub fn over(self, base: RunConfig) -> RunConfig {
        overlay_fields!(
            self, base, field1, field2, kappa, dt, tmax, kmax, mmax, record_every,
            watch_elements, sector, steady_tol_pop, steady_tol_photon, leak_budget,
            truncation_tolerance, kappa_grid, variants
        )
    }

    pub fn defaults() -> RunConfig {
        let d = SimulationConfig::new(FieldSpec::fock(1), FieldSpec::vacuum(), 0.1);
        RunConfig {
            field1: Some(d.field1),
            field2: Some(d.field2),
            kappa: Some(d.kappa),
            record_every: Some(d.record_every),
            steady_tol_pop: Some(d.steady_tol_pop),
            steady_tol_photon: Some(d.steady_tol_photon),
            leak_budget: Some(d.leak_budget),
            truncation_tolerance: Some(d.truncation_tolerance),
            ..RunConfig::default()
        }
    }

    /// Defaults for the sweep command: ten-photon Fock, coherent and squeezed
    /// inputs over the standard log-spaced grid.
    pub fn sweep_defaults() -> RunConfig {
        let (lo, hi) = DEFAULT_GRID_RANGE;
        let spec = SweepSpec::ten_photon_comparison(Vec::new());
        RunConfig {
            kappa_grid: Some(log_grid(lo, hi, DEFAULT_GRID_POINTS)),
            variants: Some(spec.variants.into_iter().map(|v| v.field1).collect()),
            ..RunConfig::defaults()
        }
    }

    /// Reads a JSON config; a previously written manifest is accepted too,
    /// in which case its resolved configuration is used.
    pub fn load(path: &Path) -> Result<RunConfig> {
        let text = std::fs::read_to_string(path).map_err(|e| {
            Error::Config(format!("cannot read config file {}: {e}", path.display()))
        })?;
        let value: serde_json::Value = serde_json::from_str(&text).map_err(|e| {
            Error::Config(format!("config file {} is not valid JSON: {e}", path.display()))
        })?;
        let value = match value {
            serde_json::Value::Object(ref map) if map.contains_key("tool") => {
                let manifest: RunManifest = serde_json::from_value(value).map_err(|e| {
                    Error::Config(format!("malformed manifest {}: {e}", path.display()))
                })?;
                return Ok(manifest.config);
            }
            v => v,
        };
        serde_json::from_value(value)
            .map_err(|e| Error::Config(format!("invalid config file {}: {e}", path.display())))
    }

    fn base_simulation(&self) -> Result<SimulationConfig> {
        let missing = |k: &str| Error::Config(format!("missing setting `{k}`"));
        let field1 = self.field1.clone().ok_or_else(|| missing("field1"))?;
        let field2 = self.field2.clone().ok_or_else(|| missing("field2"))?;
        let kappa = self.kappa.ok_or_else(|| missing("kappa"))?;
        let mut c = SimulationConfig::new(field1, field2, kappa);
        c.dt = self.dt;
        c.t_max = self.tmax;
        c.kmax = self.kmax;
        c.mmax = self.mmax;
        c.sector = self.sector;
        c.watch = self.watch_elements.clone().unwrap_or_default();
        if let Some(v) = self.record_every {
            c.record_every = v;
        }
        if let Some(v) = self.steady_tol_pop {
            c.steady_tol_pop = v;
        }
        if let Some(v) = self.steady_tol_photon {
            c.steady_tol_photon = v;
        }
        if let Some(v) = self.leak_budget {
            c.leak_budget = v;
        }
        if let Some(v) = self.truncation_tolerance {
            c.truncation_tolerance = v;
        }
        Ok(c)
    }

    /// Simulation configuration with every default made explicit.
    pub fn simulation(&self) -> Result<SimulationConfig> {
        self.base_simulation()?.resolved()
    }

    pub fn sweep(&self) -> Result<SweepSpec> {
        let grid = self
            .kappa_grid
            .clone()
            .ok_or_else(|| Error::Config("missing setting `kappa-grid`".into()))?;
        let variants = self
            .variants
            .clone()
            .ok_or_else(|| Error::Config("missing setting `variants`".into()))?;
        let field2 = self
            .field2
            .clone()
            .ok_or_else(|| Error::Config("missing setting `field2`".into()))?;
        let mut base = RunConfig {
            field1: Some(field2.clone()),
            kappa: Some(1.0),
            ..self.clone()
        }
        .base_simulation()?;
        base.kappa = 1.0;
        let spec = SweepSpec {
            kappa_grid: grid,
            variants: variants.into_iter().map(Variant::from_field).collect(),
            field2,
            base,
        };
        spec.validate()?;
        Ok(spec)
    }

    /// Copies the explicit values of a resolved simulation back.
    pub fn with_simulation(mut self, c: &SimulationConfig) -> RunConfig {
        self.field1 = Some(c.field1.clone());
        self.field2 = Some(c.field2.clone());
        self.kappa = Some(c.kappa);
        self.dt = c.dt;
        self.tmax = c.t_max;
        self.kmax = c.kmax;
        self.mmax = c.mmax;
        self.sector = c.sector;
        self.record_every = Some(c.record_every);
        self.watch_elements = (!c.watch.is_empty()).then(|| c.watch.clone());
        self.steady_tol_pop = Some(c.steady_tol_pop);
        self.steady_tol_photon = Some(c.steady_tol_photon);
        self.leak_budget = Some(c.leak_budget);
        self.truncation_tolerance = Some(c.truncation_tolerance);
        self
    }
}

/// Parses `n,k,m;n',k',m'` elements separated by whitespace or `|`.
pub fn parse_watch_list(s: &str) -> Result<Vec<ElementIndex>> {
    s.split(|c: char| c.is_whitespace() || c == '|')
        .filter(|t| !t.is_empty())
        .map(str::parse)
        .collect()
}

/// Alpha for a coherent state with the given mean photon number.
pub fn coherent_with_mean(n: f64) -> FieldSpec {
    FieldSpec::coherent(Complex64::new(n.sqrt(), 0.0))
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum Command {
    Evolve,
    Steady,
    Sweep,
    Validate,
}

/// Record of one run. Everything except `created_unix_s` and `outputs` enters
/// the hash, so identical configurations hash identically on every run.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case", deny_unknown_fields)]
pub struct RunManifest {
    pub tool: String,
    pub version: String,
    pub command: Command,
    pub config: RunConfig,
    pub hash: String,
    pub created_unix_s: u64,
    pub outputs: Vec<String>,
}

impl RunManifest {
    pub fn new(command: Command, config: RunConfig) -> Self {
        let created_unix_s = SystemTime::now()
            .duration_since(UNIX_EPOCH)
            .map_or(0, |d| d.as_secs());
        let mut m = RunManifest {
            tool: TOOL.into(),
            version: VERSION.into(),
            command,
            config,
            hash: String::new(),
            created_unix_s,
            outputs: Vec::new(),
        };
        m.hash = m.compute_hash();
        m
    }

    pub fn compute_hash(&self) -> String {
        #[derive(Serialize)]
        struct Hashed<'a> {
            tool: &'a str,
            version: &'a str,
            command: Command,
            config: &'a RunConfig,
        }
        let bytes = serde_json::to_vec(&Hashed {
            tool: &self.tool,
            version: &self.version,
            command: self.command,
            config: &self.config,
        })
        .expect("manifest serializes");
        hex::encode(Sha256::digest(&bytes))
    }
}
