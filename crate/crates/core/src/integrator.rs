//! Fixed-step fourth-order Runge-Kutta evolution, population traces and
//! steady-state detection.

use std::collections::VecDeque;

use num_complex::Complex64;
use serde::{Deserialize, Serialize};

use crate::density::{
    initial_density_matrix, BasisIndex, DensityMatrix, Dims, ElementIndex, HERMITICITY_TOLERANCE,
};
use crate::error::{Error, Result};
use crate::fock::{AmplitudeVector, FieldSpec, DEFAULT_TRUNCATION_TOLERANCE};
use crate::liouvillian::{apply_liouvillian, CompiledLiouvillian, Sector};

pub const DEFAULT_DT: f64 = 0.005;
/// Upper bound on `dt * max(1, kappa (kmax + mmax))`.
pub const STABILITY_BOUND: f64 = 0.5;
pub const DEFAULT_RECORD_EVERY: usize = 20;
pub const DEFAULT_STEADY_TOL_POP: f64 = 1e-8;
pub const DEFAULT_STEADY_TOL_PHOTON: f64 = 1e-6;
pub const DEFAULT_LEAK_BUDGET: f64 = 1e-4;
/// Magnitudes below this are set to zero after each step.
pub const UNDERFLOW_FLUSH: f64 = 1e-250;
/// Length of the steady-state window in units of the field decay time `1/kappa`.
pub const STEADY_WINDOW_DECAY_TIMES: f64 = 10.0;

/// Everything needed to run one trajectory. Unset options are filled in by
/// [`SimulationConfig::resolve`].
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct SimulationConfig {
    pub field1: FieldSpec,
    pub field2: FieldSpec,
    /// Loss rate in units of g/hbar.
    pub kappa: f64,
    /// Step in units of hbar/g.
    #[serde(default)]
    pub dt: Option<f64>,
    #[serde(default)]
    pub t_max: Option<f64>,
    #[serde(default)]
    pub kmax: Option<usize>,
    #[serde(default)]
    pub mmax: Option<usize>,
    #[serde(default = "default_record_every")]
    pub record_every: usize,
    #[serde(default = "default_tol_pop")]
    pub steady_tol_pop: f64,
    #[serde(default = "default_tol_photon")]
    pub steady_tol_photon: f64,
    #[serde(default = "default_leak_budget")]
    pub leak_budget: f64,
    #[serde(default = "default_trunc_tol")]
    pub truncation_tolerance: f64,
    /// Elements whose full time series is recorded at every step.
    #[serde(default)]
    pub watch: Vec<ElementIndex>,
    /// Tracked block of the density matrix; chosen from `watch` when unset.
    #[serde(default)]
    pub sector: Option<Sector>,
}

fn default_record_every() -> usize {
    DEFAULT_RECORD_EVERY
}
fn default_tol_pop() -> f64 {
    DEFAULT_STEADY_TOL_POP
}
fn default_tol_photon() -> f64 {
    DEFAULT_STEADY_TOL_PHOTON
}
fn default_leak_budget() -> f64 {
    DEFAULT_LEAK_BUDGET
}
fn default_trunc_tol() -> f64 {
    DEFAULT_TRUNCATION_TOLERANCE
}

impl SimulationConfig {
    pub fn new(field1: FieldSpec, field2: FieldSpec, kappa: f64) -> Self {
        Self {
            field1,
            field2,
            kappa,
            dt: None,
            t_max: None,
            kmax: None,
            mmax: None,
            record_every: DEFAULT_RECORD_EVERY,
            steady_tol_pop: DEFAULT_STEADY_TOL_POP,
            steady_tol_photon: DEFAULT_STEADY_TOL_PHOTON,
            leak_budget: DEFAULT_LEAK_BUDGET,
            truncation_tolerance: DEFAULT_TRUNCATION_TOLERANCE,
            watch: Vec::new(),
            sector: None,
        }
    }

    pub fn with_dt(mut self, dt: f64) -> Self {
        self.dt = Some(dt);
        self
    }

    pub fn with_t_max(mut self, t_max: f64) -> Self {
        self.t_max = Some(t_max);
        self
    }

    pub fn with_cutoffs(mut self, kmax: usize, mmax: usize) -> Self {
        self.kmax = Some(kmax);
        self.mmax = Some(mmax);
        self
    }

    pub fn with_record_every(mut self, n: usize) -> Self {
        self.record_every = n;
        self
    }

    pub fn with_watch(mut self, watch: impl IntoIterator<Item = ElementIndex>) -> Self {
        self.watch.extend(watch);
        self
    }

    pub fn with_sector(mut self, sector: Sector) -> Self {
        self.sector = Some(sector);
        self
    }

    /// Validates the configuration and fills in every default.
    ///
    /// Default cutoffs: field 1 uses the field's own cutoff; field 2 gets one
    /// extra level, since decay from the upper level can add one photon to
    /// mode 2 but the coupling never raises mode 1 above its initial support.
    pub fn resolve(&self) -> Result<ResolvedConfig> {
        let cfg = |msg: String| Err(Error::Config(msg));
        if !self.kappa.is_finite() || self.kappa < 0.0 {
            return cfg(format!("kappa must be finite and >= 0, got {}", self.kappa));
        }
        if self.record_every == 0 {
            return cfg("record_every must be >= 1".into());
        }
        for (name, v) in [
            ("steady_tol_pop", self.steady_tol_pop),
            ("steady_tol_photon", self.steady_tol_photon),
            ("leak_budget", self.leak_budget),
            ("truncation_tolerance", self.truncation_tolerance),
        ] {
            if !(v > 0.0) || !v.is_finite() {
                return cfg(format!("{name} must be positive, got {v}"));
            }
        }
        let tol = self.truncation_tolerance;
        let kmax = match self.kmax {
            Some(k) => k,
            None => self.field1.default_kmax(tol)?,
        };
        let mmax = match self.mmax {
            Some(m) => m,
            None => self.field2.default_kmax(tol)? + 1,
        };
        let dims = Dims::new(kmax, mmax);
        let psi1 = self.field1.amplitudes(kmax, tol)?;
        let psi2 = self.field2.amplitudes(mmax, tol)?;

        let stiffness = stiffness(self.kappa, dims);
        let dt = match self.dt {
            Some(dt) => dt,
            None => DEFAULT_DT.min(STABILITY_BOUND / stiffness),
        };
        check_stability(dt, self.kappa, dims)?;

        let t_max = match self.t_max {
            Some(t) => t,
            None if self.kappa > 0.0 => 200f64.max(50.0 / self.kappa),
            None => 200.0,
        };
        if !(t_max >= 0.0) || !t_max.is_finite() {
            return cfg(format!("t_max must be finite and >= 0, got {t_max}"));
        }

        for e in &self.watch {
            if !dims.contains(e.row) || !dims.contains(e.col) {
                return cfg(format!(
                    "watched element {e} lies outside cutoffs kmax = {kmax}, mmax = {mmax}"
                ));
            }
        }
        let block_ok = self
            .watch
            .iter()
            .all(|e| e.row.excitation() == e.col.excitation());
        let sector = match self.sector {
            Some(Sector::ExcitationDiagonal) if !block_ok => {
                return cfg(
                    "watched elements with unequal excitation need the full sector".into(),
                )
            }
            Some(s) => s,
            None if block_ok => Sector::ExcitationDiagonal,
            None => Sector::Full,
        };

        Ok(ResolvedConfig {
            config: SimulationConfig {
                kmax: Some(kmax),
                mmax: Some(mmax),
                dt: Some(dt),
                t_max: Some(t_max),
                sector: Some(sector),
                ..self.clone()
            },
            dims,
            dt,
            t_max,
            sector,
            psi1,
            psi2,
        })
    }

    /// The same configuration with every default made explicit.
    pub fn resolved(&self) -> Result<SimulationConfig> {
        Ok(self.resolve()?.config)
    }
}

fn stiffness(kappa: f64, dims: Dims) -> f64 {
    1f64.max(kappa * (dims.kmax + dims.mmax) as f64)
}

fn check_stability(dt: f64, kappa: f64, dims: Dims) -> Result<()> {
    if !(dt > 0.0) || !dt.is_finite() {
        return Err(Error::Config(format!("dt must be positive, got {dt}")));
    }
    let product = dt * stiffness(kappa, dims);
    if product > STABILITY_BOUND {
        return Err(Error::Stability {
            dt,
            product,
            bound: STABILITY_BOUND,
        });
    }
    Ok(())
}

/// A validated configuration with cutoffs, step and initial fields fixed.
#[derive(Debug, Clone)]
pub struct ResolvedConfig {
    /// Fully explicit copy of the source configuration.
    pub config: SimulationConfig,
    pub dims: Dims,
    pub dt: f64,
    pub t_max: f64,
    pub sector: Sector,
    pub psi1: AmplitudeVector,
    pub psi2: AmplitudeVector,
}

impl ResolvedConfig {
    pub fn kappa(&self) -> f64 {
        self.config.kappa
    }

    pub fn initial_state(&self) -> DensityMatrix {
        initial_density_matrix(&self.psi1, &self.psi2)
    }

    pub fn n_steps(&self) -> usize {
        (self.t_max / self.dt - 1e-9).ceil().max(0.0) as usize
    }
}

/// One recorded point of a trajectory.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct Sample {
    pub t: f64,
    pub o1: f64,
    pub o2: f64,
    pub o3: f64,
    pub trace: f64,
    pub n1: f64,
    pub n2: f64,
}

impl Sample {
    pub fn populations(&self) -> [f64; 3] {
        [self.o1, self.o2, self.o3]
    }
}

#[derive(Debug, Clone, Default, PartialEq, Serialize, Deserialize)]
pub struct PopulationTrace {
    pub samples: Vec<Sample>,
}

impl PopulationTrace {
    pub fn len(&self) -> usize {
        self.samples.len()
    }

    pub fn is_empty(&self) -> bool {
        self.samples.is_empty()
    }

    pub fn last(&self) -> Option<&Sample> {
        self.samples.last()
    }

    /// Sample whose time is closest to `t`.
    pub fn at(&self, t: f64) -> Option<&Sample> {
        self.samples
            .iter()
            .min_by(|a, b| (a.t - t).abs().total_cmp(&(b.t - t).abs()))
    }
}

/// Time series of one density-matrix element, sampled at every step from `t = 0`.
#[derive(Debug, Clone, PartialEq)]
pub struct ElementTrace {
    pub element: ElementIndex,
    pub dt: f64,
    pub values: Vec<Complex64>,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct Diagnostics {
    pub dims: Dims,
    pub sector: Sector,
    pub dt: f64,
    pub steps: usize,
    pub tracked_elements: usize,
    /// Largest Hermiticity defect seen before re-Hermitization.
    pub max_hermiticity_defect: f64,
    /// Largest `1 - trace` over recorded samples.
    pub max_trace_leak: f64,
    /// Most negative diagonal entry over recorded samples.
    pub min_diagonal: f64,
}

#[derive(Debug, Clone)]
pub struct Evolution {
    pub trace: PopulationTrace,
    pub watched: Vec<ElementTrace>,
    pub final_state: DensityMatrix,
    pub diagnostics: Diagnostics,
}

/// One classical RK4 step of the full density matrix, followed by
/// re-Hermitization.
pub fn rk4_step(dm: &DensityMatrix, dt: f64, kappa: f64) -> Result<DensityMatrix> {
    check_stability(dt, kappa, dm.dims())?;
    let y = dm.as_slice();
    let axpy = |k: &DensityMatrix, h: f64| -> DensityMatrix {
        let data = y.iter().zip(k.as_slice()).map(|(a, b)| a + b * h).collect();
        DensityMatrix::from_raw(dm.dims(), data).expect("same shape")
    };
    let k1 = apply_liouvillian(dm, kappa);
    let k2 = apply_liouvillian(&axpy(&k1, 0.5 * dt), kappa);
    let k3 = apply_liouvillian(&axpy(&k2, 0.5 * dt), kappa);
    let k4 = apply_liouvillian(&axpy(&k3, dt), kappa);
    let data: Vec<Complex64> = (0..y.len())
        .map(|i| {
            y[i] + (k1.as_slice()[i]
                + k2.as_slice()[i] * 2.0
                + k3.as_slice()[i] * 2.0
                + k4.as_slice()[i])
                * (dt / 6.0)
        })
        .collect();
    if data.iter().any(|c| !c.re.is_finite() || !c.im.is_finite()) {
        return Err(Error::Divergence { step: 1, time: dt });
    }
    let mut out = DensityMatrix::from_raw(dm.dims(), data)?;
    let defect = out.hermiticity_defect();
    if defect >= HERMITICITY_TOLERANCE {
        return Err(Error::Integrity(format!(
            "Hermiticity defect {defect:.3e} after one step"
        )));
    }
    out.hermitize();
    Ok(out)
}

/// RK4 on the compiled block of tracked elements.
#[derive(Debug, Clone)]
pub struct Propagator {
    generator: CompiledLiouvillian,
    state: Vec<Complex64>,
    deriv: Vec<Complex64>,
    stage: Vec<Complex64>,
    acc: Vec<Complex64>,
    diagonal: Vec<(usize, BasisIndex)>,
    dt: f64,
    steps: usize,
    max_defect: f64,
}

impl Propagator {
    pub fn new(resolved: &ResolvedConfig) -> Self {
        let generator = CompiledLiouvillian::new(resolved.dims, resolved.kappa(), resolved.sector);
        let state = generator.gather(&resolved.initial_state());
        Self::from_parts(generator, state, resolved.dt)
    }

    pub fn from_parts(generator: CompiledLiouvillian, state: Vec<Complex64>, dt: f64) -> Self {
        let n = generator.len();
        assert_eq!(state.len(), n);
        let diagonal = generator.diagonal();
        Self {
            generator,
            state,
            deriv: vec![Complex64::new(0.0, 0.0); n],
            stage: vec![Complex64::new(0.0, 0.0); n],
            acc: vec![Complex64::new(0.0, 0.0); n],
            diagonal,
            dt,
            steps: 0,
            max_defect: 0.0,
        }
    }

    pub fn generator(&self) -> &CompiledLiouvillian {
        &self.generator
    }

    pub fn steps(&self) -> usize {
        self.steps
    }

    pub fn time(&self) -> f64 {
        self.steps as f64 * self.dt
    }

    pub fn max_hermiticity_defect(&self) -> f64 {
        self.max_defect
    }

    pub fn state(&self) -> DensityMatrix {
        self.generator.scatter(&self.state)
    }

    pub fn value(&self, position: usize) -> Complex64 {
        self.state[position]
    }

    pub fn step(&mut self) -> Result<()> {
        let dt = self.dt;
        let g = &self.generator;
        let n = self.state.len();

        g.apply(&self.state, &mut self.deriv);
        for i in 0..n {
            self.acc[i] = self.state[i] + self.deriv[i] * (dt / 6.0);
            self.stage[i] = self.state[i] + self.deriv[i] * (0.5 * dt);
        }
        g.apply(&self.stage, &mut self.deriv);
        for i in 0..n {
            self.acc[i] += self.deriv[i] * (dt / 3.0);
            self.stage[i] = self.state[i] + self.deriv[i] * (0.5 * dt);
        }
        g.apply(&self.stage, &mut self.deriv);
        for i in 0..n {
            self.acc[i] += self.deriv[i] * (dt / 3.0);
            self.stage[i] = self.state[i] + self.deriv[i] * dt;
        }
        g.apply(&self.stage, &mut self.deriv);
        for i in 0..n {
            self.acc[i] += self.deriv[i] * (dt / 6.0);
        }

        self.steps += 1;
        let adjoint = g.adjoint_positions();
        let mut defect = 0.0f64;
        for p in 0..n {
            let a = adjoint[p] as usize;
            if a < p {
                continue;
            }
            let (x, y) = (self.acc[p], self.acc[a]);
            if !(x.re.is_finite() && x.im.is_finite() && y.re.is_finite() && y.im.is_finite()) {
                return Err(Error::Divergence {
                    step: self.steps,
                    time: self.time(),
                });
            }
            defect = defect.max((x - y.conj()).norm());
            let mut h = (x + y.conj()) * 0.5;
            // decayed coherences would otherwise drift into subnormal range,
            // where arithmetic is orders of magnitude slower
            if h.re.abs() < UNDERFLOW_FLUSH {
                h.re = 0.0;
            }
            if h.im.abs() < UNDERFLOW_FLUSH {
                h.im = 0.0;
            }
            self.state[p] = h;
            self.state[a] = h.conj();
        }
        self.max_defect = self.max_defect.max(defect);
        if defect >= HERMITICITY_TOLERANCE {
            return Err(Error::Integrity(format!(
                "Hermiticity defect {defect:.3e} at step {}",
                self.steps
            )));
        }
        Ok(())
    }

    /// Populations, trace and mean photon numbers of the current state.
    pub fn sample(&self) -> Sample {
        let mut pops = [0.0; 3];
        let (mut n1, mut n2) = (0.0, 0.0);
        for &(p, b) in &self.diagonal {
            let v = self.state[p].re;
            pops[b.level as usize - 1] += v;
            n1 += b.k as f64 * v;
            n2 += b.m as f64 * v;
        }
        Sample {
            t: self.time(),
            o1: pops[0],
            o2: pops[1],
            o3: pops[2],
            trace: pops.iter().sum(),
            n1,
            n2,
        }
    }

    fn min_diagonal(&self) -> f64 {
        self.diagonal
            .iter()
            .map(|&(p, _)| self.state[p].re)
            .fold(f64::INFINITY, f64::min)
    }
}

/// Result of steady-state detection.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct SteadyStateResult {
    /// `p_{1,0,0; 1,0,0}` at detection.
    pub o1_st: f64,
    /// `p_{2,0,0; 2,0,0}` at detection.
    pub o2_st: f64,
    pub o3: f64,
    pub t_converged: f64,
    /// `<n_1> + <n_2>` at detection.
    pub residual_photon: f64,
    /// Largest population spread per unit time over the trailing window.
    pub residual_drift: f64,
    pub trace: f64,
    pub converged: bool,
}

#[derive(Debug, Clone)]
pub struct SteadyStateRun {
    pub result: SteadyStateResult,
    pub evolution: Evolution,
}

struct SteadyDetector {
    window: f64,
    tol_pop: f64,
    tol_photon: f64,
    history: VecDeque<Sample>,
}

impl SteadyDetector {
    fn new(config: &SimulationConfig) -> Self {
        Self {
            window: STEADY_WINDOW_DECAY_TIMES / config.kappa,
            tol_pop: config.steady_tol_pop,
            tol_photon: config.steady_tol_photon,
            history: VecDeque::new(),
        }
    }

    /// Pushes a sample and returns `(drift, steady)`.
    fn push(&mut self, s: Sample) -> (f64, bool) {
        self.history.push_back(s);
        while let Some(front) = self.history.front() {
            // keep one sample at or before the window start
            if self.history.len() > 1 && self.history[1].t <= s.t - self.window {
                self.history.pop_front();
            } else {
                let _ = front;
                break;
            }
        }
        let drift = self.drift();
        let covered = s.t - self.history[0].t >= self.window - 1e-9;
        let steady = covered
            && s.n1 + s.n2 < self.tol_photon
            && s.o3 < self.tol_pop
            && drift < self.tol_pop;
        (drift, steady)
    }

    fn drift(&self) -> f64 {
        let span = match (self.history.front(), self.history.back()) {
            (Some(a), Some(b)) if b.t > a.t => b.t - a.t,
            _ => return f64::INFINITY,
        };
        (0..3)
            .map(|n| {
                let (lo, hi) = self.history.iter().fold((f64::INFINITY, f64::NEG_INFINITY), |(lo, hi), s| {
                    let v = s.populations()[n];
                    (lo.min(v), hi.max(v))
                });
                (hi - lo) / span
            })
            .fold(0.0, f64::max)
    }
}

fn run(resolved: &ResolvedConfig, mut detector: Option<SteadyDetector>) -> Result<(Evolution, Option<(f64, bool)>)> {
    let mut prop = Propagator::new(resolved);
    let watch_positions: Vec<usize> = resolved
        .config
        .watch
        .iter()
        .map(|e| {
            prop.generator()
                .position(e.row, e.col)
                .expect("watch list validated against sector")
        })
        .collect();
    let mut watched: Vec<ElementTrace> = resolved
        .config
        .watch
        .iter()
        .map(|&element| ElementTrace {
            element,
            dt: resolved.dt,
            values: Vec::new(),
        })
        .collect();

    let n_steps = resolved.n_steps();
    let every = resolved.config.record_every;
    let mut trace = PopulationTrace::default();
    let mut min_diagonal = f64::INFINITY;
    let mut status = None;

    let mut record = |prop: &Propagator, trace: &mut PopulationTrace| {
        let s = prop.sample();
        min_diagonal = min_diagonal.min(prop.min_diagonal());
        trace.samples.push(s);
        s
    };

    loop {
        for (w, &p) in watched.iter_mut().zip(&watch_positions) {
            w.values.push(prop.value(p));
        }
        let step = prop.steps();
        if step % every == 0 || step == n_steps {
            let s = record(&prop, &mut trace);
            if let Some(det) = detector.as_mut() {
                let (drift, steady) = det.push(s);
                status = Some((drift, steady));
                if steady {
                    break;
                }
            }
        }
        if step >= n_steps {
            break;
        }
        prop.step()?;
    }

    let max_trace_leak = trace
        .samples
        .iter()
        .map(|s| 1.0 - s.trace)
        .fold(f64::NEG_INFINITY, f64::max);
    let diagnostics = Diagnostics {
        dims: resolved.dims,
        sector: resolved.sector,
        dt: resolved.dt,
        steps: prop.steps(),
        tracked_elements: prop.generator().len(),
        max_hermiticity_defect: prop.max_hermiticity_defect(),
        max_trace_leak,
        min_diagonal,
    };
    Ok((
        Evolution {
            trace,
            watched,
            final_state: prop.state(),
            diagnostics,
        },
        status,
    ))
}

/// Integrates from `t = 0` to `t_max`, recording every `record_every` steps.
pub fn evolve(config: &SimulationConfig) -> Result<Evolution> {
    let resolved = config.resolve()?;
    Ok(run(&resolved, None)?.0)
}

/// Integrates until the fields have emptied and the populations have stopped
/// moving over a trailing window of `10 / kappa`, or until `t_max`.
pub fn run_steady_state(config: &SimulationConfig) -> Result<SteadyStateRun> {
    if !(config.kappa > 0.0) {
        return Err(Error::Domain(
            "kappa = 0 has no steady state: without cavity losses the populations oscillate forever"
                .into(),
        ));
    }
    let resolved = config.resolve()?;
    let (evolution, status) = run(&resolved, Some(SteadyDetector::new(config)))?;
    let (drift, converged) = status.unwrap_or((f64::INFINITY, false));
    let last = *evolution.trace.last().expect("at least one sample");
    let dm = &evolution.final_state;
    let o1_st = dm[(BasisIndex::new(1, 0, 0), BasisIndex::new(1, 0, 0))].re;
    let o2_st = dm[(BasisIndex::new(2, 0, 0), BasisIndex::new(2, 0, 0))].re;
    if converged && o1_st + o2_st < 1.0 - config.leak_budget {
        return Err(Error::Integrity(format!(
            "steady populations sum to {} (< 1 - {}); increase the cutoffs",
            o1_st + o2_st,
            config.leak_budget
        )));
    }
    Ok(SteadyStateRun {
        result: SteadyStateResult {
            o1_st,
            o2_st,
            o3: last.o3,
            t_converged: last.t,
            residual_photon: last.n1 + last.n2,
            residual_drift: drift,
            trace: last.trace,
            converged,
        },
        evolution,
    })
}

pub fn detect_steady_state(config: &SimulationConfig) -> Result<SteadyStateResult> {
    Ok(run_steady_state(config)?.result)
}
