//! Closed-form steady-state approximations and quadrature of simulated traces.

use serde::{Deserialize, Serialize};

use crate::density::{BasisIndex, ElementIndex};
use crate::error::{Error, Result};
use crate::fock::FieldKind;
use crate::integrator::{run_steady_state, ElementTrace, SimulationConfig};

/// Above this loss rate the two-photon closed form drifts away from simulation.
pub const PN_CLOSED_FORM_VALIDITY: f64 = 1.5;
/// Relative agreement required between `p_N + p_I` and the simulated `O2_st`.
pub const SPLIT_CONSISTENCY: f64 = 0.01;

fn require_positive(kappa: f64) -> Result<()> {
    if kappa > 0.0 && kappa.is_finite() {
        Ok(())
    } else {
        Err(Error::Domain(format!("kappa must be finite and > 0, got {kappa}")))
    }
}

/// Approximate steady populations `(O1_st, O2_st)` for a single photon in
/// mode 1 and vacuum in mode 2.
pub fn single_photon_steady_states(kappa: f64) -> Result<(f64, f64)> {
    require_positive(kappa)?;
    let k2 = kappa * kappa;
    let shift = 2.0 * k2 / (16.0 + 4.5 * k2) - 0.5 * k2 / (64.0 + 2.0 * k2);
    Ok((0.5 + shift, 0.5 - shift))
}

/// Approximate `p_{2,1,1; 2,1,1}(t)` for a two-photon Fock state in mode 1.
pub fn two_photon_p211(t: f64, kappa: f64) -> f64 {
    let w = 3f64.sqrt();
    let a = (w * t).cos() * (-0.75 * kappa * t).exp() - (-kappa * t).exp();
    let b = (w * t).sin() * (-1.75 * kappa * t).exp()
        - 0.5 * (2.0 * w * t).sin() * (-1.5 * kappa * t).exp();
    2.0 / 9.0 * a * a + kappa / (9.0 * w) * b
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct PnClosedForm {
    pub value: f64,
    /// Set when `kappa` exceeds [`PN_CLOSED_FORM_VALIDITY`].
    pub beyond_validity: bool,
}

/// Closed-form NIE contribution `p_N` to `O2_st` for a two-photon Fock state.
pub fn two_photon_pn_closed_form(kappa: f64) -> Result<PnClosedForm> {
    require_positive(kappa)?;
    let k2 = kappa * kappa;
    let value = (960.0 + 32.0 * k2 - 7.75 * k2 * k2)
        / (27.0 * (1.5 * k2 + 8.0) * (24.5 * k2 + 24.0));
    Ok(PnClosedForm {
        value,
        beyond_validity: kappa > PN_CLOSED_FORM_VALIDITY,
    })
}

/// Double integral
/// `kappa^2 ∫_0^∞ dt e^{-kappa t} ∫_0^t dt' e^{kappa t'} p_211(t')`
/// by nested trapezoidal quadrature with Richardson extrapolation.
///
/// The inner integral `G(t) = ∫_0^t e^{-kappa (t - t')} p_211(t') dt'` is
/// advanced with `G(t + h) = e^{-kappa h} G(t) + trapezoid`, which avoids the
/// overflow of `e^{kappa t'}` on long horizons.
pub fn pn_from_p211_double_integral(kappa: f64) -> Result<f64> {
    require_positive(kappa)?;
    const TARGET: f64 = 1e-8;
    // integrand envelope e^{-kappa t} falls below 1e-10 beyond this
    let horizon = 10f64.ln() * 10.0 / kappa;
    let nested = |n: usize| -> f64 {
        let h = horizon / n as f64;
        let decay = (-kappa * h).exp();
        let (mut g, mut outer) = (0.0, 0.0);
        let mut f_prev = two_photon_p211(0.0, kappa);
        for i in 1..=n {
            let f = two_photon_p211(i as f64 * h, kappa);
            let g_next = decay * g + 0.5 * h * (decay * f_prev + f);
            outer += 0.5 * h * (g + g_next);
            g = g_next;
            f_prev = f;
        }
        kappa * kappa * outer
    };
    // resolve the sqrt(3) oscillation with at least ~50 points per period
    let mut n = ((horizon * 16.0).ceil() as usize).max(1024);
    let mut coarse = nested(n);
    let mut achieved = f64::INFINITY;
    for _ in 0..6 {
        n *= 2;
        let fine = nested(n);
        let extrapolated = (4.0 * fine - coarse) / 3.0;
        achieved = (fine - coarse).abs() / 3.0;
        if achieved < TARGET {
            return Ok(extrapolated);
        }
        coarse = fine;
    }
    Err(Error::Quadrature {
        achieved,
        target: TARGET,
    })
}

/// Trapezoidal `∫ f dt` over uniformly spaced samples, refined by one
/// Richardson step against the same rule on every second sample.
pub fn integrate_uniform(values: &[f64], h: f64) -> f64 {
    let trapezoid = |v: &[f64], h: f64| -> f64 {
        match v.len() {
            0 | 1 => 0.0,
            n => h * (0.5 * (v[0] + v[n - 1]) + v[1..n - 1].iter().sum::<f64>()),
        }
    };
    let n = values.len();
    if n < 5 {
        return trapezoid(values, h);
    }
    // even number of intervals for the coarse rule; the remainder is shared
    let m = if (n - 1) % 2 == 0 { n } else { n - 1 };
    let fine = trapezoid(&values[..m], h);
    let coarse_samples: Vec<f64> = values[..m].iter().step_by(2).copied().collect();
    let coarse = trapezoid(&coarse_samples, 2.0 * h);
    let tail = trapezoid(&values[m - 1..], h);
    (4.0 * fine - coarse) / 3.0 + tail
}

/// Split of the two-photon `O2_st` into the NIE-sourced part `p_N` and the
/// IE-sourced part `p_I`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct TwoPhotonSplit {
    pub kappa: f64,
    /// `kappa ∫ p_{2,1,0; 2,1,0} dt`.
    pub p_n: f64,
    /// `kappa ∫ p_{2,0,1; 2,0,1} dt`.
    pub p_i: f64,
    /// `kappa ∫ p_{1,1,0; 1,1,0} dt`, the quadrature estimate of `O1_st`.
    pub o1_quadrature: f64,
    pub o1_st: f64,
    pub o2_st: f64,
    pub t_converged: f64,
}

pub fn split_watch_elements() -> [ElementIndex; 3] {
    [
        ElementIndex::diagonal(BasisIndex::new(2, 1, 0)),
        ElementIndex::diagonal(BasisIndex::new(2, 0, 1)),
        ElementIndex::diagonal(BasisIndex::new(1, 1, 0)),
    ]
}

/// Runs a two-photon Fock + vacuum configuration to its steady state and
/// integrates the feeding elements of `O1_st` and `O2_st`.
///
/// The photon tolerance is tightened to `1e-10` so the recorded traces reach
/// the negligible tail of their exponential decay.
pub fn extract_pn_pi(config: &SimulationConfig) -> Result<TwoPhotonSplit> {
    require_positive(config.kappa)?;
    if !matches!(config.field1.kind, FieldKind::Fock { n: 2 })
        || config.field2.mean_photon_number() != 0.0
    {
        return Err(Error::Config(format!(
            "p_N/p_I split needs a two-photon Fock state and vacuum, got {} and {}",
            config.field1, config.field2
        )));
    }
    let mut cfg = config.clone();
    cfg.steady_tol_photon = cfg.steady_tol_photon.min(1e-10);
    for e in split_watch_elements() {
        if !cfg.watch.contains(&e) {
            cfg.watch.push(e);
        }
    }
    let run = run_steady_state(&cfg)?;
    if !run.result.converged {
        return Err(Error::NotConverged {
            t_max: run.result.t_converged,
        });
    }
    let kappa = cfg.kappa;
    let integral = |e: ElementIndex| -> f64 {
        let w: &ElementTrace = run
            .evolution
            .watched
            .iter()
            .find(|w| w.element == e)
            .expect("watched");
        let values: Vec<f64> = w.values.iter().map(|c| c.re).collect();
        kappa * integrate_uniform(&values, w.dt)
    };
    let [e210, e201, e110] = split_watch_elements();
    let split = TwoPhotonSplit {
        kappa,
        p_n: integral(e210),
        p_i: integral(e201),
        o1_quadrature: integral(e110),
        o1_st: run.result.o1_st,
        o2_st: run.result.o2_st,
        t_converged: run.result.t_converged,
    };
    let sum = split.p_n + split.p_i;
    if (sum - split.o2_st).abs() > SPLIT_CONSISTENCY * split.o2_st {
        return Err(Error::Integrity(format!(
            "p_N + p_I = {sum} disagrees with simulated O2_st = {}",
            split.o2_st
        )));
    }
    Ok(split)
}
