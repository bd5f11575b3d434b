//! Quick cross-checks of the simulator against closed forms and structural
//! invariants, run by the `validate` subcommand.

use std::f64::consts::{PI, SQRT_2};

use lqed::analytics::{
    extract_pn_pi, pn_from_p211_double_integral, single_photon_steady_states,
    two_photon_pn_closed_form,
};
use lqed::density::classify_element;
use lqed::integrator::{evolve, run_steady_state, SimulationConfig};
use lqed::liouvillian::brute_force_classification;
use lqed::{Dims, FieldSpec, Result};
use serde::Serialize;

#[derive(Debug, Clone, Serialize)]
pub struct Check {
    pub name: &'static str,
    pub passed: bool,
    pub detail: String,
}

fn check(name: &'static str, passed: bool, detail: String) -> Check {
    Check {
        name,
        passed,
        detail,
    }
}

fn lossless_rabi() -> Result<Check> {
    let t = PI / SQRT_2;
    let n = (t / 0.005).ceil();
    let cfg = SimulationConfig::new(FieldSpec::fock(1), FieldSpec::vacuum(), 0.0)
        .with_dt(t / n)
        .with_t_max(t);
    let o2 = evolve(&cfg)?.trace.last().expect("sample").o2;
    Ok(check(
        "lossless single-photon transfer",
        (o2 - 1.0).abs() <= 1e-6,
        format!("O2(pi/sqrt2) = {o2:.10}"),
    ))
}

fn single_photon() -> Result<Check> {
    let kappa = 0.1;
    let run = run_steady_state(&SimulationConfig::new(FieldSpec::fock(1), FieldSpec::vacuum(), kappa))?;
    let (o1, _) = single_photon_steady_states(kappa)?;
    let r = run.result;
    let sum = r.o1_st + r.o2_st;
    Ok(check(
        "single-photon steady state",
        r.converged && (r.o1_st - o1).abs() <= 0.02 && (sum - 1.0).abs() <= 1e-4,
        format!("kappa {kappa}: O1_st {:.6} vs closed form {o1:.6}, O1_st + O2_st = {sum:.8}", r.o1_st),
    ))
}

fn double_integral() -> Result<Check> {
    let mut worst = 0.0f64;
    for kappa in [0.1, 0.5, 1.0, 1.5, 2.0, 3.0] {
        let q = pn_from_p211_double_integral(kappa)?;
        worst = worst.max((q - two_photon_pn_closed_form(kappa)?.value).abs());
    }
    Ok(check(
        "two-photon double integral vs closed form",
        worst <= 1e-4,
        format!("max deviation {worst:.2e}"),
    ))
}

fn two_photon_split() -> Result<Check> {
    let kappa = 0.5;
    let s = extract_pn_pi(&SimulationConfig::new(FieldSpec::fock(2), FieldSpec::vacuum(), kappa))?;
    let closed = two_photon_pn_closed_form(kappa)?.value;
    Ok(check(
        "two-photon p_N from simulation",
        (s.p_n - closed).abs() <= 0.01,
        format!(
            "kappa {kappa}: p_N {:.5} vs closed form {closed:.5}, p_I {:.5}, O2_st {:.5}",
            s.p_n, s.p_i, s.o2_st
        ),
    ))
}

fn classifier() -> Check {
    let dims = Dims::new(3, 3);
    let brute = brute_force_classification(dims);
    let basis: Vec<_> = dims.basis().collect();
    let mismatches = basis
        .iter()
        .flat_map(|&r| basis.iter().map(move |&c| (r, c)))
        .zip(&brute)
        .filter(|((r, c), b)| classify_element(dims, *r, *c) != **b)
        .count();
    check(
        "element classifier vs brute force",
        mismatches == 0,
        format!("{} elements, {mismatches} mismatches", brute.len()),
    )
}

fn invariants() -> Result<Check> {
    let cfg = SimulationConfig::new(FieldSpec::coherent(2f64.sqrt().into()), FieldSpec::fock(1), 0.4)
        .with_t_max(30.0);
    let ev = evolve(&cfg)?;
    let d = ev.diagnostics;
    let (lo, hi) = ev.trace.samples.iter().flat_map(|s| s.populations()).fold(
        (f64::INFINITY, f64::NEG_INFINITY),
        |(lo, hi), p| (lo.min(p), hi.max(p)),
    );
    Ok(check(
        "structural invariants",
        d.max_hermiticity_defect < 1e-10 && d.max_trace_leak < 1e-4 && lo >= -1e-8 && hi <= 1.0 + 1e-8,
        format!(
            "Hermiticity defect {:.1e}, trace leakage {:.1e}, populations in [{lo:.1e}, {hi:.9}]",
            d.max_hermiticity_defect, d.max_trace_leak
        ),
    ))
}

/// Runs every check; numerical errors inside a check count as failures.
pub fn run_all() -> Vec<Check> {
    let fallible: [(&'static str, fn() -> Result<Check>); 5] = [
        ("lossless single-photon transfer", lossless_rabi),
        ("single-photon steady state", single_photon),
        ("two-photon double integral vs closed form", double_integral),
        ("two-photon p_N from simulation", two_photon_split),
        ("structural invariants", invariants),
    ];
    let mut checks: Vec<Check> = fallible
        .iter()
        .map(|(name, f)| f().unwrap_or_else(|e| check(name, false, e.to_string())))
        .collect();
    checks.push(classifier());
    checks
}
