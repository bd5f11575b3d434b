//! Standalone matplotlib scripts that redraw a run from its CSV files.

use std::path::{Path, PathBuf};

use lqed::{Error, Result};

pub const TRACE_SCRIPT: &str = "plot_trace.py";
pub const SWEEP_SCRIPT: &str = "plot_sweep.py";

const TRACE_TEMPLATE: &str = r#"#!/usr/bin/env python3
"""Populations of the three levels against time, read from {csv}."""
import csv
import pathlib

import matplotlib.pyplot as plt

here = pathlib.Path(__file__).resolve().parent
with open(here / "{csv}", newline="") as f:
    rows = list(csv.DictReader(f))

t = [float(r["t"]) for r in rows]
fig, ax = plt.subplots(figsize=(7, 4))
for key, label in (("O1", "$O_1$"), ("O2", "$O_2$"), ("O3", "$O_3$")):
    ax.plot(t, [float(r[key]) for r in rows], label=label)
ax.set_xlabel(r"$\tilde t$")
ax.set_ylabel("population")
ax.set_ylim(-0.02, 1.02)
ax.legend()
fig.tight_layout()
fig.savefig(here / "{stem}.pdf")
"#;

const SWEEP_TEMPLATE: &str = r#"#!/usr/bin/env python3
"""Steady-state population of level 2 against the loss rate, read from {csv}."""
import csv
import pathlib
from collections import OrderedDict

import matplotlib.pyplot as plt

here = pathlib.Path(__file__).resolve().parent
series = OrderedDict()
with open(here / "{csv}", newline="") as f:
    for r in csv.DictReader(f):
        series.setdefault(r["field1"], []).append((float(r["kappa"]), float(r["O2_st"])))

fig, ax = plt.subplots(figsize=(7, 4.5))
inset = ax.inset_axes([0.55, 0.5, 0.42, 0.45])
for label, points in series.items():
    kappa, o2 = zip(*points)
    ax.plot(kappa, o2, marker=".", label=label)
    zoom = [(k, o) for k, o in points if 0.5 <= k <= 2.0]
    if zoom:
        inset.plot(*zip(*zoom), marker=".")
ax.set_xscale("log")
ax.set_xlabel(r"$\tilde\kappa$")
ax.set_ylabel(r"$O_{2,\mathrm{st}}$")
ax.legend(loc="lower left")
inset.set_title(r"$0.5 \leq \tilde\kappa \leq 2$", fontsize=8)
inset.tick_params(labelsize=7)
fig.tight_layout()
fig.savefig(here / "{stem}.pdf")
"#;

fn emit(template: &str, dir: &Path, csv: &str, script: &str) -> Result<PathBuf> {
    let csv_path = dir.join(csv);
    if !csv_path.is_file() {
        return Err(Error::io(
            &csv_path,
            std::io::Error::new(std::io::ErrorKind::NotFound, "plot input is missing"),
        ));
    }
    let stem = script.trim_end_matches(".py");
    let body = template.replace("{csv}", csv).replace("{stem}", stem);
    let path = dir.join(script);
    std::fs::write(&path, body).map_err(|e| Error::io(&path, e))?;
    Ok(path)
}

/// Script plotting O1, O2 and O3 against time from `dir/csv`.
pub fn emit_trace_script(dir: &Path, csv: &str) -> Result<PathBuf> {
    emit(TRACE_TEMPLATE, dir, csv, TRACE_SCRIPT)
}

/// Script plotting O2_st against kappa per variant, with an inset zoomed on
/// the intermediate regime.
pub fn emit_sweep_script(dir: &Path, csv: &str) -> Result<PathBuf> {
    emit(SWEEP_TEMPLATE, dir, csv, SWEEP_SCRIPT)
}
