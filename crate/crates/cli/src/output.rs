use std::fmt::Write as _;

use shapeopt::descent::RunRecord;

use crate::CliError;

/// Python script plotting `history.csv` (objective, gradient norm and mesh
/// quality against the iteration) into `history.png`.
pub fn plot_script() -> &'static str {
    r#"#!/usr/bin/env python3
"""Plots history.csv from the directory containing this script."""
import csv
import math
import os
import sys

import matplotlib

matplotlib.use("Agg")
import matplotlib.pyplot as plt

here = os.path.dirname(os.path.abspath(__file__))
path = sys.argv[1] if len(sys.argv) > 1 else os.path.join(here, "history.csv")
with open(path) as fh:
    rows = list(csv.DictReader(fh))
it = [int(r["iter"]) for r in rows]
obj = [float(r["J"]) for r in rows]
grad = [math.sqrt(max(float(r["grad_energy"]), 0.0)) for r in rows]
quality = [float(r["min_radius_ratio"]) for r in rows]

fig, ax = plt.subplots(1, 3, figsize=(13, 4))
ax[0].plot(it, obj)
ax[0].set_title("objective")
ax[1].semilogy(it, grad)
ax[1].set_title("gradient norm")
ax[2].plot(it, quality)
ax[2].set_title("min radius ratio")
for a in ax:
    a.set_xlabel("iteration")
fig.tight_layout()
fig.savefig(os.path.join(os.path.dirname(os.path.abspath(path)), "history.png"), dpi=120)
"#
}

/// Python script plotting `sweep.csv` into `sweep.png`.
pub(crate) fn sweep_plot_script() -> &'static str {
    r#"#!/usr/bin/env python3
"""Plots sweep.csv from the directory containing this script."""
import csv
import os

import matplotlib

matplotlib.use("Agg")
import matplotlib.pyplot as plt

here = os.path.dirname(os.path.abspath(__file__))
with open(os.path.join(here, "sweep.csv")) as fh:
    rows = [r for r in csv.DictReader(fh) if r["J"]]
fig, ax = plt.subplots(figsize=(5, 4))
ax.plot([float(r["alpha"]) for r in rows], [float(r["J"]) for r in rows], marker="o")
ax.set_xlabel("alpha")
ax.set_ylabel("J")
fig.tight_layout()
fig.savefig(os.path.join(here, "sweep.png"), dpi=120)
"#
}

/// Aligns several run histories by iteration. A single history is passed
/// through unchanged.
pub fn compare_histories(runs: &[(String, RunRecord)]) -> Result<String, CliError> {
    match runs {
        [] => Err(CliError::Config("nothing to compare".into())),
        [(_, only)] => Ok(only.to_csv()),
        _ => {
            let mut out = String::from("iter");
            for (label, _) in runs {
                let _ = write!(out, ",{label}_J,{label}_grad_norm,{label}_min_radius_ratio");
            }
            out.push('\n');
            let n = runs.iter().map(|(_, r)| r.rows.len()).max().unwrap_or(0);
            for i in 0..n {
                let _ = write!(out, "{i}");
                for (_, rec) in runs {
                    match rec.rows.get(i) {
                        Some(r) => {
                            let _ = write!(
                                out,
                                ",{:e},{:e},{:e}",
                                r.objective,
                                r.grad_energy.max(0.0).sqrt(),
                                r.min_radius_ratio
                            );
                        }
                        None => out.push_str(",,,"),
                    }
                }
                out.push('\n');
            }
            Ok(out)
        }
    }
}
