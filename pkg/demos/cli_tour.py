#!/usr/bin/env python
"""Driving the command line interface end to end in a scratch directory.

Every command reads a flat key = value config, writes CSV/JSON artifacts
into --out, and signals through its exit code: 0 ok, 2 tolerance failure,
3 integrity failure, 4 blow-up, 64 usage error. Fixed seeds make all
artifacts byte-reproducible, so the CSVs can be diffed across machines.
"""

import json
import pathlib
import tempfile

from mhd2d import cli

root = pathlib.Path(tempfile.mkdtemp(prefix="mhd2d-tour-"))
print(f"workspace: {root}\n")


def sh(argv):
    rc = cli.main(argv)
    print(f"$ mhd2d {' '.join(argv)}\n  -> exit {rc}\n")
    return rc


# a decay study: writes decay_<label>.csv per curve plus decay_fits.json
decay_cfg = root / "decay.cfg"
decay_cfg.write_text("t.count = 60\nwindow.lo = 1e2\nj = 0\n")
sh(["linear-decay", "--config", str(decay_cfg), "--out", str(root / "decay"),
    "--quiet"])
fits = json.loads((root / "decay" / "decay_fits.json").read_text())
for f in fits["fits"]:
    print(f"  {f['label']:>3}: slope {f['slope']:+.4f} "
          f"(expected {f['expected']:+.2f})")
print()

# a short nonlinear run: diagnostics.csv, initial/final snapshots,
# cumulative.json with the G(T)^2 <= 4 E(0)^2 verdict
run_cfg = root / "run.cfg"
run_cfg.write_text(
    "n1 = 64\nn2 = 64\ndt = 0.04\nt_end = 2.0\noutput.every = 0.2\n"
    "l1 = 6.283185307179586\nl2 = 6.283185307179586\n"
    "data.kind = random\ndata.delta = 0.01\n")
sh(["nonlinear-run", "--config", str(run_cfg), "--out", str(root / "run"),
    "--seed", "5", "--quiet"])
cum = json.loads((root / "run" / "cumulative.json").read_text())
print(f"  G^2 = {cum['G_sq']:.4e} vs 4 E0^2 = {cum['four_E0_sq']:.4e}, "
      f"holds: {cum['small_data_bound_holds']}\n")

# the propagator bound scan, then refit one of the decay curves from disk
lemma_cfg = root / "lemma.cfg"
lemma_cfg.write_text("xi1.count = 60\nt.count = 15\nsamples = 10\n")
sh(["audit-lemma", "--config", str(lemma_cfg), "--out", str(root / "lemma"),
    "--quiet"])

fit_cfg = root / "fit.cfg"
fit_cfg.write_text(f"input = {root / 'decay' / 'decay_B1.csv'}\n"
                   "window.lo = 1e2\nexpected = -0.25\n")
sh(["fit", "--config", str(fit_cfg), "--out", str(root / "fit")])

# exit codes are part of the contract: a usage error never masquerades
# as a tolerance failure
rc = cli.main(["fit", "--config", str(root / "missing.cfg"), "--quiet"])
print(f"missing config exits with {rc} (usage error)")

print("\nartifacts:")
for p in sorted(root.rglob("*")):
    if p.is_file():
        print(f"  {p.relative_to(root)}")
