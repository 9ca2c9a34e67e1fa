"""Support scan on random bumps: verdict on whether 0 lies in the support, fitted y-exponent."""
import argparse
from pathlib import Path

import numpy as np

from rankone import asymptotics as asy
from rankone import harness as H
from rankone import kernels as kn
from rankone.space import rh2

ap = argparse.ArgumentParser()
ap.add_argument("--bumps", type=int, default=20)
ap.add_argument("--nu", type=float, default=0.3)
ap.add_argument("--seed", type=int, default=0)
ap.add_argument("--out", default="out/scan")
args = ap.parse_args()

rng = np.random.default_rng(args.seed)
rows = []
for i in range(args.bumps):
    c, r = rng.uniform(-0.6, 0.6), rng.uniform(0.25, 0.8)
    res = asy.support_scan(kn.smooth_bump([c], r), rh2(), args.nu, abs(c) + r)
    truth = "nonzero-at-0" if abs(c) < r else "zero-at-0"
    rows.append({"bump": i, "center": c, "radius": r, "verdict": res.verdict, "truth": truth,
                 "exponent": res.exponent})
    print(f"{i:3d} c={c:+.3f} r={r:.3f} {res.verdict:13s} exponent {res.exponent:+.4f}"
          f"{'' if res.verdict == truth else '  MISMATCH'}")
H.emit_csv(rows, ["bump", "center", "radius", "verdict", "truth", "exponent"], Path(args.out) / "scan.csv")
