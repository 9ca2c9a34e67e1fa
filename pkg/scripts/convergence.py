"""Finite-difference convergence of (Delta - lambda) f for the basic eigenfunctions.

Writes convergence.csv (space, field, h, residual) and a gnuplot script per space.
"""
import argparse
from pathlib import Path

import numpy as np

from rankone import harness as H
from rankone import kernels as kn
from rankone import space as spc
from rankone.forms import kernel_field, power_field, q_field

ap = argparse.ArgumentParser()
ap.add_argument("--nu", type=H.parse_complex, default=0.3)
ap.add_argument("--out", default="out/convergence")
args = ap.parse_args()
out = Path(args.out)
nu = args.nu

for S in (spc.rh2(), spc.rh3()):
    lam = S.rho**2 - nu**2
    x, y = np.full(S.n, -0.2), 1.1
    fields = {"y^s": power_field(S, nu),
              "r_nu": kernel_field(S, np.full(S.n, -0.4), nu),
              "q_nu": q_field(kn.resolvent_profile(nu, S), np.full(S.n, 0.5), 0.2)}
    rows = []
    for name, f in fields.items():
        for h in y * np.geomspace(0.16, 0.005, 12):
            r = abs(spc.laplacian_apply(f.value, S, x, y, h) - lam * f(x, y))
            rows.append({"space": S.name, "field": name, "h": h, "residual": r})
        sub = [r for r in rows if r["field"] == name]
        hs = np.array([r["h"] for r in sub])
        res = np.array([r["residual"] for r in sub])
        m = hs <= 0.09 * y
        print(f"{S.name} {name}: slope {np.polyfit(np.log(hs[m]), np.log(res[m]), 1)[0]:.2f}")
    p = H.emit_csv(rows, ["space", "field", "h", "residual"], out / f"convergence-{S.name}.csv")
    H.emit_plotscript(p, "loglog", 3, 4)
print(f"wrote {out}")
