"""Round trip eigenfunction -> cocycle -> eigenfunction for a Maass-type handle read from a file.

Defaults to the synthetic coefficient file next to this script. Its coefficients are made up,
so the handle is a Delta-eigenfunction with the right Fourier shape but is not Gamma(2)-invariant;
the round trip reproduces it anyway since the cocycle is built from the function itself.
"""
import argparse
from pathlib import Path

import numpy as np

from rankone import complex as cx
from rankone import harness as H
from rankone import transform as tr

ap = argparse.ArgumentParser()
ap.add_argument("maass", nargs="?", default=str(Path(__file__).with_name("synthetic_maass.txt")))
ap.add_argument("--nmax", type=int, default=None)
ap.add_argument("--Y", type=float, default=4.0)
args = ap.parse_args()

h = H.load_maass(args.maass, n_max=args.nmax)
rep = tr.decay_probe(h)
print(f"decay exponent {rep.exponent:.2f}, quick: {rep.quick}")
T = cx.build_gamma2_tessellation(args.Y)
X, Y = tr.probe_points(10, 0)
psi = tr.cocycle_from_eigenfunction(h, T)
hv = h(X, Y)
sc = np.max(np.abs(hv))
for radius in (1, 2):
    u = tr.reconstruct_u(psi, X, Y, radius=radius)
    print(f"radius {radius}: max relative round trip error {np.max(np.abs(u - hv)) / sc:.3e}")
