"""Lorentz, Marcinkiewicz and Morrey norms checked against closed forms.

Run with ``python3 demos/02_norm_oracles.py``.
"""
import math

import numpy as np

from orliczlab.grid import Annulus, Grid, GridField
from orliczlab.norms import embedding_chain_check, lebesgue_norm, lorentz_norm, marcinkiewicz_norm, morrey_norm

# indicator of an ellipsoid: ||1_E||_{L(q,s)} = (q/s)^(1/s) |E|^(1/q)
g = Grid.cube(3, 1.0, 40)
X = g.coords()
E = (X[0] ** 2 + 2 * X[1] ** 2 + X[2] ** 2 < 0.5).astype(float)
f = GridField(g, E)
measE = E.sum() * g.cell_volume
for q, s in ((1.5, 1.0), (1.5, 2.0), (3.0, math.inf)):
    want = measE ** (1 / q) if math.isinf(s) else (q / s) ** (1 / s) * measE ** (1 / q)
    got = lorentz_norm(f, q, s)
    print(f"L({q},{s}) of indicator: {got:.6f}  closed form {want:.6f}")

# |x|^-2 lies in weak L^{3/2} but not in L^{3/2}; nodes within 4h of the pole are skipped
g = Grid.cube(3, 1.0, 64)
r2 = np.maximum(sum(x * x for x in g.coords()), g.h**2)
sing = GridField(g, 1.0 / r2)
ann = Annulus((0, 0, 0), 4 * g.h, 10.0)
print(f"M^3/2 norm {marcinkiewicz_norm(sing, 1.5, ann):.4f}  closed form {(4 * math.pi / 3) ** (2 / 3):.4f}")
print(f"L^3/2 norm {lebesgue_norm(sing, 1.5, ann):.4f}  (grows as h shrinks)")

# embedding chain L^q >= L(q,t) >= L(q,r) >= M^q up to explicit constants
rng = np.random.default_rng(7)
g2 = Grid.cube(2, 1.0, 64)
field = GridField(g2, np.kron(rng.exponential(size=(5, 5)), np.ones((13, 13))))
rep = embedding_chain_check(field, 1.0, 1.5, 2.0)
print("embedding chain holds:", rep.passed)

# Morrey with theta = n is the plain Lebesgue norm
print(f"Morrey theta=n {morrey_norm(field, 2.0, 2.0):.6f}  L^2 {lebesgue_norm(field, 2.0):.6f}")
