"""Approximate the Laplacian with a point mass and probe the gradient near the pole.

Run with ``python3 demos/03_dirac_solve_and_probe.py`` (a few seconds).
"""
from orliczlab.grid import Annulus, Grid, MeasureData
from orliczlab.norms import lebesgue_norm, marcinkiewicz_norm
from orliczlab.solver import OperatorSpec, sola_sequence
from orliczlab.young import plaplace_normalized

spec = OperatorSpec(plaplace_normalized(2))
g = Grid.cube(3, 1.0, 64)
levels = [1e2, 1e3, 1e4]
seq = sola_sequence(spec, MeasureData.dirac((0.0, 0.0, 0.0)), None, g, levels)
print("W^{1,1} increments between levels:", ", ".join(f"{x:.3e}" for x in seq.w11_increments))

# away from the pole the truncated solutions agree
ann = Annulus((0, 0, 0), 0.25, 0.75)
for level, m in zip(levels, seq.members):
    print(f"level {level:.0e}: M^3/2 on the annulus {marcinkiewicz_norm(m.Du, 1.5, ann):.4f}")

# |Du| ~ |x|^-2 near the pole: the weak norm settles, the strong norm keeps growing
Du = seq.members[-1].Du
for r in (0.5, 0.25, 0.125):
    a = Annulus((0, 0, 0), r, 0.75)
    print(f"inner radius {r:<6}: M^3/2 {marcinkiewicz_norm(Du, 1.5, a):.4f}  L^3/2 {lebesgue_norm(Du, 1.5, a):.4f}")
