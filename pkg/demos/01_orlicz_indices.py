"""Growth indices, the Young conjugate and the admissible integrability range.

Run with ``python3 demos/01_orlicz_indices.py``.
"""
import numpy as np

from orliczlab.young import build_model, conjugate_duality_check, estimate_indices, sobolev_conjugate
from orliczlab.harness.checks import theorem1_bound

# a pure power t^p has both indices equal to p
for p in (2.0, 3.0):
    ip = estimate_indices(build_model("power", p=p), "G")
    print(f"power p={p}: i_G={ip.i_lower:.6f} s_G={ip.s_upper:.6f}")

# the Zygmund model t^p log(e+t)^alpha sits strictly between p and p+alpha
Z = build_model("zygmund", p=2, alpha=1)
ip = estimate_indices(Z, "G")
print(f"zygmund p=2 alpha=1: i_G={ip.i_lower:.4f} s_G={ip.s_upper:.4f}")

# Young's inequality against the conjugate holds with equality at s = g(t)
t = np.logspace(-3, 3, 16)
print("duality holds on 16 samples:", all(conjugate_duality_check(Z, [x]) for x in t))

# the Sobolev conjugate of t^2 in 3D grows like t^6
t = np.logspace(-2, 2, 9)
B = sobolev_conjugate(build_model("power", p=2), 3, t)
print(f"log-log slope of the Sobolev conjugate: {np.polyfit(np.log(t), np.log(B), 1)[0]:.6f}")

# the gradient integrability range in 3D: (1, 6/5] for the Laplacian, narrower for Zygmund
print(f"q bound, p=2: {theorem1_bound(2, 2, 3):.6f}")
print(f"q bound, zygmund: {theorem1_bound(ip.i_lower, ip.s_upper, 3):.6f}")
