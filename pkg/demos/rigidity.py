"""Square-by-square rigidity statistics for wells I and diag(2, 1, 2)."""

import numpy as np

from gammafilm import Domain, Field3, PotentialSpec, check_matos, rigidity_diagnostic

B = np.diag([2.0, 1.0, 2.0])
spec = PotentialSpec.prototype(np.eye(3), B)
print("strongly incompatible:", check_matos(2.0, 2.0))

h = 0.1
dom = Domain.rectangle((-1, 1), (-1, 1), 80, 80, 4)


def mixed(x1, x2, x3, w=0.02):
    # left half near SO(3), right half near SO(3) B, glued across x1 = 0
    s = 0.5 * (1 + np.tanh(x1 / w))
    return np.stack([1.5 * x1 + 0.5 * w * np.log(np.cosh(x1 / w)), x2, h * x3 * (1 + s)], -1)


for name, u in [("identity", Field3.affine(dom, np.eye(3), h)),
                ("two phases", Field3.from_function(dom, mixed))]:
    rep = rigidity_diagnostic(spec, u, h, delta=0.1)
    print(f"{name:<11} counts (bad, A, B) = {rep.counts}  boundary = {rep.boundary_length}"
          f"  -> {rep.dominant_well}")
