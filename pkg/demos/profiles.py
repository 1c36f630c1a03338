"""Optimal-profile constants in the three thickness regimes."""

import numpy as np

from gammafilm import PotentialSpec, mm_straight_path_bound, solve_K0, solve_Kgamma, solve_Kinfty

# in-plane-equal wells: the subcritical problem is one-dimensional
iso = PotentialSpec.prototype(np.diag([0.0, 0.0, 1.0]), np.diag([0.0, 0.0, -1.0]))
k0 = solve_K0(iso, ell=8.0, n=512)
print(f"K0      = {k0.energy:.6f}   straight-path bound = {mm_straight_path_bound(iso):.6f}")

# rank-one connected wells with normal e1
A = np.diag([1.0, 0.0, 1.0])
generic = PotentialSpec.prototype(A, -A)
for gamma in (0.5, 1.0, 2.0):
    kg = solve_Kgamma(generic, gamma, ell=8.0, grid=(128, 16))
    print(f"K_gamma = {kg.energy:.6f}   gamma = {gamma}")

# wells e1(x)(1, 0, lambda) and its negative
for lam in (0.0, 0.5):
    a = np.outer([1.0, 0.0, 0.0], [1.0, 0.0, lam])
    kinf = solve_Kinfty(PotentialSpec.prototype(a, -a), lam, resolution=16)
    print(f"K_inf   = {kinf.energy:.6f}   lambda = {lam}, ell* = {kinf.ell:.2f}")
