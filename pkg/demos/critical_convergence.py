"""Recovery energies along a critical schedule h = eps approach K_gamma."""

import numpy as np

from gammafilm import (Domain, InterfaceGeometry, PotentialSpec, build_recovery_critical_layered,
                       convergence_diagnostic, default_rho, energy_3d, solve_Kgamma)

A = np.diag([1.0, 0.0, 1.0])
spec = PotentialSpec.prototype(A, -A)
prof = solve_Kgamma(spec, 1.0, ell=8.0, grid=(128, 16))

dom = Domain.rectangle((-0.5, 0.5), (-0.5, 0.5), 128, 16, 16)
geom = InterfaceGeometry.layered(dom, [0.0])
sched = []
for eps in (0.1, 0.05, 0.025):
    u = build_recovery_critical_layered(geom, prof, eps, 1.0)
    E = energy_3d(spec, u, eps, eps).total
    sched.append((u, eps, eps))
    print(f"eps = {eps:<6} E = {E:.5f}   K_gamma * length = {prof.energy * geom.perimeter():.5f}")

rep = convergence_diagnostic(spec, sched, rho=default_rho(spec.wells))
print("off-well fractions:", [round(f, 4) for f in rep.off_well_fraction])
