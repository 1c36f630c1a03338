"""Constrained first-order minimization of the discrete thin-film energy.

The optimizer is projected gradient descent with spectral (Barzilai-Borwein)
trial steps and Armijo backtracking. Only accepted steps enter the trace, so
the recorded energies never increase.
"""

from __future__ import annotations

from dataclasses import dataclass, field

import numpy as np

from .energy import EnergyReport, evaluate_3d
from .grid import Field3
from .potential import PotentialSpec
from .profiles import MinimizeOptions

ARMIJO = 1e-4
MAX_BACKTRACKS = 50
DEFAULT_TOL = 1e-6


@dataclass
class ConstraintSet:
    """Clamped nodes with prescribed values, plus optional mean anchoring.

    ``mask`` has the node shape of the domain; ``values`` holds the prescribed
    vectors (only the masked entries are read). With ``anchor_mean`` the
    average of the free nodal values is held fixed, which removes the
    translation invariance of the energy.
    """

    mask: np.ndarray
    values: np.ndarray
    anchor_mean: bool = False

    def __post_init__(self):
        self.mask = np.asarray(self.mask, dtype=bool)
        self.values = np.asarray(self.values, dtype=float)
        if self.values.shape != self.mask.shape + (3,):
            raise ValueError("values must have shape mask.shape + (3,)")
        if not np.all(np.isfinite(self.values[self.mask])):
            raise ValueError("clamped values must be finite")
        if not (self.mask.any() or self.anchor_mean):
            raise ValueError("constraints must clamp some nodes or anchor the mean")

    @classmethod
    def anchored(cls, domain) -> "ConstraintSet":
        """No clamps; only the mean is fixed."""
        shape = domain.node_shape
        return cls(np.zeros(shape, bool), np.zeros(shape + (3,)), anchor_mean=True)

    @classmethod
    def lateral(cls, boundary: Field3, layers: int = 2, axes=(0,)) -> "ConstraintSet":
        """Clamp ``layers`` node planes at both ends of each axis in ``axes``.

        Two layers fix both the value and the slope across the face, which is
        what the second-order term needs.
        """
        mask = np.zeros(boundary.domain.node_shape, dtype=bool)
        for ax in axes:
            idx = [slice(None)] * 3
            idx[ax] = slice(0, layers)
            mask[tuple(idx)] = True
            idx[ax] = slice(-layers, None)
            mask[tuple(idx)] = True
        return cls(mask, boundary.values.copy())

    def apply(self, values: np.ndarray) -> np.ndarray:
        out = values.copy()
        out[self.mask] = self.values[self.mask]
        return out

    def project(self, g: np.ndarray) -> np.ndarray:
        """Project a nodal gradient onto admissible directions."""
        g = g.copy()
        g[self.mask] = 0.0
        if self.anchor_mean:
            free = ~self.mask
            g[free] -= g[free].mean(axis=0)
        return g


@dataclass
class MinimizeResult:
    """Outcome of :func:`minimize_energy`.

    Unpacks as ``field, report, trace``. ``rows`` holds
    ``(iter, total, bulk, singular, gradnorm)`` for every accepted iterate.
    """

    field: Field3
    report: EnergyReport
    trace: list
    rows: list
    converged: bool
    gradnorm: float
    iterations: int
    seed: int
    flags: list = field(default_factory=list)

    def __iter__(self):
        return iter((self.field, self.report, self.trace))

    def trace_csv(self) -> str:
        lines = ["iter,total,bulk,singular,gradnorm"]
        lines += [f"{i},{t!r},{b!r},{s!r},{g!r}" for i, t, b, s, g in self.rows]
        return "\n".join(lines) + "\n"


def gradient_of_energy(spec: PotentialSpec, u: Field3, eps: float, h: float) -> Field3:
    """Exact gradient of the discrete 3D energy with respect to nodal values."""
    _, _, _, g = evaluate_3d(spec, u, eps, h, want_grad=True)
    return Field3(u.domain, g)


def minimize_energy(spec: PotentialSpec, initial: Field3, eps: float, h: float,
                    constraints: ConstraintSet, opts: MinimizeOptions | None = None
                    ) -> MinimizeResult:
    """Projected descent on the discrete energy from ``initial``.

    Clamped entries of ``initial`` are overwritten by the constraint values
    before the first evaluation. Stationarity is the sup-norm of the projected
    gradient divided by the cell volume, compared against ``opts.tol``
    (default 1e-6). If backtracking cannot find a decrease, the
    best iterate is returned with the ``"line_search_failure"`` flag.
    """
    opts = opts or MinimizeOptions()
    tol = DEFAULT_TOL if opts.tol is None else opts.tol
    dom = initial.domain
    if constraints.mask.shape != dom.node_shape:
        raise ValueError("constraint mask does not match the domain")
    vol = dom.cell_volume
    x = constraints.apply(initial.values)

    def evaluate(v):
        bulk, sing, _, g = evaluate_3d(spec, Field3(dom, v), eps, h, want_grad=True)
        return bulk, sing, constraints.project(g)

    bulk, sing, g = evaluate(x)
    E = bulk + sing
    gnorm = float(np.max(np.abs(g))) / vol
    rows = [(0, E, bulk, sing, gnorm)]
    flags = []
    alpha = None
    it = 0
    s_prev = y_prev = None
    while gnorm > tol and it < opts.max_iters:
        gg = float(np.sum(g * g))
        if alpha is None:
            alpha = 1e-2 / max(float(np.max(np.abs(g))), 1e-300)
        elif opts.step_rule == "bb_spectral" and s_prev is not None:
            sy = float(np.sum(s_prev * y_prev))
            alpha = float(np.sum(s_prev * s_prev)) / sy if sy > 0 else 2.0 * alpha
        else:
            alpha = 2.0 * alpha
        accepted = False
        for _ in range(MAX_BACKTRACKS):
            xt = x - alpha * g
            bt, st_, gt = evaluate(xt)
            Et = bt + st_
            if np.isfinite(Et) and Et <= E - ARMIJO * alpha * gg and Et < E:
                accepted = True
                break
            alpha *= 0.5
        if not accepted:
            flags.append("line_search_failure")
            break
        s_prev, y_prev = xt - x, gt - g
        x, g, E, bulk, sing = xt, gt, Et, bt, st_
        it += 1
        gnorm = float(np.max(np.abs(g))) / vol
        rows.append((it, E, bulk, sing, gnorm))
    converged = gnorm <= tol
    if not converged and "line_search_failure" not in flags:
        flags.append("max_iters")
    report = EnergyReport(bulk=bulk, singular=sing, total=E)
    return MinimizeResult(field=Field3(dom, x), report=report, trace=[r[1] for r in rows],
                          rows=rows, converged=converged, gradnorm=gnorm, iterations=it,
                          seed=opts.seed, flags=flags)
