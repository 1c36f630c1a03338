"""Optimal transition profiles and the interfacial constants K_0, K_gamma, K_inf.

All three problems are discretized on uniform grids and minimized over the
free nodal values by a Newton iteration on the current branch of the
potential (each branch is convex), with Armijo backtracking. Well clamps are hard: clamped nodes are
not unknowns. In the two-dimensional problems the clamp bands carry the
affine well maps plus a free constant vector ``+c`` (right band) and ``-c``
(left band), which is optimized together with the interior.
"""

from __future__ import annotations

import os
from concurrent.futures import ThreadPoolExecutor
from dataclasses import dataclass, field

import numpy as np
from scipy.integrate import quad
import scipy.sparse as sp

from ._newton import PiecewiseConvexProblem
from .errors import IncompatibleWells
from .grid import TensorStencil
from .potential import PotentialSpec


@dataclass
class MinimizeOptions:
    """Optimizer settings shared by the profile solvers and :mod:`gammafilm.minimize`.

    Attributes
    ----------
    max_iters : int
        Iteration cap per solve.
    tol : float or None
        Optimality tolerance on the sup-norm of the projected gradient,
        measured per unit node weight. ``None`` picks the per-solver
        default (1e-8 in 1D, 1e-6 in 2D, 1e-6 for field minimization).
    step_rule : {"bb_spectral", "backtracking"}
        Step rule of the field minimizer.
    seed : int
        Seed for random starts and perturbations.
    ell_tol : float
        Allowed relative energy drop when the profile length is doubled.
    n_starts : int
        Number of starts for the two-dimensional profile problems.
    """

    max_iters: int = 20000
    tol: float | None = None
    step_rule: str = "bb_spectral"
    seed: int = 0
    ell_tol: float = 1e-3
    n_starts: int = 3

    def __post_init__(self):
        if self.max_iters < 1:
            raise ValueError("max_iters must be >= 1")
        if self.tol is not None and self.tol <= 0:
            raise ValueError("tol must be positive")
        if self.step_rule not in ("bb_spectral", "backtracking"):
            raise ValueError(f"unknown step rule {self.step_rule!r}")


def n_threads() -> int:
    """Worker cap from ``GAMMA_FILM_THREADS`` (default 1)."""
    try:
        return max(1, int(os.environ.get("GAMMA_FILM_THREADS", "1")))
    except ValueError:
        return 1


def _require_reduced(spec: PotentialSpec):
    A, B = spec.wells.A, spec.wells.B
    if np.abs(A[:, 1]).max() > 1e-12 or np.abs(B[:, 1]).max() > 1e-12:
        raise IncompatibleWells("profile problems need wells with zero second columns "
                                "(normalize them first)")
    return spec.wells.reduced()


# -- one-dimensional problem -------------------------------------------------------------

@dataclass
class ProfileSolution1D:
    """Discrete optimal path ``phi = (phi1, phi2)`` on ``[-ell, ell]``.

    Attributes
    ----------
    ell : float
        Half-length of the profile interval.
    n : int
        Number of intervals (``n + 1`` nodes).
    t : ndarray
        Node coordinates.
    phi1, phi2 : ndarray, shape (n + 1, 3)
        The two components of the path.
    energy : float
        Estimate of K_0.
    optimality : float
        Sup-norm of the free gradient per unit node weight.
    converged : bool
        Whether ``optimality <= tol``.
    ell_drop : float or None
        Energy decrease when the interval is doubled (relative).
    """

    ell: float
    n: int
    t: np.ndarray
    phi1: np.ndarray
    phi2: np.ndarray
    energy: float
    optimality: float
    converged: bool
    ell_drop: float | None = None
    ell_ok: bool | None = None
    trace: list = field(default_factory=list)
    clamp_nodes: int = 2

    def to_json(self) -> dict:
        return {"K": self.energy, "ell": self.ell, "grid": [self.n], "optimality": self.optimality,
                "converged": self.converged, "ell_drop": self.ell_drop}


def k0_energy(spec: PotentialSpec, phi1, phi2, dt: float, want_grad: bool = False):
    """Trapezoidal energy of a path with forward-difference derivatives."""
    w = np.full(len(phi1), dt)
    w[0] = w[-1] = 0.5 * dt
    Wv = spec.reduced(phi1, phi2)
    d1 = np.diff(phi1, axis=0)
    d2 = np.diff(phi2, axis=0)
    E = float(w @ Wv + (np.sum(d1 * d1) + 2.0 * np.sum(d2 * d2)) / dt)
    if not want_grad:
        return E
    g1, g2 = spec.reduced_grad(phi1, phi2)
    g1 = g1 * w[:, None]
    g2 = g2 * w[:, None]
    g1[:-1] -= 2.0 * d1 / dt
    g1[1:] += 2.0 * d1 / dt
    g2[:-1] -= 4.0 * d2 / dt
    g2[1:] += 4.0 * d2 / dt
    return E, g1, g2


def _tanh_path(t, Ahat, Bhat, width=1.0):
    s = np.tanh(t / width) / np.tanh(t[-1] / width)
    mid, half = 0.5 * (Ahat + Bhat), 0.5 * (Ahat - Bhat)
    path = mid[None] + s[:, None, None] * half[None]
    return path[:, :, 0].copy(), path[:, :, 1].copy()


def _path_problem(spec, n, dt, clamp, Ahat, Bhat):
    N = n + 1
    I = sp.identity(3 * N, format="csr")
    Z = sp.csr_matrix((3 * N, 3 * N))
    L1 = sp.hstack([I, Z], format="csr")
    L2 = sp.hstack([Z, I], format="csr")
    w = np.full(N, dt)
    w[0] = w[-1] = 0.5 * dt
    D = sp.kron(sp.diags([-np.ones(n), np.ones(n)], [0, 1], shape=(n, N)), sp.identity(3))
    Z = sp.csr_matrix((3 * n, 3 * N))
    quad = [(1.0 / dt, sp.hstack([D, Z], format="csr")),
            (2.0 / dt, sp.hstack([Z, D], format="csr"))]
    free_nodes = np.arange(clamp, N - clamp)
    m = len(free_nodes)
    cols = np.arange(3 * m)
    rows = (3 * free_nodes[:, None] + np.arange(3)).ravel()
    S = sp.csr_matrix((np.ones(3 * m), (rows, cols)), shape=(3 * N, 3 * m))
    P = sp.block_diag([S, S], format="csr")
    x0 = np.zeros((2, N, 3))
    x0[0, :clamp], x0[1, :clamp] = Bhat[:, 0], Bhat[:, 1]
    x0[0, N - clamp:], x0[1, N - clamp:] = Ahat[:, 0], Ahat[:, 1]
    return PiecewiseConvexProblem(spec, L1, L2, w, quad, P, x0.ravel()), free_nodes


def _solve_path(spec, t, init1, init2, clamp, tol, max_iters):
    n = len(t) - 1
    dt = t[1] - t[0]
    Ahat, Bhat = spec.wells.reduced()
    prob, free = _path_problem(spec, n, dt, clamp, Ahat, Bhat)
    z0 = np.concatenate([init1[free].ravel(), init2[free].ravel()])
    z, E, gmax, trace = prob.solve(z0, tol * dt, max_iters)
    x = (prob.x0 + prob.P @ z).reshape(2, n + 1, 3)
    return x[0].copy(), x[1].copy(), E, gmax / dt, trace


def solve_K0(spec: PotentialSpec, ell: float = 8.0, n: int = 512,
             opts: MinimizeOptions | None = None, refine: bool = True,
             clamp_nodes: int = 2) -> ProfileSolution1D:
    """Minimize the one-dimensional profile energy on ``[-ell, ell]``.

    The discrete energy is the trapezoidal sum of the reduced density plus
    forward-difference approximations of ``|phi1'|^2 + 2 |phi2'|^2``. The
    first and last ``clamp_nodes`` nodes are pinned to the reduced wells, so
    the path is constant near both ends.

    With ``refine=True`` the problem is solved again on ``[-2 ell, 2 ell]``
    at the same spacing, and the relative energy drop is reported in
    ``ell_drop`` (compared against ``opts.ell_tol``).
    """
    opts = opts or MinimizeOptions()
    tol = opts.tol if opts.tol is not None else 1e-8
    if n < 16:
        raise ValueError("n must be at least 16")
    if ell <= 0:
        raise ValueError("ell must be positive")
    _require_reduced(spec)
    Ahat, Bhat = spec.wells.reduced()
    t = np.linspace(-ell, ell, n + 1)
    best = None
    starts = [(1.0, 0.0), (0.5 * np.sqrt(2.0), 0.0), (1.0, 0.05)][:max(1, opts.n_starts)]
    rng = np.random.default_rng(opts.seed)
    for width, noise in starts:
        i1, i2 = _tanh_path(t, Ahat, Bhat, width)
        if noise:
            bump = np.exp(-t ** 2)[:, None]
            i1 = i1 + noise * bump * rng.standard_normal(3)
            i2 = i2 + noise * bump * rng.standard_normal(3)
        sol = _solve_path(spec, t, i1, i2, clamp_nodes, tol, opts.max_iters)
        if best is None or sol[2] < best[2]:
            best = sol
    phi1, phi2, E, opt, trace = best
    out = ProfileSolution1D(ell=float(ell), n=int(n), t=t, phi1=phi1, phi2=phi2, energy=E,
                            optimality=opt, converged=opt <= tol, trace=trace,
                            clamp_nodes=clamp_nodes)
    if refine:
        t2 = np.linspace(-2 * ell, 2 * ell, 2 * n + 1)
        pad = n // 2
        i1 = np.concatenate([np.repeat(Bhat[None, :, 0], pad, 0), phi1,
                             np.repeat(Ahat[None, :, 0], pad, 0)])
        i2 = np.concatenate([np.repeat(Bhat[None, :, 1], pad, 0), phi2,
                             np.repeat(Ahat[None, :, 1], pad, 0)])
        E2 = _solve_path(spec, t2, i1, i2, clamp_nodes, tol, opts.max_iters)[2]
        out.ell_drop = float((E - E2) / max(E, 1e-300))
        out.ell_ok = out.ell_drop <= opts.ell_tol
    return out


def mm_straight_path_bound(spec: PotentialSpec) -> float:
    """Straight-segment value ``2 int_0^1 sqrt(w(s) m) ds`` from (B1,B3) to (A1,A3).

    ``w`` is the reduced density on the segment and ``m`` the squared length
    of the tangent in the metric with weight 1 on the first and 2 on the
    second component. By the arithmetic-geometric mean inequality this is an
    upper bound for K_0.
    """
    _require_reduced(spec)
    Ahat, Bhat = spec.wells.reduced()
    D = Ahat - Bhat
    m = float(D[:, 0] @ D[:, 0] + 2.0 * D[:, 1] @ D[:, 1])

    def f(s):
        P = Bhat + s * D
        return np.sqrt(max(float(spec.reduced(P[:, 0], P[:, 1])), 0.0) * m)

    # the Maxwell set is crossed where the two branch distances agree
    dA = np.linalg.norm(Ahat - Bhat)
    pts = [0.5] if dA > 0 else None
    val, _ = quad(f, 0.0, 1.0, points=pts, limit=200, epsabs=1e-13, epsrel=1e-12)
    return 2.0 * val


# -- two-dimensional problems ---------------------------------------------------------------

@dataclass
class ProfileSolution2D:
    """Discrete optimal field ``v`` on a strip or on the tilted periodic cell.

    Attributes
    ----------
    kind : {"Kgamma", "Kinfty"}
    ell : float
        Cutoff length (strip length for K_gamma, scale factor for K_inf).
    gamma, lam : float or None
        Strip height for K_gamma, tilt for K_inf.
    grid : tuple of int
        Cell counts ``(n1, n2)``.
    s1, s2 : ndarray
        Node coordinates along the two grid axes. For K_gamma these are
        ``y1 in [-ell/2, ell/2]`` and ``y2 in [-gamma/2, gamma/2]``; for
        K_inf they are ``s = y . nu`` in ``[-1/2, 1/2]`` and the periodic
        coordinate ``tau = y . nu_perp`` in ``[-1/2, 1/2)``.
    v : ndarray
        Nodal values, shape ``(len(s1), len(s2), 3)``.
    c : ndarray, shape (3,)
        Clamp constant: ``v = affine_A + c`` on the right band and
        ``affine_B - c`` on the left band.
    energy : float
        Estimate of K_gamma (with the 1/gamma factor) or K_inf (with the
        sqrt(1 + lam^2) factor).
    periodic : bool
    clamp_width : float
        Band width as a fraction of the cross-interface length.
    A_hat, B_hat : ndarray, shape (3, 2)
        Clamp gradients on the right and left bands in the solver's
        coordinates.
    """

    kind: str
    ell: float
    gamma: float | None
    lam: float | None
    grid: tuple
    s1: np.ndarray
    s2: np.ndarray
    v: np.ndarray
    c: np.ndarray
    energy: float
    periodic: bool
    clamp_width: float
    optimality: float = float("nan")
    converged: bool = False
    trace: list = field(default_factory=list)
    start_energies: list = field(default_factory=list)
    ell_scan: list = field(default_factory=list)
    A_hat: np.ndarray | None = None
    B_hat: np.ndarray | None = None

    def to_json(self) -> dict:
        return {"K": self.energy, "ell": self.ell, "grid": list(self.grid),
                "optimality": self.optimality, "converged": self.converged,
                "kind": self.kind, "gamma": self.gamma, "lambda": self.lam,
                "clamp_width": self.clamp_width}


class StripProblem:
    """Discrete energy of a K_gamma strip or of the tilted K_inf cell.

    The energy is ``prefactor * sum area * (cw * W(zeta) + ch * |hess v|^2)``
    with ``zeta = (d_y1 v, d_y2 v)`` obtained from the grid derivatives by
    the fixed orthogonal map ``T`` (identity for the strip, the rotation
    ``(nu, nu_perp)`` for the tilted cell).
    """

    def __init__(self, spec: PotentialSpec, kind: str, ell: float, n1: int, n2: int,
                 gamma: float | None = None, lam: float | None = None,
                 clamp_width: float = 0.05):
        self.spec = spec
        self.kind = kind
        self.ell = float(ell)
        self.n1, self.n2 = int(n1), int(n2)
        self.clamp_width = float(clamp_width)
        Ahat, Bhat = _require_reduced(spec)
        if kind == "Kgamma":
            if gamma is None or gamma <= 0:
                raise ValueError("gamma must be positive")
            self.gamma, self.lam = float(gamma), None
            self.periodic = False
            self.s1 = np.linspace(-0.5 * ell, 0.5 * ell, n1 + 1)
            self.s2 = np.linspace(-0.5 * gamma, 0.5 * gamma, n2 + 1)
            self.T = np.eye(2)
            self.cw, self.ch = 1.0, 1.0
            self.prefactor = 1.0 / self.gamma
            half = 0.5 * ell
            band = clamp_width * ell
        elif kind == "Kinfty":
            self.gamma, self.lam = None, float(lam)
            self.periodic = True
            self.s1 = np.linspace(-0.5, 0.5, n1 + 1)
            self.s2 = -0.5 + np.arange(n2) / n2
            r = np.sqrt(1.0 + self.lam ** 2)
            nu = np.array([1.0, self.lam]) / r
            nup = np.array([-self.lam, 1.0]) / r
            # zeta_j = sum_k T[j, k] d_k v with d_0 = d/ds and d_1 = d/dtau
            self.T = np.array([[nu[0], nup[0]], [nu[1], nup[1]]])
            self.cw, self.ch = self.ell, 1.0 / self.ell
            self.prefactor = r
            half = 0.5
            band = clamp_width
        else:
            raise ValueError(kind)
        d1 = self.s1[1] - self.s1[0]
        d2 = (self.s2[1] - self.s2[0]) if kind == "Kgamma" else 1.0 / n2
        self.stencil = TensorStencil((n1, n2), (d1, d2), (False, self.periodic))
        self.area = d1 * d2
        nb = max(3, int(np.ceil(band / d1 - 1e-9)) + 1)
        if 2 * nb >= n1:
            raise ValueError("clamp bands cover the whole grid; refine n1 or shrink clamp_width")
        self.n_band = nb
        S1, S2 = np.meshgrid(self.s1, self.s2, indexing="ij")
        if kind == "Kgamma":
            Y1, Y2 = S1, S2
        else:
            Y1 = S1 * self.T[0, 0] + S2 * self.T[0, 1]
            Y2 = S1 * self.T[1, 0] + S2 * self.T[1, 1]
        self.affine_wells = (Ahat, Bhat)
        self.affA = Y1[..., None] * Ahat[:, 0] + Y2[..., None] * Ahat[:, 1]
        self.affB = Y1[..., None] * Bhat[:, 0] + Y2[..., None] * Bhat[:, 1]
        self.left = slice(0, nb)
        self.right = slice(n1 + 1 - nb, n1 + 1)
        self.free = slice(nb, n1 + 1 - nb)
        self.node_shape = (n1 + 1, len(self.s2))
        self.n_free = (n1 + 1 - 2 * nb) * len(self.s2) * 3
        self._newton = None

    # -- parameterization ----------------------------------------------------------

    def assemble(self, z) -> np.ndarray:
        c = z[-3:]
        V = np.empty(self.node_shape + (3,))
        V[self.left] = self.affB[self.left] - c
        V[self.right] = self.affA[self.right] + c
        V[self.free] = z[:-3].reshape((-1,) + V.shape[1:])
        return V

    def unknowns(self, V) -> np.ndarray:
        """Free values and clamp constant matching ``V`` as closely as possible."""
        V = np.asarray(V, dtype=float)
        cR = (V[self.right] - self.affA[self.right]).mean(axis=(0, 1))
        cL = (V[self.left] - self.affB[self.left]).mean(axis=(0, 1))
        shift = -0.5 * (cR + cL)
        c = 0.5 * (cR - cL)
        return np.concatenate([(V[self.free] + shift).ravel(), c])

    # -- energy ----------------------------------------------------------------------

    def energy(self, V, want_grad: bool = False):
        st = self.stencil
        d0 = st.apply("DM", V)
        d1 = st.apply("MD", V)
        T = self.T
        z1 = T[0, 0] * d0 + T[0, 1] * d1
        z2 = T[1, 0] * d0 + T[1, 1] * d1
        Wv = self.spec.reduced(z1, z2)
        hs = []
        hsum = 0.0
        for i, j, kinds in st.hessian_kinds():
            Hij = st.apply(kinds, V)
            mult = 1.0 if i == j else 2.0
            hsum = hsum + mult * np.einsum("...c,...c->...", Hij, Hij)
            hs.append((kinds, Hij, mult))
        k = self.prefactor * self.area
        E = float(k * (self.cw * Wv.sum() + self.ch * np.sum(hsum)))
        if not want_grad:
            return E
        g1, g2 = self.spec.reduced_grad(z1, z2)
        a = k * self.cw
        gd0 = a * (T[0, 0] * g1 + T[1, 0] * g2)
        gd1 = a * (T[0, 1] * g1 + T[1, 1] * g2)
        G = st.adjoint("DM", gd0) + st.adjoint("MD", gd1)
        for kinds, Hij, mult in hs:
            G += st.adjoint(kinds, (2.0 * k * self.ch * mult) * Hij)
        return E, G

    def fun(self, z):
        V = self.assemble(z)
        E, G = self.energy(V, want_grad=True)
        gc = G[self.right].sum(axis=(0, 1)) - G[self.left].sum(axis=(0, 1))
        return E, np.concatenate([G[self.free].ravel(), gc])

    def node_weight(self) -> float:
        return self.prefactor * self.area

    def newton_problem(self) -> PiecewiseConvexProblem:
        """The same energy in the sparse form used by the Newton solver."""
        st = self.stencil
        T = self.T
        Mdm, Mmd = st.matrix("DM"), st.matrix("MD")
        L1 = T[0, 0] * Mdm + T[0, 1] * Mmd
        L2 = T[1, 0] * Mdm + T[1, 1] * Mmd
        k = self.prefactor * self.area
        w = np.full(L1.shape[0] // 3, k * self.cw)
        quad = [((1.0 if i == j else 2.0) * k * self.ch, st.matrix(kinds))
                for i, j, kinds in st.hessian_kinds()]
        nodes = np.arange(np.prod(self.node_shape)).reshape(self.node_shape)
        free = nodes[self.free].ravel()
        m = len(free)
        rows = [(3 * free[:, None] + np.arange(3)).ravel()]
        cols = [np.arange(3 * m)]
        vals = [np.ones(3 * m)]
        for band, sign in ((self.right, 1.0), (self.left, -1.0)):
            idx = nodes[band].ravel()
            rows.append((3 * idx[:, None] + np.arange(3)).ravel())
            cols.append(np.tile(3 * m + np.arange(3), len(idx)))
            vals.append(np.full(3 * len(idx), sign))
        nx = 3 * nodes.size
        P = sp.csr_matrix((np.concatenate(vals), (np.concatenate(rows), np.concatenate(cols))),
                          shape=(nx, 3 * m + 3))
        x0 = np.zeros(self.node_shape + (3,))
        x0[self.left] = self.affB[self.left]
        x0[self.right] = self.affA[self.right]
        return PiecewiseConvexProblem(self.spec, L1, L2, w, quad, P, x0.ravel())

    def solve(self, V0, tol, max_iters):
        if self._newton is None:
            self._newton = self.newton_problem()
        z, E, gmax, trace = self._newton.solve(self.unknowns(V0), tol * self.node_weight(),
                                               max_iters, check=slice(None, -3))
        return self.assemble(z), z[-3:].copy(), E, gmax / self.node_weight(), trace

    # -- initial fields ----------------------------------------------------------------

    def extension(self, phi1_fn, phi2_fn) -> np.ndarray:
        """Field ``Phi(y1) + y2 phi2(y1)`` with ``Phi' = phi1`` (strip coordinates)."""
        y1 = self.s1
        p1 = phi1_fn(y1)
        p2 = phi2_fn(y1)
        Phi = np.concatenate([np.zeros((1, 3)),
                              np.cumsum(0.5 * (p1[1:] + p1[:-1]) * np.diff(y1)[:, None], axis=0)])
        Phi -= 0.5 * (Phi[0] + Phi[-1])
        return Phi[:, None, :] + self.s2[None, :, None] * p2[:, None, :]


def _tanh_fns(Ahat, Bhat, width=1.0):
    mid, half = 0.5 * (Ahat + Bhat), 0.5 * (Ahat - Bhat)

    def f1(t):
        return mid[:, 0] + np.tanh(t / width)[:, None] * half[:, 0]

    def f2(t):
        return mid[:, 1] + np.tanh(t / width)[:, None] * half[:, 1]

    return f1, f2


def _interp_fns(sol: ProfileSolution1D):
    def f1(t):
        return np.stack([np.interp(t, sol.t, sol.phi1[:, k]) for k in range(3)], -1)

    def f2(t):
        return np.stack([np.interp(t, sol.t, sol.phi2[:, k]) for k in range(3)], -1)

    return f1, f2


def _multistart(prob: StripProblem, inits, tol, opts):
    def run(V0):
        return prob.solve(V0, tol, opts.max_iters)

    if n_threads() > 1 and len(inits) > 1:
        with ThreadPoolExecutor(max_workers=min(n_threads(), len(inits))) as ex:
            sols = list(ex.map(run, inits))
    else:
        sols = [run(V0) for V0 in inits]
    return sols


def solve_Kgamma(spec: PotentialSpec, gamma: float, ell: float = 8.0, grid=(128, 16),
                 opts: MinimizeOptions | None = None,
                 clamp_width: float = 0.05) -> ProfileSolution2D:
    """Minimize the strip energy ``(1/gamma) int W(grad v) + |hess v|^2``.

    The strip is ``[-ell/2, ell/2] x [-gamma/2, gamma/2]``; ``grad v`` is
    pinned to ``(A1, A3)`` in a band of width ``clamp_width * ell`` at the
    right end and to ``(B1, B3)`` at the left end. No condition is imposed
    on the top and bottom edges.

    Starts: the K_0 path extended as ``Phi(y1) + y2 phi2(y1)``, a smoothed
    tanh step extended the same way, and a seeded random perturbation of
    the better of the two results. The lowest energy is returned.
    """
    opts = opts or MinimizeOptions()
    tol = opts.tol if opts.tol is not None else 1e-6
    n1, n2 = grid
    prob = StripProblem(spec, "Kgamma", ell, n1, n2, gamma=gamma, clamp_width=clamp_width)
    Ahat, Bhat = spec.wells.reduced()
    inits = []
    k0 = solve_K0(spec, ell=0.5 * ell, n=max(16, n1), opts=MinimizeOptions(
        max_iters=opts.max_iters, seed=opts.seed, n_starts=1), refine=False)
    inits.append(prob.extension(*_interp_fns(k0)))
    if opts.n_starts >= 2:
        inits.append(prob.extension(*_tanh_fns(Ahat, Bhat)))
    sols = _multistart(prob, inits, tol, opts)
    if opts.n_starts >= 3:
        best = min(sols, key=lambda s: s[2])
        rng = np.random.default_rng(opts.seed)
        noise = 0.01 * rng.standard_normal(best[0].shape)
        sols.append(prob.solve(best[0] + noise, tol, opts.max_iters))
    V, c, E, opt, trace = min(sols, key=lambda s: s[2])
    return ProfileSolution2D(kind="Kgamma", ell=float(ell), gamma=float(gamma), lam=None,
                             grid=(n1, n2), s1=prob.s1, s2=prob.s2, v=V, c=c, energy=E,
                             periodic=False, clamp_width=clamp_width, optimality=opt,
                             converged=opt <= tol, trace=trace,
                             start_energies=[s[2] for s in sols], A_hat=Ahat, B_hat=Bhat)


def _kinf_init(prob: StripProblem, width=1.0):
    Ahat, Bhat = prob.spec.wells.reduced()
    r = prob.prefactor
    a = 0.5 * (Ahat[:, 0] - Bhat[:, 0])
    mid = 0.5 * (Ahat[:, 0] + Bhat[:, 0]) * r
    s = prob.s1
    ell = prob.ell
    prof = (r * width / ell) * np.log(np.cosh(ell * s / width))[:, None] * a + s[:, None] * mid
    return np.repeat(prof[:, None, :], len(prob.s2), axis=1)


def _kinf_grid(ell, grid, resolution):
    n1, n2 = grid
    if resolution is not None:
        n1 = max(16, 2 * int(np.ceil(0.5 * resolution * ell)))
    return n1, n2


def _kinf_solve(spec, lam, ell, grid, tol, opts, clamp_width, starts):
    n1, n2 = grid
    prob = StripProblem(spec, "Kinfty", ell, n1, n2, lam=lam, clamp_width=clamp_width)
    inits = [_kinf_init(prob, 1.0)]
    if starts >= 2:
        inits.append(_kinf_init(prob, 2.0))
    sols = _multistart(prob, inits, tol, opts)
    if starts >= 3:
        best = min(sols, key=lambda s: s[2])
        rng = np.random.default_rng(opts.seed)
        noise = 0.01 * rng.standard_normal(best[0].shape)
        sols.append(prob.solve(best[0] + noise, tol, opts.max_iters))
    return prob, min(sols, key=lambda s: s[2]), [s[2] for s in sols]


def solve_Kinfty(spec: PotentialSpec, lam: float, ell: float | None = None, grid=(128, 8),
                 opts: MinimizeOptions | None = None, clamp_width: float = 0.05,
                 bracket=(0.5, 16.0), search: bool = True,
                 ell_xtol: float = 0.05, resolution: float | None = None) -> ProfileSolution2D:
    """Minimize ``sqrt(1+lam^2) int_Q (ell W(grad v) + |hess v|^2 / ell)`` over ``ell`` and ``v``.

    ``v`` lives on the unit cell written in coordinates ``s = y . nu`` and
    ``tau = y . nu_perp`` with ``nu = (1, lam)/sqrt(1 + lam^2)``; it is
    periodic in ``tau`` and pinned to the well maps
    ``+-sqrt(1 + lam^2) s a +- c`` in bands near ``s = +-1/2``.

    With ``search=True`` the cutoff ``ell`` is chosen by golden-section
    search over ``bracket`` (single start per trial) and the final solve
    uses all starts; otherwise ``ell`` is used as given.

    The cell is resolved by ``grid = (n1, n2)``. Since the transition inside
    the cell has width of order ``1/ell``, a fixed ``n1`` resolves it less
    well as ``ell`` grows, which biases the energy downward at large ``ell``.
    Passing ``resolution`` (cells per unit of ``ell``) instead sets
    ``n1 = resolution * ell`` for every trial, keeping the resolution of
    the transition fixed.

    Raises
    ------
    IncompatibleWells
        If ``rank(A - B) != 1`` or the wells' tilt differs from ``lam``.
    """
    opts = opts or MinimizeOptions()
    tol = opts.tol if opts.tol is not None else 1e-6
    w = spec.wells
    if not w.rank_one_bulk or w.lam is None:
        raise IncompatibleWells("K_inf needs rank-one connected wells A = -B = a (x) (e1 + lam e3)")
    if abs(w.lam - lam) > 1e-10 * max(1.0, abs(lam)):
        raise IncompatibleWells(f"wells have tilt {w.lam}, requested lambda {lam}")
    scan = []
    if search:
        gr = 0.5 * (np.sqrt(5.0) - 1.0)
        lo, hi = map(float, bracket)
        cache = {}

        def f(x):
            if x not in cache:
                cache[x] = _kinf_solve(spec, lam, x, _kinf_grid(x, grid, resolution), tol, opts,
                                       clamp_width, 1)[1][2]
                scan.append((x, cache[x]))
            return cache[x]

        x1 = hi - gr * (hi - lo)
        x2 = lo + gr * (hi - lo)
        while hi - lo > ell_xtol:
            if f(x1) <= f(x2):
                hi, x2 = x2, x1
                x1 = hi - gr * (hi - lo)
            else:
                lo, x1 = x1, x2
                x2 = lo + gr * (hi - lo)
        ell = min(cache, key=cache.get)
    elif ell is None:
        raise ValueError("ell is required when search=False")
    grid = _kinf_grid(ell, grid, resolution)
    prob, (V, c, E, opt, trace), starts = _kinf_solve(spec, lam, ell, grid, tol, opts,
                                                      clamp_width, opts.n_starts)
    return ProfileSolution2D(kind="Kinfty", ell=float(ell), gamma=None, lam=float(lam),
                             grid=tuple(grid), s1=prob.s1, s2=prob.s2, v=V, c=c, energy=E,
                             periodic=True, clamp_width=clamp_width, optimality=opt,
                             converged=opt <= tol, trace=trace, start_energies=starts,
                             ell_scan=sorted(scan), A_hat=prob.affine_wells[0],
                             B_hat=prob.affine_wells[1])


def problem_for(spec: PotentialSpec, sol: ProfileSolution2D) -> StripProblem:
    """Rebuild the discrete problem a 2D solution belongs to."""
    n1, n2 = sol.grid
    if sol.kind == "Kgamma":
        return StripProblem(spec, "Kgamma", sol.ell, n1, n2, gamma=sol.gamma,
                            clamp_width=sol.clamp_width)
    return StripProblem(spec, "Kinfty", sol.ell, n1, n2, lam=sol.lam, clamp_width=sol.clamp_width)
