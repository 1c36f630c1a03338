"""Branch-wise Newton iteration for the discrete profile energies.

The energies have the form

    E(z) = sum_c w_c W_red(L1 x, L2 x)_c + sum_k q_k |H_k x|^2,   x = x0 + P z,

with sparse linear maps ``L1, L2`` (cell values of the two reduced columns),
second-derivative maps ``H_k`` with positive weights ``q_k`` and an affine
parameterization of the constrained unknowns. The quadratic part is summed
as squares rather than as ``x^T Q x``, which would lose the small energy
differences near the optimum to cancellation. Products with the
second-derivative maps are accumulated in extended precision: on fine
grids their entries scale like ``1/delta^2`` and double precision would
put a floor of order ``1e-6`` (per node weight) under the gradient. Each branch of the density is convex, so the Newton
matrix assembled on the current branch is positive semidefinite and the
Newton step is a descent direction; a small diagonal shift handles the
near-null directions of the stencils. Steps are accepted by Armijo
backtracking on the true (nonsmooth) energy, so the energy trace is
monotone.
"""

from __future__ import annotations

import numpy as np
import scipy.sparse as sp
from scipy.sparse.linalg import splu

from .potential import PotentialSpec


def block_diag3(blocks: np.ndarray) -> sp.csr_matrix:
    """Sparse block-diagonal matrix from an array of shape (n, 3, 3)."""
    n = blocks.shape[0]
    return sp.bsr_matrix((blocks, np.arange(n), np.arange(n + 1)), shape=(3 * n, 3 * n)).tocsr()


def _matvec_ld(A: sp.csr_matrix, x) -> np.ndarray:
    """``A @ x`` accumulated in extended precision (``np.longdouble``)."""
    prod = A.data.astype(np.longdouble) * np.asarray(x, dtype=np.longdouble)[A.indices]
    out = np.zeros(A.shape[0], dtype=np.longdouble)
    rows = np.flatnonzero(np.diff(A.indptr))
    out[rows] = np.add.reduceat(prod, A.indptr[rows])
    return out


class PiecewiseConvexProblem:
    def __init__(self, spec: PotentialSpec, L1, L2, w, quad_terms, P, x0):
        self.spec = spec
        self.L1, self.L2 = L1.tocsr(), L2.tocsr()
        self.w = np.asarray(w, dtype=float)
        self.quad = [(float(q), H.tocsr(), H.T.tocsr()) for q, H in quad_terms]
        self.Q = sum(q * (HT @ H) for q, H, HT in self.quad).tocsr()
        self.P = P.tocsr()
        self.PT = self.P.T.tocsr()
        self.x0 = np.asarray(x0, dtype=float)

    def _cols(self, x):
        return (self.L1 @ x).reshape(-1, 3), (self.L2 @ x).reshape(-1, 3)

    def energy(self, z):
        x = self.x0 + self.P @ z
        z1, z2 = self._cols(x)
        sing = np.longdouble(0.0)
        for q, H, _ in self.quad:
            y = _matvec_ld(H, x)
            sing += q * (y @ y)
        return float(np.longdouble(self.w @ self.spec.reduced(z1, z2)) + sing)

    def grad(self, z):
        x = self.x0 + self.P @ z
        z1, z2 = self._cols(x)
        g1, g2 = self.spec.reduced_grad(z1, z2)
        gx = self.L1.T @ (g1 * self.w[:, None]).ravel() + self.L2.T @ (g2 * self.w[:, None]).ravel()
        gq = np.zeros(len(x), dtype=np.longdouble)
        for q, H, HT in self.quad:
            gq += (2.0 * q) * _matvec_ld(HT, _matvec_ld(H, x))
        gx = gx + gq
        return _matvec_ld(self.PT, gx).astype(float)

    def hess(self, z):
        x = self.x0 + self.P @ z
        z1, z2 = self._cols(x)
        Hc = self.spec.reduced_hess(z1, z2) * self.w[:, None, None]
        D11 = block_diag3(np.ascontiguousarray(Hc[:, :3, :3]))
        D12 = block_diag3(np.ascontiguousarray(Hc[:, :3, 3:]))
        D22 = block_diag3(np.ascontiguousarray(Hc[:, 3:, 3:]))
        L1, L2 = self.L1, self.L2
        cross = L1.T @ D12 @ L2
        Hx = L1.T @ D11 @ L1 + L2.T @ D22 @ L2 + cross + cross.T + 2.0 * self.Q
        return (self.PT @ Hx @ self.P).tocsc()

    def solve(self, z, tol_abs: float, max_iters: int = 200, check=slice(None),
              stall_iters: int = 5):
        """Newton iteration until ``max|grad[check]| <= tol_abs``.

        The iteration also stops when the energy has not decreased for
        ``stall_iters`` consecutive steps and the gradient has stopped
        shrinking, i.e. at the roundoff floor of the discrete energy.
        Returns ``(z, E, gmax, trace)`` with ``gmax`` measured on ``check``.
        """
        z = np.array(z, dtype=float)
        E = self.energy(z)
        trace = [E]
        g = self.grad(z)
        best_g = np.inf
        stalled = 0
        for _ in range(max_iters):
            gmax = float(np.abs(g[check]).max()) if g[check].size else 0.0
            if gmax <= tol_abs:
                break
            if gmax < 0.5 * best_g:
                best_g, stalled = gmax, 0
            elif stalled >= stall_iters:
                break
            H = self.hess(z)
            shift = 1e-10 * max(float(np.abs(H.diagonal()).max()), 1e-300)
            n = H.shape[0]
            while True:
                try:
                    dz = -splu((H + shift * sp.identity(n, format="csc")).tocsc()).solve(g)
                    break
                except RuntimeError:
                    shift *= 100.0
            slope = float(g @ dz)
            if not np.isfinite(slope) or slope >= 0:
                dz, slope = -g, -float(g @ g)
            t = 1.0
            accepted = False
            for _ in range(60):
                zn = z + t * dz
                En = self.energy(zn)
                if En <= E + 1e-4 * t * slope:
                    accepted = True
                    break
                t *= 0.5
            if not accepted:
                break
            stalled = stalled + 1 if En >= E else 0
            z, E = zn, En
            trace.append(E)
            g = self.grad(z)
        gmax = float(np.abs(g[check]).max()) if g[check].size else 0.0
        return z, E, gmax, trace
