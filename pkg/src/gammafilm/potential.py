"""Double-well energy densities, well normalization and hypothesis checks.

Matrices act on the rescaled gradient ``(d1 u, d2 u, d3 u / h)``, so the
first two columns of a well are its in-plane part and the third column is
the out-of-plane (Cosserat) part.
"""

from __future__ import annotations

from dataclasses import dataclass, field

import numpy as np
from scipy.stats import special_ortho_group

from .errors import NotTwoWellCompatible

_RANK_TOL = 1e-12


def _as_matrix(M) -> np.ndarray:
    M = np.array(M, dtype=float)
    if M.shape != (3, 3):
        raise ValueError(f"expected a 3x3 matrix, got shape {M.shape}")
    if not np.all(np.isfinite(M)):
        raise ValueError("matrix entries must be finite")
    return M


def _inplane_connection(A: np.ndarray, B: np.ndarray):
    """Return (a, nu_bar) with A' - B' = 2 a (x) nu_bar, or (0, None) if A' = B'."""
    D = A[:, :2] - B[:, :2]
    scale = max(1.0, np.abs(A).max(), np.abs(B).max())
    U, s, Vt = np.linalg.svd(D)
    if s[0] <= _RANK_TOL * scale:
        return np.zeros(3), None
    if s[1] > 1e-10 * max(s[0], scale):
        raise NotTwoWellCompatible(
            "in-plane parts A' - B' have rank 2; no rank-one in-plane connection")
    nu = Vt[0]
    a = 0.5 * s[0] * U[:, 0]
    # fix the sign so that the first nonzero entry of nu is positive
    k = 0 if abs(nu[0]) > 1e-14 else 1
    if nu[k] < 0:
        nu, a = -nu, -a
    return a, nu


@dataclass(frozen=True)
class Wells:
    """Two zero-energy matrices and their connection data.

    Attributes
    ----------
    A, B : ndarray, shape (3, 3)
        The wells.
    a : ndarray, shape (3,)
        Connection vector with ``A' - B' = 2 a (x) nu_bar``; zero when the
        in-plane parts agree.
    nu_bar : ndarray, shape (2,) or None
        Unit in-plane normal of the connection, ``None`` if ``A' = B'``.
    lam : float or None
        Tilt with ``(A3 - B3)/2 = lam * a``; defined only when ``a != 0``
        and the out-of-plane difference is parallel to ``a``.
    in_plane_equal : bool
        Whether ``A' = B'``.
    rank_one_bulk : bool
        Whether ``rank(A - B) = 1``.
    """

    A: np.ndarray
    B: np.ndarray
    a: np.ndarray
    nu_bar: np.ndarray | None
    lam: float | None
    in_plane_equal: bool
    rank_one_bulk: bool

    @classmethod
    def from_matrices(cls, A, B) -> "Wells":
        A, B = _as_matrix(A), _as_matrix(B)
        if np.allclose(A, B, rtol=0.0, atol=1e-14):
            raise ValueError("wells must be distinct")
        a, nu = _inplane_connection(A, B)
        in_plane_equal = nu is None
        rank_one_bulk = bool(np.linalg.matrix_rank(A - B, tol=1e-10) == 1)
        lam = None
        if not in_plane_equal:
            half3 = 0.5 * (A[:, 2] - B[:, 2])
            t = float(half3 @ a / (a @ a))
            if np.linalg.norm(half3 - t * a) <= 1e-10 * max(1.0, np.linalg.norm(half3)):
                lam = t
        for M in (A, B):
            M.setflags(write=False)
        return cls(A=A, B=B, a=a, nu_bar=nu, lam=lam,
                   in_plane_equal=in_plane_equal, rank_one_bulk=rank_one_bulk)

    @property
    def is_normalized(self) -> bool:
        """``A = -B`` with zero second columns and ``nu_bar = e1`` (if defined)."""
        ok = np.allclose(self.A, -self.B, atol=1e-12)
        ok &= np.allclose(self.A[:, 1], 0.0, atol=1e-12)
        if self.nu_bar is not None:
            ok &= np.allclose(self.nu_bar, [1.0, 0.0], atol=1e-12)
        return bool(ok)

    def reduced(self):
        """Return the reduced wells ``((A1, A3), (B1, B3))`` as 3x2 arrays."""
        return self.A[:, [0, 2]].copy(), self.B[:, [0, 2]].copy()


@dataclass(frozen=True)
class AffineChange:
    """Change of variables ``xi -> xi R + C`` with ``R = diag(R', 1)``."""

    R: np.ndarray
    C: np.ndarray

    def forward(self, xi):
        """Map a normalized matrix to the original frame."""
        return np.asarray(xi) @ self.R + self.C

    def inverse(self, xi):
        """Map an original-frame matrix to the normalized frame."""
        return (np.asarray(xi) - self.C) @ self.R.T


def normalize_wells(A, B) -> tuple[Wells, AffineChange]:
    """Bring a pair of wells to the symmetric normal form.

    The returned wells satisfy ``A_n = -B_n``, ``A_n' = a (x) e1'`` and have
    vanishing second columns. They are related to the input by
    ``A = A_n R + C`` (see :class:`AffineChange`).

    Raises
    ------
    NotTwoWellCompatible
        If ``A' - B'`` has rank two.
    """
    A, B = _as_matrix(A), _as_matrix(B)
    w = Wells.from_matrices(A, B)
    R = np.eye(3)
    if w.nu_bar is not None:
        n1, n2 = w.nu_bar
        R[:2, :2] = [[n1, n2], [-n2, n1]]
    change = AffineChange(R=R, C=0.5 * (A + B))
    An = change.inverse(A)
    An[np.abs(An) < 1e-15 * max(1.0, np.abs(An).max())] = 0.0
    return Wells.from_matrices(An, -An), change


@dataclass(frozen=True)
class PotentialSpec:
    """A double-well energy density.

    ``prototype_distance`` is ``min(|xi - A|^p, |xi - B|^p)``.
    ``weighted_quadratic`` is ``min(q_A(xi - A), q_B(xi - B))^(p/2)`` where
    ``q_K(X) = vec(X)^T M_K vec(X)`` for symmetric positive definite 9x9
    matrices ``weights = (M_A, M_B)``.
    """

    wells: Wells
    p: float = 2.0
    kind: str = "prototype_distance"
    weights: tuple | None = None
    c_star: float = 1.0

    def __post_init__(self):
        if not (np.isfinite(self.p) and self.p >= 2.0):
            raise ValueError("exponent p must be finite and >= 2")
        if self.kind not in ("prototype_distance", "weighted_quadratic"):
            raise ValueError(f"unknown potential kind {self.kind!r}")
        if self.kind == "weighted_quadratic":
            if self.weights is None or len(self.weights) != 2:
                raise ValueError("weighted_quadratic needs two 9x9 weight matrices")
            Ms = []
            for M in self.weights:
                M = np.asarray(M, dtype=float)
                if M.shape != (9, 9) or not np.allclose(M, M.T):
                    raise ValueError("weights must be symmetric 9x9 matrices")
                if np.linalg.eigvalsh(M).min() <= 0:
                    raise ValueError("weights must be positive definite")
                Ms.append(M)
            object.__setattr__(self, "weights", tuple(Ms))

    @classmethod
    def prototype(cls, A, B, p: float = 2.0) -> "PotentialSpec":
        return cls(wells=Wells.from_matrices(A, B), p=float(p))

    # -- evaluation (vectorized over leading axes) ---------------------------

    def _branch_values(self, xi):
        dA = xi - self.wells.A
        dB = xi - self.wells.B
        if self.kind == "prototype_distance":
            qA = np.einsum("...ij,...ij->...", dA, dA)
            qB = np.einsum("...ij,...ij->...", dB, dB)
        else:
            MA, MB = self.weights
            vA = dA.reshape(dA.shape[:-2] + (9,))
            vB = dB.reshape(dB.shape[:-2] + (9,))
            qA = np.einsum("...i,ij,...j->...", vA, MA, vA)
            qB = np.einsum("...i,ij,...j->...", vB, MB, vB)
        return dA, dB, qA, qB

    def W(self, xi):
        """Energy density at ``xi`` of shape ``(..., 3, 3)``."""
        xi = np.asarray(xi, dtype=float)
        _, _, qA, qB = self._branch_values(xi)
        q = np.minimum(qA, qB)
        return q if self.p == 2.0 else q ** (0.5 * self.p)

    def grad(self, xi):
        """Gradient of :meth:`W`; the A-branch is used on the Maxwell set."""
        xi = np.asarray(xi, dtype=float)
        dA, dB, qA, qB = self._branch_values(xi)
        useA = qA <= qB
        q = np.where(useA, qA, qB)
        d = np.where(useA[..., None, None], dA, dB)
        if self.kind == "prototype_distance":
            dq = 2.0 * d
        else:
            MA, MB = self.weights
            v = d.reshape(d.shape[:-2] + (9,))
            gA = 2.0 * v @ MA
            gB = 2.0 * v @ MB
            dq = np.where(useA[..., None], gA, gB).reshape(d.shape)
        if self.p == 2.0:
            return dq
        fac = 0.5 * self.p * q ** (0.5 * self.p - 1.0)
        return fac[..., None, None] * dq

    def reduced(self, z1, z2):
        """Reduced density ``W(z1, 0, z2)`` for column vectors of shape ``(..., 3)``."""
        return self.W(_embed(z1, z2))

    def reduced_grad(self, z1, z2):
        """Gradient of :meth:`reduced` as a pair ``(dW/dz1, dW/dz2)``."""
        g = self.grad(_embed(z1, z2))
        return g[..., :, 0], g[..., :, 2]

    def reduced_hess(self, z1, z2):
        """Hessian of :meth:`reduced` w.r.t. ``(z1, z2)`` stacked, shape ``(..., 6, 6)``.

        On each branch the density is convex; the branch is chosen as in
        :meth:`grad`.
        """
        xi = _embed(z1, z2)
        dA, dB, qA, qB = self._branch_values(xi)
        useA = qA <= qB
        q = np.where(useA, qA, qB)
        d = np.where(useA[..., None, None], dA, dB)
        dv = np.concatenate([d[..., :, 0], d[..., :, 2]], axis=-1)
        if self.kind == "prototype_distance":
            Mr = np.broadcast_to(np.eye(6), q.shape + (6, 6))
        else:
            idx = [0, 3, 6, 2, 5, 8]
            MA = self.weights[0][np.ix_(idx, idx)]
            MB = self.weights[1][np.ix_(idx, idx)]
            Mr = np.where(useA[..., None, None], MA, MB)
        Md = np.einsum("...ij,...j->...i", Mr, dv)
        if self.p == 2.0:
            return 2.0 * Mr
        k = 0.5 * self.p
        with np.errstate(divide="ignore", invalid="ignore"):
            c1 = 2.0 * k * q ** (k - 1.0)
            c2 = 4.0 * k * (k - 1.0) * np.where(q > 0, q ** (k - 2.0), 0.0)
        return c1[..., None, None] * Mr + c2[..., None, None] * np.einsum("...i,...j->...ij", Md, Md)

    # -- serialization -------------------------------------------------------

    def to_json(self) -> dict:
        out = {
            "wells": {"A": self.wells.A.tolist(), "B": self.wells.B.tolist()},
            "p": float(self.p),
            "kind": self.kind,
        }
        if self.weights is not None:
            out["weights"] = [np.asarray(M).tolist() for M in self.weights]
        if self.kind != "prototype_distance":
            out["c_star"] = float(self.c_star)
        return out

    @classmethod
    def from_json(cls, doc: dict) -> "PotentialSpec":
        wells = Wells.from_matrices(doc["wells"]["A"], doc["wells"]["B"])
        weights = doc.get("weights")
        if weights is not None:
            weights = tuple(np.asarray(M, dtype=float) for M in weights)
        return cls(wells=wells, p=float(doc.get("p", 2.0)),
                   kind=doc.get("kind", "prototype_distance"), weights=weights,
                   c_star=float(doc.get("c_star", 1.0)))

    def normalized(self) -> tuple["PotentialSpec", AffineChange]:
        """Return the potential in the normalized frame together with the change.

        Only the prototype kind is supported; a weighted density would need
        its weights conjugated by the rotation, which is done here as well.
        """
        wells, change = normalize_wells(self.wells.A, self.wells.B)
        weights = None
        if self.weights is not None:
            # vec(xi R) = K vec(xi) with K = I3 (x) R^T for row-major vec
            K = np.kron(np.eye(3), change.R.T)
            weights = tuple(K.T @ M @ K for M in self.weights)
        return PotentialSpec(wells=wells, p=self.p, kind=self.kind,
                             weights=weights, c_star=self.c_star), change


def _embed(z1, z2):
    z1 = np.asarray(z1, dtype=float)
    z2 = np.asarray(z2, dtype=float)
    xi = np.zeros(np.broadcast_shapes(z1.shape, z2.shape)[:-1] + (3, 3))
    xi[..., :, 0] = z1
    xi[..., :, 2] = z2
    return xi


def eval_W(spec: PotentialSpec, xi) -> float:
    """Energy density of ``spec`` at a 3x3 matrix (or a stack of them)."""
    return spec.W(xi)


def eval_W_grad(spec: PotentialSpec, xi):
    """Gradient of the energy density; A-branch on the Maxwell set."""
    return spec.grad(xi)


def eval_reduced_W(spec: PotentialSpec, zeta1, zeta2):
    """Reduced density ``W(zeta1, 0, zeta2)``."""
    return spec.reduced(zeta1, zeta2)


# -- hypothesis checks ---------------------------------------------------------

@dataclass
class HypothesisReport:
    """Outcome of the sampling checks of the standing hypotheses.

    ``results`` maps ``"H1"`` ... ``"H5"`` to ``"pass"``, ``"fail"`` or
    ``"not applicable"``.
    """

    results: dict
    c_star: float
    growth_constant: float
    near_well_constant: float
    rho: float
    sample_count: int
    details: dict = field(default_factory=dict)

    @property
    def all_pass(self) -> bool:
        return all(v != "fail" for v in self.results.values())


def default_rho(wells: Wells) -> float:
    """Radius of the near-well neighbourhood: a quarter of ``|A - B|``."""
    return 0.25 * float(np.linalg.norm(wells.A - wells.B))


def _ball(rng, n, radius):
    g = rng.standard_normal((n, 9))
    g /= np.linalg.norm(g, axis=1, keepdims=True)
    r = radius * rng.random(n) ** (1.0 / 9.0)
    return (g * r[:, None]).reshape(n, 3, 3)


def check_hypotheses(spec: PotentialSpec, sample_count: int = 10_000,
                     radius: float = 3.0, seed: int = 0,
                     cap: float = 1e6) -> HypothesisReport:
    """Check the standing hypotheses on the density by Monte-Carlo sampling.

    Samples are drawn uniformly in a ball of the given radius around the
    wells' midpoint, near each well, and on a log-spaced set of large radii
    for the growth condition. Constants above ``cap`` count as failures.
    """
    if sample_count < 1:
        raise ValueError("sample_count must be >= 1")
    rng = np.random.default_rng(seed)
    A, B = spec.wells.A, spec.wells.B
    p = spec.p
    rho = default_rho(spec.wells)
    mid = 0.5 * (A + B)
    n = sample_count

    bulk = mid + _ball(rng, n, radius)
    nA = A + _ball(rng, n // 2 + 1, rho)
    nB = B + _ball(rng, n // 2 + 1, rho)
    dirs = _ball(rng, n, 1.0)
    dirs /= np.linalg.norm(dirs.reshape(n, 9), axis=1)[:, None, None]
    far = mid + dirs * np.exp(rng.uniform(np.log(radius), np.log(1e3 * radius), n))[:, None, None]
    samples = np.concatenate([bulk, nA, nB, far])

    Wv = spec.W(samples)
    dA = np.linalg.norm((samples - A).reshape(-1, 9), axis=1)
    dB = np.linalg.norm((samples - B).reshape(-1, 9), axis=1)
    dist = np.minimum(dA, dB)
    m = dist ** p
    results, details = {}, {}

    # H1: zero set is exactly {A, B}
    w_wells = np.abs(spec.W(np.stack([A, B])))
    away = dist > 1e-8
    h1 = bool(w_wells.max() <= 1e-12 and np.all(Wv[away] > 0))
    results["H1"] = "pass" if h1 else "fail"
    details["W_at_wells"] = w_wells.tolist()

    # H2: p-growth with a single constant C1
    xn = np.linalg.norm(samples.reshape(-1, 9), axis=1) ** p
    up = Wv / (xn + 1.0)
    low = 0.5 * (-Wv + np.sqrt(Wv ** 2 + 4.0 * xn))
    C1 = float(max(1.0, up.max(), low.max()))
    results["H2"] = "pass" if np.isfinite(C1) and C1 <= cap else "fail"

    # H3: two-sided p-th power bound near the wells
    near = (dist <= rho) & away
    with np.errstate(divide="ignore", invalid="ignore"):
        r1 = Wv[near] / m[near]
        r2 = m[near] / Wv[near]
    C2 = float(np.max(np.concatenate([r1, r2, [1.0]])))
    results["H3"] = "pass" if (h1 and np.isfinite(C2) and C2 <= cap) else "fail"

    # equivalence constant with the prototype on all samples
    with np.errstate(divide="ignore", invalid="ignore"):
        ratios = np.concatenate([Wv[away] / m[away], m[away] / Wv[away]])
    c_star = float(np.max(ratios)) if ratios.size else 1.0
    if not np.isfinite(c_star):
        c_star = float("inf")

    # H4: zeroing the second column does not increase W
    proj = samples.copy()
    proj[:, :, 1] = 0.0
    Wp = spec.W(proj)
    viol = Wp - Wv
    h4 = bool(np.all(viol <= 1e-12 * (1.0 + np.abs(Wv))))
    results["H4"] = "pass" if h4 else "fail"
    details["H4_max_violation"] = float(max(viol.max(), 0.0))

    # H5: isotropy in the in-plane block when A' = B'
    if spec.wells.in_plane_equal:
        base = A[:, :2].reshape(6)
        k = min(n, 2000)
        Q = special_ortho_group.rvs(6, size=k, random_state=rng)
        xs = samples[:k]
        v = xs[:, :, :2].reshape(k, 6) - base
        rot = xs.copy()
        rot[:, :, :2] = (np.einsum("kij,kj->ki", Q, v) + base).reshape(k, 3, 2)
        diff = np.abs(spec.W(rot) - spec.W(xs))
        h5 = bool(np.all(diff <= 1e-10 * (1.0 + np.abs(spec.W(xs)))))
        results["H5"] = "pass" if h5 else "fail"
        details["H5_max_deviation"] = float(diff.max())
    else:
        results["H5"] = "not applicable"

    return HypothesisReport(results=results, c_star=c_star, growth_constant=C1,
                            near_well_constant=C2, rho=rho,
                            sample_count=int(samples.shape[0]), details=details)
