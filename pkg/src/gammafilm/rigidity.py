"""Two-well rigidity diagnostics for the wells ``I`` and ``diag(theta1, 1, theta2)``.

The distance from ``F`` to ``SO(3) W`` has a closed form: with
``M = F W^T = U S V^T``,

    min_R |F - R W|^2 = |F|^2 + |W|^2 - 2 (s1 + s2 + sign(det M) s3),

attained at ``R = U diag(1, 1, sign(det M)) V^T``. The distance is evaluated
as ``|F - R W|`` with that ``R`` to avoid cancellation near the orbit.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from .errors import SquaresTooFew
from .grid import Field3, rescaled_gradient
from .potential import PotentialSpec

TIE_TOL = 1e-10
DEFAULT_DELTA = 1e-2
MIXED_FRACTION = 0.1


def _best_rotation(M: np.ndarray) -> np.ndarray:
    """Rotation maximizing ``tr(R^T M)`` (batched over leading axes)."""
    U, _, Vt = np.linalg.svd(M)
    d = np.sign(np.linalg.det(U @ Vt))
    d = np.where(d == 0, 1.0, d)
    U = U.copy()
    U[..., :, 2] *= d[..., None]
    return U @ Vt


def dist_SO3(F) -> float:
    """Frobenius distance from ``F`` to ``SO(3)``."""
    F = np.asarray(F, dtype=float)
    s = np.linalg.svd(F, compute_uv=False)
    if np.linalg.det(F) < 0:
        s = s.copy()
        s[2] = -s[2]
    return float(np.sqrt(np.sum((s - 1.0) ** 2)))


def well_B(theta1: float, theta2: float) -> np.ndarray:
    return np.diag([float(theta1), 1.0, float(theta2)])


def dist_orbit(F, W) -> tuple[float, np.ndarray]:
    """Distance from ``F`` to ``SO(3) W`` and the optimal rotation."""
    F = np.asarray(F, dtype=float)
    W = np.asarray(W, dtype=float)
    R = _best_rotation(F @ W.T)
    return float(np.linalg.norm(F - R @ W)), R


def dist_K(F, theta1: float, theta2: float) -> tuple[float, str]:
    """Distance from ``F`` to ``K = SO(3) u SO(3) B`` and the nearer branch.

    Branch ``"A"`` is ``SO(3)``, branch ``"B"`` is ``SO(3) B``; ties within
    1e-10 go to ``"A"``.
    """
    if theta1 <= 0 or theta2 <= 0:
        raise ValueError("theta1 and theta2 must be positive")
    dA = dist_SO3(F)
    dB, _ = dist_orbit(F, well_B(theta1, theta2))
    if dB < dA - TIE_TOL:
        return dB, "B"
    return dA, "A"


def check_matos(theta1: float, theta2: float) -> bool:
    """Strong incompatibility ``(1 - theta1)(1 - theta2) > 0``."""
    if theta1 <= 0 or theta2 <= 0:
        raise ValueError("theta1 and theta2 must be positive")
    return (1.0 - theta1) * (1.0 - theta2) > 0.0


def brute_force_dist(F, W, samples: int = 100_000, seed: int = 0, refine: bool = True) -> float:
    """Distance to ``SO(3) W`` by sampling rotations, optionally polished.

    A test oracle independent of the closed form: uniform random rotations,
    then a local Nelder-Mead search on the rotation vector of the best sample.
    """
    from scipy.optimize import minimize
    from scipy.spatial.transform import Rotation

    F = np.asarray(F, dtype=float)
    W = np.asarray(W, dtype=float)
    R = Rotation.random(samples, random_state=seed).as_matrix()
    d = np.linalg.norm(F[None] - R @ W, axis=(1, 2))
    k = int(np.argmin(d))
    if not refine:
        return float(d[k])
    r0 = Rotation.from_matrix(R[k]).as_rotvec()

    def f(v):
        return np.linalg.norm(F - Rotation.from_rotvec(v).as_matrix() @ W)

    res = minimize(f, r0, method="Nelder-Mead",
                   options={"xatol": 1e-12, "fatol": 1e-14, "maxiter": 20000})
    return float(min(res.fun, d[k]))


@dataclass
class RigidityReport:
    """Per-square classification of a field against ``K``.

    ``counts`` are the numbers of bad squares (fit energy at least
    ``delta h^2``), squares fitted by ``SO(3)`` and squares fitted by
    ``SO(3) B``. ``boundary_length`` is the total length of interior edges
    separating an ``SO(3)`` square from an ``SO(3) B`` square.
    """

    delta: float
    squares_total: int
    counts: tuple
    boundary_length: float
    dominant_well: str
    square_side: float
    well_separation: float
    classes: np.ndarray | None = None

    def __post_init__(self):
        if sum(self.counts) != self.squares_total:
            raise ValueError("counts must sum to squares_total")

    def to_json(self) -> dict:
        return {"delta": self.delta, "squares_total": self.squares_total,
                "counts": list(self.counts), "boundary_length": self.boundary_length,
                "dominant_well": self.dominant_well, "square_side": self.square_side,
                "well_separation": self.well_separation}


def _dominant(n1: int, n2: int) -> str:
    if n1 + n2 == 0:
        return "mixed"
    if n2 <= MIXED_FRACTION * (n1 + n2):
        return "A-branch"
    if n1 <= MIXED_FRACTION * (n1 + n2):
        return "B-branch"
    return "mixed"


def _square_index(centers: np.ndarray, lo: float, side: float, M: int) -> np.ndarray:
    return np.clip(np.floor((centers - lo) / side).astype(int), 0, M - 1)


def rigidity_diagnostic(spec: PotentialSpec, u: Field3, h: float, delta: float = DEFAULT_DELTA,
                        theta1: float | None = None, theta2: float | None = None
                        ) -> RigidityReport:
    """Classify squares of side about ``h`` by their best fit in ``K``.

    The mid-surface is cut into ``M = floor(L / h)`` squares per side, ``L``
    the side of the domain's bounding box. In each square the average of
    ``grad_h u`` picks the branch by :func:`dist_K`; the rotation is then the
    Procrustes fit of that branch to the average, and the square is bad when
    ``int |grad_h u - R W|^2`` over the square column reaches ``delta h^2``.
    Edges on the boundary of the domain and edges touching a bad square are
    not counted in ``boundary_length``.
    """
    W_A = spec.wells.A
    W_B = spec.wells.B
    if theta1 is None or theta2 is None:
        theta1, theta2 = float(W_B[0, 0]), float(W_B[2, 2])
    Bexp = well_B(theta1, theta2)
    if not (np.allclose(W_A, np.eye(3)) and np.allclose(W_B, Bexp)):
        raise ValueError("rigidity_diagnostic needs wells A = I and B = diag(theta1, 1, theta2)")
    dom = u.domain
    L1 = dom.x1_range[1] - dom.x1_range[0]
    L2 = dom.x2_range[1] - dom.x2_range[0]
    M1, M2 = int(np.floor(L1 / h + 1e-9)), int(np.floor(L2 / h + 1e-9))
    if min(M1, M2) < 4:
        raise SquaresTooFew(f"only {min(M1, M2)} squares per side at h={h}")
    s1, s2 = L1 / M1, L2 / M2
    i1 = _square_index(dom.centers(0), dom.x1_range[0], s1, M1)
    i2 = _square_index(dom.centers(1), dom.x2_range[0], s2, M2)
    if len(np.unique(i1)) < M1 or len(np.unique(i2)) < M2:
        raise SquaresTooFew("grid is coarser than the squares; refine nx1 or nx2")

    G = rescaled_gradient(u, h)
    mask = dom.mask2d
    vol = dom.cell_volume
    lab = (i1[:, None] * M2 + i2[None, :])
    lab3 = np.broadcast_to(lab[:, :, None], G.shape[:3])
    wts = np.broadcast_to(mask[:, :, None], G.shape[:3]).astype(float)
    nsq = M1 * M2
    flat_lab = lab3.reshape(-1)
    flat_w = wts.reshape(-1)
    Gf = G.reshape(-1, 9)
    cnt = np.bincount(flat_lab, weights=flat_w, minlength=nsq)
    Gsum = np.stack([np.bincount(flat_lab, weights=Gf[:, k] * flat_w, minlength=nsq)
                     for k in range(9)], axis=-1)
    G2sum = np.bincount(flat_lab, weights=np.sum(Gf * Gf, axis=1) * flat_w, minlength=nsq)

    present = cnt > 0
    classes = np.full(nsq, -1, dtype=int)
    for q in np.flatnonzero(present):
        Gbar = Gsum[q].reshape(3, 3) / cnt[q]
        _, branch = dist_K(Gbar, theta1, theta2)
        W = W_A if branch == "A" else W_B
        R = _best_rotation(Gbar @ W.T)
        # sum_c |G_c - R W|^2 = sum|G_c|^2 - 2 tr(W^T R^T sum G_c) + n |W|^2
        dev = G2sum[q] - 2.0 * np.sum((R @ W) * Gsum[q].reshape(3, 3)) + cnt[q] * np.sum(W * W)
        energy = max(dev, 0.0) * vol
        classes[q] = 0 if energy >= delta * h * h else (1 if branch == "A" else 2)
    grid_cls = classes.reshape(M1, M2)
    counts = tuple(int(np.sum(classes[present] == k)) for k in (0, 1, 2))

    def mixed(a, b):
        return ((a == 1) & (b == 2)) | ((a == 2) & (b == 1))

    n_vert = int(np.sum(mixed(grid_cls[1:, :], grid_cls[:-1, :])))
    n_horz = int(np.sum(mixed(grid_cls[:, 1:], grid_cls[:, :-1])))
    boundary = n_vert * s2 + n_horz * s1
    sep, _ = dist_orbit(np.eye(3), Bexp)
    return RigidityReport(delta=float(delta), squares_total=int(np.sum(present)), counts=counts,
                          boundary_length=float(boundary), dominant_well=_dominant(counts[1], counts[2]),
                          square_side=float(np.sqrt(s1 * s2)), well_separation=float(sep),
                          classes=grid_cls)
