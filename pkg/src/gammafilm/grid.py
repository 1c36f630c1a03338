"""Tensor grids on ``omega x (-1/2, 1/2)`` and the rescaled derivative operators.

Fields live on grid nodes. Derivatives are evaluated at cell centres by
tensor products of three one-dimensional stencils, each mapping ``n + 1``
node values to ``n`` cell values:

``D``  first difference ``(u[i+1] - u[i]) / d``,
``M``  midpoint average ``(u[i] + u[i+1]) / 2``,
``S``  second difference ``(u[i-1] - u[i] - u[i+1] + u[i+2]) / (2 d^2)``
       with the one-sided three-point stencil in the first and last cell.

``S`` is exact on quadratics and ``D``, ``M`` are exact on affine data, so
the cell gradient is exact on affine fields and the cell Hessian on
quadratic ones. Every discrete derivative is a linear map built from these
stencils, which makes adjoints (and hence exact energy gradients) cheap.
"""

from __future__ import annotations

import json
from dataclasses import dataclass, field
from functools import lru_cache
from pathlib import Path

import numpy as np
import scipy.sparse as sp

from .errors import DegenerateGrid

THICKNESS = (-0.5, 0.5)


# -- one-dimensional stencils ---------------------------------------------------

@lru_cache(maxsize=256)
def diff_op(n: int, d: float, periodic: bool = False) -> sp.csr_matrix:
    """First difference from nodes to cell centres."""
    if periodic:
        i = np.arange(n)
        return sp.csr_matrix((np.r_[-np.ones(n), np.ones(n)] / d,
                              (np.r_[i, i], np.r_[i, (i + 1) % n])), shape=(n, n))
    return sp.diags([-np.ones(n) / d, np.ones(n) / d], [0, 1], shape=(n, n + 1), format="csr")


@lru_cache(maxsize=256)
def mean_op(n: int, periodic: bool = False) -> sp.csr_matrix:
    """Midpoint average from nodes to cell centres."""
    if periodic:
        i = np.arange(n)
        return sp.csr_matrix((np.full(2 * n, 0.5), (np.r_[i, i], np.r_[i, (i + 1) % n])),
                             shape=(n, n))
    return sp.diags([np.full(n, 0.5), np.full(n, 0.5)], [0, 1], shape=(n, n + 1), format="csr")


@lru_cache(maxsize=256)
def second_op(n: int, d: float, periodic: bool = False) -> sp.csr_matrix:
    """Second difference from nodes to cell centres (exact on quadratics)."""
    rows, cols, vals = [], [], []
    c = 1.0 / (2.0 * d * d)
    if periodic:
        if n < 4:
            raise DegenerateGrid("periodic second differences need at least 4 cells")
        for i in range(n):
            for off, w in ((-1, c), (0, -c), (1, -c), (2, c)):
                rows.append(i)
                cols.append((i + off) % n)
                vals.append(w)
        return sp.csr_matrix((vals, (rows, cols)), shape=(n, n))
    if n < 2:
        raise DegenerateGrid("second differences need at least 2 cells")
    c1 = 1.0 / (d * d)
    for i in range(n):
        if i == 0:
            stencil = ((0, c1), (1, -2 * c1), (2, c1))
        elif i == n - 1:
            stencil = ((n - 2, c1), (n - 1, -2 * c1), (n, c1))
        else:
            stencil = ((i - 1, c), (i, -c), (i + 1, -c), (i + 2, c))
        for j, w in stencil:
            rows.append(i)
            cols.append(j)
            vals.append(w)
    return sp.csr_matrix((vals, (rows, cols)), shape=(n, n + 1))


def apply_along(op, arr: np.ndarray, axis: int) -> np.ndarray:
    """Apply a sparse matrix along one axis of an array."""
    moved = np.moveaxis(arr, axis, 0)
    shp = moved.shape
    out = op @ moved.reshape(shp[0], -1)
    return np.moveaxis(np.asarray(out).reshape((op.shape[0],) + shp[1:]), 0, axis)


class TensorStencil:
    """Cell-centred derivatives on a tensor grid of any dimension.

    Parameters
    ----------
    counts : tuple of int
        Cell counts per axis.
    spacings : tuple of float
        Cell sizes per axis.
    periodic : tuple of bool, optional
        Axes with wrap-around indexing (``n`` nodes instead of ``n + 1``).
    """

    def __init__(self, counts, spacings, periodic=None):
        self.counts = tuple(int(n) for n in counts)
        self.spacings = tuple(float(d) for d in spacings)
        self.periodic = tuple(periodic) if periodic is not None else (False,) * len(counts)
        if any(n < 1 for n in self.counts):
            raise DegenerateGrid(f"cell counts must be positive, got {self.counts}")
        self.dim = len(self.counts)

    def _op(self, kind: str, axis: int):
        n, d, per = self.counts[axis], self.spacings[axis], self.periodic[axis]
        if kind == "D":
            return diff_op(n, d, per)
        if kind == "M":
            return mean_op(n, per)
        if kind == "S":
            return second_op(n, d, per)
        raise ValueError(kind)

    def apply(self, kinds: str, u: np.ndarray) -> np.ndarray:
        """Apply the tensor product of 1D stencils ``kinds`` (one letter per axis)."""
        out = u
        for ax, k in enumerate(kinds):
            out = apply_along(self._op(k, ax), out, ax)
        return out

    def adjoint(self, kinds: str, c: np.ndarray) -> np.ndarray:
        """Adjoint of :meth:`apply`."""
        out = c
        for ax, k in enumerate(kinds):
            out = apply_along(self._op(k, ax).T.tocsr(), out, ax)
        return out

    def matrix(self, kinds: str, ncomp: int = 3) -> sp.csr_matrix:
        """Sparse matrix of :meth:`apply` acting on C-order flattened nodal values."""
        out = sp.identity(ncomp, format="csr")
        for ax in reversed(range(self.dim)):
            out = sp.kron(self._op(kinds[ax], ax), out, format="csr")
        return out

    def gradient_kinds(self):
        """Stencil letters for each first partial derivative."""
        return ["".join("D" if j == i else "M" for j in range(self.dim)) for i in range(self.dim)]

    def hessian_kinds(self):
        """``(i, j, letters)`` for each unordered pair ``i <= j``."""
        out = []
        for i in range(self.dim):
            for j in range(i, self.dim):
                if i == j:
                    kinds = "".join("S" if k == i else "M" for k in range(self.dim))
                else:
                    kinds = "".join("D" if k in (i, j) else "M" for k in range(self.dim))
                out.append((i, j, kinds))
        return out


# -- domains and fields ----------------------------------------------------------------

@dataclass(frozen=True)
class Domain:
    """Tensor grid on ``omega x I`` with ``omega`` a rectangle or a disc.

    For a disc the grid covers the bounding square and cells whose centres
    lie outside the disc are masked out of every integral.
    """

    kind: str
    x1_range: tuple
    x2_range: tuple
    nx1: int
    nx2: int
    nx3: int = 1
    center: tuple | None = None
    radius: float | None = None
    _cache: dict = field(default_factory=dict, compare=False, repr=False, hash=False)

    def __post_init__(self):
        if self.kind not in ("rectangle", "disc"):
            raise ValueError(f"unknown domain kind {self.kind!r}")
        if min(self.nx1, self.nx2, self.nx3) < 1:
            raise DegenerateGrid("all cell counts must be positive")
        if not (self.x1_range[1] > self.x1_range[0] and self.x2_range[1] > self.x2_range[0]):
            raise ValueError("ranges must be increasing")

    @classmethod
    def rectangle(cls, x1_range=(-0.5, 0.5), x2_range=(-0.5, 0.5), nx1=32, nx2=32, nx3=4):
        return cls("rectangle", tuple(map(float, x1_range)), tuple(map(float, x2_range)),
                   int(nx1), int(nx2), int(nx3))

    @classmethod
    def disc(cls, center=(0.0, 0.0), radius=0.5, nx1=32, nx2=32, nx3=4):
        c = tuple(map(float, center))
        r = float(radius)
        if r <= 0:
            raise ValueError("radius must be positive")
        return cls("disc", (c[0] - r, c[0] + r), (c[1] - r, c[1] + r), int(nx1), int(nx2),
                   int(nx3), center=c, radius=r)

    def with_counts(self, nx1=None, nx2=None, nx3=None) -> "Domain":
        return Domain(self.kind, self.x1_range, self.x2_range,
                      nx1 or self.nx1, nx2 or self.nx2, nx3 or self.nx3,
                      self.center, self.radius)

    @property
    def spacing(self):
        return ((self.x1_range[1] - self.x1_range[0]) / self.nx1,
                (self.x2_range[1] - self.x2_range[0]) / self.nx2,
                1.0 / self.nx3)

    @property
    def node_shape(self):
        return (self.nx1 + 1, self.nx2 + 1, self.nx3 + 1)

    @property
    def cell_shape(self):
        return (self.nx1, self.nx2, self.nx3)

    def nodes(self, axis: int) -> np.ndarray:
        lo, hi = (self.x1_range, self.x2_range, THICKNESS)[axis]
        n = (self.nx1, self.nx2, self.nx3)[axis]
        return np.linspace(lo, hi, n + 1)

    def centers(self, axis: int) -> np.ndarray:
        x = self.nodes(axis)
        return 0.5 * (x[1:] + x[:-1])

    def node_grid(self):
        """Node coordinate arrays of shape ``node_shape``."""
        return np.meshgrid(self.nodes(0), self.nodes(1), self.nodes(2), indexing="ij")

    @property
    def mask2d(self) -> np.ndarray:
        """Mid-surface cells belonging to omega."""
        if "mask" not in self._cache:
            if self.kind == "rectangle":
                m = np.ones((self.nx1, self.nx2), dtype=bool)
            else:
                X1, X2 = np.meshgrid(self.centers(0), self.centers(1), indexing="ij")
                m = (X1 - self.center[0]) ** 2 + (X2 - self.center[1]) ** 2 < self.radius ** 2
            m.setflags(write=False)
            self._cache["mask"] = m
        return self._cache["mask"]

    @property
    def cell_volume(self) -> float:
        d1, d2, d3 = self.spacing
        return d1 * d2 * d3

    def stencil(self, two_d: bool = False) -> TensorStencil:
        key = "stencil2" if two_d else "stencil3"
        if key not in self._cache:
            d1, d2, d3 = self.spacing
            if two_d:
                self._cache[key] = TensorStencil((self.nx1, self.nx2), (d1, d2))
            else:
                self._cache[key] = TensorStencil((self.nx1, self.nx2, self.nx3), (d1, d2, d3))
        return self._cache[key]

    def chord_length(self, x1: float) -> float:
        """Length of the vertical chord ``omega`` cut at abscissa ``x1``."""
        if self.kind == "rectangle":
            return self.x2_range[1] - self.x2_range[0]
        r2 = self.radius ** 2 - (x1 - self.center[0]) ** 2
        return 2.0 * np.sqrt(max(r2, 0.0))

    def to_json(self) -> dict:
        out = {"kind": self.kind, "nx1": self.nx1, "nx2": self.nx2, "nx3": self.nx3}
        if self.kind == "rectangle":
            out.update(x1_range=list(self.x1_range), x2_range=list(self.x2_range))
        else:
            out.update(center=list(self.center), radius=self.radius)
        return out

    @classmethod
    def from_json(cls, doc: dict) -> "Domain":
        if doc["kind"] == "rectangle":
            return cls.rectangle(doc.get("x1_range", (-0.5, 0.5)), doc.get("x2_range", (-0.5, 0.5)),
                                 doc["nx1"], doc["nx2"], doc.get("nx3", 1))
        if doc["kind"] == "disc":
            return cls.disc(doc.get("center", (0.0, 0.0)), doc["radius"],
                            doc["nx1"], doc["nx2"], doc.get("nx3", 1))
        raise ValueError(f"unknown domain kind {doc['kind']!r}")


@dataclass
class Field3:
    """Vector field ``u: omega x I -> R^3`` sampled at grid nodes.

    ``values`` has shape ``(nx1 + 1, nx2 + 1, nx3 + 1, 3)``; its row-major
    flattening is the storage layout of the snapshot format.
    """

    domain: Domain
    values: np.ndarray

    def __post_init__(self):
        self.values = np.asarray(self.values, dtype=float)
        shape = self.domain.node_shape + (3,)
        if self.values.shape != shape:
            if self.values.size == np.prod(shape):
                self.values = self.values.reshape(shape)
            else:
                raise ValueError(f"values must have shape {shape}, got {self.values.shape}")
        if not np.all(np.isfinite(self.values)):
            raise ValueError("field values must be finite")

    @classmethod
    def from_function(cls, domain: Domain, f) -> "Field3":
        """Sample ``f(x1, x2, x3) -> (..., 3)`` at the nodes."""
        X1, X2, X3 = domain.node_grid()
        return cls(domain, np.asarray(f(X1, X2, X3), dtype=float))

    @classmethod
    def affine(cls, domain: Domain, F, h: float, c=(0.0, 0.0, 0.0)) -> "Field3":
        """Field with constant rescaled gradient ``F``: ``u = F diag(1, 1, h) x + c``."""
        F = np.asarray(F, dtype=float)
        scale = np.array([1.0, 1.0, h])
        return cls.from_function(
            domain, lambda x1, x2, x3: np.stack([x1, x2, x3], -1) * scale @ F.T + np.asarray(c))

    @property
    def flat(self) -> np.ndarray:
        return self.values.reshape(-1)

    def copy(self) -> "Field3":
        return Field3(self.domain, self.values.copy())

    def save(self, path) -> None:
        """Write ``path`` (little-endian float64, row-major) and ``path.json``."""
        path = Path(path)
        path.write_bytes(self.values.astype("<f8").tobytes(order="C"))
        side = {"domain": self.domain.to_json(), "components": 3, "layout": "node"}
        Path(str(path) + ".json").write_text(json.dumps(side, sort_keys=True, indent=1) + "\n")

    @classmethod
    def load(cls, path) -> "Field3":
        path = Path(path)
        side = json.loads(Path(str(path) + ".json").read_text())
        if side.get("components") != 3 or side.get("layout") != "node":
            raise ValueError("unsupported snapshot sidecar")
        dom = Domain.from_json(side["domain"])
        return cls(dom, np.frombuffer(path.read_bytes(), dtype="<f8").copy())


@dataclass
class Field2Pair:
    """Mid-surface pair ``(u, b)``, both sampled at mid-surface nodes."""

    domain: Domain
    u: np.ndarray
    b: np.ndarray
    vertical_variation: float = 0.0

    def __post_init__(self):
        shape = (self.domain.nx1 + 1, self.domain.nx2 + 1, 3)
        self.u = np.asarray(self.u, dtype=float).reshape(shape)
        self.b = np.asarray(self.b, dtype=float).reshape(shape)
        if not (np.all(np.isfinite(self.u)) and np.all(np.isfinite(self.b))):
            raise ValueError("field values must be finite")

    @classmethod
    def from_field3(cls, f: Field3, h: float) -> "Field2Pair":
        """Vertical averages of ``u`` and of ``(1/h) d3 u``.

        ``vertical_variation`` records the largest deviation of either
        quantity from its vertical average, a proxy for ``d3 u`` and
        ``d3 b`` in the limit.
        """
        dom = f.domain
        u = f.values
        d3 = dom.spacing[2]
        b_edges = np.diff(u, axis=2) / (h * d3)
        b_nodes = b_edges.mean(axis=2)
        u_mean = 0.5 * (u[:, :, 1:] + u[:, :, :-1]).mean(axis=2)
        var = max(float(np.abs(u - u_mean[:, :, None]).max()),
                  float(np.abs(b_edges - b_nodes[:, :, None]).max()))
        return cls(dom, u_mean, b_nodes, vertical_variation=var)


def _check_counts(f: Field3, need_second: bool):
    dom = f.domain
    if min(dom.cell_shape) < 1:
        raise DegenerateGrid("cell counts must be positive")
    if need_second and min(dom.cell_shape) < 2:
        raise DegenerateGrid("second differences need at least 2 cells in every direction")


def rescaled_gradient(f: Field3, h: float) -> np.ndarray:
    """Cell-centred ``(d1 u, d2 u, d3 u / h)``, shape ``(nx1, nx2, nx3, 3, 3)``.

    Entry ``[..., i, j]`` is the derivative of component ``i`` along
    direction ``j``.
    """
    if h <= 0:
        raise ValueError("h must be positive")
    _check_counts(f, False)
    st = f.domain.stencil()
    scale = (1.0, 1.0, 1.0 / h)
    cols = [st.apply(k, f.values) * s for k, s in zip(st.gradient_kinds(), scale)]
    return np.stack(cols, axis=-1)


def rescaled_hessian(f: Field3, h: float) -> np.ndarray:
    """Cell-centred rescaled Hessian, shape ``(nx1, nx2, nx3, 3, 3, 3)``.

    Entry ``[..., i, j, k]`` is the second derivative of component ``i`` in
    directions ``j, k``, with ``1/h`` on mixed vertical terms and ``1/h^2``
    on the pure vertical one.
    """
    if h <= 0:
        raise ValueError("h must be positive")
    _check_counts(f, True)
    st = f.domain.stencil()
    sc = (1.0, 1.0, 1.0 / h)
    out = np.empty(f.domain.cell_shape + (3, 3, 3))
    for i, j, kinds in st.hessian_kinds():
        val = st.apply(kinds, f.values) * (sc[i] * sc[j])
        out[..., i, j] = val
        out[..., j, i] = val
    return out
