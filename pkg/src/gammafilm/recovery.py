"""Recovery sequences: fields whose energy approaches ``K * Per(E)``.

Every construction glues rescaled optimal profiles across the interfaces of
a phase set ``E``. For layered sets each interface ``alpha_i`` gets a local
map built from the profile; interfaces where the phase changes from ``A``
(left) to ``B`` (right) use the reflected map ``-w(-x1, -x3)``. Between two
layers both neighbouring maps are affine with the same well gradient, so
they differ by a constant; those constants (the bookkeeping offsets of the
construction) are computed from the maps themselves, which makes the field
continuous across every layer face by construction.

Profiles are interpolated with cubic splines along the profile coordinate
because the energy contains second derivatives. Outside the profile
interval the exact affine well extension is used.
"""

from __future__ import annotations

from dataclasses import dataclass, field

import numpy as np
import shapely
from scipy.interpolate import CubicSpline, RectBivariateSpline
from shapely.geometry import Point, Polygon, box

from .errors import (IncompatibleWells, LayerOutsideDomain, LayersOverlap, TubeTooNarrow)
from .grid import Domain, Field2Pair, Field3
from .potential import Wells
from .profiles import ProfileSolution1D, ProfileSolution2D


# -- geometry ---------------------------------------------------------------------------------

@dataclass
class InterfaceGeometry:
    """Phase set ``E`` (phase ``B``) on the mid-surface.

    Use the constructors :meth:`layered`, :meth:`disc` and
    :meth:`rounded_polygon`.

    Attributes
    ----------
    kind : {"layered", "levelset"}
    domain : Domain
    alphas : tuple of float
        Interface abscissas of a layered set, strictly increasing.
    left_phase : {"A", "B"}
        Phase to the left of the first interface; phases alternate.
    shape : {"disc", "polygon"} or None
        Curve type of a level-set geometry.
    """

    kind: str
    domain: Domain
    alphas: tuple = ()
    left_phase: str = "B"
    shape: str | None = None
    center: tuple = (0.0, 0.0)
    radius: float = 0.0
    vertices: tuple = ()
    corner_radius: float = 0.0
    _region: object = field(default=None, repr=False, compare=False)

    def __post_init__(self):
        if self.kind == "layered":
            a = np.asarray(self.alphas, dtype=float)
            if a.ndim != 1 or a.size == 0:
                raise ValueError("a layered geometry needs at least one interface")
            if np.any(np.diff(a) <= 0):
                raise ValueError("interface abscissas must be strictly increasing")
            lo, hi = self.domain.x1_range
            if a[0] <= lo or a[-1] >= hi:
                raise LayerOutsideDomain("interface abscissas must lie inside the domain")
            if self.left_phase not in ("A", "B"):
                raise ValueError("left_phase must be 'A' or 'B'")
            self.alphas = tuple(float(x) for x in a)
        elif self.kind == "levelset":
            if self.shape == "disc":
                if self.radius <= 0:
                    raise ValueError("radius must be positive")
                self._region = Point(self.center).buffer(self.radius, quad_segs=256)
            elif self.shape == "polygon":
                if self.corner_radius <= 0:
                    raise ValueError("corner_radius must be positive")
                raw = Polygon(self.vertices)
                if not raw.is_valid or raw.area <= 0:
                    raise ValueError("vertices must describe a simple polygon")
                r = self.corner_radius
                # opening then closing rounds convex and concave corners alike
                reg = raw.buffer(-r, quad_segs=64).buffer(r, quad_segs=64)
                reg = reg.buffer(r, quad_segs=64).buffer(-r, quad_segs=64)
                if reg.is_empty or reg.geom_type != "Polygon":
                    raise ValueError("corner radius too large for this polygon")
                self._region = reg
            else:
                raise ValueError(f"unknown level-set shape {self.shape!r}")
        else:
            raise ValueError(f"unknown geometry kind {self.kind!r}")

    @classmethod
    def layered(cls, domain: Domain, alphas, left_phase: str = "B") -> "InterfaceGeometry":
        return cls("layered", domain, tuple(alphas), left_phase)

    @classmethod
    def disc(cls, domain: Domain, center=(0.0, 0.0), radius=0.3) -> "InterfaceGeometry":
        return cls("levelset", domain, shape="disc", center=tuple(map(float, center)),
                   radius=float(radius))

    @classmethod
    def rounded_polygon(cls, domain: Domain, vertices, corner_radius) -> "InterfaceGeometry":
        return cls("levelset", domain, shape="polygon",
                   vertices=tuple(tuple(map(float, v)) for v in vertices),
                   corner_radius=float(corner_radius))

    # -- queries --------------------------------------------------------------------------

    def phase_signs(self) -> list:
        """Phase of each region between interfaces, left to right."""
        other = {"A": "B", "B": "A"}
        out = [self.left_phase]
        for _ in self.alphas:
            out.append(other[out[-1]])
        return out

    def signed_distance(self, x1, x2) -> np.ndarray:
        """Signed distance to the curve, negative inside ``E``."""
        x1, x2 = np.broadcast_arrays(np.asarray(x1, float), np.asarray(x2, float))
        if self.kind == "layered":
            raise ValueError("signed distance is defined for level-set geometries")
        if self.shape == "disc":
            return np.hypot(x1 - self.center[0], x2 - self.center[1]) - self.radius
        pts = shapely.points(x1.ravel(), x2.ravel())
        d = shapely.distance(self._region.exterior, pts).reshape(x1.shape)
        inside = shapely.contains_xy(self._region, x1.ravel(), x2.ravel()).reshape(x1.shape)
        return np.where(inside, -d, d)

    @property
    def reach(self) -> float:
        """Width of the tube around the curve on which the signed distance is smooth."""
        if self.shape == "disc":
            return self.radius
        return self.corner_radius

    def indicator(self, x1, x2) -> np.ndarray:
        """``True`` on ``E`` (phase B)."""
        x1, x2 = np.broadcast_arrays(np.asarray(x1, float), np.asarray(x2, float))
        if self.kind == "layered":
            k = np.searchsorted(np.asarray(self.alphas), x1, side="right")
            phases = np.array([p == "B" for p in self.phase_signs()])
            return phases[k]
        return self.signed_distance(x1, x2) < 0

    def perimeter(self) -> float:
        """Exact ``Per_omega(E)``."""
        dom = self.domain
        if self.kind == "layered":
            return float(sum(dom.chord_length(a) for a in self.alphas))
        if dom.kind == "rectangle":
            omega = box(dom.x1_range[0], dom.x2_range[0], dom.x1_range[1], dom.x2_range[1])
        else:
            omega = Point(dom.center).buffer(dom.radius, quad_segs=256)
        if self.shape == "disc":
            # exact circle length when fully inside omega
            if omega.buffer(-1e-12).contains(self._region):
                return 2.0 * np.pi * self.radius
        return float(self._region.exterior.intersection(omega).length)

    def to_json(self) -> dict:
        out = {"kind": self.kind, "domain": self.domain.to_json()}
        if self.kind == "layered":
            out.update(alphas=list(self.alphas), left_phase=self.left_phase)
        elif self.shape == "disc":
            out.update(shape="disc", center=list(self.center), radius=self.radius)
        else:
            out.update(shape="polygon", vertices=[list(v) for v in self.vertices],
                       corner_radius=self.corner_radius)
        return out

    @classmethod
    def from_json(cls, doc: dict, domain: Domain | None = None) -> "InterfaceGeometry":
        dom = domain or Domain.from_json(doc["domain"])
        if doc["kind"] == "layered":
            return cls.layered(dom, doc["alphas"], doc.get("left_phase", "B"))
        if doc.get("shape") == "disc":
            return cls.disc(dom, doc.get("center", (0.0, 0.0)), doc["radius"])
        if doc.get("shape") == "polygon":
            return cls.rounded_polygon(dom, doc["vertices"], doc["corner_radius"])
        raise ValueError("unknown geometry description")


# -- reference limits ----------------------------------------------------------------------------

def limit_pair(geom: InterfaceGeometry, wells: Wells) -> Field2Pair:
    """The limit ``(u, b)`` with ``(grad' u, b) = (1 - chi_E) A + chi_E B``.

    Layered sets need ``A2 = B2`` (connection normal ``e1``); ``u`` vanishes
    at the first interface on ``x2 = 0``. Level-set geometries need ``A' = B'``.
    """
    dom = geom.domain
    A, B = wells.A, wells.B
    X1, X2 = np.meshgrid(dom.nodes(0), dom.nodes(1), indexing="ij")
    isB = geom.indicator(X1, X2)
    b = np.where(isB[..., None], B[:, 2], A[:, 2])
    if geom.kind == "layered":
        if not np.allclose(A[:, 1], B[:, 1], atol=1e-12):
            raise IncompatibleWells("layered limits need A2 = B2")
        bounds = np.asarray(geom.alphas)
        slopes = [A[:, 0] if p == "A" else B[:, 0] for p in geom.phase_signs()]
        # values at the interfaces, starting from u(alpha_1) = 0
        vals = [np.zeros(3)]
        for k in range(1, len(bounds)):
            vals.append(vals[-1] + slopes[k] * (bounds[k] - bounds[k - 1]))
        x1 = dom.nodes(0)
        k = np.searchsorted(bounds, x1, side="right")
        idx = np.clip(k - 1, 0, len(bounds) - 1)
        base = np.array([vals[i] for i in idx])
        anchor = bounds[idx]
        slope = np.array([slopes[i] for i in k])
        u1 = base + (x1 - anchor)[:, None] * slope
        u = u1[:, None, :] + X2[..., None] * A[:, 1]
    else:
        if not wells.in_plane_equal:
            raise IncompatibleWells("level-set phase sets need A' = B'")
        u = X1[..., None] * A[:, 0] + X2[..., None] * A[:, 1]
    return Field2Pair(dom, u, b)


def build_reference_jump(domain: Domain, wells: Wells) -> Field2Pair:
    """Reference jump ``u = |x1| a`` with ``b = A3`` on ``x1 >= 0`` and ``B3`` on ``x1 < 0``."""
    if not wells.is_normalized:
        raise IncompatibleWells("build_reference_jump expects normalized wells")
    X1, _ = np.meshgrid(domain.nodes(0), domain.nodes(1), indexing="ij")
    u = np.abs(X1)[..., None] * wells.a
    b = np.where((X1 >= 0)[..., None], wells.A[:, 2], wells.B[:, 2])
    return Field2Pair(domain, u, b)


# -- profile evaluators ------------------------------------------------------------------------

def _wells_from_1d(sol: ProfileSolution1D):
    Ahat = np.column_stack([sol.phi1[-1], sol.phi2[-1]])
    Bhat = np.column_stack([sol.phi1[0], sol.phi2[0]])
    return Ahat, Bhat


class _Path1D:
    """``(Phi, phi2)`` of a one-dimensional profile, with ``Phi' = phi1``."""

    def __init__(self, sol: ProfileSolution1D):
        self.L = float(sol.t[-1])
        self.s1 = CubicSpline(sol.t, sol.phi1, bc_type="clamped", axis=0)
        self.s2 = CubicSpline(sol.t, sol.phi2, bc_type="clamped", axis=0)
        self.Phi = self.s1.antiderivative()
        self.Ahat, self.Bhat = _wells_from_1d(sol)

    def __call__(self, t, clamp: bool = False):
        t = np.asarray(t, dtype=float)
        tc = np.clip(t, -self.L, self.L)
        Phi = self.Phi(tc)
        if not clamp:
            Phi = Phi + (t - tc)[..., None] * self.s1(tc)
        return Phi, self.s2(tc)


class _Strip2D:
    """Spline of a K_gamma profile with the exact affine extension beyond the strip."""

    def __init__(self, sol: ProfileSolution2D):
        if sol.A_hat is None:
            raise ValueError("profile lacks its reduced wells")
        self.half = 0.5 * sol.ell
        self.spl = [RectBivariateSpline(sol.s1, sol.s2, sol.v[..., k], kx=3, ky=3, s=0)
                    for k in range(3)]
        self.Ahat, self.Bhat, self.c = sol.A_hat, sol.B_hat, np.asarray(sol.c)

    def affine(self, y1, y2, right):
        W = np.where(right[..., None, None], self.Ahat, self.Bhat)
        sign = np.where(right, 1.0, -1.0)[..., None]
        return y1[..., None] * W[..., 0] + y2[..., None] * W[..., 1] + sign * self.c

    def __call__(self, y1, y2):
        y1, y2 = np.broadcast_arrays(np.asarray(y1, float), np.asarray(y2, float))
        out = self.affine(y1, y2, y1 > 0)
        inside = np.abs(y1) <= self.half
        if inside.any():
            a, b = y1[inside], y2[inside]
            out[inside] = np.stack([s.ev(a, b) for s in self.spl], axis=-1)
        return out


class _Periodic2D:
    """Spline of a K_inf cell profile; ``y`` are strip coordinates ``(y1, y2)``."""

    PAD = 4

    def __init__(self, sol: ProfileSolution2D):
        if sol.A_hat is None:
            raise ValueError("profile lacks its reduced wells")
        lam = sol.lam
        r = np.sqrt(1.0 + lam ** 2)
        self.r = r
        self.nu = np.array([1.0, lam]) / r
        self.nup = np.array([-lam, 1.0]) / r
        n2 = len(sol.s2)
        P = self.PAD
        tau = -0.5 + np.arange(-P, n2 + P) / n2
        idx = np.arange(-P, n2 + P) % n2
        self.spl = [RectBivariateSpline(sol.s1, tau, sol.v[:, idx, k], kx=3, ky=3, s=0)
                    for k in range(3)]
        self.Ahat, self.Bhat, self.c = sol.A_hat, sol.B_hat, np.asarray(sol.c)
        self.vbar = CubicSpline(sol.s1, sol.v.mean(axis=1), axis=0)

    def affine(self, y1, y2, right):
        W = np.where(right[..., None, None], self.Ahat, self.Bhat)
        sign = np.where(right, 1.0, -1.0)[..., None]
        return y1[..., None] * W[..., 0] + y2[..., None] * W[..., 1] + sign * self.c

    def __call__(self, y1, y2):
        y1, y2 = np.broadcast_arrays(np.asarray(y1, float), np.asarray(y2, float))
        s = y1 * self.nu[0] + y2 * self.nu[1]
        tau = y1 * self.nup[0] + y2 * self.nup[1]
        out = self.affine(y1, y2, s > 0)
        inside = np.abs(s) <= 0.5
        if inside.any():
            a = s[inside]
            b = np.mod(tau[inside] + 0.5, 1.0) - 0.5
            out[inside] = np.stack([sp.ev(a, b) for sp in self.spl], axis=-1)
        return out

    def along_normal(self, s):
        """Cell-averaged profile ``V(s)`` (average over the periodic direction)."""
        s = np.asarray(s, dtype=float)
        sc = np.clip(s, -0.5, 0.5)
        out = self.vbar(sc)
        # beyond the clamps the profile is affine in s with slope nu . (A1, A3) or nu . (B1, B3)
        right = s > 0.5
        left = s < -0.5
        gA = self.nu[0] * self.Ahat[:, 0] + self.nu[1] * self.Ahat[:, 1]
        gB = self.nu[0] * self.Bhat[:, 0] + self.nu[1] * self.Bhat[:, 1]
        out = out + np.where(right[..., None], (s - sc)[..., None] * gA, 0.0)
        out = out + np.where(left[..., None], (s - sc)[..., None] * gB, 0.0)
        return out


# -- assembled maps ------------------------------------------------------------------------------

@dataclass
class RecoveryMap:
    """Point-evaluable recovery displacement ``u(x1, x2, x3)``.

    Attributes
    ----------
    geometry : InterfaceGeometry
    eps, h : float
    regime : str
    halfwidth : float
        Half-width of each transition layer measured along ``x1`` (layered)
        or along the normal (level sets).
    info : dict
        Construction data: offsets between regions, continuity check of the
        offsets in ``x3``, attained period count.
    """

    geometry: InterfaceGeometry
    eps: float
    h: float
    regime: str
    halfwidth: float
    fn: object = field(repr=False)
    info: dict = field(default_factory=dict)

    def __call__(self, x1, x2, x3) -> np.ndarray:
        x1, x2, x3 = np.broadcast_arrays(np.asarray(x1, float), np.asarray(x2, float),
                                         np.asarray(x3, float))
        return self.fn(x1, x2, x3)

    def sample(self) -> Field3:
        """Nodal values on the geometry's grid."""
        dom = self.geometry.domain
        X1, X2, X3 = dom.node_grid()
        return Field3(dom, self(X1, X2, X3))


def _layered_map(geom, local, halfwidth, tilt, regime, eps, h):
    """Glue ``sigma_i * local(sigma_i (x1 - alpha_i), sigma_i x3)`` across the layers."""
    if geom.kind != "layered":
        raise ValueError("this construction needs a layered geometry")
    dom = geom.domain
    al = np.asarray(geom.alphas)
    ext = halfwidth + tilt
    lo, hi = dom.x1_range
    if al[0] - ext < lo or al[-1] + ext > hi:
        raise LayerOutsideDomain(
            f"transition layers of half-width {ext:.4g} do not fit inside the x1-range")
    if len(al) > 1 and np.min(np.diff(al)) <= 2.0 * ext:
        raise LayersOverlap(f"transition layers of half-width {ext:.4g} overlap")
    phases = geom.phase_signs()
    sig = np.array([1.0 if phases[i] == "B" else -1.0 for i in range(len(al))])
    mids = 0.5 * (al[1:] + al[:-1])

    def F(i, x1, x3):
        s = sig[i]
        return s * local(s * (x1 - al[i]), s * x3)

    x3s = np.linspace(-0.5, 0.5, 9)
    offsets = [np.zeros(3)]
    spread = 0.0
    for k in range(1, len(al)):
        m = np.full_like(x3s, mids[k - 1])
        diff = F(k - 1, m, x3s) + offsets[-1] - F(k, m, x3s)
        spread = max(spread, float(np.ptp(diff, axis=0).max()))
        offsets.append(diff.mean(axis=0))

    def fn(x1, x2, x3):
        k = np.searchsorted(mids, x1)
        out = np.empty(x1.shape + (3,))
        for i in range(len(al)):
            sel = k == i
            if sel.any():
                out[sel] = F(i, x1[sel], x3[sel]) + offsets[i]
        return out

    info = {"offsets": [o.tolist() for o in offsets], "offset_x3_spread": spread,
            "signs": sig.tolist()}
    return RecoveryMap(geom, float(eps), float(h), regime, halfwidth, fn, info)


def _check_eps(eps, h):
    if eps <= 0 or h <= 0:
        raise ValueError("eps and h must be positive")


def critical_layered_map(geom: InterfaceGeometry, profile: ProfileSolution2D, eps: float,
                         gamma: float) -> RecoveryMap:
    """Layered recovery map for ``h = gamma * eps``; see :func:`build_recovery_critical_layered`."""
    if profile.kind != "Kgamma":
        raise ValueError("critical recovery needs a K_gamma profile")
    if abs(profile.gamma - gamma) > 1e-12 * max(1.0, gamma):
        raise ValueError(f"profile was computed for gamma={profile.gamma}, not {gamma}")
    h = gamma * eps
    _check_eps(eps, h)
    V = _Strip2D(profile)

    def local(x1r, x3):
        return eps * V(x1r / eps, gamma * x3)

    return _layered_map(geom, local, 0.5 * profile.ell * eps, 0.0, "critical", eps, h)


def build_recovery_critical_layered(geom: InterfaceGeometry, profile: ProfileSolution2D,
                                    eps: float, gamma: float) -> Field3:
    """Critical-regime recovery field for a layered phase set, ``h = gamma * eps``.

    Inside the layer ``|x1 - alpha_i| < ell eps / 2`` the field is
    ``eps * v((x1 - alpha_i)/eps, gamma x3)`` (reflected for ``A -> B``
    interfaces) plus an offset; outside it is the affine well branch plus the
    accumulated offsets.

    Raises
    ------
    LayersOverlap, LayerOutsideDomain
    """
    return critical_layered_map(geom, profile, eps, gamma).sample()


def critical_levelset_map(geom: InterfaceGeometry, profile: ProfileSolution2D, eps: float,
                          gamma: float) -> RecoveryMap:
    if profile.kind != "Kgamma":
        raise ValueError("critical recovery needs a K_gamma profile")
    if geom.kind != "levelset":
        raise ValueError("this construction needs a level-set geometry")
    if profile.A_hat is None or not np.allclose(profile.A_hat[:, 0], profile.B_hat[:, 0]):
        raise IncompatibleWells("level-set recovery needs A' = B'")
    h = gamma * eps
    _check_eps(eps, h)
    half = 0.5 * profile.ell
    if half * eps >= geom.reach:
        raise TubeTooNarrow(f"layer half-width {half * eps:.4g} >= tube width {geom.reach:.4g}")
    V = _Strip2D(profile)

    def fn(x1, x2, x3):
        y1 = np.clip(geom.signed_distance(x1, x2) / eps, -half, half)
        return eps * V(y1, gamma * x3)

    return RecoveryMap(geom, float(eps), float(h), "critical", half * eps, fn)


def build_recovery_critical_levelset(geom: InterfaceGeometry, profile: ProfileSolution2D,
                                     eps: float, gamma: float) -> Field3:
    """Critical-regime recovery field ``eps v(d/eps, gamma x3)`` around a smooth curve.

    ``d`` is the signed distance to the curve (negative inside ``E``); the
    profile coordinate is clamped to ``[-ell/2, ell/2]``.

    Raises
    ------
    TubeTooNarrow
        If ``ell eps / 2`` reaches the width of the tube where ``d`` is smooth.
    IncompatibleWells
        If the in-plane parts of the wells differ.
    """
    return critical_levelset_map(geom, profile, eps, gamma).sample()


def subcritical_map(geom: InterfaceGeometry, profile: ProfileSolution1D, eps: float,
                    h: float) -> RecoveryMap:
    _check_eps(eps, h)
    P = _Path1D(profile)
    L = P.L
    if geom.kind == "layered":
        def local(x1r, x3):
            Phi, p2 = P(x1r / eps)
            return eps * Phi + (h * x3)[..., None] * p2

        return _layered_map(geom, local, L * eps, 0.0, "subcritical", eps, h)

    if not np.allclose(P.Ahat[:, 0], P.Bhat[:, 0]):
        raise IncompatibleWells("level-set recovery needs A' = B'")
    if L * eps >= geom.reach:
        raise TubeTooNarrow(f"layer half-width {L * eps:.4g} >= tube width {geom.reach:.4g}")

    def fn(x1, x2, x3):
        Phi, p2 = P(geom.signed_distance(x1, x2) / eps, clamp=True)
        return eps * Phi + (h * x3)[..., None] * p2

    return RecoveryMap(geom, float(eps), float(h), "subcritical", L * eps, fn)


def build_recovery_subcritical(geom: InterfaceGeometry, profile: ProfileSolution1D, eps: float,
                               h: float) -> Field3:
    """Subcritical recovery field from a one-dimensional profile ``(phi1, phi2)``.

    With ``Phi' = phi1`` the local map is ``eps Phi(t) + h x3 phi2(t)``,
    ``t = (x1 - alpha_i)/eps`` for layered sets and ``t = d(x')/eps``
    (clamped to ``[-ell, ell]``) for level sets. Hence ``(1/h) d3 u`` equals
    ``phi2(t)`` exactly.

    Raises
    ------
    LayersOverlap, LayerOutsideDomain, TubeTooNarrow
    """
    return subcritical_map(geom, profile, eps, h).sample()


def supercritical_map(geom: InterfaceGeometry, profile: ProfileSolution2D, eps: float, h: float,
                      lam: float, one_dimensional: bool = False) -> RecoveryMap:
    _check_eps(eps, h)
    if profile.kind != "Kinfty" or profile.lam is None:
        raise IncompatibleWells("supercritical recovery needs a K_inf profile")
    if abs(profile.lam - lam) > 1e-12 * max(1.0, abs(lam)):
        raise IncompatibleWells(f"profile was computed for lambda={profile.lam}, not {lam}")
    Ah, Bh = profile.A_hat, profile.B_hat
    if not np.allclose(Ah, -Bh) or not np.allclose(Ah[:, 1], lam * Ah[:, 0]):
        raise IncompatibleWells("wells must be A = -B = a (x) (e1 + lam e3)")
    V = _Periodic2D(profile)
    ell = profile.ell
    scale = ell * eps
    r = V.r
    if one_dimensional:
        def local(x1r, x3):
            return scale * V.along_normal((x1r + lam * h * x3) / (scale * r))
    else:
        def local(x1r, x3):
            return scale * V(x1r / scale, h * x3 / scale)

    m = _layered_map(geom, local, 0.5 * scale * r, 0.5 * abs(lam) * h, "supercritical",
                     eps, h)
    m.info["periods_across_thickness"] = h / (scale * r)
    m.info["one_dimensional"] = bool(one_dimensional)
    return m


def build_recovery_supercritical(geom: InterfaceGeometry, profile: ProfileSolution2D, eps: float,
                                 h: float, lam: float, one_dimensional: bool = False) -> Field3:
    """Supercritical recovery field with tilted slabs.

    Inside the slab ``|x1 - alpha_i + lam h x3| < ell eps sqrt(1+lam^2)/2`` the
    field is ``ell eps v(((x1 - alpha_i), h x3)/(ell eps))`` with ``v`` the
    periodic cell profile evaluated at ``s = y . nu``, ``tau = y . nu_perp``
    (mod 1). Between slabs it is ``u_bar(x1 + lam h x3)`` plus constants.

    With ``one_dimensional=True`` the field is ``w(x1 - alpha_i + lam h x3)``
    with ``w`` the period-averaged profile along the normal, the
    one-dimensional construction available for rank-one connected wells.

    Raises
    ------
    IncompatibleWells, LayersOverlap, LayerOutsideDomain
    """
    return supercritical_map(geom, profile, eps, h, lam, one_dimensional).sample()
