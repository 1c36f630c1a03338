import numpy as np
import pytest

from gammafilm.energy import energy_2d, energy_3d, energy_limit, evaluate_3d
from gammafilm.errors import RegionOutsideDomain
from gammafilm.grid import Domain, Field2Pair, Field3
from gammafilm.sharp_interface import PhaseMap


def smooth_field(dom, seed, amp=0.3):
    rng = np.random.default_rng(seed)
    k = rng.normal(size=(3, 3, 3))
    ph = rng.uniform(0, 2 * np.pi, size=(3, 3))

    def f(x1, x2, x3):
        comps = []
        for c in range(3):
            v = x1 * (c == 0) + 0.1 * x3 * (c == 2)
            for m in range(3):
                v = v + amp * np.sin(k[c, m, 0] * x1 + k[c, m, 1] * x2 + k[c, m, 2] * x3 + ph[c, m]) / (m + 1)
            comps.append(v)
        return np.stack(comps, -1)

    return Field3.from_function(dom, f)


def test_affine_well_zero(generic_spec):
    dom = Domain.rectangle(nx1=8, nx2=8, nx3=4)
    u = Field3.affine(dom, generic_spec.wells.A, 0.3)
    rep = energy_3d(generic_spec, u, 0.1, 0.3)
    assert rep.total == pytest.approx(0.0, abs=1e-20)


def test_report_parts(generic_spec):
    dom = Domain.rectangle(nx1=8, nx2=6, nx3=4)
    rep = energy_3d(generic_spec, smooth_field(dom, 1), 0.1, 0.2, density=True)
    assert rep.bulk >= 0 and rep.singular >= 0
    assert rep.total == rep.bulk + rep.singular
    assert rep.density.shape == dom.cell_shape
    assert np.sum(rep.density) * dom.cell_volume == pytest.approx(rep.total, rel=1e-12)


@pytest.mark.parametrize("seed", range(5))
def test_scaling_identity(generic_spec, seed):
    alpha = 0.5
    eps, h = 0.07, 0.11
    dom_u = Domain.rectangle((-0.5, 0.5), (-0.5, 0.5), 16, 16, 4)
    dom_v = Domain.rectangle((-1.0, 1.0), (-1.0, 1.0), 16, 16, 4)
    u = smooth_field(dom_u, seed)
    v = Field3(dom_v, u.values / alpha)   # v(x) = u(alpha x', x3) / alpha
    J = ((-0.5, 0.5), (-0.25, 0.75))
    aJ = tuple((alpha * a, alpha * b) for a, b in J)
    lhs = energy_3d(generic_spec, v, eps / alpha, h / alpha, region=J).total
    rhs = energy_3d(generic_spec, u, eps, h, region=aJ).total / alpha
    assert abs(lhs - rhs) <= 1e-12 * abs(rhs)


def _ramp(t):
    # C^1 ramp from -1 to 1 on [-1, 1]
    s = np.clip(t, -1, 1)
    return np.where(np.abs(t) <= 1, 1.5 * s - 0.5 * s ** 3, np.sign(t))


def test_reference_jump_matches_1d_oracle(generic_spec):
    eps, h = 0.1, 0.1
    a = generic_spec.wells.A[:, 0]
    n1 = 64
    dom = Domain.rectangle(nx1=n1, nx2=3, nx3=2)
    # antiderivative-type profile: u = eps * Phi(x1 / eps) a with Phi' = ramp
    t = dom.nodes(0) / eps
    Phi = np.where(np.abs(t) <= 1, 0.75 * t ** 2 - 0.125 * t ** 4 + 0.375, np.abs(t))
    u1d = eps * Phi[:, None] * a
    vals = np.broadcast_to(u1d[:, None, None, :], dom.node_shape + (3,)).copy()
    rep = energy_3d(generic_spec, Field3(dom, vals), eps, h)

    # independent 1D oracle: difference quotients and midpoint quadrature along x1
    d = dom.spacing[0]
    G1 = np.diff(u1d, axis=0) / d
    xi = np.zeros((n1, 3, 3))
    xi[:, :, 0] = G1
    A, B = generic_spec.wells.A, generic_spec.wells.B
    W = np.minimum(((xi - A) ** 2).sum((1, 2)), ((xi - B) ** 2).sum((1, 2)))
    S = np.empty((n1, 3))
    S[0] = (u1d[0] - 2 * u1d[1] + u1d[2]) / d ** 2
    S[-1] = (u1d[-3] - 2 * u1d[-2] + u1d[-1]) / d ** 2
    S[1:-1] = (u1d[:-3] - u1d[1:-2] - u1d[2:-1] + u1d[3:]) / (2 * d ** 2)
    area = (dom.x2_range[1] - dom.x2_range[0]) * 1.0
    oracle = area * d * np.sum(W / eps + eps * (S ** 2).sum(1))
    assert rep.total == pytest.approx(oracle, rel=1e-10)


def test_energy_2d_constant_pair(generic_spec):
    dom = Domain.rectangle(nx1=4, nx2=4, nx3=1)
    X1, X2 = np.meshgrid(dom.nodes(0), dom.nodes(1), indexing="ij")
    A = generic_spec.wells.A
    u = X1[..., None] * A[:, 0] + X2[..., None] * A[:, 1]
    b = np.broadcast_to(A[:, 2], u.shape)
    assert energy_2d(generic_spec, Field2Pair(dom, u, b), 0.1).total == pytest.approx(0, abs=1e-25)


def test_energy_2d_b_term_hand_quadrature(generic_spec):
    dom = Domain.rectangle((0, 1), (0, 1), nx1=4, nx2=4, nx3=1)
    X1, X2 = np.meshgrid(dom.nodes(0), dom.nodes(1), indexing="ij")
    A = generic_spec.wells.A
    u = X1[..., None] * A[:, 0]
    b = A[:, 2] + np.stack([np.sin(X1 + 2 * X2), X1 * X2, 0 * X1], -1)
    eps = 0.2
    rep = energy_2d(generic_spec, Field2Pair(dom, u, b), eps)
    d = 0.25
    tot_b, tot_w = 0.0, 0.0
    for i in range(4):
        for j in range(4):
            c = [b[i, j], b[i + 1, j], b[i, j + 1], b[i + 1, j + 1]]
            db1 = 0.5 * ((c[1] - c[0]) + (c[3] - c[2])) / d
            db2 = 0.5 * ((c[2] - c[0]) + (c[3] - c[1])) / d
            tot_b += 2 * eps * (db1 @ db1 + db2 @ db2) * d * d
            xi = np.zeros((3, 3))
            xi[:, 0] = A[:, 0]
            xi[:, 2] = sum(c) / 4
            tot_w += min(np.sum((xi - A) ** 2), np.sum((xi + A) ** 2)) / eps * d * d
    assert rep.singular == pytest.approx(tot_b, rel=1e-12)
    assert rep.bulk == pytest.approx(tot_w, rel=1e-12)


def test_3d_vs_2d_decomposition(generic_spec):
    dom = Domain.rectangle(nx1=8, nx2=8, nx3=4)
    X1, X2 = np.meshgrid(dom.nodes(0), dom.nodes(1), indexing="ij")
    u2 = np.stack([X1 + 0.2 * np.sin(3 * X1 * X2), 0.1 * X2 ** 2, 0.3 * X1 * X2], -1)
    b = np.stack([0.2 + 0.5 * X1, 0.1 * X2, 1.0 + 0.3 * X1 - 0.2 * X2], -1)   # affine b
    eps = 0.1
    r2 = energy_2d(generic_spec, Field2Pair(dom, u2, b), eps)
    gaps = []
    for h in (0.1, 0.01, 0.001):
        x3 = dom.nodes(2)
        vals = u2[:, :, None, :] + h * x3[None, None, :, None] * b[:, :, None, :]
        r3 = energy_3d(generic_spec, Field3(dom, vals), eps, h)
        # with affine b every Hessian term matches term by term, including 2|grad' b|^2
        assert r3.singular == pytest.approx(r2.singular, rel=1e-9)
        gaps.append(abs(r3.bulk - r2.bulk))
    assert gaps[2] < gaps[1] < gaps[0]
    assert gaps[2] <= 1e-4 * r2.bulk


def test_region_alignment_and_bounds(generic_spec):
    dom = Domain.rectangle(nx1=8, nx2=8, nx3=2)
    u = smooth_field(dom, 0)
    with pytest.raises(RegionOutsideDomain):
        energy_3d(generic_spec, u, 0.1, 0.1, region=((-0.3, 0.1), (-0.5, 0.5)))
    with pytest.raises(RegionOutsideDomain):
        energy_3d(generic_spec, u, 0.1, 0.1, region=((-0.5, 1.0), (-0.5, 0.5)))


def test_region_monotone_and_additive(generic_spec):
    dom = Domain.rectangle(nx1=8, nx2=8, nx3=2)
    u = smooth_field(dom, 2)
    e = lambda r: energy_3d(generic_spec, u, 0.1, 0.1, region=r).total  # noqa: E731
    left = e(((-0.5, 0.0), (-0.5, 0.5)))
    right = e(((0.0, 0.5), (-0.5, 0.5)))
    full = e(None)
    small = e(((-0.25, 0.0), (-0.5, 0.25)))
    assert small <= left <= full
    assert left + right == pytest.approx(full, rel=1e-13)


def test_translation_invariance(generic_spec):
    big = Domain.rectangle((0, 2), (0, 1), 16, 8, 2)
    u = smooth_field(big, 4)
    win = Domain.rectangle((0, 1), (0, 1), 8, 8, 2)
    # windows shifted by whole cells; interior region avoids one-sided end stencils
    reg = ((0.25, 0.75), (0, 1))
    for shift in (2, 4, 6):
        w = Field3(win, u.values[shift:shift + 9])
        off = shift * big.spacing[0]
        ref = energy_3d(generic_spec, u, 0.1, 0.1,
                        region=((0.25 + off, 0.75 + off), (0, 1))).total
        got = energy_3d(generic_spec, w, 0.1, 0.1, region=reg).total
        assert got == pytest.approx(ref, rel=1e-12)


def test_disc_mask_excludes_outside(generic_spec):
    dom = Domain.disc(radius=0.5, nx1=16, nx2=16, nx3=2)
    u = smooth_field(dom, 5)
    vals = u.values.copy()
    rep = energy_3d(generic_spec, Field3(dom, vals), 0.1, 0.1, density=True)
    assert rep.total == pytest.approx(
        np.sum(rep.density * dom.mask2d[:, :, None]) * dom.cell_volume, rel=1e-12)


def test_energy_limit():
    dom = Domain.rectangle(nx1=64, nx2=64, nx3=1)
    empty = PhaseMap.from_function(dom, lambda x1, x2: np.zeros_like(x1, bool))
    half = PhaseMap.from_function(dom, lambda x1, x2: x1 < 0)
    assert energy_limit(2.5, empty) == 0.0
    assert energy_limit(2.5, half) == pytest.approx(2.5, abs=1e-12)
    dom = Domain.rectangle(nx1=256, nx2=256, nx3=1)
    disc = PhaseMap.from_function(dom, lambda x1, x2: x1 ** 2 + x2 ** 2 < 0.09)
    assert energy_limit(2.0, disc) == pytest.approx(2.0 * 2 * np.pi * 0.3, rel=0.02)
    with pytest.raises(ValueError):
        energy_limit(0.0, disc)


def test_eps_h_positive(generic_spec):
    dom = Domain.rectangle(nx1=4, nx2=4, nx3=2)
    with pytest.raises(ValueError):
        evaluate_3d(generic_spec, smooth_field(dom, 0), 0.0, 0.1)
