import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from gammafilm.errors import ScheduleTooShort
from gammafilm.grid import Domain, Field2Pair, Field3
from gammafilm.sharp_interface import (PhaseMap, check_structure, classify_phases,
                                       convergence_diagnostic, perimeter)

UNIT = dict(x1_range=(-0.5, 0.5), x2_range=(-0.5, 0.5))


def smoothed_jump(dom, eps, h):
    """u = eps Phi(x1/eps) e1 + h x3 tanh(x1/eps) e3, a smoothed jump between +-diag(1,0,1)."""
    def f(x1, x2, x3):
        t = x1 / eps
        Phi = eps * np.log(np.cosh(t))
        return np.stack([Phi, 0 * x1, h * x3 * np.tanh(t)], -1)
    return Field3.from_function(dom, f)


# -- classify_phases --------------------------------------------------------------------------

def test_classify_affine_B(generic_spec):
    dom = Domain.rectangle(nx1=8, nx2=8, nx3=2)
    u = Field3.affine(dom, generic_spec.wells.B, 0.2)
    assert classify_phases(generic_spec, u, 0.2).indicator.all()
    u = Field3.affine(dom, generic_spec.wells.A, 0.2)
    assert not classify_phases(generic_spec, u, 0.2).indicator.any()


def test_classify_smoothed_jump(generic_spec):
    dom = Domain.rectangle(nx1=64, nx2=8, nx3=4, **UNIT)
    ph = classify_phases(generic_spec, smoothed_jump(dom, 0.02, 0.02), 0.02)
    ref = PhaseMap.from_function(dom, lambda x1, x2: x1 < 0)
    d1 = dom.spacing[0]
    assert ph.symmetric_difference(ref) <= d1 * 1.0 + 1e-12


def test_classify_disc(iso_spec):
    dom = Domain.rectangle(nx1=64, nx2=64, nx3=2, **UNIT)
    h, eps, r = 0.01, 0.02, 0.3

    def f(x1, x2, x3):
        d = np.hypot(x1, x2) - r
        return np.stack([0 * x1, 0 * x1, h * x3 * np.tanh(d / eps)], -1)

    ph = classify_phases(iso_spec, Field3.from_function(dom, f), h)
    ref = PhaseMap.from_function(dom, lambda x1, x2: np.hypot(x1, x2) < r)
    ring = 2 * np.pi * r * dom.spacing[0]
    assert ph.symmetric_difference(ref) <= ring


@settings(max_examples=20, deadline=None)
@given(c=st.lists(st.floats(-100, 100), min_size=3, max_size=3))
def test_classify_constant_shift(generic_spec, c):
    dom = Domain.rectangle(nx1=32, nx2=4, nx3=2, **UNIT)
    u = smoothed_jump(dom, 0.05, 0.1)
    v = Field3(dom, u.values + np.asarray(c))
    np.testing.assert_array_equal(classify_phases(generic_spec, u, 0.1).indicator,
                                  classify_phases(generic_spec, v, 0.1).indicator)


# -- perimeter --------------------------------------------------------------------------------

@pytest.mark.parametrize("est", ["polygonal", "edge_count"])
def test_perimeter_trivial(est):
    dom = Domain.rectangle(nx1=40, nx2=40, nx3=1, **UNIT)
    empty = PhaseMap.from_function(dom, lambda a, b: np.zeros_like(a, bool))
    full = PhaseMap.from_function(dom, lambda a, b: np.ones_like(a, bool))
    half = PhaseMap.from_function(dom, lambda a, b: a < 0)
    assert perimeter(empty, est) == 0.0
    assert perimeter(full, est) == 0.0
    assert perimeter(half, est) == pytest.approx(1.0, abs=1e-12)


def test_perimeter_disc():
    dom = Domain.rectangle(nx1=256, nx2=256, nx3=1, **UNIT)
    ph = PhaseMap.from_function(dom, lambda a, b: np.hypot(a, b) < 0.3)
    P = 2 * np.pi * 0.3
    assert perimeter(ph) == pytest.approx(P, rel=0.02)
    assert perimeter(ph, "edge_count") == pytest.approx(4 / np.pi * P, rel=0.02)


@pytest.mark.parametrize("shape", ["disc", "square", "tilted", "ellipse"])
def test_edge_count_dominates(shape):
    dom = Domain.rectangle(nx1=128, nx2=128, nx3=1, **UNIT)
    fns = {"disc": lambda a, b: np.hypot(a, b) < 0.3,
           "square": lambda a, b: (abs(a) < 0.2) & (abs(b) < 0.3),
           "tilted": lambda a, b: a + 0.6 * b < 0.1,
           "ellipse": lambda a, b: (a / 0.4) ** 2 + (b / 0.2) ** 2 < 1}
    ph = PhaseMap.from_function(dom, fns[shape])
    assert perimeter(ph, "edge_count") >= perimeter(ph, "polygonal") - 4 * dom.spacing[0]


def test_perimeter_disc_domain_chord():
    dom = Domain.disc(radius=0.5, nx1=128, nx2=128, nx3=1)
    ph = PhaseMap.from_function(dom, lambda a, b: a < 0)
    assert perimeter(ph) == pytest.approx(1.0, rel=0.01)


def test_perimeter_unknown_estimator():
    dom = Domain.rectangle(nx1=4, nx2=4, nx3=1)
    with pytest.raises(ValueError):
        perimeter(PhaseMap.from_function(dom, lambda a, b: a < 0), "hausdorff")


def test_phase_map_round_trip(tmp_path):
    dom = Domain.disc(radius=0.5, nx1=12, nx2=10, nx3=1)
    ph = PhaseMap.from_function(dom, lambda a, b: a + b < 0.1)
    pbm, meta = ph.save(tmp_path / "phases")
    assert pbm.read_text().startswith("P1\n12 10\n")  # width = nx1, height = nx2
    back = PhaseMap.load(tmp_path / "phases")
    np.testing.assert_array_equal(back.indicator & back.mask, ph.indicator & ph.mask)
    assert back.symmetric_difference(ph) == 0.0
    assert ph.to_json()["convention"] == "1 = phase B"


# -- check_structure --------------------------------------------------------------------------

def layered_pair(dom, wells, alphas, left_B=True):
    """Exact layered pair with phase B on the odd/even layers."""
    a = wells.a
    x1 = dom.nodes(0)
    cuts = np.concatenate([[dom.x1_range[0]], alphas, [dom.x1_range[1]]])
    # psi(x1) = measure of phase B in (x1_lo, x1)
    psi = np.zeros_like(x1)
    for k in range(len(cuts) - 1):
        if (k % 2 == 0) == left_B:
            psi += np.clip(x1 - cuts[k], 0, cuts[k + 1] - cuts[k])
    layer = np.searchsorted(cuts[1:-1], x1, side="right")
    isB = (layer % 2 == 0) == left_B
    u1 = (x1 - 2 * psi)[:, None] * a
    b1 = np.where(isB[:, None], wells.B[:, 2], wells.A[:, 2])
    u = np.broadcast_to(u1[:, None, :], (dom.nx1 + 1, dom.nx2 + 1, 3))
    b = np.broadcast_to(b1[:, None, :], u.shape)
    return Field2Pair(dom, u, b)


def test_structure_layered(generic_spec):
    dom = Domain.rectangle(nx1=50, nx2=20, nx3=1, **UNIT)
    pair = layered_pair(dom, generic_spec.wells, [-0.2, 0.4])
    rep = check_structure(pair, generic_spec.wells)
    assert rep.is_layered is True
    np.testing.assert_allclose(rep.interface_abscissas, [-0.2, 0.4], atol=dom.spacing[0])
    np.testing.assert_allclose(rep.chord_lengths, [1.0, 1.0])
    assert rep.u_form_residual <= 1e-8
    # nodal b jumps across the straddling cell, whose averaged b sits halfway between wells
    assert rep.well_distance == pytest.approx(1.0)
    assert np.all(np.diff(rep.interface_abscissas) > 0)


def test_structure_checkerboard(generic_spec):
    dom = Domain.rectangle(nx1=40, nx2=40, nx3=1, **UNIT)
    X1, X2 = np.meshgrid(dom.nodes(0), dom.nodes(1), indexing="ij")
    shift = np.where(np.floor((X2 + 0.5) / 0.25) % 2 == 0, 0.0, 0.125)
    tri = 0.125 - np.abs(((X1 + shift) % 0.25) - 0.125)
    u = tri[..., None] * generic_spec.wells.a
    b = np.zeros_like(u)
    rep = check_structure(Field2Pair(dom, u, b), generic_spec.wells)
    assert rep.is_layered is False
    assert rep.u_form_residual > 0.05


def test_structure_in_plane_equal(iso_spec):
    dom = Domain.rectangle(nx1=20, nx2=20, nx3=1, **UNIT)
    X1, X2 = np.meshgrid(dom.nodes(0), dom.nodes(1), indexing="ij")
    inside = np.hypot(X1, X2) < 0.3
    b = np.where(inside[..., None], iso_spec.wells.B[:, 2], iso_spec.wells.A[:, 2])
    rep = check_structure(Field2Pair(dom, np.zeros_like(b), b), iso_spec.wells)
    assert rep.is_layered is None
    assert rep.u_form_residual is None
    assert rep.interface_abscissas == []
    assert rep.to_json()["is_layered"] == "not-applicable"


# -- convergence_diagnostic ----------------------------------------------------------------

def test_diagnostic_too_short(generic_spec):
    dom = Domain.rectangle(nx1=8, nx2=4, nx3=2)
    u = Field3.affine(dom, generic_spec.wells.A, 0.1)
    with pytest.raises(ScheduleTooShort):
        convergence_diagnostic(generic_spec, [(u, 0.1, 0.1), (u, 0.05, 0.05)])


def test_diagnostic_single_well(generic_spec):
    sched = []
    for k, eps in enumerate((0.1, 0.05, 0.025)):
        dom = Domain.rectangle(nx1=8 * 2 ** k, nx2=4, nx3=2)
        sched.append((Field3.affine(dom, generic_spec.wells.A, eps), eps, eps))
    rep = convergence_diagnostic(generic_spec, sched)
    assert max(rep.off_well_fraction) == 0.0
    assert max(rep.b_error) <= 1e-12
    assert max(rep.successive_differences) <= 1e-12
    assert rep.compactness_consistent


def test_diagnostic_constant_random(generic_spec):
    dom = Domain.rectangle(nx1=16, nx2=8, nx3=2)
    rng = np.random.default_rng(0)
    u = Field3(dom, rng.normal(size=dom.node_shape + (3,)))
    rep = convergence_diagnostic(generic_spec, [(u, e, e) for e in (0.1, 0.05, 0.025)])
    assert not rep.compactness_consistent


def test_diagnostic_smoothed_jumps(generic_spec):
    sched = []
    for eps in (0.08, 0.04, 0.02):
        dom = Domain.rectangle(nx1=128, nx2=4, nx3=4, **UNIT)
        sched.append((smoothed_jump(dom, eps, eps), eps, eps))
    rep = convergence_diagnostic(generic_spec, sched)
    f = rep.off_well_fraction
    assert f[0] > f[1] > f[2]
    assert rep.compactness_consistent
    doc = rep.to_json()
    assert doc["rho"] == rep.rho and len(doc["successive_differences"]) == 2
