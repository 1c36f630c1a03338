import json

import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st
from hypothesis.extra.numpy import arrays

from gammafilm.errors import NotTwoWellCompatible
from gammafilm.potential import (PotentialSpec, Wells, check_hypotheses, default_rho, eval_W,
                                 eval_W_grad, eval_reduced_W, normalize_wells)

from conftest import diag

mats = arrays(np.float64, (3, 3), elements=st.floats(-3, 3, allow_nan=False))


def test_wells_connection_data():
    a = np.array([1.0, 2.0, -1.0])
    A = np.outer(a, [1.0, 0.0, 0.5])
    w = Wells.from_matrices(A, -A)
    assert w.rank_one_bulk and not w.in_plane_equal
    np.testing.assert_allclose(w.nu_bar, [1.0, 0.0])
    np.testing.assert_allclose(w.A[:, :2] - w.B[:, :2], 2 * np.outer(w.a, w.nu_bar), atol=1e-12)
    assert w.lam == pytest.approx(0.5)
    assert w.is_normalized


def test_wells_in_plane_equal_has_no_tilt():
    w = Wells.from_matrices(diag(0, 0, 1), diag(0, 0, -1))
    assert w.in_plane_equal and w.nu_bar is None and w.lam is None
    np.testing.assert_array_equal(w.a, 0.0)


def test_equal_wells_rejected():
    with pytest.raises(ValueError):
        Wells.from_matrices(np.eye(3), np.eye(3))


def test_normalize_identity_case():
    A = np.outer([1.0, 0.0, 2.0], [1.0, 0.0, 0.0])
    wells, ch = normalize_wells(A, -A)
    np.testing.assert_allclose(ch.R, np.eye(3), atol=1e-15)
    np.testing.assert_allclose(ch.C, 0.0, atol=1e-15)
    np.testing.assert_allclose(wells.A, A, atol=1e-15)


def test_normalize_rotates_e2_normal():
    a = np.array([1.0, -1.0, 0.5])
    A = np.zeros((3, 3))
    A[:, 1] = a
    A[:, 2] = [0.2, 0.0, 1.0]
    B = np.zeros((3, 3))
    B[:, 1] = -a
    B[:, 2] = [0.0, 0.3, -1.0]
    wells, ch = normalize_wells(A, B)
    # R' sends nu_bar = (0, 1) to e1'
    np.testing.assert_allclose(np.array([0.0, 1.0]) @ ch.R[:2, :2].T, [1.0, 0.0], atol=1e-12)
    np.testing.assert_allclose(ch.C, 0.5 * (A + B), atol=1e-15)
    assert wells.is_normalized
    np.testing.assert_allclose(ch.forward(wells.A), A, atol=1e-12)
    np.testing.assert_allclose(ch.forward(wells.B), B, atol=1e-12)


def test_normalize_keeps_tilt():
    a = np.array([0.0, 1.0, 1.0])
    A = np.outer(a, [1.0, 0.0, 0.5])
    wells, _ = normalize_wells(A, -A)
    assert wells.lam == pytest.approx(0.5) and wells.rank_one_bulk


def test_normalize_rejects_rank_two():
    with pytest.raises(NotTwoWellCompatible):
        normalize_wells(np.eye(3), -np.eye(3))


@settings(max_examples=50, deadline=None)
@given(st.floats(0, 2 * np.pi), arrays(np.float64, 3, elements=st.floats(-2, 2)),
       arrays(np.float64, (3, 3), elements=st.floats(-2, 2)))
def test_normalize_round_trip(theta, a, C):
    if np.linalg.norm(a) < 1e-3:
        a = a + np.array([1.0, 0.0, 0.0])
    nu = np.array([np.cos(theta), np.sin(theta)])
    D = np.zeros((3, 3))
    D[:, :2] = np.outer(a, nu)
    D[:, 2] = 0.3 * a + np.array([0.0, 0.1, 0.0])
    A, B = C + D, C - D
    wells, ch = normalize_wells(A, B)
    assert wells.is_normalized
    np.testing.assert_allclose(ch.forward(wells.A), A, atol=1e-12)
    np.testing.assert_allclose(ch.forward(wells.B), B, atol=1e-12)


def test_eval_W_at_wells_and_midpoint(generic_spec):
    A, B = generic_spec.wells.A, generic_spec.wells.B
    assert eval_W(generic_spec, A) == 0.0
    assert eval_W(generic_spec, B) == 0.0
    # midpoint is 0 for normalized wells; brute-force distance oracle
    brute = min(np.sum((0 * A - A) ** 2), np.sum((0 * A - B) ** 2))
    assert eval_W(generic_spec, 0.5 * (A + B)) == pytest.approx(brute)
    assert brute == pytest.approx(np.sum(A ** 2))


def test_eval_W_p_power():
    spec = PotentialSpec.prototype(diag(1, 0, 1), diag(-1, 0, -1), p=3.0)
    xi = diag(1, 0, 1) + 0.1 * np.ones((3, 3))
    assert eval_W(spec, xi) == pytest.approx((0.09) ** 1.5)


def test_grad_at_well_and_quadratic(generic_spec):
    A = generic_spec.wells.A
    np.testing.assert_array_equal(eval_W_grad(generic_spec, A), 0.0)
    M = np.arange(9.0).reshape(3, 3) / 10
    t = 1e-3
    np.testing.assert_allclose(eval_W_grad(generic_spec, A + t * M), 2 * t * M, atol=1e-15)


def test_grad_maxwell_uses_A_branch(generic_spec):
    A, B = generic_spec.wells.A, generic_spec.wells.B
    mid = 0.5 * (A + B)
    g = eval_W_grad(generic_spec, mid)
    np.testing.assert_allclose(g, 2 * (mid - A))
    # one-sided finite difference from the A side agrees with the A branch
    d = (A - B) / np.linalg.norm(A - B)
    s = 1e-6
    fd = (eval_W(generic_spec, mid + 2 * s * d) - eval_W(generic_spec, mid + s * d)) / s
    assert np.sum(g * d) == pytest.approx(fd, rel=1e-4)


@pytest.mark.parametrize("p", [2.0, 2.5, 4.0])
def test_grad_matches_finite_differences(p):
    spec = PotentialSpec.prototype(diag(1, 0, 1), diag(-1, 0, -1), p=p)
    A, B = spec.wells.A, spec.wells.B
    rng = np.random.default_rng(3)
    n = 0
    while n < 100:
        xi = rng.normal(size=(3, 3))
        if abs(np.linalg.norm(xi - A) - np.linalg.norm(xi - B)) < 1e-3:
            continue
        g = eval_W_grad(spec, xi)
        for _ in range(1):
            d = rng.normal(size=(3, 3))
            step = 1e-5 * (1 + np.linalg.norm(xi))
            fd = (eval_W(spec, xi + step * d) - eval_W(spec, xi - step * d)) / (2 * step)
            assert abs(np.sum(g * d) - fd) <= 1e-6 * max(abs(fd), 1.0)
        n += 1


def test_reduced_density(e1_spec):
    lam = 0.5
    a = np.array([1.0, 0.0, 0.0])
    A = np.outer(a, [1.0, 0.0, lam])
    spec = PotentialSpec.prototype(A, -A)
    assert eval_reduced_W(spec, A[:, 0], A[:, 2]) == 0.0
    assert eval_reduced_W(spec, -A[:, 0], -A[:, 2]) == 0.0
    assert eval_reduced_W(spec, np.zeros(3), np.zeros(3)) == pytest.approx((1 + lam ** 2))


@settings(max_examples=100, deadline=None)
@given(mats)
def test_symmetry_under_negation(xi):
    spec = PotentialSpec.prototype(diag(1, 0, 1), diag(-1, 0, -1))
    assert eval_W(spec, xi) == pytest.approx(eval_W(spec, -xi), rel=1e-12, abs=1e-12)


@settings(max_examples=100, deadline=None)
@given(mats)
def test_reduced_below_full(xi):
    spec = PotentialSpec.prototype(diag(1, 0, 1), diag(-1, 0, -1))
    assert eval_reduced_W(spec, xi[:, 0], xi[:, 2]) <= eval_W(spec, xi) + 1e-12


def test_json_round_trip(generic_spec):
    doc = json.loads(json.dumps(generic_spec.to_json()))
    assert doc["kind"] == "prototype_distance" and doc["p"] == 2.0
    back = PotentialSpec.from_json(doc)
    np.testing.assert_array_equal(back.wells.A, generic_spec.wells.A)


def test_p_below_two_rejected():
    with pytest.raises(ValueError):
        PotentialSpec.prototype(diag(1, 0, 1), diag(-1, 0, -1), p=1.5)


def test_hypotheses_prototype(generic_spec):
    rep = check_hypotheses(generic_spec, 10_000)
    assert rep.all_pass
    assert rep.c_star == pytest.approx(1.0, abs=1e-12)
    assert rep.results["H5"] == "not applicable"
    assert rep.rho == default_rho(generic_spec.wells)


def test_hypotheses_isotropy(iso_spec):
    rep = check_hypotheses(iso_spec, 2000)
    assert rep.results["H5"] == "pass"


class _Shifted(PotentialSpec):
    def W(self, xi):
        return super().W(xi) + 0.1


def test_hypotheses_corrupted_fail(generic_spec):
    bad = _Shifted(wells=generic_spec.wells)
    rep = check_hypotheses(bad, 1000)
    assert rep.results["H1"] == "fail"
    assert rep.results["H3"] == "fail"


def test_weighted_quadratic_spec():
    M = np.eye(9) * 2.0
    spec = PotentialSpec(wells=Wells.from_matrices(diag(1, 0, 1), diag(-1, 0, -1)),
                         kind="weighted_quadratic", weights=(M, M))
    xi = np.full((3, 3), 0.1)
    assert eval_W(spec, xi) == pytest.approx(2 * eval_W(PotentialSpec.prototype(
        diag(1, 0, 1), diag(-1, 0, -1)), xi))
    rep = check_hypotheses(spec, 2000)
    assert rep.c_star == pytest.approx(2.0, rel=1e-9)
