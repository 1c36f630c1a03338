import numpy as np
import pytest

from gammafilm.energy import energy_3d
from gammafilm.grid import Domain, Field3
from gammafilm.minimize import ConstraintSet, gradient_of_energy, minimize_energy
from gammafilm.profiles import MinimizeOptions
from gammafilm.sharp_interface import PhaseMap, classify_phases, perimeter

UNIT = dict(x1_range=(-0.5, 0.5), x2_range=(-0.5, 0.5))


def random_smooth(dom, seed):
    rng = np.random.default_rng(seed)
    X1, X2, X3 = dom.node_grid()
    out = np.zeros(dom.node_shape + (3,))
    for c in range(3):
        for _ in range(3):
            k = rng.normal(scale=3.0, size=3)
            out[..., c] += rng.normal() * np.sin(k[0] * X1 + k[1] * X2 + k[2] * X3 + rng.uniform(0, 6))
    return Field3(dom, out)


def jump_start(spec, dom, eps):
    X1, _, X3 = dom.node_grid()
    w = spec.wells
    b = np.where((X1 >= 0)[..., None], w.A[:, 2], w.B[:, 2])
    return Field3(dom, np.abs(X1)[..., None] * w.a + eps * X3[..., None] * b)


@pytest.mark.parametrize("seed", range(3))
def test_gradient_matches_fd(generic_spec, seed):
    dom = Domain.rectangle(nx1=6, nx2=5, nx3=4)
    u = random_smooth(dom, seed)
    eps, h = 0.3, 0.4
    g = gradient_of_energy(generic_spec, u, eps, h).values
    rng = np.random.default_rng(100 + seed)
    for _ in range(5):
        d = rng.normal(size=u.values.shape)
        s = 1e-6
        ep = energy_3d(generic_spec, Field3(dom, u.values + s * d), eps, h).total
        em = energy_3d(generic_spec, Field3(dom, u.values - s * d), eps, h).total
        fd = (ep - em) / (2 * s)
        assert abs(np.sum(g * d) - fd) <= 1e-6 * abs(fd)


def test_gradient_translation_equivariant(generic_spec):
    dom = Domain.rectangle(nx1=6, nx2=5, nx3=4)
    u = random_smooth(dom, 7)
    g0 = gradient_of_energy(generic_spec, u, 0.2, 0.3).values
    g1 = gradient_of_energy(generic_spec, Field3(dom, u.values + [3.0, -1.0, 2.5]), 0.2, 0.3).values
    np.testing.assert_allclose(g1, g0, atol=1e-12 * np.abs(g0).max())


def test_gradient_zero_at_well(generic_spec):
    dom = Domain.rectangle(nx1=6, nx2=5, nx3=4)
    u = Field3.affine(dom, generic_spec.wells.B, 0.3)
    assert np.abs(gradient_of_energy(generic_spec, u, 0.1, 0.3).values).max() <= 1e-12


def test_constraint_validation():
    dom = Domain.rectangle(nx1=4, nx2=4, nx3=2)
    shape = dom.node_shape
    with pytest.raises(ValueError):
        ConstraintSet(np.zeros(shape, bool), np.zeros(shape + (3,)))
    bad = np.zeros(shape + (3,))
    bad[0, 0, 0] = np.nan
    m = np.zeros(shape, bool)
    m[0, 0, 0] = True
    with pytest.raises(ValueError):
        ConstraintSet(m, bad)
    with pytest.raises(ValueError):
        ConstraintSet(m, np.zeros(shape))


def test_constraint_projection():
    dom = Domain.rectangle(nx1=4, nx2=4, nx3=2)
    u = Field3(dom, np.random.default_rng(0).normal(size=dom.node_shape + (3,)))
    c = ConstraintSet.lateral(u)
    assert c.mask[:2].all() and c.mask[-2:].all() and not c.mask[2:-2].any()
    g = c.project(np.ones(dom.node_shape + (3,)))
    assert not g[c.mask].any()
    a = ConstraintSet.anchored(dom)
    g = a.project(np.random.default_rng(1).normal(size=dom.node_shape + (3,)))
    np.testing.assert_allclose(g.reshape(-1, 3).mean(axis=0), 0.0, atol=1e-14)


def test_single_well_no_iterations(generic_spec):
    dom = Domain.rectangle(nx1=8, nx2=4, nx3=4)
    u = Field3.affine(dom, generic_spec.wells.A, 0.1)
    res = minimize_energy(generic_spec, u, 0.1, 0.1, ConstraintSet.lateral(u))
    assert res.iterations == 0 and res.converged and not res.flags
    assert res.report.total == pytest.approx(0.0, abs=1e-20)
    field, report, trace = res
    assert trace == [report.total]


def test_descent_and_determinism(generic_spec):
    dom = Domain.rectangle(nx1=16, nx2=4, nx3=4, **UNIT)
    init = Field3(dom, jump_start(generic_spec, dom, 0.1).values
                  + 0.01 * random_smooth(dom, 3).values)
    cons = ConstraintSet.lateral(jump_start(generic_spec, dom, 0.1))
    opts = MinimizeOptions(max_iters=40)
    r1 = minimize_energy(generic_spec, init, 0.1, 0.1, cons, opts)
    r2 = minimize_energy(generic_spec, init, 0.1, 0.1, cons, opts)
    tr = np.asarray(r1.trace)
    assert np.all(np.diff(tr) < 0)
    E0 = energy_3d(generic_spec, Field3(dom, cons.apply(init.values)), 0.1, 0.1).total
    assert tr[0] == E0 and tr[-1] < E0
    assert r1.trace_csv() == r2.trace_csv()
    np.testing.assert_array_equal(r1.field.values, r2.field.values)
    assert r1.trace_csv().splitlines()[0] == "iter,total,bulk,singular,gradnorm"
    # clamps untouched
    np.testing.assert_array_equal(r1.field.values[cons.mask], cons.values[cons.mask])
    if not r1.converged:
        assert r1.flags == ["max_iters"]


def test_backtracking_rule(generic_spec):
    dom = Domain.rectangle(nx1=16, nx2=4, nx3=4, **UNIT)
    init = jump_start(generic_spec, dom, 0.1)
    res = minimize_energy(generic_spec, init, 0.1, 0.1, ConstraintSet.lateral(init),
                          MinimizeOptions(max_iters=20, step_rule="backtracking"))
    assert np.all(np.diff(res.trace) < 0)


def test_anchored_mean_preserved(generic_spec):
    dom = Domain.rectangle(nx1=8, nx2=4, nx3=4)
    u = random_smooth(dom, 2)
    res = minimize_energy(generic_spec, u, 0.2, 0.2, ConstraintSet.anchored(dom),
                          MinimizeOptions(max_iters=20))
    np.testing.assert_allclose(res.field.values.reshape(-1, 3).mean(0),
                               u.values.reshape(-1, 3).mean(0), atol=1e-12)


def test_two_phase_minimum(generic_spec, kgamma_generic):
    eps = 0.05
    dom = Domain.rectangle(nx1=64, nx2=4, nx3=8, **UNIT)
    init = jump_start(generic_spec, dom, eps)
    res = minimize_energy(generic_spec, init, eps, eps, ConstraintSet.lateral(init),
                          MinimizeOptions(max_iters=300))
    E, K = res.report.total, kgamma_generic.energy
    ph = classify_phases(generic_spec, res.field, eps)
    ref = PhaseMap.from_function(dom, lambda x1, x2: x1 < 0)
    assert ph.symmetric_difference(ref) <= dom.spacing[0] + 1e-12
    assert perimeter(ph) == pytest.approx(1.0, abs=1e-12)
    assert abs(E - K) <= 0.15 * K
    assert E >= 0.5 * K


def test_mask_shape_mismatch(generic_spec):
    dom = Domain.rectangle(nx1=8, nx2=4, nx3=4)
    other = Domain.rectangle(nx1=4, nx2=4, nx3=4)
    with pytest.raises(ValueError):
        minimize_energy(generic_spec, Field3.affine(dom, generic_spec.wells.A, 0.1), 0.1, 0.1,
                        ConstraintSet.anchored(other))
