import numpy as np
import pytest
from hypothesis import given
from hypothesis import strategies as st

from ieqdg.baselines import (GN1, GN2, SECANT, IterationControl, free_energy, init_baseline,
                             sh_g1g2, splitting, step_gn, step_secant, target_nonlinearity)
from ieqdg.errors import ConfigError, ConvergenceError
from ieqdg.ieq import init_state, make_problem, step_second_order
from ieqdg.potential import swift_hohenberg, zero_potential
from ieqdg.weak_form import BCSpec, ModelSpec
from tests.conftest import make_space


def _phi(w, eps, g):
    return -eps / 2 * w ** 2 - g / 3 * w ** 3 + w ** 4 / 4


def _dphi(w, eps, g):
    return -eps * w - g * w ** 2 + w ** 3


def _target(w, v, eps, g, variant):
    if variant == SECANT:
        return (_phi(w, eps, g) - _phi(v, eps, g)) / (w - v)
    return 0.5 * (_dphi(w, eps, g) + _dphi(v, eps, g)) - (w - v) ** 2 / 12 * (6 * v - 2 * g)


def test_secant_at_origin():
    G1, G2 = sh_g1g2(0.0, 0.0, 0.3, 0.7, SECANT)
    assert (G1, G2) == (pytest.approx(-0.15), pytest.approx(0.0))


def test_gn1_at_origin():
    G1, G2 = sh_g1g2(0.0, 0.0, 0.3, 0.7, GN1)
    assert (G1, G2) == (pytest.approx(-0.15), pytest.approx(0.0))


def test_random_secant_samples(rng):
    w, v = rng.uniform(-3, 3, (2, 1000))
    eps, g = 0.025, 0.05
    G1, G2 = sh_g1g2(w, v, eps, g, SECANT)
    np.testing.assert_allclose(G1 * w + G2, _target(w, v, eps, g, SECANT), rtol=1e-12, atol=1e-12)


def test_printed_gn_forms_break_the_identity(rng):
    w, v = rng.uniform(-2, 2, (2, 1000))
    for variant, factor in ((GN1, 1.0), (GN2, 3.0)):
        G1, G2 = sh_g1g2(w, v, 0.3, 0.0, variant, printed=True)
        miss = G1 * w + G2 - _target(w, v, 0.3, 0.0, variant)
        # off by exactly -factor * w^3
        np.testing.assert_allclose(miss, -factor * w ** 3, atol=1e-10)


def test_unknown_variant():
    with pytest.raises(ConfigError):
        sh_g1g2(0.0, 0.0, 0.1, 0.0, "newton")


@given(st.floats(-5, 5), st.floats(-5, 5), st.floats(-3, 3), st.floats(-3, 3),
       st.sampled_from([SECANT, GN1, GN2]))
def test_consistency_identity(w, v, eps, g, variant):
    if variant == SECANT and abs(w - v) < 1e-3:
        return
    G1, G2 = sh_g1g2(w, v, eps, g, variant)
    target = _target(w, v, eps, g, variant)
    scale = 1 + abs(w) ** 3 + abs(v) ** 3 + abs(eps * w) + abs(g) * (w * w + v * v)
    assert abs(G1 * w + G2 - target) <= 1e-11 * scale


def test_general_potential_splitting_matches_target(rng):
    pot = swift_hohenberg(0.3, 0.2, a=2.0)
    w, v = rng.uniform(-2, 2, (2, 50))
    for variant in (SECANT, GN1, GN2):
        G1, G2 = splitting(pot, w, v, variant)
        np.testing.assert_allclose(G1 * w + G2, target_nonlinearity(pot, w, v, variant), atol=1e-12)
    lin = zero_potential()
    G1, G2 = splitting(lin, w, v, SECANT)
    assert not G1.any() and not G2.any()


def test_iteration_control_validation():
    with pytest.raises(ConfigError):
        IterationControl(eta=0.0)
    with pytest.raises(ConfigError):
        IterationControl(max_iters=0)


def _problem(space, potential, a=2.0):
    return make_problem(space, ModelSpec(potential, a), BCSpec("periodic"))


def test_linear_problem_needs_one_sweep():
    space = make_space(4, 2)
    p = _problem(space, zero_potential())
    st0 = init_baseline(lambda x, y: np.sin(x) * np.cos(y), p)
    a, ra = step_secant(st0, 0.1)
    b, rb = step_gn(st0, 0.1)
    assert ra.outer_iters == rb.outer_iters == 1
    assert np.array_equal(a.u.coeffs, b.u.coeffs)
    # linear Crank-Nicolson step satisfies the energy law exactly
    assert abs(ra.identity_residual) < 1e-12 * abs(ra.E_before)


def test_secant_energy_law_within_eta():
    space = make_space(6, 2, "periodic", (-2 * np.pi, 2 * np.pi))
    p = _problem(space, swift_hohenberg(0.025, 0.05))
    st_ = init_baseline(lambda x, y: np.sin(x / 2) * np.sin(y / 2), p)
    ctrl = IterationControl(1e-12)
    for _ in range(3):
        st_, rep = step_secant(st_, 0.25, ctrl)
        assert rep.outer_iters >= 2
        assert rep.E_after <= rep.E_before
        assert abs(rep.identity_residual) <= 1e3 * ctrl.eta * max(1.0, abs(rep.E_before))


def test_max_iters_exceeded():
    space = make_space(4, 2, "periodic", (-2 * np.pi, 2 * np.pi))
    p = _problem(space, swift_hohenberg(0.025, 0.05))
    st_ = init_baseline(lambda x, y: np.sin(x / 2) * np.sin(y / 2), p)
    with pytest.raises(ConvergenceError) as info:
        step_secant(st_, 0.5, IterationControl(1e-14, max_iters=2))
    assert info.value.residual > 0
    with pytest.raises(ConfigError):
        step_gn(st_, 0.5, variant=SECANT)


def test_free_energy_of_zero_state():
    space = make_space(3, 1)
    p = _problem(space, swift_hohenberg(0.3))
    st_ = init_baseline(lambda x, y: 0 * x, p)
    assert free_energy(p, st_.u, st_.q) == 0.0


def test_schemes_agree_at_second_order():
    space = make_space(6, 2, "periodic", (-2 * np.pi, 2 * np.pi))
    p = _problem(space, swift_hohenberg(0.025, 0.05))
    u0 = lambda x, y: np.sin(x / 2) * np.sin(y / 2)
    gaps = []
    for dt in (0.25, 0.125):
        a = init_state(u0, p)
        b = init_baseline(u0, p)
        for _ in range(int(round(1.0 / dt))):
            a, _r = step_second_order(a, dt)
            b, _r = step_secant(b, dt)
        gaps.append(np.sqrt(np.sum((a.u.nodal() - b.u.nodal()) ** 2 * space.vol_w) * space.jac))
    assert gaps[1] < gaps[0]
    assert np.log2(gaps[0] / gaps[1]) > 1.6
