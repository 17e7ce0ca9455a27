import cmath
import math

import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from rklearn.butcher import builtin
from rklearn.errors import ExpOverflowError, NoRootError, SelectionError
from rklearn.learnability import (
    ProblemSpec,
    RootPolicy,
    coefficients,
    find_roots,
    learnability_roots,
    select_alpha,
    solve,
    sort_roots,
)
from rklearn.stability import polynomial_method, stability_function

from test_roots import companion_roots, match_sets


def euler_root(lam, h):
    return (cmath.exp(h * lam) - 1) / h


def midpoint_roots(lam, h):
    s = cmath.sqrt(2 * cmath.exp(lam * h) - 1)
    return [(-1 + s) / h, (-1 - s) / h]


def residual_ok(method, spec, alpha):
    R = stability_function(method)
    w = spec.h * alpha
    n = np.polynomial.polynomial.polyval(w, R.numerator_array())
    d = np.polynomial.polynomial.polyval(w, R.denominator_array())
    e = cmath.exp(spec.z)
    return abs(n - e * d) <= 1e-9 * max(1, abs(e))


def test_euler_i_pi():
    r = learnability_roots(builtin("explicit_euler"), ProblemSpec(1j * math.pi, 1))
    assert len(r) == 1
    assert abs(r[0] - (-2)) < 1e-14


def test_midpoint_lambda_zero():
    r = learnability_roots(builtin("explicit_midpoint"), ProblemSpec(0, 1))
    assert match_sets(r, [0, -2]) < 1e-14
    assert r[0] == 0


def test_rk4_fig5_scenario_against_companion():
    spec = ProblemSpec(1.5j, 1)
    r = learnability_roots(builtin("rk4"), spec)
    c = np.array([1, 1, 1 / 2, 1 / 6, 1 / 24], dtype=complex)
    c[0] -= cmath.exp(1.5j)
    assert match_sets(r, companion_roots(c)) < 1e-12
    assert abs(r[0] - 1.5j) < 0.1
    assert r[0].real > 0


def test_implicit_euler_periodic_lambda():
    spec = ProblemSpec(2j * math.pi, 1)
    r = learnability_roots(builtin("implicit_euler"), spec)
    assert len(r) == 1
    assert abs(r[0]) < 1e-14


def test_no_root_error_for_constant_polynomial():
    # implicit Euler has N = 1: with exp(z) = 1 the equation is 1 - (1 - w) = w -> root 0,
    # but a method with N = D has P = (1 - e^z) D, constant when D is constant
    R = polynomial_method([1])
    with pytest.raises(NoRootError):
        find_roots(R, ProblemSpec(1.0, 1))


def test_exp_overflow():
    with pytest.raises(ExpOverflowError):
        solve(builtin("rk4"), ProblemSpec(800, 1))


def test_select_closest_midpoint_small_lambda():
    spec = ProblemSpec(0.1, 1)
    plus, minus = midpoint_roots(0.1, 1)
    assert select_alpha([minus, plus], spec, RootPolicy.closest()) == plus


def test_select_single_and_index():
    spec = ProblemSpec(0, 1)
    assert select_alpha([3 + 1j], spec, RootPolicy.closest()) == 3 + 1j
    assert select_alpha([0, -2], spec, RootPolicy.at(1)) == -2
    with pytest.raises(SelectionError):
        select_alpha([0, -2], spec, RootPolicy.at(2))
    with pytest.raises(SelectionError):
        select_alpha([], spec, RootPolicy.closest())
    with pytest.raises(SelectionError):
        select_alpha([1], spec, RootPolicy.all())


def test_tie_breaks_by_argument():
    assert sort_roots([1j, -1j], 0) == [-1j, 1j]
    assert sort_roots([-1 + 1j, -1 - 1j], -20) == [-1 - 1j, -1 + 1j]


def test_policy_parse():
    assert RootPolicy.parse("closest") == RootPolicy.closest()
    assert RootPolicy.parse("index:1") == RootPolicy.at(1)
    assert RootPolicy.parse("2") == RootPolicy.at(2)
    assert RootPolicy.parse("all").kind == "all"
    with pytest.raises(ValueError):
        RootPolicy.parse("nearest")


def test_coefficients_perfect_model():
    for lam in (1 + 2j, -3, 0.5j):
        c = coefficients(lam, ProblemSpec(lam, 1))
        assert c.l_alpha == 0 and c.l_real == 0 and c.l_imag == 0 and c.mu == 1


def test_coefficients_euler_i_pi():
    c = coefficients(-2, ProblemSpec(1j * math.pi, 1))
    assert c.l_alpha == pytest.approx(math.sqrt(4 + math.pi ** 2) / math.pi, rel=1e-14)
    assert c.l_alpha == pytest.approx(1.1855, abs=1e-4)
    assert c.l_real is None
    assert c.l_imag == pytest.approx(1.0)


def test_coefficients_lambda_zero_all_undefined():
    assert coefficients(0, ProblemSpec(0, 1)) == (None, None, None, None)


def test_componentwise_zero_over_zero_is_zero():
    c = coefficients(3j, ProblemSpec(2j, 1))
    assert c.l_real == 0.0
    assert c.l_imag == pytest.approx(0.5)


def test_solve_euler():
    res = solve(builtin("explicit_euler"), ProblemSpec(1j * math.pi, 1))
    assert abs(res.selected + 2) < 1e-14
    assert res.roots[0].residual < 1e-12


def test_solve_midpoint_strong_damping():
    res = solve(builtin("explicit_midpoint"), ProblemSpec(-20, 1))
    assert res.selected.real == pytest.approx(-1, abs=1e-12)
    assert abs(res.selected.imag) == pytest.approx(math.sqrt(1 - 2 * math.exp(-20)), abs=1e-12)
    assert res.l_alpha > 0.9


def test_solve_rk4_lambda_zero():
    res = solve(builtin("rk4"), ProblemSpec(0, 1))
    assert res.selected == 0
    assert res.l_alpha is None and res.l_real is None and res.l_imag is None


def test_solve_all_policy():
    res = solve(builtin("rk4"), ProblemSpec(1.5j, 1), RootPolicy.all())
    assert res.selected is None and len(res.roots) == 4


def test_double_root_multiplicity():
    # 2 e^z - 1 = 0 makes the midpoint roots coincide at -1/h
    spec = ProblemSpec(-math.log(2), 1)
    res = solve(builtin("explicit_midpoint"), spec, RootPolicy.all())
    # a double root is only resolved to about sqrt(eps)
    assert len(res.roots) == 2
    assert all(abs(r.alpha + 1) < 1e-7 for r in res.roots)
    assert res.selected is None


def test_multiplicity_clustering():
    from rklearn.learnability import _multiplicities
    assert _multiplicities([1.0, 1.0 + 1e-10, 2.0]) == [2, 2, 1]


def test_root_count_accounting(registry_tableau, rng):
    R = stability_function(registry_tableau)
    for _ in range(20):
        spec = ProblemSpec(complex(*rng.uniform(-3, 3, 2)), float(rng.uniform(0.2, 2)))
        kept, rejected, deficiency = find_roots(registry_tableau, spec)
        assert len(kept) + len(rejected) + deficiency == R.degree
        if registry_tableau.is_explicit:
            assert len(kept) == registry_tableau.p


def test_implicit_midpoint_root_at_infinity():
    # P = (1 - e^z) + w (1 + e^z) / 2 loses its linear term when e^z = -1
    with pytest.raises(NoRootError):
        find_roots(builtin("implicit_midpoint"), ProblemSpec(1j * math.pi, 1))


def test_target_override():
    r = learnability_roots(builtin("explicit_euler"), ProblemSpec(5, 1), target=1.0)
    assert r == [0]


lams = st.complex_numbers(max_magnitude=5, allow_nan=False, allow_infinity=False)
hs = st.floats(0.05, 2.0)


@settings(max_examples=100, deadline=None)
@given(lams, hs)
def test_euler_closed_form(lam, h):
    spec = ProblemSpec(lam, h)
    r = learnability_roots(builtin("explicit_euler"), spec)
    ref = euler_root(lam, h)
    assert abs(r[0] - ref) <= 1e-10 * max(abs(ref), 1e-300) or abs(r[0] - ref) < 1e-15


@settings(max_examples=100, deadline=None)
@given(lams, hs)
def test_midpoint_closed_form(lam, h):
    spec = ProblemSpec(lam, h)
    r = learnability_roots(builtin("explicit_midpoint"), spec)
    assert match_sets(r, midpoint_roots(lam, h)) <= 1e-10 * max(1, max(abs(x) for x in r))


@settings(max_examples=60, deadline=None)
@given(lams, hs, st.sampled_from(["explicit_euler", "explicit_midpoint", "heun2", "rk4",
                                  "cheb2", "implicit_euler", "implicit_midpoint"]))
def test_residual_certificate(lam, h, name):
    spec = ProblemSpec(lam, h)
    for alpha in learnability_roots(builtin(name), spec):
        assert residual_ok(builtin(name), spec, alpha)


@settings(max_examples=50, deadline=None)
@given(lams.filter(lambda z: abs(z) > 1e-3), hs, st.floats(0.1, 10.0),
       st.sampled_from(["explicit_euler", "explicit_midpoint", "rk4", "cheb2",
                        "implicit_midpoint"]))
def test_scaling_invariance(lam, h, c, name):
    t = builtin(name)
    a = solve(t, ProblemSpec(lam, h), RootPolicy.all())
    b = solve(t, ProblemSpec(c * lam, h / c), RootPolicy.all())
    la = sorted(coefficients(r.alpha, a.spec).l_alpha for r in a.roots)
    lb = sorted(coefficients(r.alpha, b.spec).l_alpha for r in b.roots)
    assert len(la) == len(lb)
    np.testing.assert_allclose(la, lb, rtol=0, atol=1e-8 * max(1, max(la)))


@settings(max_examples=50, deadline=None)
@given(lams, hs, st.sampled_from(["explicit_euler", "explicit_midpoint", "rk4", "heun2",
                                  "implicit_euler"]))
def test_conjugation_symmetry(lam, h, name):
    t = builtin(name)
    r1 = learnability_roots(t, ProblemSpec(lam, h))
    r2 = learnability_roots(t, ProblemSpec(lam.conjugate(), h))
    assert match_sets([x.conjugate() for x in r1], r2) <= 1e-9 * max(1, max(map(abs, r1)))


@pytest.mark.parametrize("name, q", [("explicit_euler", 1), ("explicit_midpoint", 2),
                                     ("heun2", 2), ("rk4", 4)])
def test_order_of_accuracy(name, q):
    t = builtin(name)
    lam = 1 + 1j
    # rk4 errors hit rounding below h ~ 1e-2
    for h in ((4e-2, 2e-2) if q == 4 else (1e-2, 2e-3)):
        l1 = solve(t, ProblemSpec(lam, h)).l_alpha
        l2 = solve(t, ProblemSpec(lam, h / 2)).l_alpha
        assert l2 / l1 == pytest.approx(2.0 ** -q, rel=0.15)
