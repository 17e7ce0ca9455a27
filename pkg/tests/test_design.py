import cmath
from fractions import Fraction as F

import numpy as np
import pytest

from rklearn.butcher import builtin, validate
from rklearn.design import (
    REACH_CAP,
    chebyshev_polynomial,
    chebyshev_stability,
    damping_reach,
    design_scheme,
    realize_two_stage,
)
from rklearn.learnability import ProblemSpec, coefficients, learnability_roots
from rklearn.stability import polynomial_method, stability_function


def test_chebyshev_first_kind():
    assert chebyshev_polynomial(0) == (1,)
    assert chebyshev_polynomial(1) == (0, 1)
    assert chebyshev_polynomial(2) == (-1, 0, 2)
    assert chebyshev_polynomial(3) == (0, -3, 0, 4)


def test_chebyshev_cosine_identity():
    for s in range(1, 8):
        c = np.array([float(v) for v in chebyshev_polynomial(s)])
        th = np.linspace(0, np.pi, 50)
        np.testing.assert_allclose(np.polynomial.polynomial.polyval(np.cos(th), c),
                                   np.cos(s * th), atol=1e-12)


def test_chebyshev_stability_small_s():
    assert chebyshev_stability(1) == (1, 1)
    assert chebyshev_stability(2) == (1, 1, F(1, 8))
    # T_3(1 + z/9) = 4 (1 + z/9)^3 - 3 (1 + z/9)
    assert chebyshev_stability(3) == (1, 1, F(4, 27), F(4, 729))
    with pytest.raises(ValueError):
        chebyshev_stability(0)


@pytest.mark.parametrize("s", range(1, 7))
def test_first_order_and_bounded_on_interval(s):
    c = chebyshev_stability(s)
    assert c[0] == 1 and c[1] == 1
    z = np.linspace(-2 * s * s, 0, 400)
    vals = np.polynomial.polynomial.polyval(z, [float(v) for v in c])
    assert np.abs(vals).max() <= 1 + 1e-12


def test_two_stage_realization():
    t = realize_two_stage()
    assert t.is_explicit
    assert t.A[1][0] == F(1, 2) and t.b == (F(3, 4), F(1, 4))
    assert stability_function(t).numerator == (1, 1, F(1, 8))
    rep = validate(t)
    assert rep.consistent and rep.detected_order == 1


def test_design_scheme_two_stage():
    d = design_scheme(2)
    assert d.realized_tableau is not None
    assert d.method().numerator == (1, 1, F(1, 8))
    assert 0 < d.damping_reach <= REACH_CAP


def test_design_scheme_polynomial_only():
    d = design_scheme(3)
    assert d.realized_tableau is None
    assert d.method().numerator == chebyshev_stability(3)


def test_reach_positive_tol_required():
    with pytest.raises(ValueError):
        damping_reach(builtin("explicit_euler"), 0)


def test_euler_reach_is_capped():
    # alpha = e^z - 1 gives l_alpha = (e^z - 1 - z) / |z| < 1 on the whole negative axis
    assert damping_reach(builtin("explicit_euler"), 1.0) == REACH_CAP
    assert damping_reach(polynomial_method([1, 1]), 1.0) == REACH_CAP


def test_reach_monotone_in_tol():
    t = builtin("explicit_midpoint")
    r = [damping_reach(t, tol) for tol in (0.05, 0.2, 0.5)]
    assert r[0] <= r[1] <= r[2]


def midpoint_closest_l(z):
    s = cmath.sqrt(2 * cmath.exp(z) - 1)
    roots = [-1 + s, -1 - s]
    a = min(roots, key=lambda w: (abs(w - z), cmath.phase(w)))
    return abs((a - z) / z)


def test_midpoint_reach_matches_closed_form_scan():
    zs = -np.linspace(1e-3, 50, 1000)
    ref = 0.0
    for z in zs:
        if midpoint_closest_l(z) > 0.2:
            break
        ref = -z
    assert damping_reach(builtin("explicit_midpoint"), 0.2) == pytest.approx(ref)


def test_cheb2_better_pointwise_on_damped_axis():
    # the two-stage Chebyshev scheme learns strong damping better than midpoint
    cheb, mid = builtin("cheb2"), builtin("explicit_midpoint")
    for z in (-1.0, -2.0, -4.0, -8.0):
        spec = ProblemSpec(z, 1)
        lc = coefficients(learnability_roots(cheb, spec)[0], spec).l_alpha
        lm = coefficients(learnability_roots(mid, spec)[0], spec).l_alpha
        assert lc < lm


def test_cheb2_reach_wins_at_looser_tolerance():
    assert damping_reach(builtin("cheb2"), 0.5) > damping_reach(builtin("explicit_midpoint"), 0.5)
