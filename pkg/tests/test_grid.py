import math
import re

import numpy as np
import pytest

from rklearn.butcher import builtin
from rklearn.errors import EmptyFieldError, RegionError
from rklearn.grid import (
    CoefficientField,
    Metric,
    Region,
    evaluate_field,
    export_csv,
    read_csv,
    render_contours,
    sweep,
)
from rklearn.learnability import ProblemSpec, RootPolicy, solve

SMALL = Region(-3, 1, -3, 3, 11, 11)


def const_field(values, region=None):
    values = np.asarray(values, dtype=float)
    ny, nx = values.shape
    region = region or Region(0, 1, 0, 1, nx, ny)
    return CoefficientField(region, Metric.L_ALPHA, RootPolicy(), values, "test")


def test_region_validation():
    with pytest.raises(RegionError):
        Region(1, 0, 0, 1, 3, 3)
    with pytest.raises(RegionError):
        Region(0, 1, 0, 1, 1, 3)
    with pytest.raises(RegionError):
        Region(0, float("nan"), 0, 1, 3, 3)


def test_region_nodes_layout():
    z = Region(-1, 1, -2, 2, 3, 5).nodes()
    assert z.shape == (5, 3)
    assert z[0, 0] == -1 - 2j and z[-1, -1] == 1 + 2j


def test_euler_small_field():
    f = evaluate_field(builtin("explicit_euler"), SMALL)
    assert f.values.shape == (11, 11)
    # Re nodes step by 0.4 from -3, so z = 0 is not a node of this grid
    assert not np.any(SMALL.nodes() == 0)
    assert not np.isnan(f.values).any()
    g = evaluate_field(builtin("explicit_euler"), Region(-3, 1, -3, 3, 9, 11))
    assert math.isnan(g.value_at(0j))
    assert np.isnan(g.values).sum() == 1
    z = -1.4 + 1.2j
    expected = abs((np.exp(z) - 1 - z) / z)
    assert f.value_at(z) == pytest.approx(expected, rel=1e-12)


def test_euler_i_pi_node():
    region = Region(-1, 1, -math.pi, math.pi, 3, 3)
    f = evaluate_field(builtin("explicit_euler"), region)
    assert f.value_at(1j * math.pi) == pytest.approx(math.sqrt(4 + math.pi ** 2) / math.pi,
                                                     rel=1e-12)


def test_midpoint_second_root_is_far():
    region = Region(-0.5, 0.5, -0.5, 0.5, 5, 5)
    f0 = evaluate_field(builtin("explicit_midpoint"), region, policy=RootPolicy.at(0))
    f1 = evaluate_field(builtin("explicit_midpoint"), region, policy=RootPolicy.at(1))
    z = 0.25 + 0.25j
    assert f0.value_at(z) < 0.1
    assert f1.value_at(z) > 5
    assert f1.value_at(z) == pytest.approx(abs(2 / z), rel=0.3)


def test_index_beyond_root_count_is_undefined():
    f = evaluate_field(builtin("explicit_euler"), SMALL, policy=RootPolicy.at(1))
    assert np.isnan(f.values).all()


def test_all_policy_rejected():
    with pytest.raises(ValueError):
        evaluate_field(builtin("explicit_euler"), SMALL, policy=RootPolicy.all())


@pytest.mark.parametrize("name", ["explicit_midpoint", "rk4", "implicit_midpoint"])
def test_field_matches_pointwise_solve(name, rng):
    t = builtin(name)
    region = Region(-4, 2, -3, 3, 13, 9)
    for metric in Metric:
        f = evaluate_field(t, region, metric)
        for _ in range(15):
            j, i = rng.integers(region.ny), rng.integers(region.nx)
            z = complex(region.re[i], region.im[j])
            res = solve(t, ProblemSpec(z, 1))
            ref = getattr(res, metric.value)
            v = f.values[j, i]
            if ref is None:
                assert math.isnan(v)
            else:
                assert v == pytest.approx(ref, rel=1e-9, abs=1e-12)


def test_componentwise_on_axes():
    region = Region(-2, 2, -2, 2, 5, 5)
    f = evaluate_field(builtin("explicit_euler"), region, Metric.L_IMAG)
    # real axis: alpha is real, so 0/0 -> 0
    assert f.value_at(-1 + 0j) == 0.0
    f = evaluate_field(builtin("explicit_euler"), region, Metric.L_REAL)
    # imaginary axis: Re alpha != 0 -> UNDEFINED
    assert math.isnan(f.value_at(1j))


def test_deterministic_csv():
    a = export_csv(evaluate_field(builtin("rk4"), SMALL))
    b = export_csv(evaluate_field(builtin("rk4"), SMALL))
    assert a == b


def test_thread_count_invariance():
    t = builtin("rk4")
    region = Region(-6, 2, -6, 6, 40, 37)
    a = export_csv(evaluate_field(t, region, threads=1))
    b = export_csv(evaluate_field(t, region, threads=4))
    assert a == b


def test_thread_env(monkeypatch):
    from rklearn.grid import num_threads
    monkeypatch.setenv("RKLEARN_NUM_THREADS", "3")
    assert num_threads() == 3


@pytest.mark.parametrize("name", ["explicit_euler", "explicit_midpoint", "rk4", "heun2"])
def test_conjugation_symmetry(name):
    region = Region(-4, 2, -3, 3, 21, 21)
    v = evaluate_field(builtin(name), region).values
    mask = ~np.isnan(v)
    assert (mask == mask[::-1]).all()
    np.testing.assert_allclose(v[mask], v[::-1][mask], rtol=1e-8, atol=1e-12)


def test_sweep_reports_roots_and_residuals():
    s = sweep(builtin("rk4"), SMALL)
    assert s.roots.shape == (121, 4)
    assert s.admissible.all()
    assert np.nanmax(s.residuals) < 1e-12 * np.max(np.maximum(1, np.abs(np.exp(s.z))))


def test_csv_small_cases():
    data = export_csv(const_field(np.zeros((2, 2))))
    lines = data.decode().splitlines()
    assert lines[0] == "re,im,value" and len(lines) == 5
    vals = np.zeros((2, 2))
    vals[0, 1] = np.nan
    lines = export_csv(const_field(vals)).decode().splitlines()
    assert lines[2].endswith(",")
    assert lines[2].split(",")[2] == ""


def test_csv_row_count_and_order():
    data = export_csv(evaluate_field(builtin("explicit_euler"), SMALL))
    re_, im_, _ = read_csv(data)
    assert re_.size == 121
    # Im varies slowest
    assert (np.diff(im_) >= 0).all()
    assert re_[0] == -3 and re_[1] == pytest.approx(-2.6)


def test_csv_round_trip_exact(rng):
    vals = rng.lognormal(size=(7, 5))
    vals[3, 2] = np.nan
    f = const_field(vals)
    _, _, back = read_csv(export_csv(f))
    back = back.reshape(7, 5)
    assert np.array_equal(np.isnan(back), np.isnan(vals))
    assert (back[~np.isnan(back)] == vals[~np.isnan(vals)]).all()


def test_read_csv_bad_header():
    with pytest.raises(ValueError):
        read_csv(b"a,b,c\n")


def _paths(svg):
    return re.findall(r'<path class="level" data-level="([^"]+)" d="([^"]*)"', svg)


def test_constant_field_has_no_contours():
    svg = render_contours(const_field(np.full((5, 5), 0.5)), [0.5])
    assert svg.startswith("<?xml")
    assert "Re z" in svg and "Im z" in svg
    assert _paths(svg) == []


def test_euler_contours_nested():
    # near the origin l_alpha ~ |z|/2 and the origin node is UNDEFINED, so the
    # innermost level needs a grid fine enough to cross it outside masked cells
    region = Region(-3, 3, -3, 3, 241, 241)
    f = evaluate_field(builtin("explicit_euler"), region)
    svg = render_contours(f, [0.05, 0.1, 1])
    paths = dict(_paths(svg))
    assert set(paths) == {"0.05", "0.1", "1"}
    # pixel coordinates: farther level lines sit farther from the origin
    cx, cy = 70 + 550 / 2, 30 + 550 / 2

    def radius(d):
        pts = np.array(re.findall(r"[ML]([-\d.]+),([-\d.]+)", d), dtype=float)
        return np.median(np.hypot(pts[:, 0] - cx, pts[:, 1] - cy))

    r = [radius(paths[k]) for k in ("0.05", "0.1", "1")]
    assert r[0] < r[1] < r[2]


def test_masked_cells_produce_no_segments():
    x = np.linspace(0, 1, 8)
    vals = np.tile(10.0 ** (x * 2 - 1), (8, 1))  # crosses level 1 in every row
    vals[(np.add.outer(np.arange(8), np.arange(8)) % 2) == 0] = np.nan
    svg = render_contours(const_field(vals), [1.0])
    assert _paths(svg) == []
    # one masked column stops segments only in cells that touch it
    vals = np.tile(10.0 ** (x * 2 - 1), (8, 1))
    vals[:, 3] = np.nan
    d = _paths(render_contours(const_field(vals), [1.0]))
    assert d == []  # the level crossing lies between columns 3 and 4


def test_all_undefined_field_errors():
    with pytest.raises(EmptyFieldError):
        render_contours(const_field(np.full((3, 3), np.nan)), [1.0])


@pytest.mark.parametrize("levels", [[], [0.0], [-1], [1, 0.5], [1, 1]])
def test_bad_levels(levels):
    with pytest.raises(ValueError):
        render_contours(const_field(np.ones((3, 3))), levels)
