import math

import numpy as np
import pytest

from robin_mc.boundary import DIRICHLET, RobinMeasure
from robin_mc.geometry import Rectangle
from robin_mc.oracle import (CONVENTION, compare, disk_constant_exact, disk_radial_elliptic,
                             dirichlet_survival_series, elliptic_1d_constant_exact, fd_elliptic_1d,
                             fd_local_time_1d, fd_parabolic_1d, fd_parabolic_rect, observed_order,
                             self_convergence_order, trapezoid_mean)


def test_elliptic_examples():
    sol = fd_elliptic_1d(2.0, 0.0, 0.0, 1.0, 51)
    np.testing.assert_allclose(sol.values, 0.5, rtol=1e-12)

    d = fd_elliptic_1d(1.0, DIRICHLET, DIRICHLET, 1.0, 2001)
    exact = 1 - math.cosh(0.0) / math.cosh(math.sqrt(2) / 2)
    assert d.at(0.5) == pytest.approx(exact, abs=1e-6)
    assert d.values[0] == 0.0 and d.values[-1] == 0.0

    big = fd_elliptic_1d(1.0, 1e6, 1e6, 1.0, 2001)
    assert np.max(np.abs(big.values - d.values)) / np.max(d.values) <= 1e-4


def test_elliptic_robin_closed_form():
    sol = fd_elliptic_1d(1.0, 1.0, 1.0, 1.0, 4001)
    np.testing.assert_allclose(sol.values, elliptic_1d_constant_exact(1.0, 1.0, sol.grid[0]), atol=1e-7)
    with pytest.raises(ValueError):
        fd_elliptic_1d(0.0, 1.0, 1.0, 1.0, 11)
    with pytest.raises(ValueError):
        fd_elliptic_1d(1.0, 1.0, 1.0, 1.0, 2)


def test_parabolic_examples():
    neu = fd_parabolic_1d(0.7, 0.0, 0.0, 1.0, 101, 1e-2)
    np.testing.assert_allclose(neu.values, 1.0, atol=1e-12)

    fd = fd_parabolic_1d(0.1, DIRICHLET, DIRICHLET, 1.0, 2001, 1e-5)
    assert fd.at(0.5) == pytest.approx(dirichlet_survival_series(0.1, 0.5), abs=1e-6)

    f0 = lambda x: np.sin(3 * x) + 2
    zero = fd_parabolic_1d(0.0, 1.0, 1.0, f0, 41, 1e-3)
    np.testing.assert_array_equal(zero.values, f0(zero.grid[0]))


def test_parabolic_order():
    vals = [fd_parabolic_1d(0.25, 1.0, 1.0, lambda s: 1 + np.cos(np.pi * s), m, 0.4 / (m - 1)).at(0.3)
            for m in (41, 81, 161, 321)]
    assert self_convergence_order(*vals[:3]) >= 1.9
    assert self_convergence_order(*vals[1:]) >= 1.9


def test_rect_examples():
    neu = fd_parabolic_rect(0.3, [0.0] * 4, 1.0, 41, 1e-2)
    np.testing.assert_allclose(neu.values, 1.0, atol=1e-12)

    g = lambda s: 1.0 + 0.5 * np.cos(np.pi * s)
    h = lambda s: 2.0 + np.sin(np.pi * s)
    rect = fd_parabolic_rect(0.2, [1.0, 1.0, 0.0, 0.0], lambda X, Y: g(X) * h(Y), 61, 2e-3)
    ux = fd_parabolic_1d(0.2, 1.0, 1.0, g, 61, 2e-3).values
    uy = fd_parabolic_1d(0.2, 0.0, 0.0, h, 61, 2e-3).values
    assert np.max(np.abs(rect.values - np.outer(ux, uy))) <= 1e-6

    d2 = fd_parabolic_rect(0.1, RobinMeasure.dirichlet(Rectangle()), 1.0, 101, 5e-4).at((0.5, 0.5))
    d1 = fd_parabolic_1d(0.1, DIRICHLET, DIRICHLET, 1.0, 101, 5e-4).at(0.5)
    assert d2 == pytest.approx(d1**2, abs=1e-6)


def test_disk_examples():
    sol = disk_radial_elliptic(2.0, 0.0, 1.0, 101)
    np.testing.assert_allclose(sol.values, 0.5, rtol=1e-10)
    d = disk_radial_elliptic(1.0, DIRICHLET, 1.0, 1601)
    assert d.values[0] == pytest.approx(float(disk_constant_exact(1.0, DIRICHLET, 0.0)), abs=1e-6)
    r = disk_radial_elliptic(1.0, 1.0, 1.0, 801).values[0]
    n = disk_radial_elliptic(1.0, 0.0, 1.0, 801).values[0]
    assert d.values[0] < r < n


def test_disk_order():
    rs = np.linspace(0, 1, 11)
    errs = [np.max(np.abs(disk_radial_elliptic(1.0, 2.0, 1.0, m).at_many(rs) - disk_constant_exact(1.0, 2.0, rs)))
            for m in (21, 41, 81, 161)]
    assert np.all(observed_order(errs) >= 1.9)


def test_oracle_ordering():
    ladder = [0.0, 0.5, 1.0, 2.0, 1e3, DIRICHLET]
    sols = [fd_parabolic_1d(0.25, b, b, lambda x: 1 + x, 101, 1e-3).values for b in ladder]
    for hi, lo in zip(sols, sols[1:]):
        assert np.all(lo <= hi + 1e-14)
    res = [fd_elliptic_1d(1.0, b, b, 1.0, 201).values for b in ladder]
    for hi, lo in zip(res, res[1:]):
        assert np.all(lo <= hi + 1e-14)


def test_shrinking_ladder_gaps():
    neu = fd_elliptic_1d(1.0, 0.0, 0.0, 1.0, 401).values
    gaps = [np.max(neu - fd_elliptic_1d(1.0, 1 / k, 1 / k, 1.0, 401).values) for k in (1, 2, 4, 8, 16)]
    assert np.all(np.diff(gaps) < 0)
    assert gaps[-2] / gaps[-1] == pytest.approx(2.0, rel=0.1)


def test_local_time_oracle():
    # short times: E_0[ell_t] = sqrt(2 t / pi) on the half line; integral over [0, 1] is exactly t
    w = fd_local_time_1d(0.01, 2001, 1e-5)
    assert w.at(0.0) == pytest.approx(math.sqrt(0.02 / math.pi), rel=1e-3)
    assert trapezoid_mean(w) == pytest.approx(0.01, abs=1e-12)


def test_convention_tag_and_compare(tmp_path):
    a = fd_elliptic_1d(1.0, 1.0, 1.0, 1.0, 101)
    b = fd_elliptic_1d(1.0, 1.0, 1.0, 1.0, 201)
    assert a.convention == CONVENTION == "half-laplacian"
    assert compare(a, b) < 1e-4
    b.convention = "full-laplacian"
    with pytest.raises(ValueError):
        compare(a, b)
    a.to_csv(tmp_path / "sol.csv")
    assert (tmp_path / "sol.csv").read_text().splitlines()[0] == "x,value"
    assert a.bc == {0: 1.0, 1: 1.0}
