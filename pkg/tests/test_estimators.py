import math

import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from robin_mc.boundary import RobinMeasure
from robin_mc.estimators import (REGISTRY, Estimate, constant, coordinate, cosine_product, function_from_config,
                                 potential_U, radial_bump, radial_quadratic, resolvent, revuz_rate, semigroup_killed,
                                 semigroup_paths, semigroup_weight, sine_product)
from robin_mc.geometry import Disk, Interval, Rectangle
from robin_mc.oracle import dirichlet_survival_series, elliptic_1d_constant_exact, fd_parabolic_1d
from robin_mc.sampler import SimConfig

IV = Interval()
CFG = SimConfig(h=1e-3, seed=1)


def _within(est: Estimate, ref, allowance=0.0, k=4.0):
    return abs(est.mean - ref) <= k * est.std_error + allowance


# -- conservation and trivial cases ------------------------------------------------------------

@pytest.mark.parametrize("domain,x", [(IV, 0.3), (Rectangle(), (0.2, 0.7)), (Disk(), (0.5, 0.0))])
def test_neumann_conservation(domain, x):
    neu = RobinMeasure.neumann(domain)
    est = semigroup_weight(domain, neu, constant(1.0), 0.2, x, 500, CFG)
    assert est.mean == 1.0 and est.std_error == 0.0 and est.estimator_kind == "weight"
    est = semigroup_killed(domain, neu, constant(1.0), 0.2, x, 500, CFG)
    assert est.mean == 1.0 and est.std_error == 0.0 and est.estimator_kind == "killed"
    for alpha in (0.5, 3.0):
        est = resolvent(domain, neu, constant(1.0), alpha, x, 500, CFG)
        # every path contributes exactly 1/alpha; only summation rounding remains
        assert est.mean == pytest.approx(1.0 / alpha, rel=1e-14) and est.std_error < 1e-15


def test_potential_trivial_zeros():
    iv = IV
    assert potential_U(iv, RobinMeasure.neumann(iv), constant(1.0), 1.0, 0.5, 200, CFG).mean == 0.0
    assert potential_U(iv, RobinMeasure.uniform(iv, 1.0), constant(0.0), 1.0, 0.5, 200, CFG).mean == 0.0
    est = potential_U(iv, RobinMeasure.neumann(iv), constant(1.0), 1.0, 0.5, 200, CFG, method="exponential")
    assert est.mean == 0.0 and est.std_error == 0.0


def test_revuz_rate_zero_for_null_measure():
    est = revuz_rate(Rectangle(), RobinMeasure.neumann(Rectangle()), constant(1.0), 1e-3, 500, SimConfig(h=1e-5))
    assert est.mean == 0.0 and est.std_error == 0.0


def test_argument_errors():
    m = RobinMeasure.uniform(IV, 1.0)
    with pytest.raises(ValueError):
        semigroup_weight(IV, m, constant(1.0), 0.1, 0.5, 1, CFG)
    with pytest.raises(ValueError):
        semigroup_weight(IV, m, constant(1.0), 2.0, 0.5, 10, CFG)
    with pytest.raises(ValueError):
        resolvent(IV, m, constant(1.0), 0.0, 0.5, 10, CFG)
    with pytest.raises(ValueError):
        potential_U(IV, m, constant(1.0), -1.0, 0.5, 10, CFG)
    with pytest.raises(ValueError):
        revuz_rate(IV, m, constant(1.0), 0.0, 10, CFG)
    with pytest.raises(ValueError):
        semigroup_weight(IV, m, constant(1.0), 0.1, 1.5, 10, CFG)


# -- oracle-anchored examples (coarse step, loose allowance for the O(sqrt h) bias) ------------

def test_dirichlet_survival_example():
    cfg = SimConfig(h=1e-4, seed=3, bridge_correction=True)
    est = semigroup_weight(IV, RobinMeasure.dirichlet(IV), constant(1.0), 0.1, 0.5, 20_000, cfg)
    assert _within(est, dirichlet_survival_series(0.1, 0.5), allowance=0.005)


def test_robin_semigroup_example():
    m = RobinMeasure.uniform(IV, 1.0)
    ref = fd_parabolic_1d(0.25, 1.0, 1.0, 1.0, 401, 1e-4).at(0.5)
    w = semigroup_weight(IV, m, constant(1.0), 0.25, 0.5, 20_000, CFG)
    k = semigroup_killed(IV, m, constant(1.0), 0.25, 0.5, 20_000, CFG.replace(seed=2))
    # the step-1e-3 bias is about 1e-2 here
    assert _within(w, ref, allowance=0.02)
    assert abs(w.mean - k.mean) <= 4 * math.hypot(w.std_error, k.std_error)


def test_resolvent_examples():
    m = RobinMeasure.uniform(IV, 1.0)
    est = resolvent(IV, m, constant(1.0), 1.0, 0.5, 20_000, CFG)
    assert _within(est, float(elliptic_1d_constant_exact(1.0, 1.0, 0.5)), allowance=0.02)
    d = resolvent(IV, RobinMeasure.dirichlet(IV), constant(1.0), 1.0, 0.5, 20_000,
                  CFG.replace(bridge_correction=True))
    assert _within(d, float(elliptic_1d_constant_exact(1.0, "dirichlet", 0.5)), allowance=0.005)


def test_potential_methods_agree():
    m = RobinMeasure.uniform(IV, 1.0)
    g = constant(0.7)
    cfg = SimConfig(h=1e-3, T=8.0, seed=4)
    hor = potential_U(IV, m, g, 1.0, 0.2, 4000, cfg)
    exp = potential_U(IV, m, g, 1.0, 0.2, 4000, cfg.replace(seed=5), method="exponential")
    assert hor.extra["truncation_bound"] < 1e-2
    assert abs(hor.mean - exp.mean) <= 4 * math.hypot(hor.std_error, exp.std_error) + hor.extra["truncation_bound"]


# -- pathwise properties ---------------------------------------------------------------------------

@settings(max_examples=15, deadline=None)
@given(st.integers(0, 2**31), st.floats(0.0, 4.0))
def test_sub_markov_per_path(seed, beta):
    rc = Rectangle()
    f = sine_product((1, 1), rc)
    contrib, _ = semigroup_paths(rc, [RobinMeasure.uniform(rc, beta)], f, 0.05, (0.1, 0.5), 300,
                                 SimConfig(h=5e-3, seed=seed))
    c = contrib[0][:, 0]
    assert np.all(c >= 0.0) and np.all(c <= f.sup_norm_bound)


def test_replay_is_bit_identical():
    m = RobinMeasure.uniform(IV, 1.0)
    a = semigroup_weight(IV, m, constant(1.0), 0.1, 0.5, 3000, CFG)
    b = semigroup_weight(IV, m, constant(1.0), 0.1, 0.5, 3000, CFG.replace(threads=4))
    assert a.mean == b.mean and a.std_error == b.std_error


def test_estimate_stderr_definition():
    s = np.array([1.0, 2.0, 4.0, 7.0])
    est = Estimate.from_samples(s, CFG, "weight")
    assert est.std_error == pytest.approx(np.std(s, ddof=1) / 2.0)
    assert est.to_dict()["n_paths"] == 4


# -- test functions ---------------------------------------------------------------------------------

@pytest.mark.parametrize("f,domain", [
    (constant(-2.0), IV), (coordinate(0, Rectangle(-1, 3, 0, 1)), Rectangle(-1, 3, 0, 1)),
    (sine_product((2,), IV), IV), (cosine_product((1, 3), Rectangle()), Rectangle()),
    (radial_bump(0.3), Disk()), (radial_quadratic(), Disk()),
])
def test_function_bounds(f, domain):
    assert f.check_bound(domain)


def test_function_registry():
    assert set(REGISTRY) >= {"constant", "coordinate", "sine_product", "radial_bump"}
    f = function_from_config({"name": "sine_product", "modes": [1]}, IV)
    assert f(np.array([[0.5]]))[0] == pytest.approx(1.0)
    assert function_from_config(3.0)(np.zeros((2, 1))).tolist() == [3.0, 3.0]
    with pytest.raises(ValueError):
        function_from_config({"name": "nosuch"})
