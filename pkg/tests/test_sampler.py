import math

import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from robin_mc.boundary import Dirichlet, Neumann, Robin, RobinMeasure
from robin_mc.estimators import constant, semigroup_paths
from robin_mc.geometry import Disk, Interval, Rectangle
from robin_mc.sampler import (BLOCK_SIZE, SimConfig, Trace, bridge_exit_probability, kill_time, run_paths,
                              simulate, step_occupation, step_project, step_schedule)


# -- single steps ----------------------------------------------------------------------

def test_step_project_examples():
    x, dl, c = step_project(Interval(), 0.1, -0.3)
    assert x == 0.0 and dl == pytest.approx(0.2) and c == 0
    x, dl, c = step_project(Interval(), 0.5, 0.1)
    assert x == pytest.approx(0.6) and dl == 0.0 and c == -1
    x, dl, c = step_project(Disk(), (0.95, 0.0), (0.15, 0.0))
    np.testing.assert_allclose(x, [1.0, 0.0])
    assert dl == pytest.approx(0.10) and c == 0


def test_step_occupation_examples():
    x, dl, _ = step_occupation(Interval(), 0.05, -0.1, eps=0.02, h=1e-4)
    assert x == pytest.approx(0.05) and dl == 0.0
    x, dl, c = step_occupation(Interval(), 0.005, 0.001, eps=0.02, h=1e-4)
    assert x == pytest.approx(0.006) and dl == pytest.approx(2.5e-3) and c == 0


def test_step_project_batch_matches_single():
    rng = np.random.default_rng(0)
    X = Rectangle().sample_uniform(rng, 200)
    dW = rng.normal(scale=0.3, size=(200, 2))
    Xn, dl, comp = step_project(Rectangle(), X, dW)
    for i in range(200):
        xi, dli, ci = step_project(Rectangle(), X[i], dW[i])
        np.testing.assert_array_equal(xi, Xn[i])
        assert dli == dl[i] and ci == comp[i]


def test_bridge_probability_examples():
    assert bridge_exit_probability(0.0, 0.3, 0.01) == 1.0
    assert bridge_exit_probability(0.1, 0.1, 0.01) == pytest.approx(math.exp(-2), rel=1e-12)
    assert bridge_exit_probability(0.1, 0.1, 1e-9) == 0.0
    assert bridge_exit_probability(0.1, 0.1, 0.0) == 0.0


def test_bridge_probability_against_dense_paths():
    """Discretely monitored bridges at h/100 and h/400, extrapolated in sqrt(step)."""
    rng = np.random.default_rng(11)
    d, h, n = 0.1, 0.01, 20_000

    def crossing_fraction(m):
        dt = h / m
        W = np.cumsum(rng.normal(scale=math.sqrt(dt), size=(n, m)), axis=1)
        s = np.arange(1, m + 1) / m
        bridge = d + W - s * W[:, -1:]  # pinned at d at both ends
        hit = (bridge.min(axis=1) <= 0.0).astype(float)
        return hit.mean(), hit.std(ddof=1) / math.sqrt(n)

    p100, s100 = crossing_fraction(100)
    p400, s400 = crossing_fraction(400)
    extrapolated = 2 * p400 - p100
    se = math.hypot(2 * s400, s100)
    assert abs(extrapolated - bridge_exit_probability(d, d, h)) <= 4 * se


def test_step_schedule():
    assert step_schedule(0.1, 0.03) == pytest.approx([0.03, 0.03, 0.03, 0.01])
    assert step_schedule(0.1, 0.025) == pytest.approx([0.025] * 4)
    assert step_schedule(0.0, 0.1) == []


def test_sim_config_validation():
    with pytest.raises(ValueError):
        SimConfig(h=0.0)
    with pytest.raises(ValueError):
        SimConfig(scheme="occupation")
    with pytest.raises(ValueError):
        SimConfig(T=-1.0)
    with pytest.raises(ValueError):
        SimConfig(scheme="euler")
    assert SimConfig().replace(h=1e-3).h == 1e-3


# -- traces -----------------------------------------------------------------------------------

def test_neumann_trace_has_zero_functional():
    tr = simulate(Interval(), RobinMeasure.neumann(Interval()), 0.05, SimConfig(h=1e-3, T=0.5, seed=3))
    assert np.all(tr.A == 0.0)
    assert tr.ell[-1].sum() > 0


def test_unit_rate_functional_is_total_local_time():
    tr = simulate(Interval(), RobinMeasure.uniform(Interval(), 1.0), 0.02, SimConfig(h=1e-3, T=1.0, seed=4))
    np.testing.assert_allclose(tr.A, tr.ell.sum(axis=1), rtol=1e-12, atol=0)
    assert tr.A[-1] > 0


def test_dirichlet_contact_absorbs_and_freezes():
    m = RobinMeasure((Dirichlet(), Neumann()))
    tr = simulate(Interval(), m, 0.5, SimConfig(h=1e-3, T=2.0, seed=5))
    dead = np.flatnonzero(~tr.alive)
    assert len(dead), "path should hit 0 within T = 2"
    k = dead[0]
    dW = np.diff(tr.noise[:, 0])
    proposals = tr.X[:-1, 0] + dW
    assert proposals[k - 1] < 0
    assert np.all(proposals[:k - 1] >= 0)
    assert np.all(tr.X[k:, 0] == 0.0)
    assert np.all(tr.A == 0.0)


def test_kill_time_examples():
    t = np.linspace(0, 2, 21)
    assert kill_time((t, np.zeros_like(t)), 0.5) == math.inf
    assert kill_time((t, t.copy()), 1.0) == pytest.approx(1.0)
    assert kill_time((t, t.copy()), 0.55) == pytest.approx(0.55)
    with pytest.raises(ValueError):
        kill_time((t, t), 0.0)


def test_killing_clock_matches_weight():
    """P(xi > T) over independent Exp(1) thresholds equals E[exp(-A_T)]."""
    iv = Interval()
    m = RobinMeasure.uniform(iv, 1.0)
    cfg = SimConfig(h=2e-3, T=0.25, seed=8)
    rng = np.random.default_rng(8)
    survived = []
    for _ in range(800):
        tr = simulate(iv, m, 0.5, cfg, rng)
        survived.append(kill_time(tr, rng.exponential()) > cfg.T)
    survived = np.asarray(survived, dtype=float)
    res = run_paths(iv, [m], cfg, 20_000, x0=0.5, t_end=cfg.T)
    w = np.exp(-res.A[:, 0])
    se = math.hypot(survived.std(ddof=1) / math.sqrt(len(survived)), w.std(ddof=1) / math.sqrt(len(w)))
    assert abs(survived.mean() - w.mean()) <= 4 * se


def test_trace_csv(tmp_path):
    tr = simulate(Rectangle(), RobinMeasure.uniform(Rectangle(), 1.0), (0.1, 0.1), SimConfig(h=1e-2, T=0.05))
    path = tmp_path / "trace.csv"
    tr.to_csv(path)
    lines = path.read_text().splitlines()
    assert lines[0] == "t,x0,x1,ell_0,ell_1,ell_2,ell_3,A,alive"
    assert len(lines) == len(tr.t) + 1


# -- pathwise invariants -------------------------------------------------------------------------

DOMAINS = [Interval(), Rectangle(), Disk()]
START = {Interval: 0.03, Rectangle: (0.05, 0.97), Disk: (0.9, 0.1)}


@settings(max_examples=20, deadline=None)
@given(st.integers(0, 2**32), st.sampled_from(range(3)), st.sampled_from(["projection", "occupation"]))
def test_trace_invariants(seed, which, scheme):
    domain = DOMAINS[which]
    m = RobinMeasure.uniform(domain, Robin(1.5))
    cfg = SimConfig(h=2e-3, T=0.2, seed=seed, scheme=scheme, eps=0.02 if scheme == "occupation" else None)
    tr = simulate(domain, m, START[type(domain)], cfg)
    diam = domain.diameter
    # containment
    assert np.all(domain.signed_distance(tr.X) >= -1e-12 * diam)
    # monotone functionals
    assert np.all(np.diff(tr.ell, axis=0) >= 0)
    assert np.all(np.diff(tr.A) >= 0)
    # support: A only moves when local time moves
    dl = np.diff(tr.ell, axis=0).sum(axis=1)
    assert np.all(np.diff(tr.A)[dl == 0] == 0)
    if scheme == "projection":
        assert np.all(np.abs(domain.signed_distance(tr.X[1:][dl > 0])) <= 1e-10 * diam)
    # driving-noise identity
    x0 = np.asarray(START[type(domain)], dtype=float).reshape(-1)
    np.testing.assert_allclose(tr.X - x0 - tr.noise, tr.push, atol=1e-12)
    if scheme == "projection":
        assert np.all(np.linalg.norm(tr.push, axis=1) <= tr.ell.sum(axis=1) + 1e-12)
        untouched = np.cumsum(dl) == 0
        assert np.all(tr.push[1:][untouched] == 0.0)


@settings(max_examples=20, deadline=None)
@given(st.integers(0, 2**32), st.floats(0.0, 5.0), st.floats(0.0, 5.0))
def test_coupled_functionals_are_ordered(seed, b1, b2):
    lo, hi = sorted((b1, b2))
    rc = Rectangle()
    cfg = SimConfig(h=2e-3, T=0.2, seed=seed)
    t1 = simulate(rc, RobinMeasure.uniform(rc, lo), (0.05, 0.5), cfg)
    t2 = simulate(rc, RobinMeasure.uniform(rc, hi), (0.05, 0.5), cfg)
    np.testing.assert_array_equal(t1.X, t2.X)
    assert np.all(t1.A <= t2.A)


# -- batched engine ------------------------------------------------------------------------------

def test_replay_independent_of_threads():
    iv = Interval()
    m = [RobinMeasure.uniform(iv, 1.0), RobinMeasure.dirichlet(iv)]
    n = 2 * BLOCK_SIZE + 123
    cfg = SimConfig(h=1e-3, seed=9, bridge_correction=True)
    a = run_paths(iv, m, cfg, n, x0=0.05, t_end=0.01, threads=1)
    b = run_paths(iv, m, cfg, n, x0=0.05, t_end=0.01, threads=3)
    for name in ("X", "A", "alive", "touched", "ell"):
        np.testing.assert_array_equal(getattr(a, name), getattr(b, name))
    c = run_paths(iv, m, cfg, n, x0=0.05, exp_rate=50.0, threads=1)
    d = run_paths(iv, m, cfg, n, x0=0.05, exp_rate=50.0, threads=2)
    np.testing.assert_array_equal(c.A, d.A)
    np.testing.assert_array_equal(c.aux, d.aux)


def test_exponential_clock_stops_each_path_at_its_time():
    res = run_paths(Disk(), [RobinMeasure.uniform(Disk(), 1.0)], SimConfig(h=1e-2), 3000, x0=(0.0, 0.0),
                    exp_rate=2.0)
    np.testing.assert_allclose(res.t, res.aux, rtol=0, atol=1e-12)
    assert res.aux.mean() == pytest.approx(0.5, rel=0.1)


def test_dirichlet_start_is_dead():
    res = run_paths(Interval(), [RobinMeasure.dirichlet(Interval())], SimConfig(h=1e-3), 10, x0=0.0,
                    t_end=0.01)
    assert not res.alive.any()


def test_coarse_levels_survive_longer_under_absorption():
    """Coarse monitoring times are a subset of the fine ones on the same Brownian path."""
    iv = Interval()
    contrib, _ = semigroup_paths(iv, [RobinMeasure.dirichlet(iv)], constant(1.0), 0.1, 0.5, 5000,
                                 SimConfig(h=1e-3, seed=2), levels=3)
    assert np.all(contrib[0] >= contrib[1]) and np.all(contrib[1] >= contrib[2])


def test_local_time_agrees_across_schemes():
    """E[ell_T] from the boundary, T = 0.1, h = 1e-5: projection vs occupation (eps = 0.01)."""
    iv = Interval()
    neu = [RobinMeasure.neumann(iv)]
    n = 4000
    p = run_paths(iv, neu, SimConfig(h=1e-5, seed=21), n, x0=0.0, t_end=0.1).ell.sum(axis=1)
    o = run_paths(iv, neu, SimConfig(h=1e-5, seed=22, scheme="occupation", eps=0.01), n, x0=0.0,
                  t_end=0.1).ell.sum(axis=1)
    se = math.hypot(p.std(ddof=1), o.std(ddof=1)) / math.sqrt(n)
    assert abs(p.mean() - o.mean()) <= 3 * se
    # both close to the half-line value sqrt(2 T / pi)
    assert p.mean() == pytest.approx(math.sqrt(0.2 / math.pi), rel=0.05)
