"""Property suites: exact coupling checks and oracle-anchored statistical checks.

Every check returns a :class:`Check` carrying its inputs, observed value,
reference, standard error, allowance and tolerance, so a failure can be
replayed and the tolerance arithmetic audited.  A :class:`SuiteReport`
groups checks and serializes to canonical JSON (sorted keys), so a rerun with
the same seed produces the same bytes.

Discretization allowance.  Statistical comparisons with an oracle run the
same Brownian paths at two step sizes ``4h`` and ``h`` and report the finer
estimate.  For a scheme of weak order 1/2 the bias at ``h`` equals the coupled
difference ``Delta`` (Richardson), so the allowance is ``1.5 |Delta|``.
"""

from __future__ import annotations

import json
import math
from dataclasses import asdict, dataclass, field
from typing import Callable, Optional, Sequence

import numpy as np

from . import __version__
from .boundary import DIRICHLET, Dirichlet, Neumann, Robin, RobinMeasure, scale
from .estimators import (TestFunction, constant, dirichlet_paths, radial_quadratic, resolvent_multi,
                         resolvent_paths, revuz_rate, semigroup_paths, _volume)
from .geometry import Disk, Domain, Interval, Rectangle
from .oracle import (CONVENTION, disk_constant_exact, disk_radial_elliptic, dirichlet_survival_series,
                     elliptic_1d_constant_exact, fd_elliptic_1d, fd_local_time_1d, fd_parabolic_1d,
                     fd_parabolic_rect, observed_order, self_convergence_order, trapezoid_mean)
from .sampler import REFINE, SimConfig

SAFETY = 1.5
ORDER = 0.5
ORACLE_TOL = 1e-6  # accuracy budget of the FD / series references at the grids used here


def discretization_allowance(coarse: float, fine: float, safety: float = SAFETY) -> float:
    """Allowance for the bias of ``fine`` given a coupled estimate at ``4h``.

    Weak order 1/2: bias(h) ~ Delta / (4**0.5 - 1) = Delta.
    """
    return safety * abs(coarse - fine) / (REFINE**ORDER - 1.0)


def _plain(obj):
    """Recursively convert numpy scalars/arrays so ``json`` can serialize them."""
    if isinstance(obj, dict):
        return {str(k): _plain(v) for k, v in obj.items()}
    if isinstance(obj, (list, tuple)):
        return [_plain(v) for v in obj]
    if isinstance(obj, np.ndarray):
        return _plain(obj.tolist())
    if isinstance(obj, (np.bool_, bool)):
        return bool(obj)
    if isinstance(obj, (np.integer,)):
        return int(obj)
    if isinstance(obj, (np.floating, float)):
        v = float(obj)
        return v if math.isfinite(v) else repr(v)
    if obj is DIRICHLET:
        return "dirichlet"
    return obj


@dataclass
class Check:
    name: str
    passed: bool
    inputs: dict = field(default_factory=dict)
    observed: object = None
    reference: object = None
    stderr: object = None
    allowance: object = None
    tolerance: object = None
    detail: dict = field(default_factory=dict)


@dataclass
class SuiteReport:
    suite: str
    checks: list
    seed: int
    cfg: dict
    version: str = __version__
    convention: str = CONVENTION

    @property
    def passed(self) -> bool:
        return all(c.passed for c in self.checks)

    def extend(self, other: "SuiteReport") -> "SuiteReport":
        self.checks.extend(other.checks)
        return self

    def to_dict(self) -> dict:
        d = asdict(self)
        d["passed"] = self.passed
        return _plain(d)

    def to_json(self) -> str:
        return json.dumps(self.to_dict(), sort_keys=True, indent=2) + "\n"


def _report(name, checks, cfg: SimConfig, **extra_cfg):
    d = cfg.to_dict()
    d.pop("threads")  # results do not depend on it
    return SuiteReport(name, list(checks), cfg.seed, {**d, **extra_cfg})


def _stats(samples):
    s = np.asarray(samples, dtype=float)
    return float(s.mean()), float(s.std(ddof=1) / math.sqrt(len(s)))


def _statistical(name, fine, coarse, reference, inputs, k_se=3.0, allowance=True, **detail):
    """``|mean(fine) - reference| <= k_se * stderr + allowance``."""
    mean, se = _stats(fine)
    allow = 0.0
    if allowance and coarse is not None:
        allow = discretization_allowance(float(np.mean(coarse)), mean)
    tol = k_se * se + allow + ORACLE_TOL
    return Check(name, bool(abs(mean - reference) <= tol), inputs, mean, reference, se, allow, tol,
                 {"k_se": k_se, "oracle_tol": ORACLE_TOL, **detail})


# -- oracle adapters ----------------------------------------------------------------

def _bc(spec):
    if isinstance(spec, Dirichlet):
        return DIRICHLET
    if isinstance(spec, Neumann):
        return 0.0
    if not spec.is_constant:
        raise NotImplementedError("oracles need a constant rate per component")
    return spec.beta


def semigroup_oracle(domain: Domain, measure: RobinMeasure, f: TestFunction, t: float, x,
                     m_nodes: Optional[int] = None, dt: Optional[float] = None) -> float:
    """FD value of ``P_t f(x)`` on an interval or rectangle."""
    bcs = [_bc(s) for s in measure.components]
    x = np.atleast_1d(np.asarray(x, dtype=float))
    if isinstance(domain, Interval):
        sol = fd_parabolic_1d(t, bcs[0], bcs[1], lambda s: f((s + domain.a)[:, None]),
                              m_nodes or 801, dt or 1e-4, length=domain.diameter)
        return sol.at(x - domain.a)
    if isinstance(domain, Rectangle):
        def f0(X, Y):
            pts = np.column_stack([X.ravel() + domain.x0, Y.ravel() + domain.y0])
            return f(pts).reshape(X.shape)

        sol = fd_parabolic_rect(t, bcs, f0, m_nodes or 201, dt or 2.5e-4,
                                domain.x1 - domain.x0, domain.y1 - domain.y0)
        return sol.at(x - np.array([domain.x0, domain.y0]))
    raise NotImplementedError("no parabolic oracle for the disk")


def resolvent_solution(domain: Domain, measure: RobinMeasure, f: TestFunction, alpha: float,
                       m_nodes: int = 2001):
    """FD solution of ``alpha u - 1/2 Lap u = f`` (radial ``f`` on the disk)."""
    bcs = [_bc(s) for s in measure.components]
    if isinstance(domain, Interval):
        return fd_elliptic_1d(alpha, bcs[0], bcs[1], lambda s: f((s + domain.a)[:, None]), m_nodes,
                              length=domain.diameter)
    if isinstance(domain, Disk):
        c = np.asarray(domain.center)
        return disk_radial_elliptic(alpha, bcs[0], lambda r: f(c + np.column_stack([r, 0 * r])),
                                    m_nodes, domain.radius)
    raise NotImplementedError("no elliptic oracle for the rectangle")


def resolvent_oracle(domain, measure, f, alpha, x, m_nodes: int = 2001) -> float:
    sol = resolvent_solution(domain, measure, f, alpha, m_nodes)
    x = np.atleast_1d(np.asarray(x, dtype=float))
    if isinstance(domain, Interval):
        return sol.at(x - domain.a)
    return sol.at(np.hypot(*(x - np.asarray(domain.center))))


def oracle_function(domain: Interval, sol, name="oracle") -> TestFunction:
    """Turn a 1D FD solution into a test function by linear interpolation."""
    grid, vals = sol.grid[0], sol.values
    return TestFunction(lambda X: np.interp(X[:, 0] - domain.a, grid, vals),
                        float(np.max(np.abs(vals))), name)


def _inputs(domain, measure=None, **kw):
    d = {"domain": type(domain).__name__}
    if measure is not None:
        d["measure"] = measure.to_config()
    d.update(kw)
    return d


# -- pathwise checks ------------------------------------------------------------------

def check_sandwich(domain, measure, f, t, x, n, cfg: SimConfig, with_oracle: bool = True) -> SuiteReport:
    """Dirichlet <= Robin <= Neumann per coupled path, then the means against oracles."""
    neu = RobinMeasure.neumann(domain)
    levels = 2 if with_oracle else 1
    contrib, results = semigroup_paths(domain, [neu, measure], f, t, x, n, cfg, levels=levels)
    inputs = _inputs(domain, measure, f=f.to_config(), t=t, x=np.atleast_1d(x), n=n)
    fine = contrib[-1]
    res = results[-1]
    fX = f(res.X)
    dval = fX * ~res.touched
    checks = []
    if np.any(fX < 0):
        checks.append(Check("f_nonnegative", False, inputs, float(fX.min()), 0.0))
        return _report("sandwich", checks, cfg)
    lower = int(np.count_nonzero(dval > fine[:, 1]))
    upper = int(np.count_nonzero(fine[:, 1] > fine[:, 0]))
    checks.append(Check("pathwise_D_le_R_le_N", lower + upper == 0, inputs, lower + upper, 0, tolerance=0,
                        detail={"violations_D_gt_R": lower, "violations_R_gt_N": upper,
                                "n_paths": len(fine)}))
    if measure.is_null:
        same = bool(np.array_equal(fine[:, 0], fine[:, 1]))
        checks.append(Check("null_measure_equals_neumann", same, inputs, same, True))
    if with_oracle:
        coarse = contrib[0]
        dcoarse = f(results[0].X) * ~results[0].touched
        pairs = (("neumann", fine[:, 0], coarse[:, 0], neu),
                 ("robin", fine[:, 1], coarse[:, 1], measure),
                 ("dirichlet", dval, dcoarse, RobinMeasure.dirichlet(domain)))
        for label, fs, cs, meas in pairs:
            ref = semigroup_oracle(domain, meas, f, t, x)
            checks.append(_statistical(f"oracle_{label}", fs, cs, ref, {**inputs, "h": res.h}))
    return _report("sandwich", checks, cfg)


def check_monotone(domain, ladder: Sequence[RobinMeasure], f, t, x, n, cfg: SimConfig,
                   with_oracle: bool = True) -> SuiteReport:
    """Coupled weights are nonincreasing along a pointwise increasing ladder of measures."""
    levels = 2 if with_oracle else 1
    contrib, results = semigroup_paths(domain, list(ladder), f, t, x, n, cfg, levels=levels)
    inputs = _inputs(domain, None, ladder=[m.to_config() for m in ladder], f=f.to_config(), t=t,
                     x=np.atleast_1d(x), n=n)
    fine = contrib[-1]
    viol = [int(np.count_nonzero(fine[:, j + 1] > fine[:, j])) for j in range(len(ladder) - 1)]
    checks = [Check("pathwise_monotone", sum(viol) == 0, inputs, sum(viol), 0, tolerance=0,
                    detail={"violations_per_rung": viol, "n_paths": len(fine)})]
    means = fine.mean(axis=0)
    checks.append(Check("means_nonincreasing", bool(np.all(np.diff(means) <= 0)), inputs, means))
    if with_oracle:
        for j, meas in enumerate(ladder):
            ref = semigroup_oracle(domain, meas, f, t, x)
            checks.append(_statistical(f"oracle_rung_{j}", fine[:, j], contrib[0][:, j], ref,
                                       {**inputs, "rung": j, "h": results[-1].h}))
    return _report("monotone", checks, cfg)


# -- statistical checks ---------------------------------------------------------------

def check_estimator_equivalence(domain, measure, f, t, x, n, cfg: SimConfig) -> SuiteReport:
    """Weight ``exp(-A_t)`` and killing-clock ``1{A_t < Z}`` estimators on independent seeds."""
    w, _ = semigroup_paths(domain, [measure], f, t, x, n, cfg)
    k, _ = semigroup_paths(domain, [measure], f, t, x, n, cfg.replace(seed=cfg.seed + 1), killed=True)
    w, k = w[0][:, 0], k[0][:, 0]
    (mw, sw), (mk, sk) = _stats(w), _stats(k)
    se = math.hypot(sw, sk)
    inputs = _inputs(domain, measure, f=f.to_config(), t=t, x=np.atleast_1d(x), n=n)
    checks = [Check("weight_vs_killed", abs(mw - mk) <= 4 * se, inputs, mw - mk, 0.0, se, 0.0, 4 * se,
                    {"weight_mean": mw, "killed_mean": mk})]
    if not measure.is_null:
        vw, vk = float(np.var(w, ddof=1)), float(np.var(k, ddof=1))
        checks.append(Check("killed_variance_larger", vk > vw, inputs, vk, vw,
                            detail={"weight_variance": vw, "killed_variance": vk}))
    else:
        exact = bool(np.all(k == w) and np.all(w == w[0]))
        checks.append(Check("null_measure_exact", exact, inputs, exact, True))
    return _report("equivalence", checks, cfg)


def check_resolvent_identity(domain: Interval, measure, f, alpha, x, n, cfg: SimConfig,
                             n_ladder: Sequence[int] = (), ladder_h: Optional[float] = None,
                             with_allowance: bool = True) -> SuiteReport:
    """``R^A f - R f + U_A (R^A f) = 0`` with ``R^A f`` on the boundary taken from the oracle.

    All three terms are computed on the same paths (each stopped at its own
    ``Exp(alpha)`` time), so the per-path residual has a plain standard error.
    ``n_ladder`` adds a scaling check: the residual's standard error must
    shrink like ``1/sqrt(n)`` within 20%.
    """
    sol = resolvent_solution(domain, measure, f, alpha)
    g = oracle_function(domain, sol, "oracle_resolvent")
    inputs = _inputs(domain, measure, f=f.to_config(), alpha=alpha, x=np.atleast_1d(x), n=n)

    def residuals(n_paths, c, levels):
        out, res = resolvent_paths(domain, measure, f, alpha, x, n_paths, c, g=g, levels=levels)
        return [o["RA"] - o["R"] + o["U"] for o in out], res

    levels = 2 if with_allowance else 1
    r, res = residuals(n, cfg, levels)
    checks = [_statistical("identity_residual", r[-1], r[0] if levels == 2 else None, 0.0,
                           {**inputs, "h": res[-1].h}, allowance=with_allowance)]
    if measure.is_null:
        exact = bool(np.all(r[-1] == 0.0))
        checks.append(Check("null_measure_exact_zero", exact, inputs, float(np.abs(r[-1]).max()), 0.0))
    if n_ladder:
        c_ladder = cfg.replace(h=ladder_h or cfg.h)
        ses, means = [], []
        for m in n_ladder:
            rr, _ = residuals(m, c_ladder, 1)
            mu, se = _stats(rr[0])
            means.append(mu)
            ses.append(se)
        ratios = [ses[i] / ses[i + 1] for i in range(len(ses) - 1)]
        expected = [math.sqrt(n_ladder[i + 1] / n_ladder[i]) for i in range(len(ses) - 1)]
        ok = all(abs(a / b - 1.0) <= 0.2 for a, b in zip(ratios, expected))
        checks.append(Check("stderr_scaling", ok, {**inputs, "n_ladder": list(n_ladder), "h": c_ladder.h},
                            ratios, expected, tolerance=0.2,
                            detail={"stderr": ses, "residual": means}))
    return _report("resolvent-identity", checks, cfg)


def check_mu_convergence(domain, base: RobinMeasure, f, alpha, x, n, cfg: SimConfig,
                         shrink=(1, 2, 4, 8, 16), grow=(1, 10, 100, 1000)) -> SuiteReport:
    """Resolvents along ``beta/k`` (to Neumann) and ``k beta`` (to Dirichlet)."""
    inputs = _inputs(domain, base, f=f.to_config(), alpha=alpha, x=np.atleast_1d(x), n=n)
    neu = RobinMeasure.neumann(domain)
    checks = []

    # decreasing family: column 0 is Neumann
    fam = [neu] + [scale(base, 1.0 / k) for k in shrink]
    contrib, res = resolvent_multi(domain, fam, f, alpha, x, n, cfg)
    c = contrib[0]
    viol = int(np.count_nonzero(np.diff(c[:, 1:], axis=1) < 0)) + int(np.count_nonzero(c[:, -1] > c[:, 0]))
    checks.append(Check("shrink_pathwise_monotone", viol == 0, {**inputs, "k": list(shrink)}, viol, 0,
                        tolerance=0))
    gaps = [c[:, 0] - c[:, j + 1] for j in range(len(shrink))]
    gap_means = [float(gp.mean()) for gp in gaps]
    ref_neu = resolvent_oracle(domain, neu, f, alpha, x)
    ref_gaps = [ref_neu - resolvent_oracle(domain, m, f, alpha, x) for m in fam[1:]]
    ratio = gap_means[-1] / gap_means[0]
    ref_ratio = ref_gaps[-1] / ref_gaps[0]
    checks.append(Check("gap_ratio_vs_oracle", abs(ratio / ref_ratio - 1.0) <= 0.2,
                        {**inputs, "k": [shrink[0], shrink[-1]]}, ratio, ref_ratio, tolerance=0.2,
                        detail={"gaps": gap_means, "oracle_gaps": ref_gaps}))

    # increasing family, with a coupled 4h run for the allowance
    fam_up = [scale(base, float(k)) for k in grow]
    contrib, res = resolvent_multi(domain, fam_up, f, alpha, x, n, cfg, levels=2)
    c = contrib[-1]
    viol = int(np.count_nonzero(np.diff(c, axis=1) > 0))
    checks.append(Check("grow_pathwise_monotone", viol == 0, {**inputs, "k": list(grow)}, viol, 0,
                        tolerance=0))
    ref_d = resolvent_oracle(domain, RobinMeasure.dirichlet(domain), f, alpha, x)
    checks.append(_statistical("grow_top_vs_dirichlet", c[:, -1], contrib[0][:, -1], ref_d,
                               {**inputs, "k": grow[-1], "h": res[-1].h}))
    return _report("mu-convergence", checks, cfg)


def _linear_fit(ts, rates, ses):
    """Weighted least squares ``rate = a + b t``; returns ``(a, se_a, b)``."""
    ts, rates, w = np.asarray(ts), np.asarray(rates), 1.0 / np.asarray(ses) ** 2
    Xm = np.column_stack([np.ones_like(ts), ts])
    cov = np.linalg.inv(Xm.T @ (w[:, None] * Xm))
    coef = cov @ (Xm.T @ (w * rates))
    return float(coef[0]), float(math.sqrt(cov[0, 0])), float(coef[1])


def revuz_intercept(domain, measure, t_ladder, n, cfg: SimConfig, h_ratio: float = 100.0):
    """Rates at each ``t`` (step ``t / h_ratio``) and their linear extrapolation to ``t = 0``."""
    one = constant(1.0)
    rates, ses = [], []
    for i, t in enumerate(t_ladder):
        est = revuz_rate(domain, measure, one, t, n, cfg.replace(h=t / h_ratio, seed=cfg.seed + i))
        rates.append(est.mean)
        ses.append(est.std_error)
    if measure.is_null:
        return 0.0, 0.0, rates, ses
    a, se_a, _ = _linear_fit(t_ladder, rates, ses)
    return a, se_a, rates, ses


def continuum_revuz_constant(t: float = 1e-3, m_nodes: int = 4001) -> float:
    """``c`` for exact Skorohod local time on [0, 1], from the FD local-time oracle."""
    w = fd_local_time_1d(t, m_nodes, t / 200)
    return trapezoid_mean(w) / t / 2.0


def check_revuz(domains: Sequence[Domain], beta: float, t_ladder, n, cfg: SimConfig,
                h_ratio: float = 100.0) -> SuiteReport:
    """One constant ``c`` with ``rate -> c * int beta d sigma`` across domains, linearity in beta."""
    checks = []
    cs, c_ses = [], []
    inputs = {"t_ladder": list(t_ladder), "n": n, "beta": beta, "h_ratio": h_ratio}
    for di, domain in enumerate(domains):
        meas = RobinMeasure.uniform(domain, Robin(beta))
        mass = meas.integral(domain)
        base_seed = cfg.seed + 100 * di
        a, se_a, rates, ses = revuz_intercept(domain, meas, t_ladder, n, cfg.replace(seed=base_seed), h_ratio)
        cs.append(a / mass)
        c_ses.append(se_a / mass)
        a2, se2, rates2, ses2 = revuz_intercept(domain, RobinMeasure.uniform(domain, Robin(2 * beta)),
                                                t_ladder, n, cfg.replace(seed=base_seed + 50), h_ratio)
        se_comb = math.hypot(2 * se_a, se2)
        checks.append(Check(f"doubling_beta_{type(domain).__name__}", abs(a2 - 2 * a) <= 3 * se_comb,
                            {**inputs, "domain": type(domain).__name__}, a2, 2 * a, se_comb,
                            tolerance=3 * se_comb, detail={"rates": rates, "rates_2beta": rates2}))
        zero, _, zr, _ = revuz_intercept(domain, RobinMeasure.neumann(domain), t_ladder[-1:], min(n, 10_000),
                                         cfg.replace(seed=base_seed + 70), h_ratio)
        checks.append(Check(f"null_measure_zero_{type(domain).__name__}", all(v == 0.0 for v in zr),
                            {"domain": type(domain).__name__}, zr, 0.0))
    c0 = cs[0]
    for domain, c, se in zip(domains[1:], cs[1:], c_ses[1:]):
        rel = abs(c - c0) / c0
        checks.append(Check(f"constant_consistency_{type(domain).__name__}", rel <= 0.05,
                            inputs, c, c0, se, tolerance=0.05,
                            detail={"relative_difference": rel, "stderr_reference": c_ses[0]}))
    checks.append(Check("scheme_constant", True, inputs, cs, continuum_revuz_constant(),
                        detail={"stderr": c_ses, "domains": [type(d).__name__ for d in domains],
                                "note": "reference is the continuum constant for exact local time"}))
    return _report("revuz", checks, cfg)


def check_conservation(n, cfg: SimConfig, t: float = 0.1) -> SuiteReport:
    """Zero measure, f = 1: every path weight is exactly 1 on every domain."""
    checks = []
    for domain, x in ((Interval(), 0.5), (Rectangle(), (0.5, 0.5)), (Disk(), (0.0, 0.0))):
        contrib, _ = semigroup_paths(domain, [RobinMeasure.neumann(domain)], constant(1.0), t, x, n, cfg)
        mean, se = _stats(contrib[0][:, 0])
        checks.append(Check(f"semigroup_{type(domain).__name__}", mean == 1.0 and se == 0.0,
                            _inputs(domain, None, t=t, x=np.atleast_1d(x), n=n), mean, 1.0, se, 0.0, 0.0))
        out, _ = resolvent_paths(domain, RobinMeasure.neumann(domain), constant(1.0), 2.0, x, n, cfg)
        ok = bool(np.all(out[0]["RA"] == 0.5))
        checks.append(Check(f"resolvent_{type(domain).__name__}", ok,
                            _inputs(domain, None, alpha=2.0, x=np.atleast_1d(x), n=n),
                            float(out[0]["RA"].mean()), 0.5, tolerance=0.0))
    return _report("conservation", checks, cfg)


def check_oracle_match(domain, measure, f, t, x, n, cfg: SimConfig, rel_target: float = 0.015) -> SuiteReport:
    """Semigroup estimate at step ``h`` (coupled with ``4h``) against the FD oracle."""
    coarse_cfg = cfg.replace(h=cfg.h * REFINE)
    contrib, res = semigroup_paths(domain, [measure], f, t, x, n, coarse_cfg, levels=2)
    ref = semigroup_oracle(domain, measure, f, t, x)
    chk = _statistical(f"oracle_{type(domain).__name__}_x={[float(v) for v in np.atleast_1d(x)]}", contrib[1][:, 0],
                       contrib[0][:, 0], ref, _inputs(domain, measure, f=f.to_config(), t=t,
                                                       x=np.atleast_1d(x), n=n, h=res[1].h))
    chk.detail["relative_tolerance"] = chk.tolerance / abs(ref)
    chk.detail["relative_target"] = rel_target
    return _report("robin-oracle", [chk], cfg)


def check_dirichlet(n, cfg: SimConfig, t: float = 0.1, x: float = 0.5,
                    h_ladder=(4e-4, 1e-4, 2.5e-5)) -> SuiteReport:
    """All-Dirichlet interval: bridge-corrected match with the series, and positive shrinking bias without."""
    domain = Interval()
    ref = dirichlet_survival_series(t, x)
    one = constant(1.0)
    D = RobinMeasure.dirichlet(domain)
    inputs = _inputs(domain, D, t=t, x=[x], n=n)
    checks = []
    on = cfg.replace(h=h_ladder[0], bridge_correction=True)
    contrib, res = semigroup_paths(domain, [D], one, t, x, n, on, levels=2)
    checks.append(_statistical("bridge_on_vs_series", contrib[1][:, 0], contrib[0][:, 0], ref,
                               {**inputs, "h": res[1].h, "bridge_correction": True}))
    off = cfg.replace(h=h_ladder[0], bridge_correction=False)
    contrib, res = semigroup_paths(domain, [D], one, t, x, n, off, levels=len(h_ladder))
    bias = [float(c[:, 0].mean()) - ref for c in contrib]
    ses = [_stats(c[:, 0])[1] for c in contrib]
    positive = all(b > 0 for b in bias)
    checks.append(Check("bridge_off_bias_positive", positive, {**inputs, "h": list(h_ladder)}, bias, 0.0, ses))
    # coupled levels: the differences between levels are nearly noise free
    diffs = [float((contrib[i][:, 0] - contrib[i + 1][:, 0]).mean()) for i in range(len(h_ladder) - 1)]
    shrinking = all(d > 0 for d in diffs)
    checks.append(Check("bridge_off_bias_shrinks", shrinking, {**inputs, "h": list(h_ladder)}, bias, ref,
                        detail={"coupled_level_differences": diffs}))
    return _report("dirichlet", checks, cfg)


# -- oracle self-checks -------------------------------------------------------------------

def check_oracles() -> SuiteReport:
    """Convergence orders, separability and ordering of the deterministic solvers."""
    checks = []

    def order_check(name, errors, min_order=1.9, **inputs):
        orders = observed_order(errors)
        checks.append(Check(name, bool(np.all(orders >= min_order)), inputs, orders, min_order,
                            detail={"errors": list(errors)}))

    ms = (21, 41, 81, 161)
    xs = np.linspace(0, 1, 21)
    for beta in (1.0, DIRICHLET):
        errs = []
        for m in ms:
            sol = fd_elliptic_1d(1.0, beta, beta, 1.0, m)
            errs.append(float(np.max(np.abs(sol.at_many(xs) - elliptic_1d_constant_exact(1.0, beta, xs)))))
        order_check(f"elliptic_1d_order_beta={_plain(beta)}", errs, alpha=1.0, m_nodes=list(ms))

    # parabolic 1D: Robin ends, cosine data, refine space and time together
    vals = []
    for m in (41, 81, 161, 321):
        sol = fd_parabolic_1d(0.25, 1.0, 1.0, lambda s: 1.0 + np.cos(np.pi * s), m, 0.01 * 40 / (m - 1))
        vals.append(sol.at(0.3))
    p = [self_convergence_order(*vals[i:i + 3]) for i in range(len(vals) - 2)]
    checks.append(Check("parabolic_1d_order", min(p) >= 1.9, {"t": 0.25, "beta": 1.0}, p, 1.9,
                        detail={"values": vals}))

    series = dirichlet_survival_series(0.1, 0.5)
    fd = fd_parabolic_1d(0.1, DIRICHLET, DIRICHLET, 1.0, 2001, 1e-5).at(0.5)
    checks.append(Check("dirichlet_series", abs(fd - series) <= 1e-6, {"t": 0.1, "x": 0.5}, fd, series,
                        tolerance=1e-6))

    big = fd_elliptic_1d(1.0, 1e6, 1e6, 1.0, 801).values
    dr = fd_elliptic_1d(1.0, DIRICHLET, DIRICHLET, 1.0, 801).values
    rel = float(np.max(np.abs(big - dr)) / np.max(np.abs(dr)))
    checks.append(Check("huge_beta_matches_dirichlet", rel <= 1e-4, {"beta": 1e6}, rel, 0.0, tolerance=1e-4))

    # rectangle
    vals = []
    for m in (21, 41, 81, 161):
        sol = fd_parabolic_rect(0.1, [1.0] * 4, lambda X, Y: (1 + np.cos(np.pi * X)) * (1 + 0 * Y), m,
                                0.005 * 20 / (m - 1))
        vals.append(sol.at((0.3, 0.5)))
    p = [self_convergence_order(*vals[i:i + 3]) for i in range(len(vals) - 2)]
    checks.append(Check("parabolic_rect_order", min(p) >= 1.9, {"t": 0.1}, p, 1.9, detail={"values": vals}))

    gx = lambda s: 1.0 + 0.5 * np.cos(np.pi * s)
    hy = lambda s: 2.0 + np.sin(np.pi * s)
    rect = fd_parabolic_rect(0.2, [1.0, 1.0, 0.0, 0.0], lambda X, Y: gx(X) * hy(Y), 81, 1e-3)
    ux = fd_parabolic_1d(0.2, 1.0, 1.0, gx, 81, 1e-3).values
    uy = fd_parabolic_1d(0.2, 0.0, 0.0, hy, 81, 1e-3).values
    err = float(np.max(np.abs(rect.values - np.outer(ux, uy))))
    checks.append(Check("separable_tensor_product", err <= 1e-6, {"t": 0.2}, err, 0.0, tolerance=1e-6))

    rect = fd_parabolic_rect(0.1, [DIRICHLET] * 4, 1.0, 201, 2.5e-4).at((0.5, 0.5))
    one = fd_parabolic_1d(0.1, DIRICHLET, DIRICHLET, 1.0, 201, 2.5e-4).at(0.5)
    checks.append(Check("dirichlet_rect_product", abs(rect - one**2) <= 1e-6, {"t": 0.1}, rect, one**2,
                        tolerance=1e-6))

    rs = np.linspace(0, 1, 11)
    for beta in (1.0, DIRICHLET):
        errs = []
        for m in ms:
            sol = disk_radial_elliptic(1.0, beta, 1.0, m)
            errs.append(float(np.max(np.abs(sol.at_many(rs) - disk_constant_exact(1.0, beta, rs)))))
        order_check(f"disk_radial_order_beta={_plain(beta)}", errs, alpha=1.0, m_nodes=list(ms))
    at0 = [disk_radial_elliptic(1.0, b, 1.0, 401).values[0] for b in (DIRICHLET, 1.0, 0.0)]
    checks.append(Check("disk_ordering", at0[0] < at0[1] < at0[2], {"r": 0.0}, at0, None))

    for x in (0.0, 0.5):
        lt = [fd_local_time_1d(0.05, m, 0.05 * 0.05 * 40 / (m - 1)).at(x) for m in (41, 81, 161, 321)]
        p = [self_convergence_order(*lt[i:i + 3]) for i in range(len(lt) - 2)]
        checks.append(Check(f"local_time_order_x={x}", min(p) >= 1.9, {"t": 0.05, "x": x}, p, 1.9,
                            detail={"values": lt}))
    # total boundary flux is 1, so the integral of E_x[ell_t] over [0, 1] is exactly t
    mass = trapezoid_mean(fd_local_time_1d(0.05, 161, 1e-3))
    checks.append(Check("local_time_mass", abs(mass - 0.05) <= 1e-12, {"t": 0.05}, mass, 0.05,
                        tolerance=1e-12))

    # sandwich / monotonicity / shrinking ladder at oracle level
    ladder = [0.0, 0.5, 1.0, 2.0, DIRICHLET]
    sols = [fd_parabolic_1d(0.25, b, b, 1.0, 201, 1e-3).values for b in ladder]
    mono = all(np.all(sols[i + 1] <= sols[i] + 1e-14) for i in range(len(sols) - 1))
    checks.append(Check("oracle_monotone_ladder", mono, {"ladder": ladder}, mono, True))
    neu = fd_elliptic_1d(1.0, 0.0, 0.0, 1.0, 401).values
    gaps = [float(np.max(neu - fd_elliptic_1d(1.0, 1.0 / k, 1.0 / k, 1.0, 401).values)) for k in (1, 2, 4, 8, 16)]
    ratios = [gaps[i] / gaps[i + 1] for i in range(len(gaps) - 1)]
    ok = all(np.diff(gaps) < 0) and abs(ratios[-1] / 2.0 - 1.0) <= 0.1
    checks.append(Check("oracle_shrinking_ladder", ok, {"k": [1, 2, 4, 8, 16]}, ratios, 2.0, tolerance=0.1,
                        detail={"gaps": gaps}))
    return SuiteReport("oracle", checks, 0, {})


# -- suite registry -----------------------------------------------------------------------

@dataclass(frozen=True)
class Scale:
    """Path counts and steps; ``FULL`` matches the acceptance criteria."""

    n_small: int
    n_mid: int
    n_large: int
    n_revuz: int
    h_oracle: float
    h_resolvent: float
    n_ladder: tuple


FULL = Scale(10_000, 100_000, 200_000, 400_000, 1e-4, 1e-3, (10_000, 100_000, 1_000_000))
QUICK = Scale(2_000, 8_000, 8_000, 40_000, 1e-3, 4e-3, (1_000, 4_000, 16_000))


def suite_conservation(seed, scale_: Scale, threads=1):
    # exact for any step size; a coarse step keeps the run well under a second
    return check_conservation(scale_.n_small, SimConfig(h=1e-2, seed=seed, threads=threads))


def suite_robin_oracle(seed, scale_: Scale, threads=1):
    cfg = SimConfig(h=scale_.h_oracle, seed=seed, threads=threads)
    one = constant(1.0)
    iv = Interval()
    rep = None
    for i, x in enumerate((0.1, 0.5)):
        r = check_oracle_match(iv, RobinMeasure.uniform(iv, 1.0), one, 0.25, x, scale_.n_large,
                               cfg.replace(seed=seed + i))
        rep = r if rep is None else rep.extend(r)
    rc = Rectangle()
    rep.extend(check_oracle_match(rc, RobinMeasure.uniform(rc, 1.0), one, 0.1, (0.5, 0.5), scale_.n_large,
                                  cfg.replace(seed=seed + 2)))
    return rep


def suite_dirichlet(seed, scale_: Scale, threads=1):
    n = 131_072 if scale_ is FULL else scale_.n_mid
    return check_dirichlet(n, SimConfig(seed=seed, threads=threads))


def suite_sandwich(seed, scale_: Scale, threads=1):
    iv = Interval()
    cfg = SimConfig(h=4 * scale_.h_oracle, seed=seed, threads=threads)
    rep = check_sandwich(iv, RobinMeasure.uniform(iv, 1.0), constant(1.0), 0.25, 0.5, scale_.n_small, cfg)
    rep.extend(check_sandwich(iv, RobinMeasure.uniform(iv, 0.0), constant(1.0), 0.25, 0.5, scale_.n_small,
                              cfg.replace(seed=seed + 1), with_oracle=False))
    return rep


def suite_monotone(seed, scale_: Scale, threads=1):
    iv = Interval()
    ladder = [RobinMeasure.uniform(iv, b) for b in (0.0, 0.5, 1.0, 2.0)] + [RobinMeasure.dirichlet(iv)]
    cfg = SimConfig(h=4 * scale_.h_oracle, seed=seed, threads=threads)
    return check_monotone(iv, ladder, constant(1.0), 0.25, 0.5, scale_.n_small, cfg)


def suite_equivalence(seed, scale_: Scale, threads=1):
    cfg = SimConfig(h=1e-3, seed=seed, threads=threads)
    iv = Interval()
    rep = check_estimator_equivalence(iv, RobinMeasure.uniform(iv, 1.0), constant(1.0), 0.25, 0.5,
                                      scale_.n_mid, cfg)
    dk = Disk()
    rep.extend(check_estimator_equivalence(dk, RobinMeasure.uniform(dk, 1.0), radial_quadratic(), 0.25,
                                           (0.3, 0.0), scale_.n_mid, cfg.replace(seed=seed + 2)))
    rep.extend(check_estimator_equivalence(iv, RobinMeasure.neumann(iv), constant(1.0), 0.25, 0.5,
                                           scale_.n_small, cfg.replace(seed=seed + 4)))
    return rep


def suite_resolvent_identity(seed, scale_: Scale, threads=1):
    iv = Interval()
    cfg = SimConfig(h=scale_.h_resolvent, seed=seed, threads=threads)
    rep = check_resolvent_identity(iv, RobinMeasure.uniform(iv, 1.0), constant(1.0), 1.0, 0.5, scale_.n_mid,
                                   cfg, n_ladder=scale_.n_ladder, ladder_h=4e-3)
    rep.extend(check_resolvent_identity(iv, RobinMeasure.neumann(iv), constant(1.0), 1.0, 0.5, scale_.n_small,
                                        cfg.replace(seed=seed + 1), with_allowance=False))
    return rep


def suite_revuz(seed, scale_: Scale, threads=1):
    cfg = SimConfig(seed=seed, threads=threads)
    return check_revuz([Interval(), Rectangle()], 1.0, (4e-3, 2e-3, 1e-3), scale_.n_revuz, cfg)


def suite_mu_convergence(seed, scale_: Scale, threads=1):
    iv = Interval()
    cfg = SimConfig(h=scale_.h_resolvent, seed=seed, threads=threads)
    return check_mu_convergence(iv, RobinMeasure.uniform(iv, 1.0), constant(1.0), 1.0, 0.5, scale_.n_mid, cfg)


def suite_oracle(seed, scale_: Scale, threads=1):
    return check_oracles()


SUITES: dict = {
    "conservation": suite_conservation,
    "robin-oracle": suite_robin_oracle,
    "dirichlet": suite_dirichlet,
    "sandwich": suite_sandwich,
    "monotone": suite_monotone,
    "equivalence": suite_equivalence,
    "resolvent-identity": suite_resolvent_identity,
    "revuz": suite_revuz,
    "mu-convergence": suite_mu_convergence,
    "oracle": suite_oracle,
}


def run_suite(name: str, seed: int = 0, quick: bool = False, threads: int = 1) -> SuiteReport:
    if name not in SUITES:
        raise KeyError(f"unknown suite {name!r}; available: {', '.join(SUITES)}")
    rep = SUITES[name](seed, QUICK if quick else FULL, threads)
    rep.suite = name
    rep.cfg = {**rep.cfg, "scale": "quick" if quick else "full", "suite_seed": seed}
    return rep
