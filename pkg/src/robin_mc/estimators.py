"""Monte Carlo estimators for the weighted semigroup, resolvents and potentials.

All estimators average per-path contributions produced by
:mod:`robin_mc.sampler`.  Absorbed (Dirichlet-killed) paths contribute zero.
The per-path arrays are exposed through the ``*_paths`` helpers so coupled
comparisons can be made path by path.
"""

from __future__ import annotations

import math
from dataclasses import asdict, dataclass, field
from typing import Callable, Optional, Sequence

import numpy as np

from .boundary import RobinMeasure
from .geometry import Domain, Interval
from .sampler import PathResult, SimConfig, run_paths, run_paths_levels


@dataclass(frozen=True)
class TestFunction:
    """A bounded function on the closed domain, evaluated on ``(n, dim)`` arrays."""

    evaluator: Callable
    sup_norm_bound: float
    name: str = "f"
    params: dict = field(default_factory=dict, compare=False)

    __test__ = False  # keep pytest from collecting this class

    def __call__(self, X):
        X = np.asarray(X, dtype=float)
        return np.broadcast_to(np.asarray(self.evaluator(X), dtype=float), X.shape[:1]).astype(float)

    def check_bound(self, domain: Domain, m: int = 64) -> bool:
        """Spot-check ``|f| <= sup_norm_bound`` on a grid over the domain's bounding box."""
        pts = _probe_grid(domain, m)
        return bool(np.all(np.abs(self(pts)) <= self.sup_norm_bound * (1 + 1e-12)))

    def to_config(self) -> dict:
        return {"name": self.name, **self.params}


def _probe_grid(domain, m):
    if isinstance(domain, Interval):
        return np.linspace(domain.a, domain.b, m)[:, None]
    if hasattr(domain, "x0"):
        xs = np.linspace(domain.x0, domain.x1, m)
        ys = np.linspace(domain.y0, domain.y1, m)
    else:
        cx, cy = domain.center
        xs = np.linspace(cx - domain.radius, cx + domain.radius, m)
        ys = np.linspace(cy - domain.radius, cy + domain.radius, m)
    X, Y = np.meshgrid(xs, ys, indexing="ij")
    pts = np.column_stack([X.ravel(), Y.ravel()])
    return pts[domain.signed_distance(pts) >= 0]


# -- built-in test functions ---------------------------------------------------

def constant(value: float = 1.0) -> TestFunction:
    return TestFunction(lambda X: np.full(len(X), float(value)), abs(float(value)),
                        "constant", {"value": float(value)})


def coordinate(axis: int = 0, domain: Optional[Domain] = None) -> TestFunction:
    bound = 1.0 if domain is None else float(np.max(np.abs(_probe_grid(domain, 9)[:, axis])))
    return TestFunction(lambda X: X[:, axis], bound, "coordinate", {"axis": axis})


def sine_product(modes: Sequence[int] = (1,), domain: Optional[Domain] = None) -> TestFunction:
    """``prod_i sin(k_i pi (x_i - lo_i) / L_i)`` on the domain's bounding box."""
    lo, span = _box(domain, len(modes))
    ks = np.asarray(modes, dtype=float)

    def f(X):
        return np.prod(np.sin(ks * np.pi * (X[:, :len(ks)] - lo) / span), axis=1)

    return TestFunction(f, 1.0, "sine_product", {"modes": list(modes)})


def cosine_product(modes: Sequence[int] = (1,), domain: Optional[Domain] = None) -> TestFunction:
    lo, span = _box(domain, len(modes))
    ks = np.asarray(modes, dtype=float)

    def f(X):
        return np.prod(np.cos(ks * np.pi * (X[:, :len(ks)] - lo) / span), axis=1)

    return TestFunction(f, 1.0, "cosine_product", {"modes": list(modes)})


def radial_bump(width: float = 0.5, center=(0.0, 0.0)) -> TestFunction:
    """``exp(-|x - center|^2 / width^2)``."""
    c = np.asarray(center, dtype=float)

    def f(X):
        return np.exp(-np.sum((X - c[:X.shape[1]]) ** 2, axis=1) / width**2)

    return TestFunction(f, 1.0, "radial_bump", {"width": width, "center": list(center)})


def radial_quadratic(radius: float = 1.0, center=(0.0, 0.0)) -> TestFunction:
    """``1 - |x - center|^2 / radius^2``, nonnegative on the disk."""
    c = np.asarray(center, dtype=float)

    def f(X):
        return 1.0 - np.sum((X - c) ** 2, axis=1) / radius**2

    return TestFunction(f, 1.0, "radial_quadratic", {"radius": radius, "center": list(center)})


def _box(domain, k):
    if domain is None or isinstance(domain, Interval):
        lo = np.array([0.0 if domain is None else domain.a] * k)
        span = np.array([1.0 if domain is None else domain.diameter] * k)
    elif hasattr(domain, "x0"):
        lo = np.array([domain.x0, domain.y0])[:k]
        span = np.array([domain.x1 - domain.x0, domain.y1 - domain.y0])[:k]
    else:
        lo = np.asarray(domain.center)[:k] - domain.radius
        span = np.full(k, 2 * domain.radius)
    return lo, span


REGISTRY = {
    "constant": constant,
    "coordinate": coordinate,
    "sine_product": sine_product,
    "cosine_product": cosine_product,
    "radial_bump": radial_bump,
    "radial_quadratic": radial_quadratic,
}


def function_from_config(cfg, domain: Optional[Domain] = None) -> TestFunction:
    """``{"name": "constant", "value": 2}`` or a bare number for a constant."""
    if isinstance(cfg, (int, float)):
        return constant(float(cfg))
    cfg = dict(cfg)
    name = cfg.pop("name")
    if name not in REGISTRY:
        raise ValueError(f"unknown test function {name!r}; available: {sorted(REGISTRY)}")
    if name in ("coordinate", "sine_product", "cosine_product"):
        cfg.setdefault("domain", domain)
    return REGISTRY[name](**cfg)


# -- estimates -------------------------------------------------------------------

@dataclass
class Estimate:
    mean: float
    std_error: float
    n_paths: int
    cfg: dict
    estimator_kind: str
    extra: dict = field(default_factory=dict)

    @classmethod
    def from_samples(cls, samples, cfg: SimConfig, kind: str, **extra) -> "Estimate":
        samples = np.asarray(samples, dtype=float)
        n = len(samples)
        return cls(float(np.mean(samples)), float(np.std(samples, ddof=1) / math.sqrt(n)),
                   n, cfg.to_dict(), kind, extra)

    def to_dict(self) -> dict:
        return asdict(self)


def _check_n(n):
    if n < 2:
        raise ValueError("need at least 2 paths for a standard error")


def _check_point(domain, x):
    x = np.asarray(x, dtype=float).reshape(domain.dim)
    if domain.signed_distance(x[None, :])[0] < -1e-12 * domain.diameter:
        raise ValueError(f"evaluation point {x} lies outside the closed domain")
    return x


def semigroup_paths(domain: Domain, measures: Sequence[RobinMeasure], f: TestFunction, t: float,
                    x, n: int, cfg: SimConfig, *, killed: bool = False, levels: int = 1):
    """Per-path contributions to the weighted semigroup for several coupled measures.

    Returns ``(contrib, results)`` where ``contrib[level]`` has shape
    ``(n, len(measures))``.  With ``killed=True`` the weight ``exp(-A)`` is
    replaced by the indicator ``A < Z`` for an independent ``Exp(1)`` variate.
    """
    _check_n(n)
    if t < 0:
        raise ValueError("t must be nonnegative")
    if t > cfg.T + 1e-12:
        raise ValueError(f"t = {t} exceeds the configured horizon T = {cfg.T}")
    x = _check_point(domain, x)
    results = run_paths_levels(domain, measures, cfg, n, levels=levels, x0=x, t_end=t,
                               aux="exp1" if killed else None)
    out = []
    for res in results:
        fx = f(res.X)[:, None]
        if killed:
            w = (res.A < res.aux[:, None]).astype(float)
        else:
            w = np.exp(-res.A)
        out.append(fx * w * res.alive)
    return out, results


def semigroup_weight(domain, measure, f, t, x, n, cfg) -> Estimate:
    """``E_x[f(X_t) exp(-A_t)]``."""
    contrib, _ = semigroup_paths(domain, [measure], f, t, x, n, cfg)
    return Estimate.from_samples(contrib[0][:, 0], cfg, "weight", t=t, x=np.atleast_1d(x).tolist())


def semigroup_killed(domain, measure, f, t, x, n, cfg) -> Estimate:
    """``E_x[f(X_t); A_t < Z]`` with ``Z ~ Exp(1)`` independent of the path."""
    contrib, _ = semigroup_paths(domain, [measure], f, t, x, n, cfg, killed=True)
    return Estimate.from_samples(contrib[0][:, 0], cfg, "killed", t=t, x=np.atleast_1d(x).tolist())


def dirichlet_paths(domain, f, t, x, n, cfg, levels: int = 1):
    """``f(X_t) 1{path never touched the boundary}``: the Dirichlet semigroup on the same noise."""
    _, results = semigroup_paths(domain, [RobinMeasure.neumann(domain)], f, t, x, n, cfg, levels=levels)
    return [f(r.X) * ~r.touched for r in results], results


def resolvent_paths(domain, measure, f, alpha, x, n, cfg, g: Optional[TestFunction] = None,
                    levels: int = 1):
    """Per-path samples for the resolvent identity, all from one set of paths.

    Each path runs to an independent ``tau ~ Exp(alpha)``.  Returns a list
    (one entry per level) of dicts: ``RA`` = f(X_tau) exp(-A_tau) / alpha,
    ``R`` = f(X_tau) / alpha and, if ``g`` is given,
    ``U`` = sum over steps before tau of g(X) dA.
    """
    contrib, results = resolvent_multi(domain, [measure], f, alpha, x, n, cfg, g=g, levels=levels)
    out = []
    for c, res in zip(contrib, results):
        d = {"RA": c[:, 0], "R": f(res.X) / alpha}
        if g is not None:
            d["U"] = res.acc
        out.append(d)
    return out, results


def resolvent_multi(domain, measures, f, alpha, x, n, cfg, g: Optional[TestFunction] = None,
                    levels: int = 1):
    """Coupled resolvent contributions ``f(X_tau) exp(-A_tau) / alpha`` for several measures.

    Returns ``(contrib, results)`` with ``contrib[level]`` of shape
    ``(n, len(measures))``.  ``g`` (if given) is integrated against ``dA`` of
    the first measure up to ``tau`` and stored in ``results[level].acc``.
    """
    _check_n(n)
    if not alpha > 0:
        raise ValueError("alpha must be positive")
    x = _check_point(domain, x)
    acc = None
    if g is not None:
        def acc(t_after, X, dA, ids):
            return g(X) * dA[:, 0]
    results = run_paths_levels(domain, measures, cfg, n, levels=levels, x0=x, exp_rate=alpha,
                               accumulate=acc)
    contrib = [f(res.X)[:, None] * np.exp(-res.A) * res.alive / alpha for res in results]
    return contrib, results


def resolvent(domain, measure, f, alpha, x, n, cfg) -> Estimate:
    """``E_x[int_0^inf e^{-alpha t} e^{-A_t} f(X_t) dt]`` via an exponential clock.

    With ``tau ~ Exp(alpha)`` independent of the path the integrand collapses
    to ``f(X_tau) exp(-A_tau) / alpha``; no horizon truncation is involved.
    """
    samples, _ = resolvent_paths(domain, measure, f, alpha, x, n, cfg)
    return Estimate.from_samples(samples[0]["RA"], cfg, "weight", alpha=alpha, x=np.atleast_1d(x).tolist())


def potential_U(domain, measure, g: TestFunction, alpha, x, n, cfg, method: str = "horizon") -> Estimate:
    """``E_x[int_0^inf e^{-alpha t} g(X_t) dA_t]``.

    ``method="horizon"`` sums ``exp(-alpha t_k) g(X_k) dA_k`` up to ``cfg.T``
    and reports a bound on the truncated tail;  ``method="exponential"`` sums
    ``g(X_k) dA_k`` up to an independent ``Exp(alpha)`` time (no truncation).
    """
    _check_n(n)
    if not alpha > 0:
        raise ValueError("alpha must be positive")
    x = _check_point(domain, x)
    if method == "exponential":
        samples, _ = resolvent_paths(domain, measure, constant(0.0), alpha, x, n, cfg, g=g)
        return Estimate.from_samples(samples[0]["U"], cfg, "weight", alpha=alpha, method=method,
                                     x=np.atleast_1d(x).tolist())
    if method != "horizon":
        raise ValueError(f"unknown method {method!r}")

    def acc(t_after, X, dA, ids):
        return np.exp(-alpha * t_after) * g(X) * dA[:, 0]

    res = run_paths(domain, [measure], cfg, n, x0=x, t_end=cfg.T, accumulate=acc)
    ell_rate = float(np.mean(res.ell.sum(axis=1))) / cfg.T if cfg.T > 0 else math.inf
    bound = g.sup_norm_bound * measure.sup_beta * ell_rate * math.exp(-alpha * cfg.T) / alpha
    return Estimate.from_samples(res.acc, cfg, "weight", alpha=alpha, method=method,
                                 truncation_bound=bound, x=np.atleast_1d(x).tolist())


def revuz_rate(domain, measure, f: TestFunction, t_small: float, n: int, cfg) -> Estimate:
    """``(1/t) E_m[int_0^t f(X_s) dA_s]`` with ``m`` the uniform law on the domain.

    ``f`` is evaluated at the boundary points where local time accrues.  The
    continuum limit is ``c * int f beta d sigma`` with ``c = 1/2`` for
    Skorohod local time; a discretized path has its own constant.
    """
    _check_n(n)
    if not t_small > 0:
        raise ValueError("t_small must be positive")

    def acc(t_after, X, dA, ids):
        return f(X) * dA[:, 0]

    res = run_paths(domain, [measure], cfg, n, x0=None, t_end=t_small, accumulate=acc)
    # the uniform law has total mass |domain|; normalising by it gives the h = 1 rate per unit volume
    volume = _volume(domain)
    return Estimate.from_samples(res.acc * volume / t_small, cfg, "weight", t_small=t_small)


def _volume(domain) -> float:
    if isinstance(domain, Interval):
        return domain.diameter
    if hasattr(domain, "x0"):
        return (domain.x1 - domain.x0) * (domain.y1 - domain.y0)
    return math.pi * domain.radius**2
