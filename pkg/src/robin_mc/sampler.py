"""Reflecting Brownian motion with boundary local time and the functional A.

Convention: the driving noise is standard Brownian motion (variance ``h`` per
coordinate per step), so the weighted semigroup solves ``u_t = 1/2 Lap u``
with ``du/dn_out + beta u = 0``.  The local time ``ell`` is the accumulated
Skorohod push (the overshoot removed by the projection step), and
``A = sum beta(hit point) * d ell``.

Two schemes are available:

``projection``
    Euler step then nearest-point projection (discrete Skorohod map).
``occupation``
    Euler step then mirror reflection; local time is estimated from the time
    spent within ``eps`` of the boundary, ``d ell = dt / (2 eps)``.

Randomness: paths are grouped in fixed blocks of ``BLOCK_SIZE``; block ``b``
draws from ``SeedSequence(seed, spawn_key=(b, stream))`` with separate
streams for the Gaussian increments, the auxiliary variates (exponential
clocks, kill thresholds), bridge uniforms and start points.  Results are
therefore identical for any worker count.
"""

from __future__ import annotations

import csv
import math
from concurrent.futures import ThreadPoolExecutor
from dataclasses import asdict, dataclass, field
from typing import Callable, Optional, Sequence

import numpy as np

from .boundary import RobinMeasure
from .geometry import Domain

BLOCK_SIZE = 65536

NOISE, AUX, BRIDGE, START = 0, 1, 2, 3

SCHEMES = ("projection", "occupation")


@dataclass(frozen=True)
class SimConfig:
    h: float = 1e-4
    scheme: str = "projection"
    eps: Optional[float] = None
    bridge_correction: bool = False
    T: float = 1.0
    seed: int = 0
    threads: int = 1

    def __post_init__(self):
        if not self.h > 0:
            raise ValueError("time step h must be positive")
        if self.scheme not in SCHEMES:
            raise ValueError(f"unknown scheme {self.scheme!r}; choose from {SCHEMES}")
        if self.scheme == "occupation" and not (self.eps and self.eps > 0):
            raise ValueError("occupation scheme needs eps > 0")
        if self.T < 0:
            raise ValueError("horizon T must be nonnegative")
        if self.seed < 0 or self.seed >= 2**64:
            raise ValueError("seed must be a 64-bit unsigned integer")

    def replace(self, **kw) -> "SimConfig":
        d = asdict(self)
        d.update(kw)
        return SimConfig(**d)

    def to_dict(self) -> dict:
        return asdict(self)


def block_rng(seed: int, block: int, stream: int) -> np.random.Generator:
    return np.random.Generator(np.random.PCG64(np.random.SeedSequence(seed, spawn_key=(block, stream))))


def bridge_exit_probability(d_start, d_end, h):
    """Probability that a Brownian bridge of duration ``h`` between two points at
    distances ``d_start``, ``d_end`` from a flat boundary crosses it."""
    d_start = np.maximum(np.asarray(d_start, dtype=float), 0.0)
    d_end = np.maximum(np.asarray(d_end, dtype=float), 0.0)
    h = np.asarray(h, dtype=float)
    with np.errstate(divide="ignore", invalid="ignore"):
        p = np.exp(-2.0 * d_start * d_end / h)
    p = np.where(h > 0, p, np.where(d_start * d_end > 0, 0.0, 1.0))
    return float(p) if p.ndim == 0 else p


# -- single steps -------------------------------------------------------------

def step_project(domain: Domain, x, dW):
    """One discrete Skorohod step: ``Y = x + dW``; project back if ``Y`` left the domain.

    Returns ``(X_new, d_ell, component)`` with component ``-1`` when no push
    happened.  Accepts one point or a batch.
    """
    single = np.ndim(x) == 0 or (np.ndim(x) == 1 and domain.dim > 1)
    X = np.asarray(x, dtype=float).reshape(-1, domain.dim)
    Y = X + np.asarray(dW, dtype=float).reshape(-1, domain.dim)
    sd = domain.signed_distance(Y)
    out = sd < 0
    Xn = Y.copy()
    dl = np.zeros(len(Y))
    comp = np.full(len(Y), -1)
    if np.any(out):
        P, c, _ = domain.project_many(Y[out])
        Xn[out] = P
        dl[out] = -sd[out]
        comp[out] = c
    if single:
        return (Xn[0] if domain.dim > 1 else float(Xn[0, 0])), float(dl[0]), int(comp[0])
    return Xn, dl, comp


def _mirror(domain: Domain, Y, sd):
    out = sd < 0
    Xn = Y.copy()
    comp = np.full(len(Y), -1)
    hit = np.zeros_like(Y)
    if np.any(out):
        P, c, _ = domain.project_many(Y[out])
        R = 2.0 * P - Y[out]
        # a mirror image can still be outside after a huge step
        still = domain.signed_distance(R) < 0
        if np.any(still):
            R[still] = domain.project_many(R[still])[0]
        Xn[out] = R
        comp[out] = c
        hit[out] = P
    return Xn, out, comp, hit


def step_occupation(domain: Domain, x, dW, eps: float, h: float):
    """Mirror-reflected Euler step with occupation-density local time.

    ``d_ell = h / (2 eps)`` whenever the new point lies within ``eps`` of the
    boundary, attributed to the nearest component.
    """
    single = np.ndim(x) == 0 or (np.ndim(x) == 1 and domain.dim > 1)
    X = np.asarray(x, dtype=float).reshape(-1, domain.dim)
    Y = X + np.asarray(dW, dtype=float).reshape(-1, domain.dim)
    Xn, _, _, _ = _mirror(domain, Y, domain.signed_distance(Y))
    dl, comp = _occupation_increment(domain, Xn, np.broadcast_to(np.asarray(h, float), len(Xn)), eps)
    if single:
        return (Xn[0] if domain.dim > 1 else float(Xn[0, 0])), float(dl[0]), int(comp[0])
    return Xn, dl, comp


def _occupation_increment(domain, Xn, dt, eps):
    band = domain.signed_distance(Xn) < eps
    dl = np.where(band, dt / (2.0 * eps), 0.0)
    comp = np.full(len(Xn), -1)
    if np.any(band):
        comp[band] = domain.project_many(Xn[band])[1]
    return dl, comp


# -- batched path engine -------------------------------------------------------

class PathBatch:
    """State of a batch of coupled paths, one functional ``A`` per measure.

    Positions and local times do not depend on the measures; each measure only
    changes its own ``A`` column and alive flag, so every measure in the batch
    sees the same noise.
    """

    def __init__(self, domain: Domain, measures: Sequence[RobinMeasure], x0, cfg: SimConfig):
        for m in measures:
            m.check_domain(domain)
        self.domain = domain
        self.measures = list(measures)
        self.cfg = cfg
        X = np.asarray(x0, dtype=float).reshape(-1, domain.dim)
        if np.any(domain.signed_distance(X) < -1e-12 * domain.diameter):
            raise ValueError("starting point outside the closed domain")
        n, m = len(X), len(self.measures)
        self.X = X.copy()
        self.x0 = X.copy()
        self.t = np.zeros(n)
        self.ell = np.zeros((n, domain.n_components))
        self.A = np.zeros((n, m))
        self.alive = np.ones((n, m), dtype=bool)
        self.touched = np.zeros(n, dtype=bool)
        self.noise = np.zeros((n, domain.dim))
        self.push = np.zeros((n, domain.dim))
        self._dmask = [meas.dirichlet_mask for meas in self.measures]
        self._null = [meas.is_null and not meas.has_dirichlet for meas in self.measures]
        # paths starting on a Dirichlet component are dead at t = 0
        on_bdry = domain.signed_distance(X) <= 0
        if np.any(on_bdry) and any(d.any() for d in self._dmask):
            _, comp, _ = domain.project_many(X[on_bdry])
            rows = np.flatnonzero(on_bdry)
            for j, meas in enumerate(self.measures):
                _, dirich = meas.beta_values(domain, X[on_bdry], comp)
                self.alive[rows[dirich], j] = False

    def __len__(self):
        return len(self.X)

    def step(self, dW, dt, u_bridge=None):
        """Advance every path by its own ``dt`` using increments ``dW``.

        Returns ``(rows, dA)``: the rows that accumulated local time in this
        step and the per-measure increments of ``A`` on those rows.
        """
        domain = self.domain
        X = self.X
        Y = X + dW
        self.noise += dW
        sd = domain.signed_distance(Y)
        if self.cfg.scheme == "projection":
            out = sd < 0
            Xn = Y
            rows = np.flatnonzero(out)
            if len(rows):
                P, comp, _ = domain.project_many(Y[rows])
                dl = -sd[rows]
                self.push[rows] += P - Y[rows]
                Xn[rows] = P
                hit, exit_comp = P, comp
        else:
            Xn, out, exit_c, hit_all = _mirror(domain, Y, sd)
            self.push += Xn - Y
            dl_all, comp_all = _occupation_increment(domain, Xn, dt, self.cfg.eps)
            rows = np.flatnonzero(dl_all > 0)
            dl, comp = dl_all[rows], comp_all[rows]
            hit = Xn[rows]
            exit_rows = np.flatnonzero(out)
            exit_comp = exit_c[exit_rows]
        dA = np.zeros((len(rows), len(self.measures)))
        if len(rows):
            np.add.at(self.ell, (rows, comp), dl)
            self.touched[rows] = True
            for j, meas in enumerate(self.measures):
                if self._null[j]:
                    continue
                beta, dirich = meas.beta_values(domain, hit, comp)
                live = self.alive[rows, j]
                inc = np.where(live & ~dirich, beta * dl, 0.0)
                dA[:, j] = inc
                self.A[rows, j] += inc
                if self.cfg.scheme == "projection":
                    kill = rows[live & dirich]
                    self.alive[kill, j] = False
        if self.cfg.scheme == "occupation" and len(exit_rows):
            self.touched[exit_rows] = True
            for j, meas in enumerate(self.measures):
                if not self._dmask[j].any():
                    continue
                _, dirich = meas.beta_values(domain, hit_all[exit_rows], exit_comp)
                self.alive[exit_rows[dirich], j] = False
        if self.cfg.bridge_correction:
            self._bridge(X, Xn, out, dt, u_bridge)
        self.X = Xn
        self.t += dt
        return rows, dA

    def _bridge(self, X, Xn, out, dt, u):
        """Kill / flag paths whose interpolating bridge may have touched the boundary."""
        dtb = np.broadcast_to(dt, len(X))
        interior = ~out & (dtb > 0)
        # every component distance is at least the signed distance, so rows with
        # 2 d0 d1 / dt > 40 have p < 1e-17 on all components; 1 - p rounds to 1
        # and such rows can never be flagged.  Skipping them changes nothing.
        near = self.domain.signed_distance(X) * self.domain.signed_distance(Xn) < 20.0 * dtb
        interior &= near
        if not np.any(interior):
            return
        d0 = self.domain.component_distances(X[interior])
        d1 = self.domain.component_distances(Xn[interior])
        dti = np.broadcast_to(dt, len(X))[interior]
        p = bridge_exit_probability(d0, d1, dti[:, None])
        ui = u[interior]
        rows = np.flatnonzero(interior)
        miss_all = np.prod(1.0 - p, axis=1)
        self.touched[rows[ui < 1.0 - miss_all]] = True
        for j, dmask in enumerate(self._dmask):
            if not dmask.any():
                continue
            miss = np.prod(1.0 - p[:, dmask], axis=1)
            self.alive[rows[ui < 1.0 - miss], j] = False

    def take(self, sel) -> "PathBatch":
        """A new batch holding the selected rows (used to drop finished paths)."""
        new = object.__new__(PathBatch)
        new.__dict__.update(self.__dict__)
        for name in ("X", "x0", "t", "ell", "A", "alive", "touched", "noise", "push"):
            setattr(new, name, getattr(self, name)[sel])
        return new


@dataclass
class PathResult:
    """Terminal state of every path of a batched run, in path order."""

    X: np.ndarray
    x0: np.ndarray
    t: np.ndarray
    ell: np.ndarray
    A: np.ndarray
    alive: np.ndarray
    touched: np.ndarray
    noise: np.ndarray
    push: np.ndarray
    h: float = 0.0
    aux: Optional[np.ndarray] = None
    acc: Optional[np.ndarray] = None
    n_steps: int = 0


_STATE = ("X", "x0", "t", "ell", "A", "alive", "touched", "noise", "push")

REFINE = 4


def _block_sizes(n: int):
    sizes = [BLOCK_SIZE] * (n // BLOCK_SIZE)
    if n % BLOCK_SIZE:
        sizes.append(n % BLOCK_SIZE)
    return sizes


def run_paths(domain, measures, cfg, n, **kw) -> PathResult:
    """Simulate ``n`` independent paths and return their terminal states.

    See :func:`run_paths_levels` for the keyword arguments.
    """
    return run_paths_levels(domain, measures, cfg, n, levels=1, **kw)[0]


def run_paths_levels(
    domain: Domain,
    measures: Sequence[RobinMeasure],
    cfg: SimConfig,
    n: int,
    *,
    levels: int = 1,
    x0=None,
    t_end: Optional[float] = None,
    exp_rate: Optional[float] = None,
    aux: Optional[str] = None,
    accumulate: Optional[Callable] = None,
    threads: Optional[int] = None,
) -> list:
    """Simulate ``n`` paths at step sizes ``h, h/4, ..., h/4**(levels-1)``.

    All levels are driven by the same Brownian path: the finest increments
    are drawn and summed in groups of four for each coarser level.  With
    ``levels=1`` this is a plain run at step ``h``.

    Exactly one of ``t_end`` (common terminal time) or ``exp_rate`` (each path
    stops at its own ``Exp(exp_rate)`` time, stored in ``aux``) must be given.
    ``x0`` is a starting point or ``None`` for uniform starts in the domain.
    ``aux='exp1'`` draws one ``Exp(1)`` variate per path (the killing threshold).
    ``accumulate(t_after, X_rows, dA_rows, path_ids)`` returns per-row values
    summed into ``acc`` at every step where local time accrues.
    """
    if (t_end is None) == (exp_rate is None):
        raise ValueError("give exactly one of t_end, exp_rate")
    if n < 1:
        raise ValueError("need at least one path")
    threads = threads or cfg.threads or 1
    sizes = _block_sizes(n)

    def one_block(b):
        return _run_block(domain, measures, cfg, b, sizes[b], levels, x0, t_end, exp_rate, aux, accumulate)

    if threads > 1 and len(sizes) > 1:
        with ThreadPoolExecutor(max_workers=threads) as pool:
            parts = list(pool.map(one_block, range(len(sizes))))
    else:
        parts = [one_block(b) for b in range(len(sizes))]
    results = []
    for lvl in range(levels):
        fields = {name: np.concatenate([p[lvl][name] for p in parts]) for name in _STATE}
        res = PathResult(**fields, h=cfg.h / REFINE**lvl,
                         n_steps=max(p[lvl]["n_steps"] for p in parts))
        if "aux" in parts[0][lvl]:
            res.aux = np.concatenate([p[lvl]["aux"] for p in parts])
        if accumulate is not None:
            res.acc = np.concatenate([p[lvl]["acc"] for p in parts])
        results.append(res)
    return results


def _run_block(domain, measures, cfg, b, size, levels, x0, t_end, exp_rate, aux, accumulate):
    noise_rng = block_rng(cfg.seed, b, NOISE)
    aux_rng = block_rng(cfg.seed, b, AUX)
    if cfg.bridge_correction:
        bridge_rngs = [block_rng(cfg.seed, b, BRIDGE + 10 * lvl) for lvl in range(levels)]
    else:
        bridge_rngs = [None] * levels
    if x0 is None:
        starts = domain.sample_uniform(block_rng(cfg.seed, b, START), size)
    else:
        starts = np.broadcast_to(np.asarray(x0, dtype=float).reshape(1, domain.dim), (size, domain.dim))
    batches = [PathBatch(domain, measures, starts, cfg) for _ in range(levels)]
    extra = {}
    if aux == "exp1":
        extra["aux"] = aux_rng.exponential(1.0, size)
    if exp_rate is not None:
        ends = aux_rng.exponential(1.0 / exp_rate, size)
        extra["aux"] = ends
    else:
        ends = None
    accs = [np.zeros(size) for _ in range(levels)]
    ids = np.arange(size)
    ends_act = ends
    finals = [{name: np.empty_like(getattr(batches[0], name)) for name in _STATE} for _ in range(levels)]
    n_sub = REFINE ** (levels - 1)
    h = cfg.h
    n_steps = 0
    tol = 1e-12 * max(h, 1.0)
    schedule = iter(step_schedule(float(t_end), h)) if ends is None else None
    while len(ids):
        if schedule is not None:
            dt = next(schedule, None)
            if dt is None:
                break
            scale = math.sqrt(dt / n_sub)
        else:
            remaining = ends_act - batches[0].t
            done = remaining <= tol
            n_done = int(np.count_nonzero(done))
            # finished paths idle with dt = 0 until enough of them pile up
            if n_done == len(ids) or n_done > max(64, len(ids) // 8):
                keep = ~done
                for lvl in range(levels):
                    for name in _STATE:
                        finals[lvl][name][ids[done]] = getattr(batches[lvl], name)[done]
                    batches[lvl] = batches[lvl].take(keep)
                ids, remaining, ends_act = ids[keep], remaining[keep], ends_act[keep]
                if not len(ids):
                    break
            dt = np.clip(remaining, 0.0, h)
            scale = np.sqrt(dt / n_sub)[:, None]
        k = len(ids)
        if n_sub == 1:
            fine = noise_rng.standard_normal((1, k, domain.dim))
        else:
            fine = noise_rng.standard_normal((n_sub, k, domain.dim))
        fine *= scale
        for lvl in range(levels):
            group = REFINE ** (levels - 1 - lvl)
            sub_dt = dt / (n_sub // group)
            incs = fine.reshape(n_sub // group, group, k, domain.dim).sum(axis=1) if group > 1 else fine
            batch = batches[lvl]
            for dW in incs:
                u = bridge_rngs[lvl].random(k) if bridge_rngs[lvl] is not None else None
                rows, dA = batch.step(dW, sub_dt, u)
                if accumulate is not None and len(rows):
                    accs[lvl][ids[rows]] += accumulate(batch.t[rows], batch.X[rows], dA, ids[rows])
        n_steps += 1
    out = []
    for lvl in range(levels):
        if schedule is not None:
            final = {name: getattr(batches[lvl], name) for name in _STATE}
        else:
            final = finals[lvl]
        final.update(extra)
        final["acc"] = accs[lvl]
        final["n_steps"] = n_steps * REFINE**lvl
        out.append(final)
    return out


def step_schedule(t_end: float, h: float) -> list:
    """Steps of size ``h`` covering ``[0, t_end]``, with a shorter last step if needed."""
    n_full = int(math.floor(t_end / h + 1e-9))
    dts = [h] * n_full
    rest = t_end - n_full * h
    if rest > 1e-9 * h:
        dts.append(rest)
    return dts


# -- single traces --------------------------------------------------------------

@dataclass
class Trace:
    """Recorded path: one row per observation time."""

    t: np.ndarray
    X: np.ndarray
    ell: np.ndarray
    A: np.ndarray
    alive: np.ndarray
    noise: np.ndarray
    push: np.ndarray
    x0: np.ndarray = field(default=None)

    def to_csv(self, path):
        dim = self.X.shape[1]
        nc = self.ell.shape[1]
        with open(path, "w", newline="") as fh:
            w = csv.writer(fh, lineterminator="\n")
            w.writerow(["t"] + [f"x{i}" for i in range(dim)] + [f"ell_{k}" for k in range(nc)]
                       + ["A", "alive"])
            for i in range(len(self.t)):
                w.writerow([repr(float(self.t[i]))] + [repr(float(v)) for v in self.X[i]]
                           + [repr(float(v)) for v in self.ell[i]]
                           + [repr(float(self.A[i])), int(self.alive[i])])


def simulate(domain: Domain, measure: RobinMeasure, x0, cfg: SimConfig,
             rng: Optional[np.random.Generator] = None) -> Trace:
    """Simulate one path on ``[0, cfg.T]``, recording every step.

    On contact with a Dirichlet component the path is absorbed: ``alive``
    turns false and the whole state is frozen for the rest of the trace.
    """
    if rng is None:
        rng = np.random.default_rng(cfg.seed)
    batch = PathBatch(domain, [measure], np.asarray(x0, dtype=float).reshape(1, domain.dim), cfg)
    dts = step_schedule(cfg.T, cfg.h)
    rows = [_snapshot(batch)]
    frozen = not batch.alive[0, 0]
    for dt in dts:
        if frozen:
            snap = dict(rows[-1])
            snap["t"] = snap["t"] + dt
            rows.append(snap)
            continue
        dW = rng.standard_normal((1, domain.dim)) * math.sqrt(dt)
        u = rng.random(1) if cfg.bridge_correction else None
        batch.step(dW, dt, u)
        rows.append(_snapshot(batch))
        frozen = not batch.alive[0, 0]
    return Trace(
        t=np.array([r["t"] for r in rows]),
        X=np.array([r["X"] for r in rows]),
        ell=np.array([r["ell"] for r in rows]),
        A=np.array([r["A"] for r in rows]),
        alive=np.array([r["alive"] for r in rows]),
        noise=np.array([r["noise"] for r in rows]),
        push=np.array([r["push"] for r in rows]),
        x0=batch.x0[0].copy(),
    )


def _snapshot(batch):
    return {"t": float(batch.t[0]), "X": batch.X[0].copy(), "ell": batch.ell[0].copy(),
            "A": float(batch.A[0, 0]), "alive": bool(batch.alive[0, 0]),
            "noise": batch.noise[0].copy(), "push": batch.push[0].copy()}


def kill_time(trace, Z: float) -> float:
    """First time the functional ``A`` reaches ``Z`` (linear interpolation
    within a step); ``inf`` if it never does.

    ``trace`` is a :class:`Trace` or a pair ``(times, A_values)``.
    """
    if Z <= 0:
        raise ValueError("threshold Z must be positive")
    if isinstance(trace, Trace):
        t, A = trace.t, trace.A
    else:
        t, A = (np.asarray(v, dtype=float) for v in trace)
    idx = np.flatnonzero(A >= Z)
    if not len(idx):
        return math.inf
    k = int(idx[0])
    if k == 0:
        return float(t[0])
    a0, a1 = A[k - 1], A[k]
    frac = (Z - a0) / (a1 - a0)
    return float(t[k - 1] + frac * (t[k] - t[k - 1]))
