"""Deterministic reference solvers for the half-Laplacian convention.

Every solver works with ``L = 1/2 Lap`` and the boundary condition
``du/dn_out + beta u = 0`` (``u = 0`` on Dirichlet components).  Grids are
node-centred and include the boundary nodes; Robin and Neumann closures use a
ghost node so the schemes stay second order up to the boundary.
"""

from __future__ import annotations

import csv
from dataclasses import dataclass, field
from typing import Sequence, Union

import numpy as np
from scipy.integrate import trapezoid
from scipy.linalg import solve_banded
from scipy.special import i0e, i1e

from .boundary import DIRICHLET, Dirichlet, Neumann, Robin, RobinMeasure

CONVENTION = "half-laplacian"

BC = Union[float, object]  # a nonnegative rate or DIRICHLET


@dataclass
class FdSolution:
    grid: tuple
    values: np.ndarray
    spacing: tuple
    bc: dict
    convention: str = CONVENTION
    meta: dict = field(default_factory=dict)

    def at(self, x) -> float:
        """Value at a point, by (bi)linear interpolation on the grid."""
        x = np.atleast_1d(np.asarray(x, dtype=float))
        if len(self.grid) == 1:
            return float(np.interp(x[0], self.grid[0], self.values))
        from scipy.interpolate import RegularGridInterpolator
        interp = RegularGridInterpolator(self.grid, self.values)
        return float(interp(x[None, :])[0])

    def at_many(self, xs) -> np.ndarray:
        """Values at several 1D points."""
        if len(self.grid) != 1:
            raise NotImplementedError("at_many supports 1D solutions")
        return np.interp(np.asarray(xs, dtype=float), self.grid[0], self.values)

    def to_csv(self, path):
        with open(path, "w", newline="") as fh:
            w = csv.writer(fh, lineterminator="\n")
            if len(self.grid) == 1:
                w.writerow(["x", "value"])
                for xi, v in zip(self.grid[0], self.values):
                    w.writerow([repr(float(xi)), repr(float(v))])
            else:
                w.writerow(["x", "y", "value"])
                for i, xi in enumerate(self.grid[0]):
                    for j, yj in enumerate(self.grid[1]):
                        w.writerow([repr(float(xi)), repr(float(yj)), repr(float(self.values[i, j]))])


def _is_dirichlet(bc) -> bool:
    return bc is DIRICHLET or isinstance(bc, Dirichlet) or (isinstance(bc, str) and bc == "dirichlet")


def _rate(bc) -> float:
    if isinstance(bc, Neumann):
        return 0.0
    if isinstance(bc, Robin):
        if not bc.is_constant:
            raise ValueError("FD oracles need a constant rate per component")
        return bc.beta
    return float(bc)


def _bc_record(beta0, beta1):
    return {0: "dirichlet" if _is_dirichlet(beta0) else _rate(beta0),
            1: "dirichlet" if _is_dirichlet(beta1) else _rate(beta1)}


def _half_laplacian_1d(m: int, length: float, beta0, beta1):
    """Banded form of ``-1/2 d^2/dx^2`` with ghost-node closures.

    Returns ``(lower, diag, upper, dirichlet_rows)``; a Dirichlet row is
    replaced by the identity by the caller.
    """
    dx = length / (m - 1)
    c = 0.5 / dx**2
    diag = np.full(m, 2 * c)
    lower = np.full(m, -c)  # lower[i] couples row i to i-1
    upper = np.full(m, -c)  # upper[i] couples row i to i+1
    lower[0] = 0.0
    upper[-1] = 0.0
    fixed = []
    for end, bc in ((0, beta0), (m - 1, beta1)):
        if _is_dirichlet(bc):
            fixed.append(end)
            continue
        b = _rate(bc)
        # ghost u_{-1} = u_1 - 2 dx b u_0 (and mirrored at the right end)
        diag[end] += 2 * c * dx * b
        if end == 0:
            upper[0] = -2 * c
        else:
            lower[-1] = -2 * c
    return lower, diag, upper, fixed


def _banded(lower, diag, upper):
    ab = np.zeros((3, len(diag)))
    ab[0, 1:] = upper[:-1]
    ab[1] = diag
    ab[2, :-1] = lower[1:]
    return ab


def _apply_tridiag(lower, diag, upper, u):
    if u.ndim == 2:
        lower, diag, upper = lower[:, None], diag[:, None], upper[:, None]
    out = diag * u
    out[1:] += lower[1:] * u[:-1]
    out[:-1] += upper[:-1] * u[1:]
    return out


def _nodes(m, length=1.0):
    if m < 3:
        raise ValueError("need at least 3 nodes")
    return np.linspace(0.0, length, m)


def fd_elliptic_1d(alpha: float, beta0: BC, beta1: BC, f, m_nodes: int, length: float = 1.0) -> FdSolution:
    """Solve ``alpha u - 1/2 u'' = f`` on ``[0, length]``.

    Boundary conditions: ``u'(0) = beta0 u(0)`` and ``-u'(L) = beta1 u(L)``;
    ``DIRICHLET`` gives ``u = 0`` at that end.
    """
    if not alpha > 0:
        raise ValueError("alpha must be positive")
    x = _nodes(m_nodes, length)
    rhs = _eval(f, x)
    lower, diag, upper, fixed = _half_laplacian_1d(m_nodes, length, beta0, beta1)
    diag = diag + alpha
    for i in fixed:
        diag[i], rhs[i] = 1.0, 0.0
        lower[i] = upper[i] = 0.0
    u = solve_banded((1, 1), _banded(lower, diag, upper), rhs)
    u[fixed] = 0.0  # pivoting can leave rounding noise on identity rows
    return FdSolution((x,), u, (x[1] - x[0],), _bc_record(beta0, beta1),
                      meta={"alpha": alpha, "kind": "elliptic"})


def _eval(f, x):
    if callable(f):
        return np.asarray(f(x), dtype=float) * np.ones_like(x)
    return np.full_like(x, float(f))


def _cn_stepper_1d(m, length, beta0, beta1, dt):
    """Return ``advance(u, theta)`` for one theta-scheme step of ``u_t = 1/2 u''``."""
    lower, diag, upper, fixed = _half_laplacian_1d(m, length, beta0, beta1)
    cache = {}

    def advance(u, theta=0.5):
        if theta not in cache:
            lo, di, up = theta * dt * lower, 1 + theta * dt * diag, theta * dt * upper
            for i in fixed:
                di[i], lo[i], up[i] = 1.0, 0.0, 0.0
            cache[theta] = _banded(lo, di, up)
        rhs = u - (1 - theta) * dt * _apply_tridiag(lower, diag, upper, u)
        for i in fixed:
            rhs[i] = 0.0
        out = solve_banded((1, 1), cache[theta], rhs, overwrite_b=True, check_finite=False)
        out[fixed] = 0.0
        return out

    return advance, fixed


def _time_steps(t, dt):
    n = int(np.ceil(t / dt - 1e-9))
    return n, (t / n if n else 0.0)


def fd_parabolic_1d(t: float, beta0: BC, beta1: BC, f_initial, m_nodes: int, dt: float,
                    length: float = 1.0, rannacher: int = 4) -> FdSolution:
    """Crank-Nicolson for ``u_t = 1/2 u''`` with Robin/Neumann/Dirichlet ends.

    The first ``rannacher`` steps are implicit Euler half-steps (the usual
    Rannacher start) to damp the oscillations caused by initial data that do
    not match Dirichlet boundary values.
    """
    if t < 0 or not dt > 0:
        raise ValueError("need t >= 0 and dt > 0")
    x = _nodes(m_nodes, length)
    u = _eval(f_initial, x).copy()
    n, k = _time_steps(t, dt)
    if n:
        advance, fixed = _cn_stepper_1d(m_nodes, length, beta0, beta1, k)
        half, _ = _cn_stepper_1d(m_nodes, length, beta0, beta1, k / 2)
        n_start = min(rannacher // 2, n)
        for _ in range(n_start):
            u = half(half(u, 1.0), 1.0)
        for _ in range(n - n_start):
            u = advance(u)
    return FdSolution((x,), u, (x[1] - x[0],), _bc_record(beta0, beta1),
                      meta={"t": t, "dt": k, "kind": "parabolic"})


def _edge_bcs(measure):
    if isinstance(measure, RobinMeasure):
        specs = measure.components
    else:
        specs = tuple(measure)
    if len(specs) != 4:
        raise ValueError("rectangle needs four edge conditions (x0, x1, y0, y1)")
    return [DIRICHLET if _is_dirichlet(s) else _rate(s) for s in specs]


def fd_parabolic_rect(t: float, measure, f_initial, m_nodes: int, dt: float,
                      width: float = 1.0, height: float = 1.0, rannacher: int = 4) -> FdSolution:
    """Crank-Nicolson on ``[0, width] x [0, height]`` with one condition per edge.

    The two 1D operators act on different axes and commute, so each step is
    applied exactly as an x-sweep followed by a y-sweep.  Edge order follows
    the rectangle component ids: ``x = 0``, ``x = width``, ``y = 0``, ``y = height``.
    """
    b = _edge_bcs(measure)
    x, y = _nodes(m_nodes, width), _nodes(m_nodes, height)
    X, Y = np.meshgrid(x, y, indexing="ij")
    u = (f_initial(X, Y) if callable(f_initial) else np.full_like(X, float(f_initial))) * np.ones_like(X)
    n, k = _time_steps(t, dt)
    if n:
        ax, _ = _cn_stepper_1d(m_nodes, width, b[0], b[1], k)
        ay, _ = _cn_stepper_1d(m_nodes, height, b[2], b[3], k)
        hx, _ = _cn_stepper_1d(m_nodes, width, b[0], b[1], k / 2)
        hy, _ = _cn_stepper_1d(m_nodes, height, b[2], b[3], k / 2)

        n_start = min(rannacher // 2, n)
        for _ in range(n_start):
            for _ in range(2):
                u = _sweep_x(hx, u, 1.0)
                u = _sweep_y(hy, u, 1.0)
        for _ in range(n - n_start):
            u = _sweep_x(ax, u, 0.5)
            u = _sweep_y(ay, u, 0.5)
    bc = {i: ("dirichlet" if _is_dirichlet(v) else v) for i, v in enumerate(b)}
    return FdSolution((x, y), u, (x[1] - x[0], y[1] - y[0]), bc,
                      meta={"t": t, "dt": k, "kind": "parabolic"})


def _sweep_x(stepper, u, theta):
    # the stepper acts on axis 0, treating the other axis as a batch
    return stepper(u, theta)


def _sweep_y(stepper, u, theta):
    return stepper(u.T, theta).T


def disk_radial_elliptic(alpha: float, beta: BC, f, m_nodes: int, radius: float = 1.0) -> FdSolution:
    """Radial solve of ``alpha u - 1/2 (u'' + u'/r) = f`` on the disk.

    Regularity ``u'(0) = 0`` at the centre and ``u'(R) + beta u(R) = 0`` (the
    outward normal is ``+r``); ``DIRICHLET`` gives ``u(R) = 0``.
    """
    if not alpha > 0:
        raise ValueError("alpha must be positive")
    r = _nodes(m_nodes, radius)
    dr = r[1] - r[0]
    m = m_nodes
    rhs = _eval(f, r)
    diag = np.full(m, alpha)
    lower = np.zeros(m)
    upper = np.zeros(m)
    i = np.arange(1, m)
    ri = r[1:]
    # interior: -1/2 [(u+ - 2u + u-)/dr^2 + (u+ - u-)/(2 r dr)]
    diag[1:] += 1.0 / dr**2
    lower[1:] = -0.5 * (1.0 / dr**2 - 1.0 / (2 * ri * dr))
    upper[1:] = -0.5 * (1.0 / dr**2 + 1.0 / (2 * ri * dr))
    # centre: Lap u = 2 u'' with ghost u_{-1} = u_1
    diag[0] += 2.0 / dr**2
    upper[0] = -2.0 / dr**2
    if _is_dirichlet(beta):
        diag[-1], lower[-1], upper[-1], rhs[-1] = 1.0, 0.0, 0.0, 0.0
    else:
        b = _rate(beta)
        # ghost u_m = u_{m-2} - 2 dr b u_{m-1}
        rm = r[-1]
        cp = -0.5 * (1.0 / dr**2 + 1.0 / (2 * rm * dr))
        diag[-1] += cp * (-2 * dr * b)
        lower[-1] += cp
        upper[-1] = 0.0
    u = solve_banded((1, 1), _banded(lower, diag, upper), rhs)
    return FdSolution((r,), u, (dr,), {0: "dirichlet" if _is_dirichlet(beta) else _rate(beta)},
                      meta={"alpha": alpha, "kind": "elliptic-radial"})


def fd_local_time_1d(t: float, m_nodes: int, dt: float, length: float = 1.0) -> FdSolution:
    """``w(t, x) = E_x[ell_t]`` for reflecting Brownian motion on ``[0, length]``.

    ``w`` solves ``w_t = 1/2 w''`` with ``w(0, .) = 0`` and unit inward flux
    at both ends (``w'(0) = -1``, ``w'(L) = 1``); the ghost nodes turn the
    flux into a source ``1 / dx`` on the two boundary rows.
    """
    x = _nodes(m_nodes, length)
    dx = x[1] - x[0]
    lower, diag, upper, _ = _half_laplacian_1d(m_nodes, length, 0.0, 0.0)
    src = np.zeros(m_nodes)
    src[0] = src[-1] = 1.0 / dx
    n, k = _time_steps(t, dt)
    w = np.zeros(m_nodes)
    if n:
        ab = _banded(0.5 * k * lower, 1 + 0.5 * k * diag, 0.5 * k * upper)
        for _ in range(n):
            rhs = w - 0.5 * k * _apply_tridiag(lower, diag, upper, w) + k * src
            w = solve_banded((1, 1), ab, rhs, check_finite=False)
    return FdSolution((x,), w, (dx,), {0: 0.0, 1: 0.0}, meta={"t": t, "dt": k, "kind": "local-time"})


def trapezoid_mean(sol: FdSolution) -> float:
    """Integral of a 1D solution over its grid (trapezoid rule)."""
    return float(trapezoid(sol.values, sol.grid[0]))


# -- closed forms ---------------------------------------------------------------

def dirichlet_survival_series(t: float, x: float, n_terms: int = 2000) -> float:
    """``P_x(BM stays in (0,1) up to t)`` = sum over odd k of 4/(k pi) sin(k pi x) exp(-k^2 pi^2 t / 2)."""
    k = np.arange(1, 2 * n_terms, 2)
    return float(np.sum(4.0 / (k * np.pi) * np.sin(k * np.pi * x) * np.exp(-k**2 * np.pi**2 * t / 2)))


def elliptic_1d_constant_exact(alpha: float, beta, x) -> np.ndarray:
    """Exact solution of ``alpha u - 1/2 u'' = 1`` on [0, 1] with the same rate
    (or Dirichlet) at both ends: ``u = 1/alpha - C cosh(k (x - 1/2))``, ``k = sqrt(2 alpha)``."""
    k = np.sqrt(2 * alpha)
    x = np.asarray(x, dtype=float)
    if _is_dirichlet(beta):
        c = 1.0 / (alpha * np.cosh(k / 2))
    else:
        b = float(beta)
        # u'(0) = b u(0): C k sinh(k/2) = b (1/alpha - C cosh(k/2))
        c = (b / alpha) / (k * np.sinh(k / 2) + b * np.cosh(k / 2))
    return 1.0 / alpha - c * np.cosh(k * (x - 0.5))


def disk_constant_exact(alpha: float, beta, r, radius: float = 1.0) -> np.ndarray:
    """Exact radial solution of ``alpha u - 1/2 Lap u = 1``: ``u = 1/alpha - C I0(k r)``."""
    k = np.sqrt(2 * alpha)
    r = np.asarray(r, dtype=float)
    kr = k * radius
    # I0(k r) / I0(k R) via exponentially scaled Bessels
    if _is_dirichlet(beta):
        ratio = i0e(k * r) / i0e(kr) * np.exp(k * r - kr)
        return 1.0 / alpha * (1.0 - ratio)
    b = float(beta)
    # u'(R) = -b u(R): -C k I1(kR) = -b (1/alpha - C I0(kR))
    denom = k * i1e(kr) + b * i0e(kr)
    ratio = i0e(k * r) * np.exp(k * r - kr) / denom
    return 1.0 / alpha - (b / alpha) * ratio


def observed_order(errors: Sequence[float], ratio: float = 2.0) -> np.ndarray:
    """Observed convergence orders between successive refinements."""
    e = np.asarray(errors, dtype=float)
    return np.log(e[:-1] / e[1:]) / np.log(ratio)


def self_convergence_order(coarse: float, mid: float, fine: float, ratio: float = 2.0) -> float:
    """Order from three solutions on grids refined by ``ratio`` (no exact solution needed)."""
    return float(np.log(abs(coarse - mid) / abs(mid - fine)) / np.log(ratio))


def compare(sol_a: FdSolution, sol_b: FdSolution) -> float:
    """Max-norm difference of two solutions on the coarser grid (linear interpolation)."""
    if sol_a.convention != sol_b.convention:
        raise ValueError(f"convention mismatch: {sol_a.convention} vs {sol_b.convention}")
    if len(sol_a.grid) != 1:
        raise NotImplementedError("compare supports 1D solutions")
    coarse, fine = sorted((sol_a, sol_b), key=lambda s: len(s.grid[0]))
    vf = np.interp(coarse.grid[0], fine.grid[0], fine.values)
    return float(np.max(np.abs(coarse.values - vf)))
