"""Boundary measures ``mu = beta * sigma`` with Neumann and Dirichlet regimes.

Each boundary component carries one of three specs:

* ``Neumann()``            -- mu = 0 on the component;
* ``Robin(beta)``          -- mu = beta * sigma, beta a constant or a
  piecewise-constant function of the component's boundary parameter;
* ``Dirichlet()``          -- mu locally infinite on the component; a path is
  killed on contact.

The boundary parameter is arc length for the disk, the offset along the edge
for rectangle edges, and ignored (always 0) for interval endpoints.
"""

from __future__ import annotations

from dataclasses import dataclass, field
from typing import Sequence, Union

import numpy as np

from .geometry import BoundaryPoint, Domain


class _DirichletFlag:
    def __repr__(self):
        return "DIRICHLET"

    def __reduce__(self):
        return "DIRICHLET"


DIRICHLET = _DirichletFlag()


@dataclass(frozen=True)
class Neumann:
    pass


@dataclass(frozen=True)
class Dirichlet:
    pass


@dataclass(frozen=True)
class Robin:
    """Rate ``beta`` on one component.

    ``beta`` is either a float or a sequence of ``(s_i, value_i)`` breakpoints;
    the value ``value_i`` applies on ``[s_i, s_{i+1})`` and the last one extends
    to the end of the component.  The first breakpoint must be at 0.
    """

    beta: Union[float, tuple] = 1.0
    _starts: np.ndarray = field(init=False, repr=False, compare=False)
    _values: np.ndarray = field(init=False, repr=False, compare=False)

    def __post_init__(self):
        if np.isscalar(self.beta):
            starts, values = np.array([0.0]), np.array([float(self.beta)])
            object.__setattr__(self, "beta", float(self.beta))
        else:
            pieces = tuple((float(s), float(v)) for s, v in self.beta)
            if not pieces:
                raise ValueError("piecewise beta needs at least one piece")
            starts = np.array([s for s, _ in pieces])
            values = np.array([v for _, v in pieces])
            if starts[0] != 0.0 or np.any(np.diff(starts) <= 0):
                raise ValueError("breakpoints must start at 0 and increase strictly")
            object.__setattr__(self, "beta", pieces)
        if np.any(values < 0) or not np.all(np.isfinite(values)):
            raise ValueError("beta must be finite and nonnegative")
        object.__setattr__(self, "_starts", starts)
        object.__setattr__(self, "_values", values)

    @property
    def is_constant(self) -> bool:
        return isinstance(self.beta, float)

    @property
    def sup(self) -> float:
        return float(self._values.max())

    def values_at(self, s, length=np.inf):
        s = np.asarray(s, dtype=float)
        if np.any(s < 0) or np.any(s > length):
            raise ValueError("boundary parameter outside component range")
        idx = np.searchsorted(self._starts, s, side="right") - 1
        return self._values[idx]

    def scaled(self, c: float) -> "Robin":
        if self.is_constant:
            return Robin(c * self.beta)
        return Robin(tuple((s, c * v) for s, v in self.beta))


ComponentSpec = Union[Neumann, Robin, Dirichlet]


@dataclass(frozen=True)
class RobinMeasure:
    components: tuple

    def __post_init__(self):
        object.__setattr__(self, "components", tuple(self.components))
        for spec in self.components:
            if not isinstance(spec, (Neumann, Robin, Dirichlet)):
                raise TypeError(f"bad component spec {spec!r}")

    @classmethod
    def uniform(cls, domain: Domain, spec) -> "RobinMeasure":
        """Same spec on every component; a float means ``Robin(beta)``."""
        if not isinstance(spec, (Neumann, Robin, Dirichlet)):
            spec = Robin(float(spec)) if spec is not DIRICHLET else Dirichlet()
        return cls((spec,) * domain.n_components)

    @classmethod
    def neumann(cls, domain: Domain) -> "RobinMeasure":
        return cls((Neumann(),) * domain.n_components)

    @classmethod
    def dirichlet(cls, domain: Domain) -> "RobinMeasure":
        return cls((Dirichlet(),) * domain.n_components)

    @property
    def n_components(self) -> int:
        return len(self.components)

    @property
    def dirichlet_mask(self) -> np.ndarray:
        return np.array([isinstance(c, Dirichlet) for c in self.components])

    @property
    def has_dirichlet(self) -> bool:
        return bool(self.dirichlet_mask.any())

    @property
    def is_null(self) -> bool:
        """True when mu = 0 (every component Neumann or Robin with beta = 0)."""
        return all(isinstance(c, Neumann) or (isinstance(c, Robin) and c.sup == 0.0)
                   for c in self.components)

    @property
    def sup_beta(self) -> float:
        finite = [c.sup for c in self.components if isinstance(c, Robin)]
        return max(finite, default=0.0)

    def check_domain(self, domain: Domain):
        if self.n_components != domain.n_components:
            raise ValueError(f"measure has {self.n_components} components, "
                             f"{type(domain).__name__} has {domain.n_components}")

    def beta_values(self, domain: Domain, positions, comps):
        """Vectorized rate lookup at boundary points.

        Returns ``(beta, dirichlet)``: finite rates (0 where Dirichlet) and a
        boolean mask of points lying on Dirichlet components.
        """
        comps = np.asarray(comps)
        beta = np.zeros(len(comps))
        dirichlet = np.zeros(len(comps), dtype=bool)
        for cid, spec in enumerate(self.components):
            sel = comps == cid
            if not np.any(sel):
                continue
            if isinstance(spec, Dirichlet):
                dirichlet[sel] = True
            elif isinstance(spec, Robin):
                if spec.is_constant:
                    beta[sel] = spec.beta
                else:
                    s = domain.boundary_parameter(np.asarray(positions)[sel], comps[sel])
                    beta[sel] = spec.values_at(s, domain.component_length(cid) * (1 + 1e-12))
        return beta, dirichlet

    def integral(self, domain: Domain) -> float:
        """Total mass mu(boundary) for a measure without Dirichlet components."""
        if self.has_dirichlet:
            return np.inf
        total = 0.0
        for cid, spec in enumerate(self.components):
            if not isinstance(spec, Robin):
                continue
            length = domain.component_length(cid)
            if spec.is_constant or domain.dim == 1:
                total += spec._values[0] * length
            else:
                ends = np.append(spec._starts, length)
                total += float(np.sum(spec._values * np.clip(np.diff(ends), 0, None)))
        return total

    def to_config(self) -> list:
        out = []
        for spec in self.components:
            if isinstance(spec, Neumann):
                out.append({"type": "neumann"})
            elif isinstance(spec, Dirichlet):
                out.append({"type": "dirichlet"})
            else:
                beta = spec.beta if spec.is_constant else [list(p) for p in spec.beta]
                out.append({"type": "robin", "beta": beta})
        return out


def beta_at(measure: RobinMeasure, bp: BoundaryPoint, domain: Domain = None):
    """Rate at one boundary point, or ``DIRICHLET`` on a Dirichlet component.

    ``domain`` is only needed for piecewise rates (to map the point to its
    boundary parameter).
    """
    spec = measure.components[bp.component_id]
    if isinstance(spec, Dirichlet):
        return DIRICHLET
    if isinstance(spec, Neumann):
        return 0.0
    if spec.is_constant:
        return spec.beta
    if domain is None:
        raise ValueError("piecewise beta needs the domain to locate the point")
    s = domain.boundary_parameter(np.asarray(bp.position)[None], np.array([bp.component_id]))
    return float(spec.values_at(s, domain.component_length(bp.component_id) * (1 + 1e-12))[0])


def scale(measure: RobinMeasure, c: float) -> RobinMeasure:
    """Multiply every finite rate by ``c >= 0``; ``c = 0`` gives all-Neumann.

    Dirichlet components stay Dirichlet for ``c > 0``.
    """
    if c < 0:
        raise ValueError("scale factor must be nonnegative")
    comps = []
    for spec in measure.components:
        if isinstance(spec, Robin):
            comps.append(Neumann() if c == 0 else spec.scaled(c))
        elif isinstance(spec, Dirichlet) and c == 0:
            comps.append(Neumann())
        else:
            comps.append(spec)
    return RobinMeasure(tuple(comps))


def measure_from_config(domain: Domain, cfg: Union[list, dict, float, str]) -> RobinMeasure:
    """Build a measure from config.

    Accepts a per-component list of ``{"type": ..., "beta": ...}`` dicts, a
    single such dict (applied to every component), a bare number (constant
    Robin rate everywhere), or the strings ``"neumann"`` / ``"dirichlet"``.
    """
    if isinstance(cfg, (int, float)):
        return RobinMeasure.uniform(domain, Robin(float(cfg)))
    if isinstance(cfg, str):
        cfg = {"type": cfg}
    if isinstance(cfg, dict):
        cfg = [cfg] * domain.n_components
    if len(cfg) != domain.n_components:
        raise ValueError(f"expected {domain.n_components} boundary specs, got {len(cfg)}")
    comps = []
    for item in cfg:
        kind = item["type"]
        if kind == "neumann":
            comps.append(Neumann())
        elif kind == "dirichlet":
            comps.append(Dirichlet())
        elif kind == "robin":
            beta = item["beta"]
            comps.append(Robin(float(beta) if np.isscalar(beta) else tuple(map(tuple, beta))))
        else:
            raise ValueError(f"unknown boundary type {kind!r}")
    return RobinMeasure(tuple(comps))


def dominates(upper: RobinMeasure, lower: RobinMeasure, domain: Domain, n_probe: int = 257) -> bool:
    """Check ``beta_lower <= beta_upper`` pointwise (Dirichlet above every rate).

    Piecewise rates are compared on a probe grid per component plus every
    breakpoint.
    """
    for cid, (hi, lo) in enumerate(zip(upper.components, lower.components)):
        if isinstance(hi, Dirichlet):
            continue
        if isinstance(lo, Dirichlet):
            return False
        length = domain.component_length(cid) if domain.dim > 1 else 0.0
        probes = np.linspace(0.0, length, n_probe)
        for spec in (hi, lo):
            if isinstance(spec, Robin):
                probes = np.union1d(probes, spec._starts[spec._starts <= length])
        hv = hi.values_at(probes) if isinstance(hi, Robin) else np.zeros_like(probes)
        lv = lo.values_at(probes) if isinstance(lo, Robin) else np.zeros_like(probes)
        if np.any(lv > hv):
            return False
    return True
