"""Counting delta-connected components of cylinders.

The cylinder is covered by refined pillars of sup-norm diameter <= eps, and two
pillars are linked when their sup-norm distance is <= delta.  Every pillar
contains attractor points, so

* points at distance <= delta lie in linked pillars: count <= h(delta);
* points in linked pillars are within delta + 2*eps:  h(delta + 2*eps) <= count.
"""

from __future__ import annotations

import math
from dataclasses import dataclass
from fractions import Fraction
from typing import Iterable

import numpy as np

from .cover import (
    DEFAULT_EPS_RATIO,
    DEFAULT_NODE_BUDGET,
    BudgetExceeded,
    PillarSet,
    PreconditionError,
    refine,
    uniform_pillars,
)
from .kernels import box_components
from .model import Digit, SpongeSpec


@dataclass(frozen=True)
class ComponentCount:
    delta: Fraction
    eps: Fraction
    count: int

    @property
    def upper_delta(self) -> Fraction:
        """The count is at least h(delta + 2 eps)."""
        return self.delta + 2 * self.eps


@dataclass(frozen=True)
class SplitCount:
    inner: int
    boundary_or_uncertain: int

    @property
    def count(self) -> int:
        return self.inner + self.boundary_or_uncertain


def _resolve_eps(delta: Fraction, eps, eps_ratio) -> Fraction:
    eps = Fraction(eps) if eps is not None else delta / eps_ratio
    if not 0 < eps <= delta / 4:
        raise PreconditionError(f"eps must lie in (0, delta/4], got eps={eps}, delta={delta}")
    return eps


def threshold_units(ps: PillarSet, delta: Fraction) -> tuple[PillarSet, list[int]]:
    """Rescale ``ps`` so delta is an integer in every coordinate's units."""
    factor = [delta.denominator // math.gcd(delta.denominator, s) for s in ps.scale]
    ps = ps.rescaled(factor) if any(f != 1 for f in factor) else ps
    thresh = [delta.numerator * s // delta.denominator for s in ps.scale]
    return ps, thresh


def label_cover(ps: PillarSet, delta: Fraction, backend: str | None = None):
    ps, thresh = threshold_units(ps, delta)
    return ps, box_components(ps.lo, ps.hi, thresh, backend=backend)


def component_labels(
    spec: SpongeSpec,
    word: Iterable[Digit] = (),
    delta=None,
    eps=None,
    eps_ratio: int = DEFAULT_EPS_RATIO,
    budget: int = DEFAULT_NODE_BUDGET,
    backend: str | None = None,
):
    """Refined cover of the cylinder and its component labels."""
    delta = Fraction(delta)
    if delta <= 0:
        raise PreconditionError("delta must be positive")
    eps = _resolve_eps(delta, eps, eps_ratio)
    ps = refine(spec, word, eps, budget)
    ps, labels = label_cover(ps, delta, backend)
    return eps, ps, labels


def component_count(
    spec: SpongeSpec,
    word: Iterable[Digit] = (),
    delta=None,
    eps=None,
    eps_ratio: int = DEFAULT_EPS_RATIO,
    budget: int = DEFAULT_NODE_BUDGET,
    backend: str | None = None,
) -> ComponentCount:
    eps, _, labels = component_labels(spec, word, delta, eps, eps_ratio, budget, backend)
    return ComponentCount(Fraction(delta), eps, int(len(np.unique(labels))))


def classify_components(ps: PillarSet, labels: np.ndarray) -> tuple[np.ndarray, np.ndarray]:
    """(component representative labels, inner flag) for each component.

    A component is inner when the union of its pillars lies in the open
    basic pillar of the cylinder.
    """
    order = np.argsort(labels, kind="stable")
    sl = labels[order]
    starts = np.flatnonzero(np.r_[True, sl[1:] != sl[:-1]])
    comp_lo = np.minimum.reduceat(ps.lo[order], starts, axis=0)
    comp_hi = np.maximum.reduceat(ps.hi[order], starts, axis=0)
    inner = np.ones(len(starts), dtype=bool)
    for k, (a, b) in enumerate(ps.root.intervals):
        s = ps.scale[k]
        lo_bound = int(a * s)
        hi_bound = int(b * s)
        inner &= np.asarray(comp_lo[:, k] > lo_bound, dtype=bool)
        inner &= np.asarray(comp_hi[:, k] < hi_bound, dtype=bool)
    return sl[starts], inner


def component_count_split(
    spec: SpongeSpec,
    word: Iterable[Digit] = (),
    delta=None,
    eps=None,
    eps_ratio: int = DEFAULT_EPS_RATIO,
    budget: int = DEFAULT_NODE_BUDGET,
    backend: str | None = None,
) -> SplitCount:
    _, ps, labels = component_labels(spec, word, delta, eps, eps_ratio, budget, backend)
    _, inner = classify_components(ps, labels)
    n_inner = int(inner.sum())
    return SplitCount(n_inner, int(len(inner) - n_inner))


# -- 1-D gap sequences -----------------------------------------------------------


@dataclass(frozen=True)
class GapSequence:
    gaps: tuple[Fraction, ...]
    certified_prefix: int
    max_interval: Fraction

    def certified(self) -> tuple[Fraction, ...]:
        return self.gaps[: self.certified_prefix]


def attractor_hull(spec: SpongeSpec) -> tuple[Fraction, Fraction]:
    """Convex hull of a 1-D attractor: the extreme fixed points of the maps."""
    fixed = [spec.base(a, 0).fixed_point for a in spec.digits]
    return min(fixed), max(fixed)


def gap_sequence_1d(spec: SpongeSpec, depth: int, budget: int = 10**7) -> GapSequence:
    """Gaps between the depth-k images of the attractor's hull, largest first.

    Interval endpoints are attractor points, so every listed gap is a true
    gap; unresolved gaps are shorter than the longest interval, hence the
    certified prefix.
    """
    if spec.d != 1:
        raise PreconditionError("gap sequences need a 1-dimensional spec")
    if len(spec.digits) ** depth > budget:
        raise BudgetExceeded(f"{len(spec.digits)}^{depth} intervals exceed budget {budget}")
    m, big_m = attractor_hull(spec)
    ps = uniform_pillars(spec, depth, budget=budget)
    s = ps.scale[0]
    den = m.denominator * big_m.denominator // math.gcd(m.denominator, big_m.denominator)
    mn, mm = int(m * den), int(big_m * den)
    lo = [int(x) for x in ps.lo[:, 0]]
    hi = [int(x) for x in ps.hi[:, 0]]
    iv = sorted((a * den + (b - a) * mn, a * den + (b - a) * mm) for a, b in zip(lo, hi))
    unit = s * den
    longest = max(b - a for a, b in iv)
    gaps = []
    cur_hi = iv[0][1]
    for a, b in iv[1:]:
        if a > cur_hi:
            gaps.append(a - cur_hi)
        if b > cur_hi:
            cur_hi = b
    gaps.sort(reverse=True)
    certified = sum(1 for g in gaps if g > longest)
    return GapSequence(
        tuple(Fraction(g, unit) for g in gaps), certified, Fraction(longest, unit)
    )
