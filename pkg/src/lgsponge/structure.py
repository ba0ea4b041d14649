"""Island certificates, the maximal-power-law condition, and exponent bounds."""

from __future__ import annotations

import itertools
import math
from dataclasses import dataclass, field
from fractions import Fraction
from typing import Union

import numpy as np

from .connectivity import classify_components
from .cover import PreconditionError, face_digits, r_star, uniform_pillars, word_of_index
from .kernels import box_components
from .measure import solve_betas, weights
from .model import SpongeSpec, Word, format_rational, format_word, project, word_map

DEFAULT_MAX_DEPTH = 8
DEFAULT_DEPTH_BUDGET = 10**7


@dataclass(frozen=True)
class IslandCertificate:
    depth: int
    words: tuple[Word, ...]
    separation: Fraction
    boundary_clearance: Fraction

    def to_json(self) -> dict:
        return {
            "status": "certified",
            "depth": self.depth,
            "words": [format_word(w) for w in self.words],
            "separation": format_rational(self.separation),
            "clearance": format_rational(self.boundary_clearance),
        }


@dataclass(frozen=True)
class Unknown:
    max_depth: int

    def to_json(self) -> dict:
        return {"status": "unknown", "depth": self.max_depth, "words": [], "separation": None, "clearance": None}


IslandStatus = Union[IslandCertificate, Unknown]


def _common_scale(lo: np.ndarray, hi: np.ndarray, scale) -> tuple[np.ndarray, np.ndarray, int]:
    big = math.lcm(*scale)
    f = np.array([big // s for s in scale], dtype=object)
    return lo.astype(object) * f, hi.astype(object) * f, big


def island_at_depth(spec: SpongeSpec, depth: int, budget: int = DEFAULT_DEPTH_BUDGET) -> IslandCertificate | None:
    """Look for a touching-cluster of depth-k pillars inside the open unit cube.

    Returns the smallest such cluster (ties broken by first word), or None.
    """
    ps = uniform_pillars(spec, depth, budget=budget)
    labels = box_components(ps.lo, ps.hi, [0] * spec.d)
    reps, inner = classify_components(ps, labels)
    if not inner.any():
        return None
    sizes = {int(r): int(c) for r, c in zip(*np.unique(labels, return_counts=True))}
    best = min((int(r) for r in reps[inner]), key=lambda r: (sizes[r], r))
    members = np.flatnonzero(labels == best)
    others = np.flatnonzero(labels != best)

    lo, hi, big = _common_scale(ps.lo, ps.hi, ps.scale)
    m_lo, m_hi = lo[members], hi[members]
    clearance = min(min(int(x) for x in m_lo.ravel()), min(big - int(x) for x in m_hi.ravel()))
    if others.size:
        o_lo, o_hi = lo[others], hi[others]
        sep = None
        for i in range(len(members)):
            gap = np.maximum(o_lo - m_hi[i], m_lo[i] - o_hi).max(axis=1)
            g = int(gap.min())
            sep = g if sep is None else min(sep, g)
    else:
        # the cluster is the whole attractor cover; nothing to separate from
        sep = clearance
    words = tuple(word_of_index(spec, int(i), depth) for i in members)
    return IslandCertificate(depth, words, Fraction(sep, big), Fraction(clearance, big))


def find_island(
    spec: SpongeSpec, max_depth: int = DEFAULT_MAX_DEPTH, budget: int = DEFAULT_DEPTH_BUDGET
) -> IslandStatus:
    for k in range(1, max_depth + 1):
        if len(spec.digits) ** k > budget:
            return Unknown(k - 1)
        cert = island_at_depth(spec, k, budget)
        if cert is not None:
            return cert
    return Unknown(max_depth)


def certificate_problems(spec: SpongeSpec, cert: IslandCertificate) -> list[str]:
    """Recheck a certificate from scratch with rational pillars; empty list means valid."""
    problems = []
    k = cert.depth
    if not cert.words:
        return ["empty cluster"]
    if any(len(w) != k for w in cert.words):
        problems.append("word length differs from depth")

    def box(word):
        f = word_map(spec, word)
        return [(t, t + r) for r, t in zip(f.ratios, f.offsets)]

    def dist(p, q):
        return max(max(Fraction(0), c - b, a - e) for (a, b), (c, e) in zip(p, q))

    cluster = set(cert.words)
    boxes = {w: box(w) for w in itertools.product(spec.digits, repeat=k)}
    if not cluster <= boxes.keys():
        return problems + ["cluster contains words outside the digit set"]

    start = cert.words[0]
    seen = {start}
    todo = [start]
    while todo:
        w = todo.pop()
        for v in cluster - seen:
            if dist(boxes[w], boxes[v]) == 0:
                seen.add(v)
                todo.append(v)
    if seen != cluster:
        problems.append("cluster pillars are not connected by touching")

    others = [w for w in boxes if w not in cluster]
    if others:
        sep = min(dist(boxes[w], boxes[v]) for w in cluster for v in others)
        if sep != cert.separation:
            problems.append(f"separation {cert.separation} != recomputed {sep}")
        if sep <= 0:
            problems.append("cluster touches another pillar")
    clear = min(min(a, 1 - b) for w in cluster for a, b in boxes[w])
    if clear != cert.boundary_clearance:
        problems.append(f"clearance {cert.boundary_clearance} != recomputed {clear}")
    if clear <= 0:
        problems.append("cluster touches the boundary of the cube")
    return problems


def verify_certificate(spec: SpongeSpec, cert: IslandCertificate) -> bool:
    return not certificate_problems(spec, cert)


@dataclass(frozen=True)
class MplConditionReport:
    statuses: tuple[IslandStatus, ...]

    @property
    def holds(self) -> bool:
        """All projections certified: maximal power law and component-counting measure follow."""
        return all(isinstance(s, IslandCertificate) for s in self.statuses)

    def to_json(self) -> dict:
        levels = []
        for j, s in enumerate(self.statuses, start=1):
            entry = s.to_json()
            entry["level"] = j
            levels.append(entry)
        if self.holds:
            verdict = (
                "every projection has an island, so the sponge satisfies the maximal power law "
                "and its canonical Bernoulli measure is component-counting"
            )
        else:
            verdict = "inconclusive: some projection has no island up to the searched depth"
        return {"levels": levels, "maximal_power_law": self.holds, "verdict": verdict}


def check_mpl_condition(spec: SpongeSpec, max_depth: int = DEFAULT_MAX_DEPTH) -> MplConditionReport:
    return MplConditionReport(
        tuple(find_island(project(spec, j), max_depth) for j in range(1, spec.d + 1))
    )


# -- exponent bounds ------------------------------------------------------------


class VacuousBound(ValueError):
    """No digit touches a face (Q = 0): islands exist and the bound says nothing."""


def tau0(spec: SpongeSpec) -> float:
    """min over j and digits a of log r_{a,j+1} / log r_{a,j}; infinite when d == 1.

    Per-digit ordering makes every term exceed 1, and each cylinder then has
    S(pi_{j+1} W) <= S(pi_j W)^tau0.
    """
    vals = [
        math.log(float(spec.ratio(a, j + 1))) / math.log(float(spec.ratio(a, j)))
        for j in range(spec.d - 1)
        for a in spec.digits
    ]
    return min(vals) if vals else math.inf


def tau0_global(spec: SpongeSpec) -> float:
    """min_j log max_a r_{a,j+1} / log min_a r_{a,j}; can be <= 1 when ratios vary by digit."""
    vals = []
    for j in range(spec.d - 1):
        num = math.log(float(max(spec.ratio(a, j + 1) for a in spec.digits)))
        den = math.log(float(min(spec.ratio(a, j) for a in spec.digits)))
        vals.append(num / den)
    return min(vals) if vals else math.inf


@dataclass(frozen=True)
class ExponentBounds:
    j_fail: int
    tau: float
    tau0: float
    Q: float
    r_star: Fraction
    s: float
    chi_level: float
    chi_lifted: float
    eta_chain: tuple[float, ...]
    dim_box: float
    lift_valid: bool
    chi_lifted_tau0: float
    tau0_global: float = math.inf
    conditional: bool = field(default=True)

    def to_json(self) -> dict:
        return {
            "j_fail": self.j_fail,
            "tau": self.tau,
            "tau0": None if math.isinf(self.tau0) else self.tau0,
            "tau0_global": None if math.isinf(self.tau0_global) else self.tau0_global,
            "Q": self.Q,
            "r_star": format_rational(self.r_star),
            "s": self.s,
            "chi_level": self.chi_level,
            "chi_lifted": self.chi_lifted,
            "eta_chain": list(self.eta_chain),
            "dim_box": self.dim_box,
            "lift_valid": self.lift_valid,
            "chi_lifted_tau0": self.chi_lifted_tau0,
            "conditional": "conditional on the user assertion that level j_fail has no inner trivial points",
        }


def _chi(Q: float, rs: Fraction, alpha_j: float, tau: float) -> tuple[float, float]:
    s = (1.0 - 1.0 / tau) * math.log(Q) / math.log(float(rs)) if math.isfinite(tau) else math.log(Q) / math.log(float(rs))
    return s, alpha_j - s


def exponent_bounds(spec: SpongeSpec, j_fail: int, tau: float) -> ExponentBounds:
    """Exponent chi < dim_box bounding h_R(delta) when level ``j_fail`` lacks inner trivial points."""
    if not 1 <= j_fail <= spec.d:
        raise PreconditionError(f"j_fail must lie in [1, {spec.d}]")
    tau = float(tau)
    if not tau > 1:
        raise PreconditionError("tau must exceed 1")
    t0 = tau0(spec)
    if not t0 > 1:
        raise AssertionError(f"tau0 = {t0} <= 1 contradicts coordinate ordering")
    sub = project(spec, j_fail)
    prof = weights(sub)
    faces = face_digits(sub)
    Q = max(sum(prof.weights[a] for a in fd) for fd in faces)
    if Q == 0:
        raise VacuousBound("no digit touches a face of the cube; the sponge has islands")
    rs = r_star(sub)
    alpha_j = prof.alphas[-1]
    s, chi_j = _chi(Q, rs, alpha_j, tau)
    betas = solve_betas(spec)
    chain = [chi_j]
    for b in betas[j_fail:]:
        chain.append(chain[-1] + b)
    _, chi_j0 = _chi(Q, rs, alpha_j, t0)
    lifted0 = chi_j0 + sum(betas[j_fail:])
    return ExponentBounds(
        j_fail=j_fail,
        tau=tau,
        tau0=t0,
        Q=Q,
        r_star=rs,
        s=s,
        chi_level=chi_j,
        chi_lifted=chain[-1],
        eta_chain=tuple(chain),
        dim_box=sum(betas),
        lift_valid=j_fail == spec.d or tau <= t0,
        chi_lifted_tau0=lifted0,
        tau0_global=tau0_global(spec),
    )
