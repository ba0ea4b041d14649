"""Flag equations, the canonical Bernoulli measure and box dimensions."""

from __future__ import annotations

import math
from dataclasses import dataclass
from typing import Iterable

from .model import Digit, SpongeSpec, SpecError, Word, project

BISECT_HI = 64.0
BISECT_ITERS = 200
RESIDUAL_TOL = 1e-12


class RootBracketError(RuntimeError):
    """The flag equation has no root in the search interval (never expected)."""


def _log_ratios(spec: SpongeSpec) -> list[list[float]]:
    return [[math.log(float(m.ratio)) for m in lst] for lst in spec.bases]


def _level_terms(spec: SpongeSpec, logs, betas: list[float], j: int):
    """(prefix log-weight, log r_j) for each distinct projected digit at level j."""
    out = []
    for f in sorted({a[:j] for a in spec.digits}):
        prefix = sum(betas[k] * logs[k][f[k]] for k in range(j - 1))
        out.append((prefix, logs[j - 1][f[j - 1]]))
    return out


def flag_sum(spec: SpongeSpec, betas: list[float], j: int, beta: float) -> float:
    """G_j(beta) = sum over level-j projected digits of prod_{k<j} r_k^beta_k * r_j^beta."""
    logs = _log_ratios(spec)
    return sum(math.exp(p + beta * lr) for p, lr in _level_terms(spec, logs, betas, j))


def solve_betas(spec: SpongeSpec) -> list[float]:
    logs = _log_ratios(spec)
    betas: list[float] = []
    for j in range(1, spec.d + 1):
        terms = _level_terms(spec, logs, betas, j)
        n_here = len(terms)
        n_prev = len({a[: j - 1] for a in spec.digits}) if j > 1 else 1
        if n_here == n_prev:
            # every parent has exactly one child: G_j(0) == 1 exactly
            betas.append(0.0)
            continue

        def g(b):
            return sum(math.exp(p + b * lr) for p, lr in terms) - 1.0

        lo, hi = 0.0, BISECT_HI
        if g(lo) < 0 or g(hi) > 0:
            raise RootBracketError(f"flag equation at level {j} not bracketed by [0, {BISECT_HI}]")
        for _ in range(BISECT_ITERS):
            mid = 0.5 * (lo + hi)
            if g(mid) > 0:
                lo = mid
            else:
                hi = mid
        beta = 0.5 * (lo + hi)
        if abs(g(beta)) > RESIDUAL_TOL:
            raise RootBracketError(f"flag equation residual {g(beta):.3e} at level {j}")
        betas.append(beta)
    return betas


@dataclass(frozen=True)
class MeasureProfile:
    betas: tuple[float, ...]
    alphas: tuple[float, ...]
    weights: dict[Digit, float]
    projected_weights: tuple[dict[Digit, float], ...]

    @property
    def dim_box(self) -> float:
        return self.alphas[-1]

    def to_json(self) -> dict:
        return {"betas": list(self.betas), "alphas": list(self.alphas), "dim_box": self.dim_box}


def weights(spec: SpongeSpec, betas: list[float] | None = None) -> MeasureProfile:
    if betas is None:
        betas = solve_betas(spec)
    logs = _log_ratios(spec)
    levels = []
    for j in range(1, spec.d + 1):
        levels.append(
            {
                f: math.exp(sum(betas[k] * logs[k][f[k]] for k in range(j)))
                for f in sorted({a[:j] for a in spec.digits})
            }
        )
    alphas = []
    acc = 0.0
    for b in betas:
        acc += b
        alphas.append(acc)
    return MeasureProfile(tuple(betas), tuple(alphas), dict(levels[-1]), tuple(levels))


def mu_word(profile: MeasureProfile, word: Iterable[Digit]) -> float:
    m = 1.0
    for a in word:
        try:
            m *= profile.weights[tuple(a)]
        except KeyError:
            raise SpecError(f"unknown digit {tuple(a)}") from None
    return m


def mu_level(profile: MeasureProfile, j: int, word: Iterable[Digit]) -> float:
    """Measure of a word projected to level j under the level-j canonical measure."""
    table = profile.projected_weights[j - 1]
    m = 1.0
    for a in word:
        m *= table[tuple(a)[:j]]
    return m


def word_measure_projection_identity(
    spec: SpongeSpec, profile: MeasureProfile, word: Word
) -> tuple[float, float]:
    """Both sides of mu_{d-1}(pi(I)) == mu_d(I) / S(I)^beta_d.

    For d == 1 the lower level is the trivial one-point measure, so the left
    side is 1.
    """
    d = spec.d
    lhs = mu_level(profile, d - 1, word) if d > 1 else 1.0
    log_s = sum(math.log(float(spec.ratio(a, d - 1))) for a in word)
    rhs = mu_word(profile, word) * math.exp(-profile.betas[-1] * log_s)
    return lhs, rhs


def dim_box(spec: SpongeSpec) -> float:
    return sum(solve_betas(spec))


def projected_dims(spec: SpongeSpec) -> list[float]:
    return [dim_box(project(spec, j)) for j in range(1, spec.d + 1)]
