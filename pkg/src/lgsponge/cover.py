"""Cylinders, pillars, delta-blockings and mesh-box brackets.

Pillars of refined covers are held as integer arrays: coordinate ``k`` of every
box is ``lo[:, k] / scale[k]`` (and likewise ``hi``), so every comparison is
exact.  Arrays switch to Python-int object dtype when int64 would overflow.

Mesh boxes are the half-open cells ``[z*delta, (z+1)*delta)``.  A cell counts
toward the upper bracket when it meets the interior of a refined pillar; the
lower bracket counts cells holding a certified point of the attractor.
"""

from __future__ import annotations

import itertools
import math
from dataclasses import dataclass
from fractions import Fraction
from typing import Iterable, Sequence

import numpy as np

from .measure import MeasureProfile, mu_word, weights
from .model import Digit, SpongeSpec, SpecError, Word, word_map

DEFAULT_NODE_BUDGET = 50_000_000
DEFAULT_EPS_RATIO = 16
_INT64_SAFE = 1 << 62


class BudgetExceeded(RuntimeError):
    """A cover or graph would exceed its node budget."""


class PreconditionError(ValueError):
    pass


@dataclass(frozen=True)
class Pillar:
    intervals: tuple[tuple[Fraction, Fraction], ...]

    @property
    def lo(self) -> tuple[Fraction, ...]:
        return tuple(a for a, _ in self.intervals)

    @property
    def hi(self) -> tuple[Fraction, ...]:
        return tuple(b for _, b in self.intervals)

    def contains(self, other: "Pillar") -> bool:
        return all(a <= c and d <= b for (a, b), (c, d) in zip(self.intervals, other.intervals))

    def distance(self, other: "Pillar") -> Fraction:
        """Sup-norm distance between the two closed boxes."""
        return max(
            max(Fraction(0), c - b, a - d) for (a, b), (c, d) in zip(self.intervals, other.intervals)
        )

    @property
    def diameter(self) -> Fraction:
        return max(b - a for a, b in self.intervals)


def pillar(spec: SpongeSpec, word: Iterable[Digit]) -> Pillar:
    f = word_map(spec, word)
    return Pillar(tuple((t, t + r) for r, t in zip(f.ratios, f.offsets)))


def shortest_side(spec: SpongeSpec, word: Iterable[Digit]) -> Fraction:
    s = Fraction(1)
    for a in spec.check_word(word):
        s *= spec.ratio(a, spec.d - 1)
    return s


def r_star(spec: SpongeSpec) -> Fraction:
    return min(spec.ratio(a, spec.d - 1) for a in spec.digits)


# -- delta-blocking -------------------------------------------------------------


@dataclass(frozen=True)
class BlockingSet:
    delta: Fraction
    words: tuple[Word, ...]
    sides: tuple[Fraction, ...]


def delta_blocking(spec: SpongeSpec, delta, budget: int = DEFAULT_NODE_BUDGET) -> BlockingSet:
    """Words H with S(H) < delta/r_* whose parent has S >= delta/r_*, in lexicographic order.

    The empty word is never emitted, so when delta/r_* > 1 the result is all
    length-one words (and ``delta <= S(H)`` then needs ``delta <= r_*``).
    """
    delta = Fraction(delta)
    if not 0 < delta < 1:
        raise PreconditionError(f"delta must lie in (0,1), got {delta}")
    cut = delta / r_star(spec)
    d = spec.d
    side = {a: spec.ratio(a, d - 1) for a in spec.digits}
    words: list[Word] = []
    sides: list[Fraction] = []
    stack: list[tuple[Word, Fraction]] = [((a,), side[a]) for a in reversed(spec.digits)]
    while stack:
        w, s = stack.pop()
        if s < cut:
            words.append(w)
            sides.append(s)
            if len(words) > budget:
                raise BudgetExceeded(f"delta-blocking exceeds {budget} words")
            continue
        for a in reversed(spec.digits):
            stack.append((w + (a,), s * side[a]))
    return BlockingSet(delta, tuple(words), tuple(sides))


# -- exact integer covers -------------------------------------------------------


@dataclass(frozen=True)
class PillarSet:
    """Boxes ``[lo/scale, hi/scale]`` (per coordinate) covering a cylinder."""

    lo: np.ndarray
    hi: np.ndarray
    scale: tuple[int, ...]
    root: Pillar
    certified: np.ndarray  # certified attractor point per box, in units 1/(scale*point_den)
    point_den: tuple[int, ...]

    def __len__(self):
        return self.lo.shape[0]

    def rescaled(self, factor: Sequence[int]) -> "PillarSet":
        """Same boxes with every ``scale[k]`` multiplied by ``factor[k]``."""
        f = list(factor)
        big = max(_max_abs(self.hi), _max_abs(self.certified)) * max(f) >= _INT64_SAFE
        dt = object if big or self.lo.dtype == object else np.int64
        fa = np.array(f, dtype=dt)
        return PillarSet(
            self.lo.astype(dt) * fa,
            self.hi.astype(dt) * fa,
            tuple(s * fk for s, fk in zip(self.scale, f)),
            self.root,
            self.certified.astype(dt) * fa,
            self.point_den,
        )

    def pillar(self, i: int) -> Pillar:
        return Pillar(
            tuple(
                (Fraction(int(self.lo[i, k]), s), Fraction(int(self.hi[i, k]), s))
                for k, s in enumerate(self.scale)
            )
        )


def _max_abs(a: np.ndarray) -> int:
    if a.size == 0:
        return 0
    if a.dtype == object:
        return max(abs(int(x)) for x in a.ravel())
    return int(np.abs(a).max())


def _le(a: np.ndarray, bound: int) -> np.ndarray:
    if a.dtype != object and bound >= _INT64_SAFE:
        return np.ones(a.shape, dtype=bool)
    return a <= bound


def _scaled_floordiv(a: np.ndarray, mul: int, div: int) -> np.ndarray:
    """floor(a * mul / div) elementwise, exact, as int64."""
    if a.dtype == object or _max_abs(a) * mul >= _INT64_SAFE or div >= _INT64_SAFE:
        return np.array([(int(x) * mul) // div for x in a], dtype=np.int64)
    return (a * mul) // div


def _lcm(values: Iterable[int]) -> int:
    out = 1
    for v in values:
        out = out * v // math.gcd(out, v)
    return out


class _Expander:
    """Integer child-generation tables for one spec."""

    def __init__(self, spec: SpongeSpec):
        self.spec = spec
        d = spec.d
        self.mult = []
        for k in range(d):
            self.mult.append(
                _lcm(
                    x.denominator
                    for a in spec.digits
                    for x in (spec.ratio(a, k), spec.offset(a, k))
                )
            )
        self.rnum = np.array(
            [[int(spec.ratio(a, k) * self.mult[k]) for k in range(d)] for a in spec.digits],
            dtype=object,
        )
        self.tnum = np.array(
            [[int(spec.offset(a, k) * self.mult[k]) for k in range(d)] for a in spec.digits],
            dtype=object,
        )
        fix = [spec.base(spec.digits[0], k).fixed_point for k in range(d)]
        self.point_den = tuple(x.denominator for x in fix)
        self.point_num = [x.numerator for x in fix]

    def start(self, word: Word):
        f = word_map(self.spec, word)
        scale = [_lcm([r.denominator, t.denominator]) for r, t in zip(f.ratios, f.offsets)]
        dt = np.int64 if max(scale) < _INT64_SAFE else object
        lo = np.array([[int(t * s) for t, s in zip(f.offsets, scale)]], dtype=dt)
        w = np.array([[int(r * s) for r, s in zip(f.ratios, scale)]], dtype=dt)
        root = Pillar(tuple((t, t + r) for r, t in zip(f.ratios, f.offsets)))
        return lo, w, scale, root

    def expand(self, lo: np.ndarray, w: np.ndarray):
        mult = self.mult
        bound = max(_max_abs(lo), 1) * max(mult) + max(_max_abs(w), 1) * max(
            int(self.tnum.max()), int(self.rnum.max()), 1
        )
        dt = object if bound >= _INT64_SAFE or lo.dtype == object else np.int64
        rnum = self.rnum.astype(dt)
        tnum = self.tnum.astype(dt)
        m = np.array(mult, dtype=dt)
        lo = lo.astype(dt)
        w = w.astype(dt)
        n, d = lo.shape
        nlo = (lo[:, None, :] * m + w[:, None, :] * tnum[None, :, :]).reshape(-1, d)
        nw = (w[:, None, :] * rnum[None, :, :]).reshape(-1, d)
        return nlo, nw

    def finish(self, lo, w, scale, root) -> PillarSet:
        bound = _max_abs(lo) * max(self.point_den) + _max_abs(w) * max(max(self.point_num), 1)
        dt = object if lo.dtype == object or bound >= _INT64_SAFE else np.int64
        lo = lo.astype(dt)
        w = w.astype(dt)
        cert = lo * np.array(self.point_den, dtype=dt) + w * np.array(self.point_num, dtype=dt)
        return PillarSet(lo, lo + w, tuple(scale), root, cert, self.point_den)


def refine(
    spec: SpongeSpec,
    word: Iterable[Digit] = (),
    eps=None,
    budget: int = DEFAULT_NODE_BUDGET,
) -> PillarSet:
    """Subdivide the pillar of ``word`` until every box has sup-norm diameter <= eps."""
    word = spec.check_word(word)
    eps = Fraction(eps)
    if eps <= 0:
        raise PreconditionError("eps must be positive")
    ex = _Expander(spec)
    lo, w, scale, root = ex.start(word)
    n_dig = len(spec.digits)
    done: list[tuple[np.ndarray, np.ndarray, list[int]]] = []
    n_done = 0
    while True:
        small = np.ones(lo.shape[0], dtype=bool)
        for k, s in enumerate(scale):
            # w/s <= eps  <=>  w <= floor(eps * s) for integer w
            small &= _le(w[:, k], eps.numerator * s // eps.denominator)
        if small.any():
            done.append((lo[small], w[small], list(scale)))
            n_done += int(small.sum())
            lo, w = lo[~small], w[~small]
        if lo.shape[0] == 0:
            break
        if n_done + lo.shape[0] * n_dig > budget:
            raise BudgetExceeded(
                f"refinement to eps={eps} exceeds node budget {budget}"
            )
        lo, w = ex.expand(lo, w)
        scale = [s * m for s, m in zip(scale, ex.mult)]

    final = scale
    blocks_lo, blocks_w = [], []
    for blo, bw, bscale in done:
        f = [fs // bs for fs, bs in zip(final, bscale)]
        big = blo.dtype == object or max(_max_abs(blo) + _max_abs(bw), 1) * max(f) >= _INT64_SAFE
        dt = object if big else np.int64
        fa = np.array(f, dtype=dt)
        blocks_lo.append(blo.astype(dt) * fa)
        blocks_w.append(bw.astype(dt) * fa)
    if any(b.dtype == object for b in blocks_lo):
        blocks_lo = [b.astype(object) for b in blocks_lo]
        blocks_w = [b.astype(object) for b in blocks_w]
    return ex.finish(np.concatenate(blocks_lo), np.concatenate(blocks_w), final, root)


def uniform_pillars(spec: SpongeSpec, depth: int, word: Iterable[Digit] = (), budget: int = 10**7) -> PillarSet:
    """All pillars of words ``word + J`` with ``|J| == depth``, in lexicographic order of J."""
    word = spec.check_word(word)
    n_dig = len(spec.digits)
    if n_dig**depth > budget:
        raise BudgetExceeded(f"depth {depth} has {n_dig ** depth} cylinders (budget {budget})")
    ex = _Expander(spec)
    lo, w, scale, root = ex.start(word)
    for _ in range(depth):
        lo, w = ex.expand(lo, w)
        scale = [s * m for s, m in zip(scale, ex.mult)]
    return ex.finish(lo, w, scale, root)


def word_of_index(spec: SpongeSpec, index: int, depth: int) -> Word:
    n = len(spec.digits)
    out = []
    for _ in range(depth):
        index, r = divmod(index, n)
        out.append(spec.digits[r])
    return tuple(reversed(out))


# -- mesh brackets --------------------------------------------------------------


def _mesh_cells(ps: PillarSet, delta: Fraction):
    """(upper-bracket cells, lower-bracket cells) as int64 arrays of cell indices."""
    n, d = ps.lo.shape
    dn, dd = delta.numerator, delta.denominator
    zlo = np.empty((n, d), dtype=np.int64)
    zhi = np.empty((n, d), dtype=np.int64)
    zpt = np.empty((n, d), dtype=np.int64)
    for k, s in enumerate(ps.scale):
        c = dn * s
        zlo[:, k] = _scaled_floordiv(ps.lo[:, k], dd, c)
        # last cell meeting the open interval (lo, hi): ceil(hi*dd/c) - 1
        zhi[:, k] = -_scaled_floordiv(-ps.hi[:, k], dd, c) - 1
        zpt[:, k] = np.clip(
            _scaled_floordiv(ps.certified[:, k], dd, c * ps.point_den[k]), zlo[:, k], zhi[:, k]
        )
    if np.any(zhi - zlo > 1):
        raise PreconditionError("refined boxes may span at most two mesh cells per coordinate")
    corners = [
        np.where(np.array(choice, dtype=bool), zhi, zlo)
        for choice in itertools.product((0, 1), repeat=d)
    ]
    upper = np.unique(np.concatenate(corners), axis=0)
    lower = np.unique(zpt, axis=0)
    return upper, lower


def mesh_bracket(ps: PillarSet, delta) -> tuple[int, int]:
    upper, lower = _mesh_cells(ps, Fraction(delta))
    return len(lower), len(upper)


def box_count_bracket(
    spec: SpongeSpec,
    word: Iterable[Digit] = (),
    delta=None,
    eps=None,
    eps_ratio: int = DEFAULT_EPS_RATIO,
    budget: int = DEFAULT_NODE_BUDGET,
) -> tuple[int, int]:
    """(N_lo, N_hi) bracketing the number of delta-mesh boxes meeting the cylinder."""
    word = spec.check_word(word)
    delta = Fraction(delta)
    if not 0 < delta < shortest_side(spec, word):
        raise PreconditionError(f"need 0 < delta < S(R) = {shortest_side(spec, word)}")
    eps = Fraction(eps) if eps is not None else delta / eps_ratio
    if not 0 < eps <= delta:
        raise PreconditionError("eps must lie in (0, delta]")
    return mesh_bracket(refine(spec, word, eps, budget), delta)


# -- boundary cylinders ----------------------------------------------------------


def face_names(d: int) -> list[str]:
    return [f"x{k + 1}={v}" for k in range(d) for v in (0, 1)]


def face_digits(spec: SpongeSpec) -> list[tuple[Digit, ...]]:
    """Digits whose pillar touches each face, faces ordered x1=0, x1=1, x2=0, ..."""
    out = []
    for k in range(spec.d):
        out.append(tuple(a for a in spec.digits if spec.offset(a, k) == 0))
        out.append(tuple(a for a in spec.digits if spec.offset(a, k) + spec.ratio(a, k) == 1))
    return out


@dataclass(frozen=True)
class BoundaryStats:
    Q_js: tuple[float, ...]
    Q: float
    m: int
    boundary_words: tuple[Word, ...]
    boundary_measure: float

    @property
    def sum_bound(self) -> float:
        return sum(q**self.m for q in self.Q_js)


def boundary_stats(
    spec: SpongeSpec,
    m: int,
    profile: MeasureProfile | None = None,
    budget: int = 10**7,
) -> BoundaryStats:
    if m < 0:
        raise PreconditionError("m must be >= 0")
    profile = profile or weights(spec)
    faces = face_digits(spec)
    q_js = tuple(sum(profile.weights[a] for a in fd) for fd in faces)
    if m == 0:
        words: tuple[Word, ...] = ((),)
    else:
        total = sum(len(fd) ** m for fd in faces)
        if total > budget:
            raise BudgetExceeded(f"boundary words at depth {m} exceed budget {budget}")
        seen = set()
        for fd in faces:
            seen.update(itertools.product(fd, repeat=m))
        words = tuple(sorted(seen))
    measure = math.fsum(mu_word(profile, w) for w in words)
    return BoundaryStats(q_js, max(q_js), m, words, measure)


def boundary_union_measure(spec: SpongeSpec, m: int, profile: MeasureProfile | None = None) -> float:
    """Measure of the depth-m boundary cylinders by inclusion-exclusion over faces."""
    profile = profile or weights(spec)
    faces = [set(fd) for fd in face_digits(spec)]
    total = 0.0
    for r in range(1, len(faces) + 1):
        for group in itertools.combinations(faces, r):
            common = set.intersection(*group)
            mass = sum(profile.weights[a] for a in common)
            total += (-1) ** (r + 1) * mass**m
    return total


def boundary_box_bracket(
    spec: SpongeSpec,
    word: Iterable[Digit],
    delta,
    m: int,
    eps=None,
    eps_ratio: int = DEFAULT_EPS_RATIO,
    budget: int = DEFAULT_NODE_BUDGET,
) -> int:
    """Upper bound on the number of delta-mesh boxes meeting phi_I(boundary of the cube) within the cylinder."""
    word = spec.check_word(word)
    delta = Fraction(delta)
    limit = r_star(spec) ** m * shortest_side(spec, word)
    if not 0 < delta < limit:
        raise PreconditionError(f"need 0 < delta < r_*^m S(W) = {limit}")
    eps = Fraction(eps) if eps is not None else delta / eps_ratio
    stats = boundary_stats(spec, m)
    cells = []
    used = 0
    for b in stats.boundary_words:
        ps = refine(spec, word + b, eps, budget - used)
        used += len(ps)
        cells.append(_mesh_cells(ps, delta)[0])
    return len(np.unique(np.concatenate(cells), axis=0))
