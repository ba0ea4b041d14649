"""Lalley-Gatzouras sponge descriptions: parsing, validation, projection.

A sponge is generated by per-coordinate lists of orientation-preserving
similarities of [0, 1] and a set of digits, each digit picking one base map
per coordinate.  All geometry is kept in exact rationals.
"""

from __future__ import annotations

import json
from dataclasses import dataclass, field
from fractions import Fraction
from itertools import combinations
from typing import Iterable, Sequence

Digit = tuple[int, ...]
Word = tuple[Digit, ...]


class SpecError(ValueError):
    """Malformed sponge description (bad JSON, ranges, duplicates)."""


def parse_rational(text) -> Fraction:
    """Parse ``"p/q"`` or an integer string into a Fraction."""
    if isinstance(text, bool) or not isinstance(text, (str, int)):
        raise SpecError(f"rational must be a string 'p/q' or integer, got {text!r}")
    if isinstance(text, int):
        return Fraction(text)
    s = text.strip()
    num, sep, den = s.partition("/")
    try:
        p = int(num)
        q = int(den) if sep else 1
    except ValueError:
        raise SpecError(f"not a rational: {text!r}") from None
    if q <= 0:
        raise SpecError(f"denominator must be positive: {text!r}")
    return Fraction(p, q)


def format_rational(x: Fraction) -> str:
    x = Fraction(x)
    return str(x.numerator) if x.denominator == 1 else f"{x.numerator}/{x.denominator}"


@dataclass(frozen=True)
class BaseMap:
    """The similarity ``x -> ratio * x + offset`` of [0, 1]."""

    ratio: Fraction
    offset: Fraction

    def __post_init__(self):
        r, t = Fraction(self.ratio), Fraction(self.offset)
        object.__setattr__(self, "ratio", r)
        object.__setattr__(self, "offset", t)
        if not 0 < r < 1:
            raise SpecError(f"base map ratio must lie in (0,1), got {r}")
        if t < 0 or t + r > 1:
            raise SpecError(f"base map {r}x+{t} does not map [0,1] into itself")

    @property
    def interval(self) -> tuple[Fraction, Fraction]:
        return self.offset, self.offset + self.ratio

    @property
    def fixed_point(self) -> Fraction:
        return self.offset / (1 - self.ratio)


@dataclass(frozen=True)
class AffineMap:
    """Diagonal map ``x_i -> ratios[i] * x_i + offsets[i]``."""

    ratios: tuple[Fraction, ...]
    offsets: tuple[Fraction, ...]

    @classmethod
    def identity(cls, d: int) -> "AffineMap":
        return cls((Fraction(1),) * d, (Fraction(0),) * d)

    def compose(self, other: "AffineMap") -> "AffineMap":
        """Return ``self o other``."""
        return AffineMap(
            tuple(r * s for r, s in zip(self.ratios, other.ratios)),
            tuple(t + r * u for r, t, u in zip(self.ratios, self.offsets, other.offsets)),
        )

    def __call__(self, point: Sequence[Fraction]) -> tuple[Fraction, ...]:
        return tuple(r * x + t for r, t, x in zip(self.ratios, self.offsets, point))


@dataclass(frozen=True)
class SpongeSpec:
    d: int
    bases: tuple[tuple[BaseMap, ...], ...]
    digits: tuple[Digit, ...]

    def __post_init__(self):
        if not isinstance(self.d, int) or self.d < 1:
            raise SpecError(f"d must be a positive integer, got {self.d!r}")
        bases = tuple(tuple(b) for b in self.bases)
        if len(bases) != self.d:
            raise SpecError(f"expected {self.d} base lists, got {len(bases)}")
        for i, lst in enumerate(bases):
            if not lst:
                raise SpecError(f"base list for coordinate {i + 1} is empty")
        digits = [tuple(int(x) for x in a) for a in self.digits]
        if not digits:
            raise SpecError("digit set is empty")
        for a in digits:
            if len(a) != self.d:
                raise SpecError(f"digit {a} does not have {self.d} indices")
            for i, idx in enumerate(a):
                if not 0 <= idx < len(bases[i]):
                    raise SpecError(f"digit {a}: index {idx} out of range for coordinate {i + 1}")
        if len(set(digits)) != len(digits):
            raise SpecError("duplicate digits")
        object.__setattr__(self, "bases", bases)
        object.__setattr__(self, "digits", tuple(sorted(digits)))

    def base(self, a: Digit, i: int) -> BaseMap:
        """Base map used by digit ``a`` in coordinate ``i`` (0-based)."""
        return self.bases[i][a[i]]

    def ratio(self, a: Digit, i: int) -> Fraction:
        return self.bases[i][a[i]].ratio

    def offset(self, a: Digit, i: int) -> Fraction:
        return self.bases[i][a[i]].offset

    def check_word(self, word: Iterable[Digit]) -> Word:
        known = set(self.digits)
        w = tuple(tuple(a) for a in word)
        for a in w:
            if a not in known:
                raise SpecError(f"unknown digit {a}")
        return w

    @classmethod
    def grid(cls, sizes: Sequence[int], digits: Iterable[Digit]) -> "SpongeSpec":
        """Slicing sponge on the uniform grid with ``sizes[i]`` columns in coordinate i."""
        bases = tuple(
            tuple(BaseMap(Fraction(1, n), Fraction(k, n)) for k in range(n)) for n in sizes
        )
        return cls(len(sizes), bases, tuple(digits))


@dataclass(frozen=True)
class ValidationReport:
    violations: tuple[tuple[str, object], ...] = field(default_factory=tuple)

    @property
    def ok(self) -> bool:
        return not self.violations

    def to_json(self) -> dict:
        return {
            "ok": self.ok,
            "violations": [{"condition": name, "witness": w} for name, w in self.violations],
        }


def _open_disjoint(p: tuple[Fraction, Fraction], q: tuple[Fraction, Fraction]) -> bool:
    return p[1] <= q[0] or q[1] <= p[0]


def validate(spec: SpongeSpec) -> ValidationReport:
    """Check coordinate ordering, neat projection and non-degeneracy exactly."""
    out: list[tuple[str, object]] = []
    d = spec.d
    for a in spec.digits:
        for i in range(d - 1):
            if not spec.ratio(a, i) > spec.ratio(a, i + 1):
                out.append(("coordinate ordering", {"digit": list(a), "coordinates": [i + 1, i + 2]}))
                break

    for j in range(1, d + 1):
        proj = sorted({a[:j] for a in spec.digits})
        for a, b in combinations(proj, 2):
            if not any(
                _open_disjoint(spec.bases[k][a[k]].interval, spec.bases[k][b[k]].interval)
                for k in range(j)
            ):
                out.append(("neat projection", {"level": j, "digits": [list(a), list(b)]}))

    for k in range(d):
        if all(spec.offset(a, k) == 0 for a in spec.digits):
            out.append(("non-degenerate", {"coordinate": k + 1, "face": "lower"}))
        if all(spec.offset(a, k) + spec.ratio(a, k) == 1 for a in spec.digits):
            out.append(("non-degenerate", {"coordinate": k + 1, "face": "upper"}))
    return ValidationReport(tuple(out))


def project(spec: SpongeSpec, j: int) -> SpongeSpec:
    """The IFS generating the projection onto the first ``j`` coordinates."""
    if not 1 <= j <= spec.d:
        raise ValueError(f"projection level {j} outside [1, {spec.d}]")
    if j == spec.d:
        return spec
    return SpongeSpec(j, spec.bases[:j], tuple(sorted({a[:j] for a in spec.digits})))


def digit_map(spec: SpongeSpec, a: Digit) -> AffineMap:
    a = tuple(a)
    if a not in spec.digits:
        raise SpecError(f"unknown digit {a}")
    return AffineMap(
        tuple(spec.ratio(a, i) for i in range(spec.d)),
        tuple(spec.offset(a, i) for i in range(spec.d)),
    )


def word_map(spec: SpongeSpec, word: Iterable[Digit]) -> AffineMap:
    f = AffineMap.identity(spec.d)
    for a in word:
        f = f.compose(digit_map(spec, a))
    return f


# -- JSON ---------------------------------------------------------------------

_SPEC_KEYS = {"d", "bases", "digits"}
_MAP_KEYS = {"r", "t"}


def spec_from_json(obj) -> SpongeSpec:
    if not isinstance(obj, dict):
        raise SpecError("sponge spec must be a JSON object")
    extra = set(obj) - _SPEC_KEYS
    if extra:
        raise SpecError(f"unknown keys in spec: {sorted(extra)}")
    missing = _SPEC_KEYS - set(obj)
    if missing:
        raise SpecError(f"missing keys in spec: {sorted(missing)}")
    d = obj["d"]
    if isinstance(d, bool) or not isinstance(d, int):
        raise SpecError("'d' must be an integer")
    if not isinstance(obj["bases"], list) or not all(isinstance(b, list) for b in obj["bases"]):
        raise SpecError("'bases' must be a list of lists")
    bases = []
    for lst in obj["bases"]:
        row = []
        for m in lst:
            if not isinstance(m, dict):
                raise SpecError("base map must be an object with keys 'r' and 't'")
            if set(m) != _MAP_KEYS:
                raise SpecError(f"base map keys must be exactly 'r','t', got {sorted(m)}")
            row.append(BaseMap(parse_rational(m["r"]), parse_rational(m["t"])))
        bases.append(tuple(row))
    digits = obj["digits"]
    if not isinstance(digits, list) or not all(
        isinstance(a, list) and all(isinstance(x, int) and not isinstance(x, bool) for x in a)
        for a in digits
    ):
        raise SpecError("'digits' must be a list of integer lists")
    return SpongeSpec(d, tuple(bases), tuple(tuple(a) for a in digits))


def spec_to_json(spec: SpongeSpec) -> dict:
    return {
        "d": spec.d,
        "bases": [
            [{"r": format_rational(m.ratio), "t": format_rational(m.offset)} for m in lst]
            for lst in spec.bases
        ],
        "digits": [list(a) for a in spec.digits],
    }


def load_spec(path) -> SpongeSpec:
    with open(path, encoding="utf-8") as fh:
        try:
            obj = json.load(fh)
        except json.JSONDecodeError as exc:
            raise SpecError(f"{path}: invalid JSON ({exc})") from None
    return spec_from_json(obj)


def parse_word(text: str) -> Word:
    """Parse a cylinder written as dot-separated digit tuples, e.g. ``"0,0.2,2"``."""
    text = text.strip()
    if not text:
        return ()
    try:
        return tuple(tuple(int(x) for x in part.split(",")) for part in text.split("."))
    except ValueError:
        raise SpecError(f"bad cylinder string {text!r}") from None


def format_word(word: Word) -> str:
    return ".".join(",".join(str(x) for x in a) for a in word)
