"""Delta-ladder experiments: exponent fits, ratio audits and artifact runs."""

from __future__ import annotations

import csv
import hashlib
import io
import json
import math
import os
import time
from concurrent.futures import ThreadPoolExecutor
from dataclasses import dataclass, field
from fractions import Fraction
from pathlib import Path
from typing import Iterable, Sequence

import numpy as np

from . import __version__, kernels
from .connectivity import classify_components, label_cover
from .cover import (
    BudgetExceeded,
    DEFAULT_EPS_RATIO,
    DEFAULT_NODE_BUDGET,
    PreconditionError,
    mesh_bracket,
    r_star,
    refine,
    shortest_side,
)
from .measure import MeasureProfile, mu_word, weights
from .model import (
    SpecError,
    SpongeSpec,
    Word,
    format_rational,
    format_word,
    load_spec,
    parse_rational,
    parse_word,
    spec_to_json,
    validate,
)
from .structure import exponent_bounds

CSV_HEADER = [
    "cylinder", "S", "mu", "delta", "eps", "count", "inner", "boundary",
    "n_lo", "n_hi", "ratio_dim", "ratio_chi",
]


@dataclass(frozen=True)
class Ladder:
    delta_list: tuple[Fraction, ...]
    eps_ratio: int = DEFAULT_EPS_RATIO

    def __post_init__(self):
        ds = tuple(Fraction(x) for x in self.delta_list)
        if not ds:
            raise ValueError("ladder is empty")
        if any(not 0 < x < 1 for x in ds):
            raise ValueError("ladder rungs must lie in (0,1)")
        if any(b >= a for a, b in zip(ds, ds[1:])):
            raise ValueError("ladder must be strictly decreasing")
        object.__setattr__(self, "delta_list", ds)

    @classmethod
    def geometric(cls, delta_max, delta_min, q=Fraction(1, 2), eps_ratio: int = DEFAULT_EPS_RATIO) -> "Ladder":
        delta_max, delta_min, q = Fraction(delta_max), Fraction(delta_min), Fraction(q)
        if not 0 < q < 1:
            raise ValueError("ladder ratio q must lie in (0,1)")
        rungs = []
        x = delta_max
        while x >= delta_min:
            rungs.append(x)
            x *= q
        return cls(tuple(rungs), eps_ratio)

    def __len__(self):
        return len(self.delta_list)


def default_ladder() -> Ladder:
    return Ladder.geometric(Fraction(1, 8), Fraction(1, 2048))


@dataclass(frozen=True)
class Measurement:
    """Everything computed for one (cylinder, delta) pair on a single refinement."""

    word: Word
    delta: Fraction
    eps: Fraction
    count: int
    inner: int
    boundary: int
    n_lo: int
    n_hi: int


def measure_cylinder(
    spec: SpongeSpec,
    word: Word,
    delta: Fraction,
    eps_ratio: int = DEFAULT_EPS_RATIO,
    budget: int = DEFAULT_NODE_BUDGET,
) -> Measurement:
    delta = Fraction(delta)
    eps = delta / eps_ratio
    if eps_ratio < 4:
        raise PreconditionError("eps_ratio must be at least 4")
    ps = refine(spec, word, eps, budget)
    n_lo, n_hi = mesh_bracket(ps, delta)
    ps, labels = label_cover(ps, delta)
    _, inner = classify_components(ps, labels)
    n_inner = int(inner.sum())
    return Measurement(word, delta, eps, len(inner), n_inner, len(inner) - n_inner, n_lo, n_hi)


def _run_tasks(fn, tasks: Sequence, threads: int):
    if threads <= 1 or len(tasks) <= 1:
        return [fn(t) for t in tasks]
    with ThreadPoolExecutor(max_workers=threads) as pool:
        return list(pool.map(fn, tasks))


def measure_grid(
    spec: SpongeSpec,
    cylinders: Sequence[Word],
    ladder: Ladder,
    threads: int = 1,
    budget: int = DEFAULT_NODE_BUDGET,
) -> list[Measurement]:
    """Measurements for every (cylinder, rung), cylinder-major, independent of ``threads``."""
    tasks = [(w, dl) for w in cylinders for dl in ladder.delta_list]
    return _run_tasks(lambda t: measure_cylinder(spec, t[0], t[1], ladder.eps_ratio, budget), tasks, threads)


# -- fits and audits --------------------------------------------------------------


@dataclass(frozen=True)
class FitResult:
    gamma_hat: float
    intercept: float
    residual: float
    table: tuple[tuple[Fraction, int], ...]

    def to_json(self) -> dict:
        return {
            "gamma_hat": self.gamma_hat,
            "intercept": self.intercept,
            "residual": self.residual,
            "table": [{"delta": format_rational(d), "count": c} for d, c in self.table],
        }


def fit_counts(table: Sequence[tuple[Fraction, int]]) -> FitResult:
    """Least-squares slope of log(count) against -log(delta)."""
    if len(table) < 4:
        raise ValueError("an exponent fit needs at least 4 ladder points")
    x = np.array([-math.log(float(d)) for d, _ in table])
    y = np.array([math.log(c) for _, c in table])
    slope, intercept = np.polyfit(x, y, 1)
    resid = y - (slope * x + intercept)
    return FitResult(float(slope), float(intercept), float(np.sqrt(np.mean(resid**2))), tuple(table))


class LadderAborted(BudgetExceeded):
    """A rung ran out of budget; ``table`` holds the rungs finished before it."""

    def __init__(self, message: str, table: list[tuple[Fraction, int]]):
        super().__init__(message)
        self.table = table


def fit_exponent(
    spec: SpongeSpec,
    word: Word = (),
    ladder: Ladder | None = None,
    threads: int = 1,
    budget: int = DEFAULT_NODE_BUDGET,
) -> FitResult:
    word = tuple(word)
    ladder = ladder or default_ladder()

    def one(delta):
        try:
            return measure_cylinder(spec, word, delta, ladder.eps_ratio, budget)
        except BudgetExceeded as exc:
            return exc

    table = []
    for delta, m in zip(ladder.delta_list, _run_tasks(one, ladder.delta_list, threads)):
        if isinstance(m, BudgetExceeded):
            raise LadderAborted(f"rung delta={format_rational(delta)}: {m}", table)
        table.append((m.delta, m.count))
    return fit_counts(table)


def dim_ratio(count: int, mu: float, delta: Fraction, dim: float) -> float:
    """count / (mu * delta^-dim)."""
    return count * math.exp(dim * math.log(float(delta))) / mu


@dataclass(frozen=True)
class RatioAudit:
    rows: tuple[tuple[Word, Fraction, float], ...]
    band: tuple[float, float]
    bound: float

    @property
    def spread(self) -> float:
        return self.band[1] / self.band[0]

    @property
    def verdict(self) -> str:
        return "PASS" if self.spread <= self.bound else "FAIL"

    def to_json(self) -> dict:
        return {
            "rows": [
                {"cylinder": format_word(w), "delta": format_rational(d), "ratio": r}
                for w, d, r in self.rows
            ],
            "band": list(self.band),
            "spread": self.spread,
            "bound": self.bound,
            "verdict": self.verdict,
        }


def audit_rows(
    spec: SpongeSpec, profile: MeasureProfile, measurements: Iterable[Measurement], bound: float = 1e3
) -> RatioAudit:
    """Ratio audit over measurements taken below each cylinder's shortest side."""
    rows = []
    for m in measurements:
        if m.delta >= shortest_side(spec, m.word):
            continue
        rows.append((m.word, m.delta, dim_ratio(m.count, mu_word(profile, m.word), m.delta, profile.dim_box)))
    if not rows:
        raise PreconditionError("no (cylinder, delta) pair satisfies delta < S(R)")
    ratios = [r for _, _, r in rows]
    return RatioAudit(tuple(rows), (min(ratios), max(ratios)), bound)


def ratio_audit(
    spec: SpongeSpec,
    cylinders: Sequence[Word],
    ladder: Ladder,
    bound: float = 1e3,
    threads: int = 1,
    budget: int = DEFAULT_NODE_BUDGET,
) -> RatioAudit:
    """Spread of count / (mu(R) delta^-dim_box) over cylinders and rungs with delta < S(R)."""
    usable = [w for w in cylinders if ladder.delta_list[-1] < shortest_side(spec, w)]
    grid = []
    for w in usable:
        rungs = tuple(d for d in ladder.delta_list if d < shortest_side(spec, w))
        grid.extend(measure_grid(spec, [w], Ladder(rungs, ladder.eps_ratio), threads, budget))
    return audit_rows(spec, weights(spec), grid, bound)


def words_up_to(spec: SpongeSpec, max_len: int) -> list[Word]:
    out: list[Word] = [()]
    level: list[Word] = [()]
    for _ in range(max_len):
        level = [w + (a,) for w in level for a in spec.digits]
        out.extend(level)
    return out


@dataclass(frozen=True)
class ChiAudit:
    chi: float
    rows: tuple[tuple[Fraction, int, float], ...]
    excluded: tuple[Fraction, ...]
    gamma_hat: float | None
    trend: float | None
    verdict: str
    flags: tuple[str, ...] = field(default_factory=tuple)

    def to_json(self) -> dict:
        return {
            "chi": self.chi,
            "rows": [
                {"delta": format_rational(d), "count": c, "normalized": v} for d, c, v in self.rows
            ],
            "excluded": [format_rational(d) for d in self.excluded],
            "gamma_hat": self.gamma_hat,
            "trend": self.trend,
            "verdict": self.verdict,
            "flags": list(self.flags),
        }


def chi_audit(
    spec: SpongeSpec,
    j_fail: int,
    tau: float,
    word: Word = (),
    ladder: Ladder | None = None,
    threads: int = 1,
    budget: int = DEFAULT_NODE_BUDGET,
) -> ChiAudit:
    """Track count * delta^chi / mu(R) along the ladder for the exponent bound at (j_fail, tau).

    Rungs above (r_* S(R))^tau are excluded.  PASS means the last value is at
    most twice the largest of the first three.
    """
    ladder = ladder or default_ladder()
    bounds = exponent_bounds(spec, j_fail, tau)
    chi = bounds.chi_lifted
    profile = weights(spec)
    limit = float(r_star(spec) * shortest_side(spec, word)) ** float(tau)
    kept = tuple(d for d in ladder.delta_list if float(d) <= limit)
    excluded = tuple(d for d in ladder.delta_list if float(d) > limit)
    flags = ["conditional on user assertion"]
    if not bounds.lift_valid:
        flags.append("tau exceeds tau0: lifted bound is not covered by the lifting step")
    if not kept:
        return ChiAudit(chi, (), excluded, None, None, "EMPTY", tuple(flags))
    mu = mu_word(profile, word)
    meas = measure_grid(spec, [tuple(word)], Ladder(kept, ladder.eps_ratio), threads, budget)
    rows = tuple(
        (m.delta, m.count, m.count * math.exp(chi * math.log(float(m.delta))) / mu) for m in meas
    )
    vals = [v for _, _, v in rows]
    verdict = "PASS" if vals[-1] <= 2 * max(vals[:3]) else "FAIL"
    gamma = trend = None
    if len(rows) >= 4:
        fit = fit_counts([(d, c) for d, c, _ in rows])
        gamma = fit.gamma_hat
        trend = gamma - chi
        if gamma > chi:
            flags.append("empirical exponent exceeds chi")
    return ChiAudit(chi, rows, excluded, gamma, trend, verdict, tuple(flags))


# -- experiment runs --------------------------------------------------------------

_CONFIG_KEYS = {"spec", "cylinders", "max_cylinder_length", "ladder", "eps_ratio", "audit_bound", "chi", "budget"}
_LADDER_KEYS = {"delta_max", "delta_min", "q"}
_CHI_KEYS = {"j_fail", "tau"}


@dataclass(frozen=True)
class ExperimentConfig:
    spec_path: Path
    spec: SpongeSpec
    cylinders: tuple[Word, ...]
    ladder: Ladder
    audit_bound: float = 1e3
    chi: tuple[int, float] | None = None
    budget: int = DEFAULT_NODE_BUDGET


def load_config(path) -> ExperimentConfig:
    path = Path(path)
    with open(path, encoding="utf-8") as fh:
        try:
            obj = json.load(fh)
        except json.JSONDecodeError as exc:
            raise SpecError(f"{path}: invalid JSON ({exc})") from None
    if not isinstance(obj, dict):
        raise SpecError("config must be a JSON object")
    extra = set(obj) - _CONFIG_KEYS
    if extra:
        raise SpecError(f"unknown keys in config: {sorted(extra)}")
    if "spec" not in obj or "ladder" not in obj:
        raise SpecError("config needs 'spec' and 'ladder'")
    spec_path = (path.parent / obj["spec"]).resolve()
    spec = load_spec(spec_path)
    report = validate(spec)
    if not report.ok:
        raise SpecError(f"spec fails validation: {report.to_json()['violations']}")

    lad = obj["ladder"]
    if not isinstance(lad, dict) or set(lad) - _LADDER_KEYS or not {"delta_max", "delta_min"} <= set(lad):
        raise SpecError("ladder needs 'delta_max', 'delta_min' and optional 'q'")
    eps_ratio = obj.get("eps_ratio", DEFAULT_EPS_RATIO)
    if isinstance(eps_ratio, bool) or not isinstance(eps_ratio, int) or eps_ratio < 4:
        raise SpecError("eps_ratio must be an integer >= 4")
    try:
        ladder = Ladder.geometric(
            parse_rational(lad["delta_max"]),
            parse_rational(lad["delta_min"]),
            parse_rational(lad.get("q", "1/2")),
            eps_ratio,
        )
    except ValueError as exc:
        raise SpecError(f"bad ladder: {exc}") from None

    if "cylinders" in obj and "max_cylinder_length" in obj:
        raise SpecError("give either 'cylinders' or 'max_cylinder_length', not both")
    if "cylinders" in obj:
        cylinders = tuple(spec.check_word(parse_word(c)) for c in obj["cylinders"])
    else:
        cylinders = tuple(words_up_to(spec, int(obj.get("max_cylinder_length", 0))))

    chi = None
    if "chi" in obj:
        c = obj["chi"]
        if not isinstance(c, dict) or set(c) != _CHI_KEYS:
            raise SpecError("chi must be an object with 'j_fail' and 'tau'")
        chi = (int(c["j_fail"]), float(c["tau"]))
    return ExperimentConfig(
        spec_path,
        spec,
        cylinders,
        ladder,
        float(obj.get("audit_bound", 1e3)),
        chi,
        int(obj.get("budget", DEFAULT_NODE_BUDGET)),
    )


def _fmt_float(x: float) -> str:
    return repr(float(x))


def results_csv(rows: list[dict]) -> str:
    buf = io.StringIO()
    writer = csv.writer(buf, lineterminator="\r\n")
    writer.writerow(CSV_HEADER)
    for r in rows:
        writer.writerow([r[h] for h in CSV_HEADER])
    return buf.getvalue()


def spec_hash(spec: SpongeSpec) -> str:
    blob = json.dumps(spec_to_json(spec), sort_keys=True, separators=(",", ":")).encode()
    return hashlib.sha256(blob).hexdigest()


def run_experiment(config_path, out_dir, threads: int = 1, budget: int | None = None) -> dict:
    """Run the configured sweep and write results.json, results.csv and manifest.json.

    Nothing is written unless the whole computation succeeds.
    """
    t0 = time.perf_counter()
    cfg = load_config(config_path)
    budget = budget if budget is not None else cfg.budget
    spec = cfg.spec
    profile = weights(spec)
    dim = profile.dim_box

    bounds = exponent_bounds(spec, *cfg.chi) if cfg.chi else None
    t_setup = time.perf_counter()
    grid = measure_grid(spec, cfg.cylinders, cfg.ladder, threads, budget)
    t_measure = time.perf_counter()

    rows = []
    for m in grid:
        mu = mu_word(profile, m.word)
        rows.append(
            {
                "cylinder": format_word(m.word),
                "S": format_rational(shortest_side(spec, m.word)),
                "mu": _fmt_float(mu),
                "delta": format_rational(m.delta),
                "eps": format_rational(m.eps),
                "count": m.count,
                "inner": m.inner,
                "boundary": m.boundary,
                "n_lo": m.n_lo,
                "n_hi": m.n_hi,
                "ratio_dim": _fmt_float(dim_ratio(m.count, mu, m.delta, dim)),
                "ratio_chi": (
                    _fmt_float(m.count * math.exp(bounds.chi_lifted * math.log(float(m.delta))) / mu)
                    if bounds
                    else ""
                ),
            }
        )

    fits = []
    for w in cfg.cylinders:
        table = [(m.delta, m.count) for m in grid if m.word == w]
        if len(table) >= 4:
            fits.append({"cylinder": format_word(w), **fit_counts(table).to_json()})
    try:
        audit = audit_rows(spec, profile, grid, cfg.audit_bound).to_json()
    except PreconditionError:
        audit = None
    results = {
        "spec": spec_to_json(spec),
        "dims": profile.to_json(),
        "ladder": [format_rational(d) for d in cfg.ladder.delta_list],
        "eps_ratio": cfg.ladder.eps_ratio,
        "fits": fits,
        "audit": audit,
        "bounds": bounds.to_json() if bounds else None,
        "lemma_box_check": {
            "rows": len(rows),
            "violations": sum(1 for r in rows if r["count"] > 3**spec.d * r["n_hi"]),
        },
    }
    csv_text = results_csv(rows)
    results_text = json.dumps(results, indent=2, sort_keys=True) + "\n"
    t_done = time.perf_counter()
    manifest = {
        "spec_sha256": spec_hash(spec),
        "spec_path": str(cfg.spec_path),
        "tool_version": __version__,
        "kernel_backend": kernels.BACKEND,
        "budget": budget,
        "threads": threads,
        "cylinders": len(cfg.cylinders),
        "rungs": len(cfg.ladder),
        "timings_s": {
            "setup": t_setup - t0,
            "measure": t_measure - t_setup,
            "total": t_done - t0,
        },
    }
    out = Path(out_dir)
    out.mkdir(parents=True, exist_ok=True)
    (out / "results.csv").write_text(csv_text, encoding="utf-8", newline="")
    (out / "results.json").write_text(results_text, encoding="utf-8")
    (out / "manifest.json").write_text(json.dumps(manifest, indent=2, sort_keys=True) + "\n", encoding="utf-8")
    return {"results": results, "rows": rows, "manifest": manifest, "out_dir": str(out)}
