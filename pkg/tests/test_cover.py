import itertools
import math
from fractions import Fraction as F

import numpy as np
import pytest
from hypothesis import given, reject, settings
from hypothesis import strategies as st

from conftest import cantor, counterexample, cube, dust
from lgsponge.cover import (
    BudgetExceeded,
    PreconditionError,
    boundary_box_bracket,
    boundary_stats,
    boundary_union_measure,
    box_count_bracket,
    delta_blocking,
    face_names,
    mesh_bracket,
    pillar,
    r_star,
    refine,
    shortest_side,
    uniform_pillars,
    word_of_index,
)
from lgsponge.measure import mu_word, weights
from lgsponge.model import BaseMap, SpongeSpec, word_map
from specgen import spec_and_word, specs


def test_pillar_examples():
    ce = counterexample()
    assert pillar(ce, ()).intervals == ((0, 1), (0, 1))
    assert pillar(ce, ((1, 2),)).intervals == ((F(1, 3), F(2, 3)), (F(1, 2), F(3, 4)))
    assert pillar(ce, ((1, 2), (1, 2))).intervals == ((F(4, 9), F(5, 9)), (F(10, 16), F(11, 16)))


def test_shortest_side_and_r_star():
    spec = dust()
    assert shortest_side(spec, ()) == 1
    assert shortest_side(spec, ((0, 0), (2, 2), (0, 0))) == F(1, 125)
    assert r_star(spec) == F(1, 5)
    mixed = SpongeSpec(
        2,
        ((BaseMap(F(1, 2), F(0)), BaseMap(F(1, 2), F(1, 2))), (BaseMap(F(1, 3), F(0)), BaseMap(F(1, 4), F(3, 4)))),
        ((0, 0), (1, 1)),
    )
    assert shortest_side(mixed, ((0, 0), (1, 1))) == F(1, 12)
    assert r_star(mixed) == F(1, 4)


def test_blocking_uniform_ratio_is_a_level():
    spec = dust()
    for k in (1, 2, 3):
        blk = delta_blocking(spec, F(1, 5) ** k)
        assert blk.words == tuple(itertools.product(spec.digits, repeat=k))
        assert all(s == F(1, 5) ** k for s in blk.sides)


def test_blocking_near_one_gives_length_one_words():
    spec = cantor()
    blk = delta_blocking(spec, F(1, 2))
    assert blk.words == (((0,),), ((2,),))


def test_blocking_rejects_bad_delta():
    for bad in (F(0), F(1), F(3, 2)):
        with pytest.raises(PreconditionError):
            delta_blocking(dust(), bad)


def test_blocking_budget():
    with pytest.raises(BudgetExceeded):
        delta_blocking(counterexample(), F(1, 4**9), budget=1000)


@settings(max_examples=60, deadline=None)
@given(specs(max_d=3), st.integers(2, 40))
def test_blocking_partition(spec, inv):
    delta = F(1, inv)
    blk = delta_blocking(spec, delta)
    prof = weights(spec)
    assert math.fsum(mu_word(prof, w) for w in blk.words) == pytest.approx(1.0, abs=1e-8)
    cut = delta / r_star(spec)
    for w, s in zip(blk.words, blk.sides):
        assert s == shortest_side(spec, w) and s < cut
        assert len(w) == 1 or shortest_side(spec, w[:-1]) >= cut
        if cut <= 1:
            assert delta <= s
    assert list(blk.words) == sorted(blk.words)
    for u, v in itertools.combinations(blk.words, 2):
        assert u[: len(v)] != v and v[: len(u)] != u
        p, q = pillar(spec, u), pillar(spec, v)
        assert any(a[1] <= b[0] or b[1] <= a[0] for a, b in zip(p.intervals, q.intervals))


@settings(max_examples=80, deadline=None)
@given(spec_and_word(max_len=3), st.data())
def test_pillars_nest(sw, data):
    spec, word = sw
    extra = tuple(data.draw(st.lists(st.sampled_from(spec.digits), max_size=2)))
    assert pillar(spec, word).contains(pillar(spec, word + extra))
    f = word_map(spec, word)
    for (lo, hi), r in zip(pillar(spec, word).intervals, f.ratios):
        assert hi - lo == r


def test_uniform_pillars_match_words():
    spec = counterexample()
    ps = uniform_pillars(spec, 3)
    for i in (0, 5, 17, 26):
        w = word_of_index(spec, i, 3)
        assert ps.pillar(i) == pillar(spec, w)


def test_refine_reaches_eps_and_certifies_points():
    spec = counterexample()
    eps = F(1, 50)
    ps = refine(spec, ((1, 2),), eps)
    root = pillar(spec, ((1, 2),))
    for i in range(len(ps)):
        p = ps.pillar(i)
        assert p.diameter <= eps
        assert root.contains(p)
        point = [F(int(c), s * den) for c, s, den in zip(ps.certified[i], ps.scale, ps.point_den)]
        assert all(a <= x <= b for x, (a, b) in zip(point, p.intervals))


def test_refine_budget():
    with pytest.raises(BudgetExceeded):
        refine(cube(), (), F(1, 1000), budget=1000)


def test_mesh_cube_exact():
    for n in (2, 3, 4, 6):
        assert box_count_bracket(cube(), (), F(1, n)) == (n * n, n * n)


def test_mesh_cantor_third():
    assert box_count_bracket(cantor(), (), F(1, 3)) == (2, 2)


def test_mesh_precondition():
    with pytest.raises(PreconditionError):
        box_count_bracket(dust(), ((0, 0),), F(1, 5))


def test_mesh_rejects_wide_boxes():
    with pytest.raises(PreconditionError):
        mesh_bracket(uniform_pillars(dust(), 1), F(1, 16))


@pytest.mark.parametrize("inv", [8, 20, 64, 400])
def test_mesh_bracket_on_dust(inv):
    spec = dust()
    delta = F(1, inv)
    n_lo, n_hi = box_count_bracket(spec, (), delta, eps=delta / 4)
    assert 1 <= n_lo <= n_hi <= 3**2 * n_lo
    # attractor points at depth 8 give a lower bound on the true count
    ps = uniform_pillars(spec, 8)
    cells = {
        tuple(int(c) * inv // (s * den) for c, s, den in zip(row, ps.scale, ps.point_den))
        for row in ps.certified
    }
    assert len(cells) <= n_hi


def test_box_counting_law_dust():
    spec = dust()
    prof = weights(spec)
    vals = []
    for k in range(3, 12):
        delta = F(1, 2**k)
        for w in [(), ((2, 2),)]:
            if delta < shortest_side(spec, w):
                n_lo, n_hi = box_count_bracket(spec, w, delta)
                for n in (n_lo, n_hi):
                    vals.append(n * float(delta) ** prof.dim_box / mu_word(prof, w))
    assert max(vals) / min(vals) <= 100


@settings(max_examples=40, deadline=None)
@given(spec_and_word(max_len=1, max_d=2), st.integers(3, 12), st.integers(4, 8))
def test_mesh_bracket_sandwich(sw, inv, ratio):
    spec, word = sw
    delta = shortest_side(spec, word) / inv
    try:
        coarse = box_count_bracket(spec, word, delta, eps=delta / ratio, budget=2 * 10**5)
        fine = box_count_bracket(spec, word, delta, eps=delta / (2 * ratio), budget=2 * 10**5)
    except BudgetExceeded:
        reject()
    assert coarse[0] <= coarse[1]
    assert fine[0] <= fine[1] <= coarse[1]


def test_boundary_stats_counterexample():
    bs = boundary_stats(counterexample(), 2)
    assert face_names(2) == ["x1=0", "x1=1", "x2=0", "x2=1"]
    assert bs.Q_js == pytest.approx((1 / 3, 1 / 3, 2 / 3, 0))
    assert bs.Q == pytest.approx(2 / 3)
    assert bs.boundary_measure == pytest.approx(4 / 9)


def test_boundary_stats_dust():
    bs = boundary_stats(dust(), 3)
    assert bs.Q_js == pytest.approx((0.5, 0, 0.5, 0))
    assert bs.boundary_words == (((0, 0),) * 3,)


def test_boundary_stats_full_cube():
    for m in (1, 2, 3):
        bs = boundary_stats(cube((3, 4)), m)
        assert bs.Q_js == pytest.approx((1 / 3, 1 / 3, 1 / 4, 1 / 4))
        assert bs.boundary_measure < 1
    # every cell of a 2x3 grid touches a face, so only m >= 2 is proper
    assert boundary_stats(cube(), 1).boundary_measure == pytest.approx(1.0)
    assert boundary_stats(cube(), 2).boundary_measure < 1


@settings(max_examples=60, deadline=None)
@given(specs(max_d=3), st.integers(1, 4))
def test_boundary_measure_chain(spec, m):
    bs = boundary_stats(spec, m)
    assert all(0 <= q < 1 for q in bs.Q_js)
    assert bs.boundary_measure <= bs.sum_bound + 1e-12
    assert bs.sum_bound <= 2 * spec.d * bs.Q**m + 1e-12
    assert bs.boundary_measure == pytest.approx(boundary_union_measure(spec, m), abs=1e-12)


def test_boundary_box_bracket_m0_is_full_bracket():
    spec = counterexample()
    delta = F(1, 64)
    assert boundary_box_bracket(spec, (), delta, 0) == box_count_bracket(spec, (), delta)[1]


def test_boundary_box_bracket_dust_single_word():
    spec = dust()
    delta = F(1, 400)
    word = ((0, 0), (0, 0))
    expect = mesh_bracket(refine(spec, word, delta / 16), delta)[1]
    assert boundary_box_bracket(spec, (), delta, 2) == expect


def test_boundary_box_bracket_decays_like_q():
    spec = counterexample()
    vals = []
    for m in range(1, 6):
        delta = r_star(spec) ** m / 2
        vals.append(boundary_box_bracket(spec, (), delta, m) * delta)
    ratios = [b / a for a, b in zip(vals, vals[1:])]
    assert all(r < 0.75 for r in ratios)


def test_boundary_box_bracket_precondition():
    with pytest.raises(PreconditionError):
        boundary_box_bracket(dust(), (), F(1, 25), 2)
