import dataclasses
import math
from fractions import Fraction as F

import pytest
from hypothesis import assume, given, reject, settings
from hypothesis import strategies as st

from conftest import counterexample, cube, dust
from lgsponge.cover import PreconditionError, pillar
from lgsponge.measure import weights
from lgsponge.model import BaseMap, SpongeSpec, project
from lgsponge.structure import (
    IslandCertificate,
    Unknown,
    VacuousBound,
    certificate_problems,
    check_mpl_condition,
    exponent_bounds,
    find_island,
    island_at_depth,
    tau0,
    tau0_global,
    verify_certificate,
)
from specgen import specs


def test_counterexample_island():
    cert = find_island(counterexample())
    assert isinstance(cert, IslandCertificate)
    assert (cert.depth, cert.words) == (1, (((1, 2),),))
    assert (cert.separation, cert.boundary_clearance) == (F(1, 4), F(1, 4))
    assert verify_certificate(counterexample(), cert)


def test_dust_island():
    cert = find_island(dust())
    assert (cert.depth, cert.words) == (1, (((2, 2),),))
    assert (cert.separation, cert.boundary_clearance) == (F(1, 4), F(1, 4))
    assert cert.to_json() == {
        "status": "certified",
        "depth": 1,
        "words": ["2,2"],
        "separation": "1/4",
        "clearance": "1/4",
    }


def test_full_cube_unknown():
    status = find_island(cube(), max_depth=4)
    assert status == Unknown(4)
    assert status.to_json()["status"] == "unknown"


def test_depth_budget_gives_unknown():
    assert find_island(cube(), max_depth=8, budget=6**3) == Unknown(3)


def test_checker_catches_tampering():
    spec = counterexample()
    cert = find_island(spec)
    assert certificate_problems(spec, dataclasses.replace(cert, separation=F(1, 3)))
    assert certificate_problems(spec, dataclasses.replace(cert, boundary_clearance=F(1, 5)))
    assert certificate_problems(spec, dataclasses.replace(cert, words=(((0, 0),),)))
    assert certificate_problems(spec, dataclasses.replace(cert, words=(((1, 2), (0, 0)),)))


def test_mpl_dust_holds():
    rep = check_mpl_condition(dust(), max_depth=4)
    assert rep.holds
    assert [s.depth for s in rep.statuses] == [1, 1]
    out = rep.to_json()
    assert out["maximal_power_law"] is True
    assert "component-counting" in out["verdict"]


def test_mpl_counterexample_inconclusive():
    rep = check_mpl_condition(counterexample(), max_depth=5)
    assert isinstance(rep.statuses[0], Unknown)
    assert isinstance(rep.statuses[1], IslandCertificate)
    assert not rep.holds
    assert rep.to_json()["verdict"].startswith("inconclusive")


def test_mpl_full_cube_all_unknown():
    rep = check_mpl_condition(cube(), max_depth=3)
    assert all(isinstance(s, Unknown) for s in rep.statuses)


def test_exponent_bounds_counterexample():
    b = exponent_bounds(counterexample(), 1, 2)
    assert b.Q == pytest.approx(1 / 3)
    assert b.r_star == F(1, 3)
    assert b.s == pytest.approx(0.5)
    assert b.chi_level == pytest.approx(0.5)
    assert b.chi_lifted == pytest.approx(0.5)
    assert b.tau0 == pytest.approx(math.log(4) / math.log(3))
    out = b.to_json()
    for key in ("tau0", "Q", "r_star", "s", "chi_level", "chi_lifted"):
        assert key in out
    assert "conditional" in out
    # tau = 2 exceeds tau0, outside the lifting step's range
    assert not b.lift_valid
    assert b.chi_lifted_tau0 == pytest.approx(math.log(3) / math.log(4))


def test_exponent_bounds_tau_limit():
    spec = counterexample()
    big = exponent_bounds(spec, 1, 1e12)
    assert big.s == pytest.approx(math.log(1 / 3) / math.log(1 / 3))
    assert exponent_bounds(spec, 1, math.inf).s == pytest.approx(1.0)
    near_one = exponent_bounds(spec, 1, 1 + 1e-9)
    assert near_one.chi_lifted == pytest.approx(near_one.dim_box, abs=1e-6)


def test_exponent_bounds_errors():
    with pytest.raises(PreconditionError):
        exponent_bounds(counterexample(), 1, 1.0)
    with pytest.raises(PreconditionError):
        exponent_bounds(counterexample(), 3, 2.0)
    floating = SpongeSpec.grid((4,), [(1,), (2,)])
    with pytest.raises(VacuousBound):
        exponent_bounds(floating, 1, 2.0)


def test_tau0_examples():
    assert tau0(counterexample()) == pytest.approx(1.2618595, abs=1e-6)
    assert tau0(SpongeSpec.grid((3,), [(0,), (2,)])) == math.inf


@settings(max_examples=40, deadline=None)
@given(specs(max_d=3, max_digits=5))
def test_certificates_are_sound(spec):
    status = find_island(spec, max_depth=3, budget=10**4)
    if isinstance(status, IslandCertificate):
        assert certificate_problems(spec, status) == []
        assert status.separation > 0 and status.boundary_clearance > 0


@settings(max_examples=30, deadline=None)
@given(specs(max_d=2, max_digits=4))
def test_certificates_persist(spec):
    status = find_island(spec, max_depth=2, budget=10**4)
    assume(isinstance(status, IslandCertificate))
    deeper = island_at_depth(spec, status.depth + 1, budget=10**5)
    assert deeper is not None and verify_certificate(spec, deeper)


@settings(max_examples=80, deadline=None)
@given(specs())
def test_tau0_exceeds_one(spec):
    assert tau0(spec) > 1


@settings(max_examples=60, deadline=None)
@given(specs(), st.floats(1.01, 50), st.data())
def test_chi_below_dim_box(spec, tau, data):
    j = data.draw(st.integers(1, spec.d))
    try:
        b = exponent_bounds(spec, j, tau)
    except VacuousBound:
        # the j-th projection stays off every face (e.g. a single interior map)
        reject()
    assert 0 < b.Q < 1
    assert b.chi_lifted < weights(spec).dim_box
    assert b.eta_chain[-1] == b.chi_lifted
    assert b.chi_level == pytest.approx(weights(project(spec, j)).dim_box - b.s)


def test_tau0_with_digit_dependent_ratios():
    # per-digit ordering holds, but the widest coordinate-2 map beats the narrowest coordinate-1 map
    bases = (
        (BaseMap(F(2, 3), F(0)), BaseMap(F(1, 3), F(2, 3))),
        (BaseMap(F(1, 2), F(0)), BaseMap(F(1, 10), F(1, 2))),
    )
    spec = SpongeSpec(2, bases, ((0, 0), (1, 1)))
    assert tau0_global(spec) < 1 < tau0(spec)
    t = tau0(spec)
    for word in [((0, 0),), ((1, 1),), ((0, 0), (1, 1), (1, 1))]:
        sides = [hi - lo for lo, hi in pillar(spec, word).intervals]
        assert float(sides[1]) <= float(sides[0]) ** t * (1 + 1e-12)
