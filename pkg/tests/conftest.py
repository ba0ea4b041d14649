import sys
from fractions import Fraction
from pathlib import Path

import pytest

from lgsponge.model import SpongeSpec

sys.path.insert(0, str(Path(__file__).parent))

ROOT = Path(__file__).resolve().parent.parent
SPECS = ROOT / "specs"
CONFIGS = ROOT / "configs"

F = Fraction


def dust():
    return SpongeSpec.grid((4, 5), [(0, 0), (2, 2)])


def counterexample():
    return SpongeSpec.grid((3, 4), [(0, 0), (1, 2), (2, 0)])


def carpet():
    return SpongeSpec.grid((2, 3), [(0, 0), (1, 1), (1, 2)])


def cube(sizes=(2, 3)):
    import itertools

    return SpongeSpec.grid(sizes, list(itertools.product(*[range(n) for n in sizes])))


def cantor():
    return SpongeSpec.grid((3,), [(0,), (2,)])


@pytest.fixture
def spec_dir():
    return SPECS


# -- acceptance report ---------------------------------------------------------

ACCEPTANCE_LINES: list[str] = []


def pytest_terminal_summary(terminalreporter):
    if ACCEPTANCE_LINES:
        terminalreporter.section("acceptance criteria")
        for line in ACCEPTANCE_LINES:
            terminalreporter.write_line(line)
