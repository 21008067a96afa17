import random

import pytest

from cellswitch.netmodel import SMALL_KINDS, MacroCell
from cellswitch.switching import PolicyInput

ACCEPTANCE_LINES: list[str] = []


def record_acceptance(label: str, ok: bool, detail: str = "") -> None:
    ACCEPTANCE_LINES.append(f"{'PASS' if ok else 'FAIL'}  {label}" + (f"  ({detail})" if detail else ""))


def pytest_terminal_summary(terminalreporter):
    if ACCEPTANCE_LINES:
        terminalreporter.section("acceptance criteria")
        for line in ACCEPTANCE_LINES:
            terminalreporter.write_line(line)


def random_instance(rng: random.Random, n: int) -> PolicyInput:
    """Mixed-kind cell with loads spread so that capacity actually binds."""
    kinds = [rng.choice(SMALL_KINDS) for _ in range(n)]
    cell = MacroCell.from_kinds(kinds)
    loads = []
    for _ in range(n):
        r = rng.random()
        if r < 0.2:
            loads.append(0.0)
        elif r < 0.6:
            loads.append(rng.uniform(0.0, 0.2))
        else:
            loads.append(rng.random())
    return PolicyInput(cell, loads, rng.uniform(0.0, 0.95))


@pytest.fixture
def rng():
    return random.Random(1234)
