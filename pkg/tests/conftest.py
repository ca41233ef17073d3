from __future__ import annotations

import json
import random

import pytest

from stgeval.core import BoundingBox, Tube


def random_box(rng: random.Random, grid: int | None = None) -> BoundingBox:
    if grid:
        xs = sorted(rng.randint(0, grid) / grid for _ in range(2))
        ys = sorted(rng.randint(0, grid) / grid for _ in range(2))
    else:
        xs = sorted(rng.random() for _ in range(2))
        ys = sorted(rng.random() for _ in range(2))
    return BoundingBox(xs[0], ys[0], xs[1], ys[1])


def random_support(rng: random.Random, lo: int = 0, hi: int = 120, min_size: int = 0) -> list[int]:
    """A support made of 1-3 runs, so fragmented tubes show up often."""
    out: set[int] = set()
    for _ in range(rng.randint(1, 3)):
        a = rng.randint(lo, hi)
        b = min(hi, a + rng.randint(0, 30))
        out.update(range(a, b + 1))
    if rng.random() < 0.1:
        out = set(rng.sample(range(lo, hi + 1), rng.randint(0, 10)))
    while len(out) < min_size:
        out.add(rng.randint(lo, hi))
    return sorted(out)


def random_tube(rng: random.Random, min_size: int = 0, hi: int = 120) -> Tube:
    ts = random_support(rng, 0, hi, min_size)
    return Tube.from_mapping({t: random_box(rng) for t in ts})


def tube_dict(tube: Tube) -> dict:
    return {t: b.as_list() for t, b in tube.items()}


def write_jsonl(path, records):
    with open(path, "w", encoding="utf-8") as fh:
        for r in records:
            fh.write(json.dumps(r) + "\n")
    return path


# PASS/FAIL lines from the acceptance gate, echoed in the terminal summary
ACCEPTANCE_VERDICTS: list[str] = []


def pytest_terminal_summary(terminalreporter):
    if ACCEPTANCE_VERDICTS:
        terminalreporter.section("acceptance criteria")
        for line in ACCEPTANCE_VERDICTS:
            terminalreporter.write_line(line)


@pytest.fixture
def rng():
    return random.Random(20251015)
