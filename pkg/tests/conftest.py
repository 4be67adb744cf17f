from __future__ import annotations

import random
import sys
from pathlib import Path

import pytest

sys.path.insert(0, str(Path(__file__).parent))

from deprof.relation import Relation, from_rows

# acceptance criteria report one pass/fail line each at the end of the run
_ACCEPTANCE: dict[str, str] = {}


def record_acceptance(criterion: str, passed: bool, detail: str = "") -> None:
    status = "PASS" if passed else "FAIL"
    _ACCEPTANCE[criterion] = f"{status}{f' ({detail})' if detail else ''}"


def pytest_terminal_summary(terminalreporter, exitstatus, config):
    if not _ACCEPTANCE:
        return
    terminalreporter.section("acceptance criteria")
    for criterion, status in sorted(_ACCEPTANCE.items()):
        terminalreporter.write_line(f"{status}  {criterion}")


def random_relation(
    rng: random.Random,
    max_attrs: int = 6,
    max_rows: int = 30,
    max_domain: int = 4,
    null_rate: float = 0.0,
    nulls_distinct: bool = False,
) -> Relation:
    m = rng.randint(2, max_attrs)
    n = rng.randint(1, max_rows)
    domains = [rng.randint(1, max_domain) for _ in range(m)]
    rows = []
    for _ in range(n):
        row = []
        for a in range(m):
            if null_rate and rng.random() < null_rate:
                row.append(None)
            else:
                row.append(rng.randint(0, domains[a] - 1))
        rows.append(row)
    names = [f"a{i}" for i in range(m)]
    return from_rows(names, rows, nulls_distinct=nulls_distinct)


@pytest.fixture
def rng() -> random.Random:
    return random.Random(0xD5EED)
