from pathlib import Path

import numpy as np
import pytest

from banditmt.environment import ArmCatalog, Dataset, EvalRecord

FIXTURES = Path(__file__).parent / "fixtures"


@pytest.fixture
def fixtures_dir():
    return FIXTURES


def make_dataset(score_rows, domains=None, embeddings=None, names=None):
    score_rows = np.asarray(score_rows, dtype=float)
    n, k = score_rows.shape
    names = names or [f"arm{i}" for i in range(k)]
    domains = domains or ["d"] * n
    records = [
        EvalRecord(
            id=f"r{i}",
            domain=domains[i],
            source_tokens=("w",) * (1 + i % 7),
            arm_scores=score_rows[i],
            embedding=None if embeddings is None else embeddings[i],
        )
        for i in range(n)
    ]
    return Dataset(records, ArmCatalog(tuple(names)))


# acceptance results collected by tests/test_acceptance.py
ACCEPTANCE_RESULTS: list[tuple[str, bool, str]] = []


def pytest_terminal_summary(terminalreporter):
    if not ACCEPTANCE_RESULTS:
        return
    terminalreporter.section("acceptance criteria")
    for name, ok, detail in ACCEPTANCE_RESULTS:
        terminalreporter.write_line(f"[{'PASS' if ok else 'FAIL'}] {name}: {detail}")
