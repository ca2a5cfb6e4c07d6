import random

import pytest

from malnormal.words import Word

# Filled by test_acceptance; printed once at the end of the session.
ACCEPTANCE: dict[int, tuple[bool, str]] = {}


def W(text, rank=2):
    return Word.parse(text, rank)


@pytest.fixture
def rng():
    return random.Random(1729)


def pytest_terminal_summary(terminalreporter):
    if not ACCEPTANCE:
        return
    terminalreporter.section("acceptance criteria")
    for n in sorted(ACCEPTANCE):
        ok, detail = ACCEPTANCE[n]
        terminalreporter.write_line(f"criterion {n:2d}: {'PASS' if ok else 'FAIL'}  {detail}")
