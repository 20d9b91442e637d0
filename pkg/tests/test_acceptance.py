"""Acceptance criteria, one test each; every test prints its pass/fail line."""

import pytest

from sharpcy.acceptance import CRITERIA


@pytest.mark.parametrize("criterion", CRITERIA, ids=[f"criterion_{i}" for i in range(1, len(CRITERIA) + 1)])
def test_criterion(criterion, capsys):
    result = criterion()
    with capsys.disabled():
        print("\n" + result.line())
    assert result.passed, result.details


if __name__ == "__main__":
    from sharpcy.acceptance import run_all

    raise SystemExit(0 if all(r.passed for r in run_all()) else 1)
