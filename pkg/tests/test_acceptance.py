"""Acceptance suite: every criterion at its stated tolerance, one line each.

Run with ``pytest tests/test_acceptance.py -v -s`` to see the per-criterion
pass/fail lines; the same checks back the CLI ``check-all`` subcommand.
"""

import pytest

from harmonic_groups import checks

SEED = 7

CRITERION_NAMES = [name for name, _ in checks.CRITERIA]


@pytest.mark.parametrize("name", CRITERION_NAMES)
def test_criterion(name):
    result = checks.run_check(name, SEED)
    status = "PASS" if result.passed else "FAIL"
    print(f"[{status}] {name} ({result.seconds:.1f}s): {result.detail}")
    assert result.passed, f"{name}: {result.detail}"
