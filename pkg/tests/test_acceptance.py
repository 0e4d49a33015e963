"""Acceptance suite: one test per numbered criterion, each printing a PASS/FAIL line.

The same checks back ``fpt validate``.  Budgets are the full ones; the whole
module takes several minutes on one core.
"""

from __future__ import annotations

import pytest

from fptjump.validation import CHECKS

SEED = 0


@pytest.mark.slow
@pytest.mark.parametrize("check", CHECKS, ids=[f"{i:02d}_{c.__name__.removeprefix('check_')}" for i, c in enumerate(CHECKS, 1)])
def test_criterion(check, capsys):
    res = check(SEED, 1, False)
    with capsys.disabled():
        print("\n" + res.summary())
        for row in res.rows:
            mark = "ok " if row.passed else "BAD"
            print(f"      {mark} {row.name}: value={row.value:.10g} reference={row.reference:.10g} tol={row.tolerance:.3g}")
    failed = [r.name for r in res.rows if not r.passed]
    assert not failed, f"criterion {res.number} failed rows: {failed}"
