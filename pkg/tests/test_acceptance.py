"""The eighteen acceptance criteria at their stated tolerances and budgets.

Monte Carlo campaigns carry the ``slow`` marker but run by default; use
``-m "not slow"`` for the deterministic subset only.
"""
import pytest

from artifact import validation
from artifact.rng import Seed

from conftest import ACCEPTANCE

SEED = Seed(0, 0)
MC = sorted(set(validation.FULL) - set(validation.FAST))


def _line(k, rows, ok):
    worst = max(r.runtime for r in rows)
    detail = "; ".join(f"{r.check} {r.value:.4g} {r.op} {r.tolerance:.4g}"
                       f"{'' if r.passed else ' FAILED'}" for r in rows)
    budget = f"{worst:.1f}s/{validation.BUDGET[k]}s"
    return f"criterion {k:2d}: {'PASS' if ok else 'FAIL'} [{budget}] {detail}"


@pytest.mark.parametrize("k", [pytest.param(k, marks=pytest.mark.slow) if k in MC else k
                               for k in validation.FULL])
def test_criterion(k):
    rows = validation.run_criterion(k, SEED)
    in_budget = max(r.runtime for r in rows) < validation.BUDGET[k]
    ok = all(r.passed for r in rows) and in_budget
    line = _line(k, rows, ok)
    ACCEPTANCE[k] = (ok, line, len(rows))
    print(line)
    assert all(r.passed for r in rows), line
    assert in_budget, line


def test_full_suite_row_count():
    if set(ACCEPTANCE) != set(validation.FULL):
        pytest.skip("needs every criterion in the same session")
    assert sum(v[2] for v in ACCEPTANCE.values()) >= 25
