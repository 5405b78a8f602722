"""One test per acceptance criterion. Each result line is echoed in the
terminal summary as ``criterion N: PASS/FAIL detail``."""
import pytest

import conftest
from cranebeach.acceptance import CHECKS, run_check


@pytest.mark.parametrize("n", sorted(CHECKS))
def test_criterion(n):
    res = run_check(n)
    conftest.CRITERIA[n] = (res.ok, f"{res.detail} [{res.seconds:.1f}s]")
    print(res.line())
    assert res.ok, res.detail
