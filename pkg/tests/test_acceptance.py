"""One test per acceptance criterion; each prints a PASS/FAIL line with its measurement."""
import pytest

from artifact.verify import CHECKS, run_check

IDS = [cid for cid, *_ in CHECKS if cid.isdigit()]


def test_all_criteria_present():
    assert IDS == [str(i) for i in range(1, 15)]


@pytest.mark.parametrize("cid", IDS)
def test_criterion(cid, capsys):
    res = run_check(cid)
    with capsys.disabled():
        print("\n" + res.line())
    assert res.passed, res.detail
