"""The eleven acceptance criteria, one line of output each (run with -s to see them)."""
import pytest

from parisi.acceptance import CRITERIA, run_criterion


@pytest.mark.slow
@pytest.mark.parametrize("number", [c[0] for c in CRITERIA],
                         ids=[f"{c[0]:02d}-{c[1].replace(' ', '_')}" for c in CRITERIA])
def test_criterion(number, capsys):
    res = run_criterion(number)
    with capsys.disabled():
        print("\n" + res.line())
    assert res.passed, res.detail
