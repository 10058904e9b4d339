"""Every acceptance criterion at its stated tolerance; one PASS/FAIL line each."""

import pytest

from qorient.verification import CRITERIA, run_criteria


@pytest.fixture(scope="module")
def results():
    return {r.name: r for r in run_criteria()}


@pytest.mark.parametrize("name", list(CRITERIA))
def test_criterion(name, results, capsys):
    r = results[name]
    with capsys.disabled():
        print(f"\n[acceptance] {r.row()}")
    detail = "; ".join(f"{c.label}={c.value:.3e} ({'ok' if c.passed else 'FAIL'})" for c in r.checks)
    assert r.passed, r.error or detail
