"""Every acceptance criterion at its stated tolerance, one pass/fail line each.

Run ``pytest tests/test_acceptance.py -s`` to see the lines.
"""

import pytest

from fint import acceptance as acc


@pytest.mark.parametrize("number", sorted(acc.CRITERIA))
def test_criterion(number, capsys):
    result = acc.run_criterion(number, seed=42)
    with capsys.disabled():
        print("\n" + result.line())
    assert result.number == number
    assert result.passed, result.line()


def test_every_criterion_has_one_command():
    owners = [n for nums in acc.COMMANDS.values() for n in nums]
    assert sorted(owners) == sorted(acc.CRITERIA)
