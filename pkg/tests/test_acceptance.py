"""Numbered acceptance criteria, one test each, at their fixed tolerances.

Each test prints a single ``criterion NN PASS/FAIL ...`` line.  A failing
criterion fails its test; the measured numbers are in the assertion message.
"""

import json

import pytest

from fracfilt import acceptance


@pytest.mark.parametrize("number", sorted(acceptance.CRITERIA))
def test_criterion(number, capsys):
    result = acceptance.run(number)
    with capsys.disabled():
        print("\n" + acceptance.format_result(result), flush=True)
    detail = json.dumps(result.details, default=str, sort_keys=True)
    assert result.passed, f"{acceptance.format_result(result)}\n{detail}"
