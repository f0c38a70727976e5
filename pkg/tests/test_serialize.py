"""Deterministic JSON/CSV serialization helpers."""

import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from qustat import ValidationError, matrix_from_json, matrix_to_json
from qustat.serialize import dump_json, format_float


def test_matrix_roundtrip():
    m = np.array([[1.0, 2.0 + 3.0j], [2.0 - 3.0j, -4.0]])
    doc = matrix_to_json(m)
    assert doc["dim"] == 2
    np.testing.assert_allclose(matrix_from_json(doc), m, atol=0.0)


def test_matrix_from_json_shape_check():
    with pytest.raises(ValidationError):
        matrix_from_json({"dim": 2, "re": [[1.0]], "im": [[0.0]]})


@settings(max_examples=200, deadline=None)
@given(st.floats(allow_nan=False, allow_infinity=False))
def test_format_float_roundtrips(x):
    assert float(format_float(x)) == x or (x == 0.0 and float(format_float(x)) == 0.0)


def test_format_float_normalizes_negative_zero():
    assert format_float(-0.0) == format_float(0.0)


def test_format_float_rejects_non_finite():
    with pytest.raises(ValidationError):
        format_float(float("nan"))
    with pytest.raises(ValidationError):
        format_float(float("inf"))


def test_dump_json_sorted_and_stable():
    doc = {"b": [1, 2.5], "a": {"y": True, "x": None}}
    text = dump_json(doc, indent=0)
    assert text.index('"a"') < text.index('"b"')
    assert dump_json(doc, indent=0) == text
    assert "\r" not in dump_json(doc, indent=2)


def test_dump_json_escapes_strings():
    text = dump_json({"s": 'a"b\\c\n'}, indent=0)
    assert '"a\\"b\\\\c\\u000a"' in text
