# tests/test_utils.py
import math

import pytest

from utils.formatters import compress_ranges, format_duration, format_float, format_rate, label_ranges
from utils.text_utils import normalize_text, split_list, strip_comment


@pytest.mark.parametrize("indices, expected", [
    ([1, 2, 3, 5, 6, 8], [(1, 3), (5, 6), (8, 8)]),
    ([8, 1, 2, 2, 3], [(1, 3), (8, 8)]),
    ([], []),
])
def test_compress_ranges(indices, expected):
    assert compress_ranges(indices) == expected


def test_label_ranges():
    assert label_ranges([0, 1, 2, 3, 7]) == "0–3, 7"


@pytest.mark.parametrize("value, expected", [
    (None, "—"),
    (0.0, "0.0000"),
    (1.23456, "1.2346"),
    (1.5e-6, "1.500e-06"),
    (math.inf, "∞"),
    (math.nan, "nan"),
])
def test_format_float(value, expected):
    assert format_float(value) == expected


def test_format_rate():
    assert format_rate(0.956) == "95.6%"
    assert format_rate(math.nan) == "—"


@pytest.mark.parametrize("seconds, expected", [(0.25, "250 ms"), (12.34, "12.3 s"), (245, "4m 05s")])
def test_format_duration(seconds, expected):
    assert format_duration(seconds) == expected


@pytest.mark.parametrize("text, expected", [
    ("  2 to 5 ", "2-5"),
    ("2 – 5", "2-5"),
    ("0.1:0.1,   1e-3:1e-3", "0.1:0.1, 1e-3:1e-3"),
])
def test_normalize_text(text, expected):
    assert normalize_text(text) == expected


def test_split_and_strip():
    assert split_list("lasso, ls;ridge  x") == ["lasso", "ls", "ridge", "x"]
    assert strip_comment("T = 4  # horizon") == "T = 4"
