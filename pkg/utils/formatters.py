# utils/formatters.py
"""Formatting utilities for numbers, durations and index ranges."""

import math
from itertools import groupby
from typing import Iterable, List, Optional, Tuple


def format_float(value: Optional[float], digits: int = 4) -> str:
    """Fixed or scientific notation depending on magnitude; '—' for missing values."""
    if value is None:
        return "—"
    if isinstance(value, float) and math.isnan(value):
        return "nan"
    if isinstance(value, float) and math.isinf(value):
        return "∞" if value > 0 else "-∞"
    if value != 0 and (abs(value) < 10 ** -(digits - 1) or abs(value) >= 10 ** 6):
        return f"{value:.{digits - 1}e}"
    return f"{value:.{digits}f}"


def format_rate(rate: Optional[float]) -> str:
    """Success rate as a percentage."""
    if rate is None or (isinstance(rate, float) and math.isnan(rate)):
        return "—"
    return f"{100.0 * rate:.1f}%"


def format_duration(seconds: float) -> str:
    """'850 ms', '12.3 s' or '4m 05s'."""
    if seconds < 1:
        return f"{seconds * 1000:.0f} ms"
    if seconds < 60:
        return f"{seconds:.1f} s"
    m, s = divmod(int(round(seconds)), 60)
    return f"{m}m {s:02d}s"


def compress_ranges(indices: Iterable[int]) -> List[Tuple[int, int]]:
    """Sorted unique integers as inclusive runs: [1, 2, 3, 5, 6, 8] → [(1, 3), (5, 6), (8, 8)]."""
    runs: List[Tuple[int, int]] = []
    for _, group in groupby(enumerate(sorted(set(indices))), key=lambda pair: pair[1] - pair[0]):
        values = [v for _, v in group]
        runs.append((values[0], values[-1]))
    return runs


def label_ranges(indices: List[int]) -> str:
    """Seed or grid label: [0, 1, 2, 3, 7] → '0–3, 7'."""
    return ", ".join(f"{s}–{e}" if s != e else f"{s}" for s, e in compress_ranges(indices))
