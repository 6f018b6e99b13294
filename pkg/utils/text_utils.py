# utils/text_utils.py
"""Text normalization utilities for config parsing."""

import re
from typing import List


def normalize_text(text: str) -> str:
    """
    Normalize one config value for consistent parsing.

    Handles:
    - Different dash types (em-dash, en-dash, minus sign)
    - Multiple whitespace
    - "X to Y" / "X through Y" → "X-Y"
    """
    s = text.strip()

    # Normalize dashes
    s = s.replace("—", "-").replace("–", "-").replace("−", "-")

    # Normalize whitespace
    s = re.sub(r"\s+", " ", s)

    # "4 to 9" → "4-9"
    s = re.sub(r"(\d)\s+(?:to|through|till|until)\s+(\d)", r"\1-\2", s, flags=re.I)

    # "a - b" → "a-b"
    s = re.sub(r"(\d)\s*-\s*(\d)", r"\1-\2", s)

    return s


def strip_comment(line: str) -> str:
    """Drop everything after '#'."""
    return line.split("#", 1)[0].rstrip()


def split_list(value: str) -> List[str]:
    """Split on commas, semicolons or whitespace; empty items are dropped."""
    return [item for item in re.split(r"[,;\s]+", value.strip()) if item]
