# parsers/config_parser.py
"""
Flat key/value experiment config parser that handles:
- "key = value" or "key: value" lines, '#' comments, blank lines
- integer lists with ranges: "T = 2-16", "seeds = 0-9, 20"
- noise pairs written σ_w²:σ_v²: "noise = 0.1:0.1, 0.01:0.01"
- presets: "preset = desk" / "preset = full" (applied first, other keys override)
"""

import re
from typing import Dict, List, Optional, Tuple

from pydantic import ValidationError

from core.errors import ConfigError
from core.models import ExperimentConfig
from utils.text_utils import normalize_text, split_list, strip_comment

PRESETS: Dict[str, Dict] = {
    "desk": {"n": 40, "m": 10, "p": 10, "T_grid": [10], "N_grid": [40, 80, 160, 320]},
    "full": {"n": 200, "m": 50, "p": 50, "T_grid": [20], "N_grid": [2000]},
}

# config key → (ExperimentConfig field, kind)
KEYS: Dict[str, Tuple[str, str]] = {
    "n": ("n", "int"),
    "m": ("m", "int"),
    "p": ("p", "int"),
    "bandwidth": ("bandwidth", "int"),
    "target_rho": ("target_rho", "float"),
    "T": ("T_grid", "int_list"),
    "N": ("N_grid", "int_list"),
    "noise": ("noise_grid", "noise_list"),
    "sigma_u": ("sigma_u", "float"),
    "seeds": ("seeds", "int_list"),
    "base_seed": ("base_seed", "int"),
    "lambda_rule": ("lambda_rule", "str"),
    "c0": ("c0", "float"),
    "epsilon": ("epsilon", "float"),
    "lambda_value": ("lambda_value", "float"),
    "estimators": ("estimators", "str_list"),
    "outputs": ("outputs", "str"),
    "hankel_order": ("hankel_order", "optional_int"),
    "tau_max": ("tau_max", "int"),
}

LINE_PATTERN = re.compile(r"^\s*([A-Za-z_]\w*)\s*[=:]\s*(.*?)\s*$")
RANGE_PATTERN = re.compile(r"^(\d+)-(\d+)$")
NOISE_PATTERN = re.compile(r"^([0-9.eE+-]+):([0-9.eE+-]+)$")


class ExperimentConfigParser:
    """Parse experiment config documents into a validated ExperimentConfig."""

    def parse_file(self, path: str, overrides: Optional[Dict[str, str]] = None) -> ExperimentConfig:
        try:
            with open(path, encoding="utf-8") as fh:
                text = fh.read()
        except OSError as e:
            raise ConfigError(f"cannot read config file {path}: {e}") from None
        return self.parse_text(text, overrides)

    def parse_text(self, text: str, overrides: Optional[Dict[str, str]] = None) -> ExperimentConfig:
        """
        Parse a document; `overrides` holds raw string values keyed like the file
        (e.g. {"seeds": "0-4"}) and wins over the file.

        Examples:
            "T = 2-5"             → T_grid [2, 3, 4, 5]
            "noise = 0.1:0.1"     → noise_grid [(0.1, 0.1)]
            "preset = full"       → n=200, m=p=50, T=[20], N=[2000]
        """
        raw = self._read_pairs(text)
        for key, value in (overrides or {}).items():
            if key not in KEYS and key != "preset":
                raise ConfigError(f"unknown override key '{key}'")
            if value is not None:
                raw[key] = (0, str(value))

        fields: Dict = {}
        preset = raw.pop("preset", None)
        if preset is not None:
            name = preset[1].strip().lower()
            if name not in PRESETS:
                raise ConfigError(f"line {preset[0]}: unknown preset '{name}', expected one of {sorted(PRESETS)}")
            fields.update(PRESETS[name])

        for key, (lineno, value) in raw.items():
            field, kind = KEYS[key]
            try:
                fields[field] = self._convert(value, kind)
            except ValueError as e:
                raise ConfigError(f"{self._where(lineno)}key '{key}': {e}") from None

        try:
            return ExperimentConfig(**fields)
        except ValidationError as e:
            raise ConfigError(f"invalid experiment config: {e}") from None

    # ═══════════════════════════════════════════════════════════
    # Line handling
    # ═══════════════════════════════════════════════════════════

    def _read_pairs(self, text: str) -> Dict[str, Tuple[int, str]]:
        pairs: Dict[str, Tuple[int, str]] = {}
        for lineno, line in enumerate(text.splitlines(), start=1):
            body = strip_comment(line)
            if not body.strip():
                continue
            match = LINE_PATTERN.match(body)
            if not match:
                raise ConfigError(f"line {lineno}: expected 'key = value', got {line.strip()!r}")
            key, value = match.group(1), match.group(2)
            if key not in KEYS and key != "preset":
                raise ConfigError(f"line {lineno}: unknown key '{key}'")
            if key in pairs:
                raise ConfigError(f"line {lineno}: duplicate key '{key}'")
            pairs[key] = (lineno, value)
        return pairs

    @staticmethod
    def _where(lineno: int) -> str:
        return f"line {lineno}: " if lineno else ""

    # ═══════════════════════════════════════════════════════════
    # Value conversion
    # ═══════════════════════════════════════════════════════════

    def _convert(self, value: str, kind: str):
        value = normalize_text(value)
        if kind == "int":
            return self._int(value)
        if kind == "float":
            return self._float(value)
        if kind == "str":
            if not value:
                raise ValueError("empty value")
            return value
        if kind == "optional_int":
            return None if value.lower() in ("", "none", "auto") else self._int(value)
        if kind == "int_list":
            return self.parse_int_list(value)
        if kind == "str_list":
            return [item.lower() for item in split_list(value)]
        if kind == "noise_list":
            return self.parse_noise_list(value)
        raise ValueError(f"unsupported kind {kind}")

    @staticmethod
    def _int(value: str) -> int:
        try:
            return int(value)
        except ValueError:
            raise ValueError(f"expected an integer, got {value!r}") from None

    @staticmethod
    def _float(value: str) -> float:
        try:
            return float(value)
        except ValueError:
            raise ValueError(f"expected a number, got {value!r}") from None

    def parse_int_list(self, value: str) -> List[int]:
        """'2-5, 8' → [2, 3, 4, 5, 8]; order of first appearance, duplicates dropped."""
        out: List[int] = []
        for item in split_list(normalize_text(value)):
            match = RANGE_PATTERN.match(item)
            if match:
                start, end = int(match.group(1)), int(match.group(2))
                if end < start:
                    raise ValueError(f"descending range {item!r}")
                values = range(start, end + 1)
            else:
                values = [self._int(item)]
            out.extend(v for v in values if v not in out)
        if not out:
            raise ValueError("empty list")
        return out

    def parse_noise_list(self, value: str) -> List[Tuple[float, float]]:
        """'0.1:0.1, 0:0.01' → [(0.1, 0.1), (0.0, 0.01)]."""
        pairs = []
        for item in split_list(value):
            match = NOISE_PATTERN.match(item)
            if not match:
                raise ValueError(f"noise pairs are written 'sigma_w2:sigma_v2', got {item!r}")
            pairs.append((self._float(match.group(1)), self._float(match.group(2))))
        if not pairs:
            raise ValueError("empty list")
        return pairs


def format_config(cfg: ExperimentConfig) -> str:
    """Render an ExperimentConfig back into the flat key/value format."""
    from utils.formatters import compress_ranges

    def ints(values):
        return ", ".join(f"{s}-{e}" if e > s else f"{s}" for s, e in compress_ranges(values)) \
            if list(values) == sorted(set(values)) else ", ".join(str(v) for v in values)

    lines = [
        f"n = {cfg.n}",
        f"m = {cfg.m}",
        f"p = {cfg.p}",
        f"bandwidth = {cfg.bandwidth}",
        f"target_rho = {cfg.target_rho!r}",
        f"T = {ints(cfg.T_grid)}",
        f"N = {ints(cfg.N_grid)}",
        "noise = " + ", ".join(f"{w!r}:{v!r}" for w, v in cfg.noise_grid),
        f"sigma_u = {cfg.sigma_u!r}",
        f"seeds = {ints(cfg.seeds)}",
        f"base_seed = {cfg.base_seed}",
        f"lambda_rule = {cfg.lambda_rule}",
        f"c0 = {cfg.c0!r}",
        f"epsilon = {cfg.epsilon!r}",
        f"lambda_value = {cfg.lambda_value!r}",
        f"estimators = {', '.join(cfg.estimators)}",
        f"outputs = {cfg.outputs}",
        f"hankel_order = {'auto' if cfg.hankel_order is None else cfg.hankel_order}",
        f"tau_max = {cfg.tau_max}",
    ]
    return "\n".join(lines) + "\n"
