# presenters/plot_data.py
"""
Plot-ready tables:
- tidy per-metric CSV (one row per record)
- median aggregation over seeds
"""

import os
from dataclasses import asdict
from typing import Iterable, List, Sequence

import pandas as pd

from core.models import ExperimentReport

METRICS = (
    "markov_fro",
    "markov_2inf",
    "hankel_fro",
    "hankel_2inf",
    "wall_time",
    "E1",
    "E2",
    "ls_bound_fro",
    "ratio",
)

# wall_time differs between runs, so it is left out of the byte-stable default set
DETERMINISTIC_METRICS = tuple(m for m in METRICS if m != "wall_time")

COLUMNS = [
    "n", "m", "p", "T", "N", "sigma_w2", "sigma_v2", "seed",
    "estimator", "lambda", "metric", "value", "underdetermined",
]

GROUP_COLUMNS = [c for c in COLUMNS if c not in ("metric", "value")]

FLOAT_FORMAT = "%.17g"


def records_frame(report: ExperimentReport) -> pd.DataFrame:
    """All records, sorted, one column per field; `lam` renamed to `lambda`."""
    rows = [asdict(r) for r in report.sorted().records]
    frame = pd.DataFrame(rows)
    if frame.empty:
        return frame
    return frame.rename(columns={"lam": "lambda"})


def tidy_frame(report: ExperimentReport, metric: str) -> pd.DataFrame:
    if metric not in METRICS:
        raise ValueError(f"unknown metric '{metric}', expected one of {list(METRICS)}")
    frame = records_frame(report)
    if frame.empty:
        return pd.DataFrame(columns=COLUMNS)
    frame = frame.assign(metric=metric, value=frame[metric])
    return frame[COLUMNS].reset_index(drop=True)


def median_table(
    frame: pd.DataFrame,
    group_by: Sequence[str] = ("estimator", "T", "N", "sigma_w2", "sigma_v2"),
) -> pd.DataFrame:
    """Median of `value` over seeds for each group of a tidy frame."""
    keys = list(group_by)
    unknown = [k for k in keys if k not in GROUP_COLUMNS and k not in frame.columns]
    if unknown:
        raise ValueError(f"unknown group-by column(s) {unknown}, expected some of {GROUP_COLUMNS}")
    if frame.empty:
        return pd.DataFrame(columns=keys + ["median", "count"])
    grouped = frame.groupby(keys, sort=True)["value"]
    out = grouped.median().rename("median").to_frame()
    out["count"] = grouped.count()
    return out.reset_index()


def emit_plot_data(
    report: ExperimentReport,
    metric: str,
    out_dir: str,
    group_by: Sequence[str] = ("estimator", "T", "N", "sigma_w2", "sigma_v2"),
) -> List[str]:
    """
    Write `<metric>.csv` (tidy) and `<metric>_median.csv` under out_dir.

    Records are sorted first, so identical reports give byte-identical files.
    """
    frame = tidy_frame(report, metric)
    table = median_table(frame, group_by)
    os.makedirs(out_dir, exist_ok=True)

    tidy_path = os.path.join(out_dir, f"{metric}.csv")
    frame.to_csv(tidy_path, index=False, float_format=FLOAT_FORMAT, lineterminator="\n")

    median_path = os.path.join(out_dir, f"{metric}_median.csv")
    table.to_csv(median_path, index=False, float_format=FLOAT_FORMAT, lineterminator="\n")
    return [tidy_path, median_path]


def emit_all(report: ExperimentReport, out_dir: str, metrics: Iterable[str] = DETERMINISTIC_METRICS) -> List[str]:
    paths: List[str] = []
    for metric in metrics:
        paths.extend(emit_plot_data(report, metric, out_dir))
    return paths
