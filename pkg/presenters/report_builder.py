# presenters/report_builder.py
"""
Markdown cards for CLI output:
- experiment summary with per-cell medians
- theory bounds, error reports, realizations
- Monte Carlo verification records
"""

from typing import Dict, List, Optional

import numpy as np

from core.models import (
    ErrorReport,
    ExperimentConfig,
    ExperimentReport,
    Realization,
    SweepSummary,
    TheoryBounds,
    VerificationReport,
)
from presenters.plot_data import median_table, tidy_frame
from utils.formatters import format_duration, format_float, format_rate, label_ranges


class ReportBuilder:
    """Build compact markdown summaries of results."""

    def build_experiment_summary(
        self,
        report: ExperimentReport,
        cfg: Optional[ExperimentConfig] = None,
        metric: str = "markov_fro",
    ) -> str:
        """Header, median table over seeds, and the failure list."""
        card = "## 🧪 Experiment Summary\n\n"
        if cfg is not None:
            card += self._format_grid(cfg)

        status = "✅ all cells completed" if report.ok else f"❌ {len(report.failures)} cell(s) failed"
        card += f"**Records:** {len(report.records)} — {status}\n"
        solver_time = sum(r.wall_time for r in report.records)
        card += f"**Estimator time:** {format_duration(solver_time)}\n\n"

        frame = tidy_frame(report, metric)
        if not frame.empty:
            table = median_table(frame)
            card += f"| Estimator | T | N | σ_w² | σ_v² | median {metric} | seeds |\n"
            card += "|-----------|---|---|------|------|------------|-------|\n"
            for row in table.itertuples(index=False):
                card += (
                    f"| {self._estimator_badge(row.estimator)} | {row.T} | {row.N} | "
                    f"{format_float(row.sigma_w2, 3)} | {format_float(row.sigma_v2, 3)} | "
                    f"{format_float(row.median)} | {row.count} |\n"
                )
            flagged = int(frame["underdetermined"].sum())
            if flagged:
                card += f"\n⚠️ {flagged} LS record(s) underdetermined (N < Tp): minimum-norm solution reported\n"

        if report.failures:
            card += "\n### ❌ Failures\n\n"
            for f in report.failures:
                card += f"- T={f.T}, N={f.N}, noise=({f.sigma_w2}, {f.sigma_v2}), seed={f.seed}: {f.message}\n"
        return card

    def build_sweep_card(self, summary: SweepSummary) -> str:
        card = f"## 📉 {summary.metric} vs {summary.axis} ({summary.estimator})\n\n"
        card += f"| {summary.axis} | median |\n|---|---|\n"
        for value, med in zip(summary.values, summary.medians):
            card += f"| {value} | {format_float(med)} |\n"
        if summary.non_monotone is None:
            card += "\n💡 *Grid too short to test for a decrease-then-increase pattern*\n"
        elif summary.non_monotone:
            best = summary.values[int(np.nanargmin(summary.medians))]
            card += f"\n✅ Non-monotone: error decreases then increases (minimum at {summary.axis}={best})\n"
        else:
            card += "\n⚠️ No decrease-then-increase pattern in the medians\n"
        return card

    def build_bounds_card(self, bounds: TheoryBounds, title: str = "Theory Bounds") -> str:
        card = f"## 📐 {title}\n\n| Quantity | Value |\n|----------|-------|\n"
        for key, value in bounds.as_record().items():
            card += f"| {key} | {format_float(value)} |\n"
        card += f"| max(E1, E2) | {format_float(bounds.markov_2inf_bound)} |\n"
        return card

    def build_error_card(self, err: ErrorReport, label: str) -> str:
        return (
            f"### {label}\n\n"
            "| ‖Δ‖_F | ‖Δ‖_{2,∞} | ‖Δ‖₂ |\n|---|---|---|\n"
            f"| {format_float(err.norm_fro)} | {format_float(err.norm_2inf)} | {format_float(err.norm_spec)} |\n"
        )

    def build_realization_card(self, real: Realization, distance: Optional[float] = None) -> str:
        sv = ", ".join(format_float(s, 3) for s in real.singular_values[: min(8, len(real.singular_values))])
        card = f"## 🔧 Realization (order r = {real.r})\n\n"
        card += f"**Leading singular values:** {sv}\n"
        if distance is not None:
            card += f"\n**Markov distance to reference:** {format_float(distance)}\n"
        return card

    def build_verification_card(self, vr: VerificationReport) -> str:
        icon = "✅" if vr.success_rate == vr.success_rate and vr.success_rate >= 0.95 else "⚠️"
        card = f"## {icon} {vr.lemma}\n\n"
        card += "| Parameter | Value |\n|-----------|-------|\n"
        for key, value in vr.params.items():
            card += f"| {key} | {value} |\n"
        card += f"| trials | {vr.trials} |\n"
        card += f"| success rate | {format_rate(vr.success_rate)} |\n"
        card += f"| hypothesis met | {'yes' if vr.hypothesis_met else 'no'} |\n"
        if vr.margin_quantiles:
            card += "\n**Margins:** " + ", ".join(
                f"{k}={format_float(v)}" for k, v in vr.margin_quantiles.items()
            ) + "\n"
        rates: Dict[str, float] = vr.extra.get("term_success", {}) if vr.extra else {}
        if rates:
            card += "\n**Per-term success:** " + ", ".join(f"({k}) {format_rate(v)}" for k, v in rates.items()) + "\n"
        return card

    # ═══════════════════════════════════════════════════════════
    # Helpers
    # ═══════════════════════════════════════════════════════════

    def _format_grid(self, cfg: ExperimentConfig) -> str:
        noise = ", ".join(f"{w}:{v}" for w, v in cfg.noise_grid)
        return (
            "| Parameter | Value |\n|-----------|-------|\n"
            f"| **Dims** | n={cfg.n}, m={cfg.m}, p={cfg.p} |\n"
            f"| **T** | {self._format_list(cfg.T_grid)} |\n"
            f"| **N** | {self._format_list(cfg.N_grid)} |\n"
            f"| **Noise (σ_w²:σ_v²)** | {noise} |\n"
            f"| **Seeds** | {label_ranges(cfg.seeds)} |\n"
            f"| **λ rule** | {cfg.lambda_rule} |\n\n"
        )

    @staticmethod
    def _format_list(values: List[int]) -> str:
        if list(values) == sorted(set(values)):
            return label_ranges(values)
        return ", ".join(str(v) for v in values)

    @staticmethod
    def _estimator_badge(name: str) -> str:
        return {"lasso": "🟢 **lasso**", "ls": "🔵 **ls**"}.get(name, name)
