# tests/test_experiment.py
from dataclasses import asdict

import numpy as np
import pandas as pd
import pytest
from pydantic import ValidationError

import app.experiment as experiment
from app.experiment import (
    cell_seed,
    is_decrease_then_increase,
    run_experiment,
    select_lambda,
    sweep_noise,
    sweep_T,
    system_seed,
)
from core.config import Config
from core.errors import ConfigError, RankCollapseError
from core.estimators import lambda_simulation, lambda_theorem
from core.lti import certify_stability, generate_paper_system
from core.models import ExperimentConfig, ExperimentReport, NoiseConfig
from core.theory import eval_theorem2_bounds
from presenters.plot_data import COLUMNS, emit_all, emit_plot_data
from presenters.report_builder import ReportBuilder


def tiny(**overrides) -> ExperimentConfig:
    fields = dict(n=6, m=2, p=2, bandwidth=1, T_grid=[2, 3], N_grid=[10, 30], noise_grid=[(0.1, 0.1)],
                  seeds=[0, 1], estimators=["lasso", "ls"], tau_max=50)
    fields.update(overrides)
    return ExperimentConfig(**fields)


def _verbose() -> Config:
    config = Config()
    config.VERBOSE = True
    return config


def _without_time(report: ExperimentReport):
    return [{k: v for k, v in asdict(r).items() if k != "wall_time"} for r in report.records]


class TestRunExperiment:
    def test_every_cell_recorded(self):
        report = run_experiment(tiny())
        assert report.ok
        assert len(report.records) == 2 * 2 * 1 * 2 * 2
        keys = [r.sort_key() for r in report.records]
        assert keys == sorted(keys)
        for r in report.records:
            assert np.isfinite(r.markov_fro) and r.markov_fro >= r.markov_2inf
            assert r.hankel_fro >= 0 and r.wall_time >= 0
            assert (r.lam is None) == (r.estimator == "ls")

    def test_deterministic(self):
        assert _without_time(run_experiment(tiny())) == _without_time(run_experiment(tiny()))

    def test_base_seed_changes_draws(self):
        a = run_experiment(tiny(seeds=[0], T_grid=[2], N_grid=[10]))
        b = run_experiment(tiny(seeds=[0], T_grid=[2], N_grid=[10], base_seed=5))
        assert a.records[0].markov_fro != b.records[0].markov_fro

    def test_underdetermined_least_squares(self):
        report = run_experiment(tiny(T_grid=[4], N_grid=[5], seeds=[0]))
        flags = {r.estimator: r.underdetermined for r in report.records}
        assert flags == {"lasso": False, "ls": True}

    def test_failures_are_recorded(self, monkeypatch, capsys):
        original = experiment.run_cell

        def collapse_at_T4(cfg, sys, cert, T, *args):
            if T == 4:
                raise RankCollapseError("Hankel rank collapsed")
            return original(cfg, sys, cert, T, *args)

        monkeypatch.setattr(experiment, "run_cell", collapse_at_T4)
        report = run_experiment(tiny(T_grid=[2, 4], N_grid=[20], seeds=[0]), _verbose())
        assert not report.ok
        assert {r.T for r in report.records} == {2}
        assert [(f.T, f.seed) for f in report.failures] == [(4, 0)]
        assert "rank collapsed" in report.failures[0].message

        out = capsys.readouterr().out
        assert "✓ T=2 N=20" in out
        assert "✓ T=4" not in out
        assert "❌ T=4 N=20" in out

    def test_short_hankel_order_rejected(self):
        with pytest.raises(ValidationError, match="hankel_order 2 is below"):
            tiny(T_grid=[2, 4], hankel_order=2)

    def test_fixed_lambda(self):
        report = run_experiment(tiny(T_grid=[2], N_grid=[10], seeds=[0], lambda_rule="fixed", lambda_value=0.3))
        lams = {r.estimator: r.lam for r in report.records}
        assert lams == {"lasso": 0.3, "ls": None}

    def test_seed_derivation(self):
        cfg = tiny()
        assert system_seed(cfg, 0) != system_seed(cfg, 1)
        assert cell_seed(cfg, 0, 2, 10, 0) != cell_seed(cfg, 0, 3, 10, 0)
        assert cell_seed(cfg, 0, 2, 10, 0) == cell_seed(tiny(), 0, 2, 10, 0)


class TestSelectLambda:
    def _setup(self, cfg):
        sys = generate_paper_system(cfg.n, cfg.m, cfg.p, cfg.bandwidth, cfg.target_rho, seed=0)
        noise = NoiseConfig.from_variances(0.1, 0.1)
        cert = certify_stability(sys, 50, noise)
        bounds = eval_theorem2_bounds(cert, noise, 3, cfg.p, cfg.n, 30)
        return noise, bounds

    def test_simulation_rule(self):
        cfg = tiny()
        noise, bounds = self._setup(cfg)
        expected = lambda_simulation(noise.sigma_w, noise.sigma_v, 3, cfg.p, cfg.n, 30)
        assert select_lambda(cfg, noise, bounds, 3, 30) == expected

    def test_theorem_rule(self):
        cfg = tiny(lambda_rule="theorem", c0=0.5)
        noise, bounds = self._setup(cfg)
        expected = lambda_theorem(1.0, bounds.sigma_w_bar, noise.sigma_v, 3, cfg.p, cfg.n, 30, c0=0.5)
        assert select_lambda(cfg, noise, bounds, 3, 30) == pytest.approx(expected)

    def test_fixed_rule(self):
        cfg = tiny(lambda_rule="fixed", lambda_value=0.7)
        noise, bounds = self._setup(cfg)
        assert select_lambda(cfg, noise, bounds, 3, 30) == 0.7


@pytest.mark.parametrize("values, expected", [
    ([3.0, 1.0, 2.0], True),
    ([5.0, 2.0, 1.0, 4.0], True),
    ([1.0, 2.0, 3.0], False),
    ([3.0, 2.0, 1.0], False),
    ([2.0, 1.0, 2.0, 1.0], False),
    ([1.0, 0.98, 1.0], False),
    ([1.0, 0.9, 1.0], True),
    ([1.0, 2.0], None),
    ([3.0, float("nan"), 1.0], None),
])
def test_decrease_then_increase(values, expected):
    assert is_decrease_then_increase(values) is expected


def test_shallow_dip_counts_without_margin():
    assert is_decrease_then_increase([1.0, 0.98, 1.0], min_rise=0.0) is True


class TestSweeps:
    def test_sweep_T_short_grid(self):
        summary = sweep_T(tiny(T_grid=[3], N_grid=[30], seeds=[0, 1], estimators=["lasso"]))
        assert summary.values == [3]
        assert len(summary.medians) == 1
        assert summary.non_monotone is None

    def test_sweep_T_pattern_from_medians(self):
        summary = sweep_T(tiny(T_grid=[2, 3, 4, 6], N_grid=[30], seeds=[0, 1, 2]))
        assert summary.values == [2, 3, 4, 6]
        for T, median in zip(summary.values, summary.medians):
            errors = [r.markov_fro for r in summary.report.records if r.T == T and r.estimator == "lasso"]
            assert median == pytest.approx(float(np.median(errors)))
        assert summary.non_monotone is is_decrease_then_increase(summary.medians)

    def test_sweep_T_needs_single_N(self):
        with pytest.raises(ConfigError, match="exactly one N"):
            sweep_T(tiny())

    def test_sweep_unknown_estimator(self):
        with pytest.raises(ConfigError, match="not configured"):
            sweep_T(tiny(N_grid=[30], estimators=["ls"]))

    def test_sweep_noise(self):
        cfg = tiny(T_grid=[3], N_grid=[60], noise_grid=[(1.0, 1.0), (0.01, 0.01)], seeds=[0, 1, 2])
        summary = sweep_noise(cfg)
        assert summary.values == pytest.approx([0.02, 2.0])
        assert summary.medians[0] < summary.medians[1]

    def test_sweep_noise_needs_single_T(self):
        with pytest.raises(ConfigError, match="exactly one T"):
            sweep_noise(tiny(N_grid=[30]))


class TestPlotData:
    def test_empty_report_writes_header(self, tmp_path):
        paths = emit_plot_data(ExperimentReport(), "markov_fro", str(tmp_path))
        with open(paths[0], encoding="utf-8") as fh:
            assert fh.read() == ",".join(COLUMNS) + "\n"
        with open(paths[1], encoding="utf-8") as fh:
            assert fh.read().splitlines() == ["estimator,T,N,sigma_w2,sigma_v2,median,count"]

    def test_one_row_per_record(self, tmp_path):
        report = run_experiment(tiny(T_grid=[2], seeds=[0, 1, 2]))
        tidy, median = emit_plot_data(report, "hankel_fro", str(tmp_path))
        with open(tidy, encoding="utf-8") as fh:
            assert len(fh.read().splitlines()) == len(report.records) + 1
        with open(median, encoding="utf-8") as fh:
            assert len(fh.read().splitlines()) == 2 * 2 + 1

    def test_median_csv_reads_back(self, tmp_path):
        report = run_experiment(tiny(seeds=[0, 1, 2]))
        tidy, median = emit_plot_data(report, "markov_fro", str(tmp_path))
        table = pd.read_csv(median)
        assert table["count"].tolist() == [3] * len(table)
        for row in table.itertuples(index=False):
            errors = [r.markov_fro for r in report.records
                      if (r.estimator, r.T, r.N) == (row.estimator, row.T, row.N)]
            assert row.median == float(np.median(errors))
        values = pd.read_csv(tidy)["value"].to_numpy()
        np.testing.assert_array_equal(values, [r.markov_fro for r in report.records])

    def test_unknown_group_column(self, tmp_path):
        with pytest.raises(ValueError, match="unknown group-by column"):
            emit_plot_data(ExperimentReport(), "markov_fro", str(tmp_path), group_by=["horizon"])

    def test_unknown_metric(self, tmp_path):
        with pytest.raises(ValueError, match="unknown metric"):
            emit_plot_data(ExperimentReport(), "runtime", str(tmp_path))

    def test_byte_identical_reruns(self, tmp_path):
        first = emit_all(run_experiment(tiny()), str(tmp_path / "a"))
        second = emit_all(run_experiment(tiny()), str(tmp_path / "b"))
        assert len(first) == len(second) > 0
        for a, b in zip(first, second):
            with open(a, "rb") as fa, open(b, "rb") as fb:
                assert fa.read() == fb.read()


def test_summary_card():
    cfg = tiny(T_grid=[4], N_grid=[5], seeds=[0])
    card = ReportBuilder().build_experiment_summary(run_experiment(cfg, Config()), cfg)
    assert "Experiment Summary" in card
    assert "underdetermined" in card
    assert "all cells completed" in card


def desk(**overrides) -> ExperimentConfig:
    fields = dict(n=40, m=10, p=10, T_grid=[10], noise_grid=[(0.1, 0.1)], seeds=list(range(20)))
    fields.update(overrides)
    return ExperimentConfig(**fields)


def _errors(report: ExperimentReport, estimator: str, N: int) -> np.ndarray:
    return np.array([r.markov_fro for r in report.records if r.N == N and r.estimator == estimator])


# Rows of G carry ~100 non-negligible entries at this size, so 40 or 60 samples
# cannot resolve them; measured lasso/LS median ratios 1.012 (N=40), 0.763 (N=60).
SHORT_SAMPLE = pytest.mark.xfail(strict=True, reason="lasso/LS median ratio above 0.5 at desk scale")


@pytest.mark.slow
class TestDeskScale:
    @pytest.mark.parametrize("N", [
        pytest.param(40, marks=SHORT_SAMPLE),
        pytest.param(60, marks=SHORT_SAMPLE),
        80,
    ])
    def test_lasso_halves_min_norm_ls_below_Tp(self, N):
        report = run_experiment(desk(N_grid=[N]))
        assert report.ok
        lasso, ls = _errors(report, "lasso", N), _errors(report, "ls", N)
        assert len(lasso) == len(ls) == 20
        assert np.isfinite(np.median(lasso))
        assert np.median(lasso) <= 0.5 * np.median(ls)

    @pytest.mark.parametrize("N", [120, 200, 400])
    def test_lasso_beats_ls_above_Tp(self, N):
        report = run_experiment(desk(N_grid=[N]))
        lasso, ls = _errors(report, "lasso", N), _errors(report, "ls", N)
        assert np.mean(lasso < ls) >= 0.9

    def test_lasso_error_rate(self):
        Ns = [100, 400, 1600]
        report = run_experiment(desk(N_grid=Ns, estimators=["lasso"]))
        medians = [np.median(_errors(report, "lasso", N)) for N in Ns]
        slope = np.polyfit(np.log(Ns), np.log(medians), 1)[0]
        assert medians[0] > medians[1] > medians[2]
        assert slope <= -0.15

    @pytest.mark.xfail(strict=False, reason="desk-scale dip over T lies within seed-to-seed spread")
    def test_small_noise_horizon_sweep_dips(self):
        cfg = desk(T_grid=[2, 3, 4, 6, 8, 10, 12, 14, 16], N_grid=[2000], noise_grid=[(0.02, 0.02)],
                   seeds=list(range(10)), estimators=["lasso"])
        summary = sweep_T(cfg)
        assert summary.non_monotone is True
