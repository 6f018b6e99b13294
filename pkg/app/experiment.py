# app/experiment.py
"""
Grid experiments:
- run_experiment: every (T, N, noise, seed, estimator) cell
- sweep_T: median error along the horizon at fixed N
- sweep_noise: median error along the noise grid at fixed (T, N)
"""

import time
import warnings
from typing import Dict, List, Optional, Tuple

import numpy as np

from core.config import Config
from core.design import build_regression
from core.errors import ConfigError, ConvergenceWarning
from core.estimators import error_report, estimate_lasso, estimate_ls, lambda_simulation, lambda_theorem
from core.lti import certify_stability, generate_paper_system, markov_matrix, simulate
from core.models import (
    ExperimentConfig,
    ExperimentFailure,
    ExperimentRecord,
    ExperimentReport,
    NoiseConfig,
    StabilityCertificate,
    SweepSummary,
    System,
    TheoryBounds,
)
from core.realization import build_hankel
from core.rng import derive_seed
from core.theory import eval_theorem2_bounds
from presenters.plot_data import median_table, tidy_frame

# relative rise of both ends above the interior minimum; smaller dips are seed noise
DIP_MIN_RISE = 0.05


def _log(config: Config, message: str):
    if config.VERBOSE:
        print(message)


def cell_seed(cfg: ExperimentConfig, seed: int, T: int, N: int, noise_index: int) -> int:
    """Seed of the noise draws in one grid cell."""
    return derive_seed(cfg.base_seed, seed, T, N, noise_index)


def system_seed(cfg: ExperimentConfig, seed: int) -> int:
    return derive_seed(cfg.base_seed, seed)


def select_lambda(cfg: ExperimentConfig, noise: NoiseConfig, bounds: TheoryBounds, T: int, N: int) -> float:
    if cfg.lambda_rule == "fixed":
        return cfg.lambda_value
    if cfg.lambda_rule == "theorem":
        return lambda_theorem(noise.sigma_u, bounds.sigma_w_bar, noise.sigma_v, T, cfg.p, cfg.n, N,
                              epsilon=cfg.epsilon, c0=cfg.c0)
    return lambda_simulation(noise.sigma_w, noise.sigma_v, T, cfg.p, cfg.n, N)


def _row_norm_max(M: np.ndarray) -> float:
    return float(np.linalg.norm(M, axis=1).max()) if M.size else 0.0


# ═══════════════════════════════════════════════════════════════
# GRID RUN
# ═══════════════════════════════════════════════════════════════

def run_cell(
    cfg: ExperimentConfig,
    sys: System,
    cert: StabilityCertificate,
    T: int,
    N: int,
    noise_index: int,
    seed: int,
    config: Config,
) -> List[ExperimentRecord]:
    """Simulate one trajectory and score every configured estimator on it."""
    sigma_w2, sigma_v2 = cfg.noise_grid[noise_index]
    noise = NoiseConfig.from_variances(sigma_w2, sigma_v2, cfg.sigma_u, seed=cell_seed(cfg, seed, T, N, noise_index))

    data = build_regression(simulate(sys, noise, N + T - 1), T)
    G_true = markov_matrix(sys, T)
    K = cfg.hankel_order or T
    H_true = build_hankel(markov_matrix(sys, 2 * K - 1), K, "true")

    bounds = eval_theorem2_bounds(cert, noise, T, cfg.p, cfg.n, N, epsilon=cfg.epsilon, sys=sys)
    lam = select_lambda(cfg, noise, bounds, T, N)

    records = []
    for estimator in cfg.estimators:
        start = time.perf_counter()
        with warnings.catch_warnings(record=True) as caught:
            warnings.simplefilter("always", ConvergenceWarning)
            if estimator == "lasso":
                G_hat = estimate_lasso(data, config.lasso_config(lam, cfg.epsilon))
            else:
                G_hat = estimate_ls(data)
        wall = time.perf_counter() - start
        for w in caught:
            _log(config, f"⚠️  T={T} N={N} seed={seed} {estimator}: {w.message}")

        err = error_report(G_true, G_hat)
        dH = H_true.H - build_hankel(G_hat, K, "padded").H
        records.append(ExperimentRecord(
            n=cfg.n, m=cfg.m, p=cfg.p, T=T, N=N,
            sigma_w2=sigma_w2, sigma_v2=sigma_v2, seed=seed,
            estimator=estimator,
            lam=lam if estimator == "lasso" else None,
            underdetermined=G_hat.underdetermined,
            markov_fro=err.norm_fro,
            markov_2inf=err.norm_2inf,
            hankel_fro=float(np.linalg.norm(dH)),
            hankel_2inf=_row_norm_max(dH),
            wall_time=wall,
            E1=bounds.E1,
            E2=bounds.E2,
            ls_bound_fro=bounds.ls_bound_fro,
            ratio=bounds.ratio,
        ))
    return records


def run_experiment(cfg: ExperimentConfig, config: Optional[Config] = None) -> ExperimentReport:
    """
    Every grid cell, deterministic given the seeds. A new system is generated
    per seed; failing cells are recorded and the run continues.
    """
    config = config or Config()
    report = ExperimentReport()
    systems: Dict[int, Tuple[System, Dict[int, StabilityCertificate]]] = {}

    for seed in cfg.seeds:
        try:
            sys = generate_paper_system(cfg.n, cfg.m, cfg.p, cfg.bandwidth, cfg.target_rho, system_seed(cfg, seed))
            systems[seed] = (sys, {})
        except Exception as e:
            _log(config, f"❌ seed {seed}: system generation failed: {e}")
            for T in cfg.T_grid:
                for N in cfg.N_grid:
                    for w2, v2 in cfg.noise_grid:
                        report.failures.append(ExperimentFailure(T, N, w2, v2, seed, str(e)))

    for T in cfg.T_grid:
        for N in cfg.N_grid:
            for k, (w2, v2) in enumerate(cfg.noise_grid):
                completed = 0
                for seed in cfg.seeds:
                    if seed not in systems:
                        continue
                    sys, certs = systems[seed]
                    try:
                        if k not in certs:
                            noise = NoiseConfig.from_variances(w2, v2, cfg.sigma_u)
                            certs[k] = certify_stability(sys, cfg.tau_max, noise)
                        report.records.extend(run_cell(cfg, sys, certs[k], T, N, k, seed, config))
                        completed += 1
                    except Exception as e:
                        _log(config, f"❌ T={T} N={N} noise=({w2}, {v2}) seed={seed}: {e}")
                        report.failures.append(ExperimentFailure(T, N, w2, v2, seed, str(e)))
                if completed:
                    _log(config, f"✓ T={T} N={N} noise=({w2}, {v2}): {completed}/{len(cfg.seeds)} seed(s)")

    return report.sorted()


# ═══════════════════════════════════════════════════════════════
# SWEEPS
# ═══════════════════════════════════════════════════════════════

def is_decrease_then_increase(values: List[float], min_rise: float = DIP_MIN_RISE) -> Optional[bool]:
    """
    True when the minimum is interior and both ends sit at least `min_rise`
    (relative) above it; None for fewer than 3 points.
    """
    vals = np.asarray(values, dtype=float)
    if vals.size < 3 or np.any(np.isnan(vals)):
        return None
    k = int(np.argmin(vals))
    floor = vals[k] * (1.0 + min_rise) if vals[k] > 0 else vals[k]
    return bool(0 < k < vals.size - 1 and vals[0] > floor and vals[-1] > floor)


def _medians(report: ExperimentReport, metric: str, estimator: str, key: str):
    frame = tidy_frame(report, metric)
    frame = frame[frame["estimator"] == estimator]
    table = median_table(frame, group_by=[key])
    return table[key].tolist(), table["median"].astype(float).tolist()


def sweep_T(
    cfg: ExperimentConfig,
    estimator: str = "lasso",
    metric: str = "markov_fro",
    config: Optional[Config] = None,
) -> SweepSummary:
    """Median error along the T grid at a single N and noise level."""
    if len(cfg.N_grid) != 1 or len(cfg.noise_grid) != 1:
        raise ConfigError("sweep_T needs exactly one N and one noise level")
    if estimator not in cfg.estimators:
        raise ConfigError(f"estimator '{estimator}' is not configured")
    config = config or Config()
    if len(cfg.T_grid) < 4:
        _log(config, f"⚠️  T grid has {len(cfg.T_grid)} point(s); the pattern test needs at least 4")

    report = run_experiment(cfg, config)
    T_values, medians = _medians(report, metric, estimator, "T")
    pattern = is_decrease_then_increase(medians) if len(T_values) >= 4 else None
    return SweepSummary(axis="T", values=T_values, estimator=estimator, metric=metric,
                        medians=medians, non_monotone=pattern, report=report)


def sweep_noise(
    cfg: ExperimentConfig,
    estimator: str = "lasso",
    metric: str = "markov_fro",
    config: Optional[Config] = None,
) -> SweepSummary:
    """Median error along the noise grid at a single (T, N); values are σ_w² + σ_v²."""
    if len(cfg.T_grid) != 1 or len(cfg.N_grid) != 1:
        raise ConfigError("sweep_noise needs exactly one T and one N")
    if estimator not in cfg.estimators:
        raise ConfigError(f"estimator '{estimator}' is not configured")

    report = run_experiment(cfg, config)
    frame = tidy_frame(report, metric)
    frame = frame[frame["estimator"] == estimator].assign(total=lambda f: f["sigma_w2"] + f["sigma_v2"])
    table = median_table(frame, group_by=["total"])
    return SweepSummary(axis="noise", values=table["total"].tolist(), estimator=estimator, metric=metric,
                        medians=table["median"].astype(float).tolist(), non_monotone=None, report=report)
