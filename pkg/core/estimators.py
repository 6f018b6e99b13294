# core/estimators.py
"""
Markov-parameter estimators:
- row-wise lasso by cyclic coordinate descent (soft-threshold updates)
- minimum-norm least-squares baseline
- λ selection rules
- error metrics
"""

import warnings
from typing import List, Optional, Sequence, Tuple, Union

import numpy as np

from core.errors import ConvergenceWarning, DimensionError
from core.models import ErrorReport, LassoConfig, LassoSolution, MarkovMatrix, RegressionData

ArrayOrMarkov = Union[np.ndarray, MarkovMatrix]


def soft_threshold(z, t):
    """Proximal operator of t·|·|: sign(z)·max(|z| − t, 0)."""
    if np.any(np.asarray(t) < 0):
        raise ValueError(f"threshold must be nonnegative, got {t}")
    out = np.sign(z) * np.maximum(np.abs(z) - t, 0.0)
    return float(out) if np.ndim(out) == 0 else out


def lasso_objective(U: np.ndarray, y: np.ndarray, g: np.ndarray, lam: float) -> float:
    """(1/2N)‖y − Ug‖² + λ‖g‖₁."""
    r = y - U @ g
    return float(r @ r / (2.0 * U.shape[0]) + lam * np.sum(np.abs(g)))


# ═══════════════════════════════════════════════════════════════
# COORDINATE DESCENT
# ═══════════════════════════════════════════════════════════════

def _objectives(gram, corr, yy, coef, lam) -> np.ndarray:
    gc = gram @ coef
    return 0.5 * yy - np.sum(coef * corr, axis=0) + 0.5 * np.sum(coef * gc, axis=0) + lam * np.sum(np.abs(coef), axis=0)


def _kkt_residuals(coef: np.ndarray, grad: np.ndarray, lam: float) -> np.ndarray:
    """Max KKT violation per column; grad = (1/N) Uᵀ(y − Ug)."""
    active = coef != 0
    viol = np.where(
        active,
        np.abs(grad - lam * np.sign(coef)),
        np.maximum(np.abs(grad) - lam, 0.0),
    )
    return viol.max(axis=0) if viol.size else np.zeros(coef.shape[1])


def _coordinate_descent(
    gram: np.ndarray,
    corr: np.ndarray,
    yy: np.ndarray,
    coef0: np.ndarray,
    cfg: LassoConfig,
) -> Tuple[np.ndarray, np.ndarray, int, np.ndarray, np.ndarray]:
    """
    Cyclic coordinate descent on k right-hand sides sharing one Gram matrix.

    gram = UᵀU/N (d×d), corr = UᵀY/N (d×k), yy = ‖Y_{:i}‖²/N (k,).
    Columns are independent problems; each column's iterates are exactly what a
    single-column run would produce. Coordinates are visited in order 0..d−1.
    Returns (coef, kkt, sweeps, converged, objective).
    """
    lam = cfg.lam
    d, k = corr.shape
    diag = np.diag(gram).copy()
    live = diag > 0

    coef = np.array(coef0, dtype=float).reshape(d, k)
    coef[~live] = 0.0
    grad = corr - gram @ coef
    obj = _objectives(gram, corr, yy, coef, lam)
    scale = np.maximum(np.maximum(0.5 * yy, obj), np.finfo(float).tiny)

    converged = np.zeros(k, dtype=bool)
    kkt = np.full(k, np.inf)
    sweep = 0
    coords = np.flatnonzero(live)

    for sweep in range(1, cfg.max_iters + 1):
        for j in coords:
            z = grad[j] + diag[j] * coef[j]
            new = np.sign(z) * np.maximum(np.abs(z) - lam, 0.0) / diag[j]
            delta = new - coef[j]
            if np.any(delta):
                coef[j] = new
                grad -= np.outer(gram[:, j], delta)

        grad = corr - gram @ coef
        new_obj = _objectives(gram, corr, yy, coef, lam)
        if cfg.debug:
            assert np.all(new_obj <= obj + 1e-12 * scale), "lasso objective increased across a sweep"
        rel = (obj - new_obj) / scale
        obj = new_obj

        candidates = (rel < cfg.tol) & ~converged
        if np.any(candidates):
            kkt = _kkt_residuals(coef, grad, lam)
            converged |= candidates & (kkt <= cfg.kkt_tol)
        if converged.all():
            break

    kkt = _kkt_residuals(coef, grad, lam)
    converged = converged & (kkt <= cfg.kkt_tol)
    return coef, kkt, sweep, converged, obj


def lasso_row(
    U: np.ndarray,
    y: np.ndarray,
    cfg: LassoConfig,
    warm_start: Optional[np.ndarray] = None,
) -> LassoSolution:
    """Solve min_g (1/2N)‖y − Ug‖² + λ‖g‖₁ and certify it through the KKT conditions."""
    U = np.asarray(U, dtype=float)
    y = np.asarray(y, dtype=float).reshape(-1)
    N, d = U.shape
    if y.shape[0] != N:
        raise DimensionError(f"y has {y.shape[0]} samples, U has {N} rows")
    start = np.zeros(d) if warm_start is None else np.asarray(warm_start, dtype=float).reshape(d)

    gram = U.T @ U / N
    corr = (U.T @ y / N).reshape(d, 1)
    yy = np.array([y @ y / N])
    coef, kkt, sweeps, converged, obj = _coordinate_descent(gram, corr, yy, start.reshape(d, 1), cfg)

    if not converged[0]:
        warnings.warn(
            f"max_iters exceeded without KKT satisfaction (residual {kkt[0]:.3g} after {sweeps} sweeps)",
            ConvergenceWarning,
            stacklevel=2,
        )
    return LassoSolution(
        coef=coef[:, 0],
        kkt_residual=float(kkt[0]),
        iterations=sweeps,
        converged=bool(converged[0]),
        objective=float(obj[0]),
    )


def lambda_path(
    U: np.ndarray,
    y: np.ndarray,
    lambdas: Sequence[float],
    cfg: LassoConfig,
) -> List[LassoSolution]:
    """Lasso along a λ grid, solved from the largest λ down with warm starts; returned in input order."""
    order = np.argsort(-np.asarray(lambdas, dtype=float), kind="stable")
    solutions: List[Optional[LassoSolution]] = [None] * len(lambdas)
    warm = None
    for idx in order:
        sol = lasso_row(U, y, _with_lambda(cfg, float(lambdas[idx])), warm_start=warm)
        solutions[idx] = sol
        warm = sol.coef
    return solutions


def _with_lambda(cfg: LassoConfig, lam: float) -> LassoConfig:
    return LassoConfig(lam=lam, tol=cfg.tol, max_iters=cfg.max_iters, epsilon=cfg.epsilon,
                       kkt_tol=cfg.kkt_tol, debug=cfg.debug)


# ═══════════════════════════════════════════════════════════════
# ESTIMATORS
# ═══════════════════════════════════════════════════════════════

def estimate_lasso(
    data: RegressionData,
    cfg: LassoConfig,
    warm_start: Optional[MarkovMatrix] = None,
) -> MarkovMatrix:
    """Ĝ = argmin (1/2N)‖Y − UXᵀ‖_F² + λ‖X‖_{1,1}, solved row by row on a shared Gram matrix."""
    U, Y = data.U, data.Y
    N, d = U.shape
    gram = U.T @ U / N
    corr = U.T @ Y / N
    yy = np.sum(Y * Y, axis=0) / N
    start = np.zeros((d, data.m)) if warm_start is None else np.asarray(warm_start.G, dtype=float).T

    coef, kkt, sweeps, converged, _ = _coordinate_descent(gram, corr, yy, start, cfg)

    failed = np.flatnonzero(~converged)
    if failed.size:
        warnings.warn(
            f"max_iters exceeded without KKT satisfaction on rows {failed.tolist()} "
            f"(worst residual {kkt[failed].max():.3g} after {sweeps} sweeps)",
            ConvergenceWarning,
            stacklevel=2,
        )
    return MarkovMatrix(
        G=coef.T,
        p=data.p,
        lam=cfg.lam,
        kkt_residuals=kkt,
        converged=converged,
    )


def estimate_ls(data: RegressionData) -> MarkovMatrix:
    """Minimum-Frobenius-norm least squares Ĝ = (U⁺Y)ᵀ; flagged when N < Tp or rank(U) < Tp."""
    U, Y = data.U, data.Y
    N, d = U.shape
    G = (np.linalg.pinv(U) @ Y).T
    underdetermined = bool(N < d or np.linalg.matrix_rank(U) < d)
    return MarkovMatrix(G=G, p=data.p, underdetermined=underdetermined)


# ═══════════════════════════════════════════════════════════════
# REGULARIZATION RULES
# ═══════════════════════════════════════════════════════════════

def lambda_theorem(
    sigma_u: float,
    sigma_w_bar: float,
    sigma_v: float,
    T: int,
    p: int,
    n: int,
    N: int,
    epsilon: float = 0.0,
    c0: float = 1.0,
) -> float:
    """c0·σ_u(σ̄_w + σ_v)·√(log(Tpn)/N) + ε."""
    if N < 1 or min(T, p, n) < 1:
        raise ValueError("T, p, n and N must be positive")
    return float(c0 * sigma_u * (sigma_w_bar + sigma_v) * np.sqrt(np.log(T * p * n) / N) + epsilon)


def lambda_simulation(sigma_w: float, sigma_v: float, T: int, p: int, n: int, N: int) -> float:
    """0.2(σ_w + σ_v)·√(log(Tpn)/N) + 0.02·0.8^T, the default rule of the experiment harness."""
    if N < 1 or min(T, p, n) < 1:
        raise ValueError("T, p, n and N must be positive")
    return float(0.2 * (sigma_w + sigma_v) * np.sqrt(np.log(T * p * n) / N) + 0.02 * 0.8 ** T)


# ═══════════════════════════════════════════════════════════════
# ERROR METRICS
# ═══════════════════════════════════════════════════════════════

def _as_array(G: ArrayOrMarkov) -> np.ndarray:
    return np.asarray(G.G if isinstance(G, MarkovMatrix) else G, dtype=float)


def error_report(G_true: ArrayOrMarkov, G_hat: ArrayOrMarkov) -> ErrorReport:
    """Row-wise ℓ2, ‖·‖_{2,∞}, Frobenius and spectral norms of Δ = G − Ĝ."""
    A, B = _as_array(G_true), _as_array(G_hat)
    if A.shape != B.shape:
        raise DimensionError(f"shape mismatch: {A.shape} vs {B.shape}")
    delta = A - B
    row_l2 = np.linalg.norm(delta, axis=1)
    return ErrorReport(
        delta=delta,
        row_l2=row_l2,
        norm_2inf=float(row_l2.max()) if row_l2.size else 0.0,
        norm_fro=float(np.linalg.norm(delta)),
        norm_spec=float(np.linalg.norm(delta, 2)) if delta.size else 0.0,
    )
