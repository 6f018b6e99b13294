# core/theory.py
"""
Closed-form guarantees of the regularized and least-squares estimators.

Every "≲" bound is evaluated with leading constant 1. Computable objects
from the proofs (autocorrelation R(τ), the Toeplitz operator P(θ), the row
ℓ1 bound and the deterministic row-error bound) live here as well; the Monte
Carlo side is in core/verification.py.
"""

import math
from typing import Optional, Sequence

import numpy as np
from scipy.linalg import toeplitz

from core.design import build_F
from core.errors import DimensionError, UnstableSystemError
from core.models import (
    DeterministicBoundCheck,
    MarkovMatrix,
    NoiseConfig,
    RowL1Check,
    StabilityCertificate,
    System,
    TheoryBounds,
)


def _check_stable(cert: StabilityCertificate):
    if cert.rho >= 1:
        raise UnstableSystemError(cert.rho)


def _gain(cert: StabilityCertificate) -> float:
    """C_sys / (1 − ρ)."""
    return cert.c_sys / (1.0 - cert.rho)


def _safe_log(x: float) -> float:
    return math.log(x) if x > 0 else -math.inf


def _threshold(numerator_terms: Sequence[float], rho: float, offset: float = 0.0) -> float:
    """max(0, Σ terms / (1 − ρ) + offset); +inf wins over −inf."""
    if any(t == math.inf for t in numerator_terms):
        return math.inf
    total = sum(numerator_terms)
    if total == -math.inf:
        return 0.0
    return max(0.0, total / (1.0 - rho) + offset)


# ═══════════════════════════════════════════════════════════════
# REGULARIZED ESTIMATOR
# ═══════════════════════════════════════════════════════════════

def sigma_w_bar(cert: StabilityCertificate, sigma_w: float) -> float:
    """σ̄_w = (C_sys² / (1 − ρ)) σ_w."""
    return cert.c_sys ** 2 / (1.0 - cert.rho) * sigma_w


def horizon_threshold(
    cert: StabilityCertificate,
    noise: NoiseConfig,
    T: int,
    p: int,
    n: int,
    N: int,
    epsilon: float,
    use_sigma_u: bool = False,
) -> float:
    """
    T₀ = [log log(Nn + Tp) + log(C_sys/(1−ρ)) + log(σ_w + σ_v) + log(1/ε)] / (1 − ρ).

    With use_sigma_u the variant used when bounding λ is returned:
    log log(Np + Tp + Nn) and log(σ_u + σ_w) in place of the first and third terms.
    ε = 0 gives +inf; a noise-free system gives 0.
    """
    _check_stable(cert)
    if use_sigma_u:
        size, scale = N * p + T * p + N * n, noise.sigma_u + noise.sigma_w
    else:
        size, scale = N * n + T * p, noise.sigma_w + noise.sigma_v
    inv_eps = math.inf if epsilon <= 0 else -math.log(epsilon)
    terms = [_safe_log(math.log(size)), math.log(_gain(cert)), _safe_log(scale), inv_eps]
    return _threshold(terms, cert.rho)


def initial_state_horizon_threshold(cert: StabilityCertificate, noise: NoiseConfig, T: int, p: int, n: int, N: int) -> float:
    """Right side of T ≥ [log log(Np+Tp+Nn) + 4log(C_sys/(1−ρ)) + 4log(σ_w+σ_u) + 2log 2]/(1−ρ) + 2."""
    _check_stable(cert)
    terms = [
        _safe_log(math.log(N * p + T * p + N * n)),
        4 * math.log(_gain(cert)),
        4 * _safe_log(noise.sigma_w + noise.sigma_u),
        2 * math.log(2.0),
    ]
    return _threshold(terms, cert.rho, offset=2.0)


def min_initial_state_horizon(
    cert: StabilityCertificate,
    noise: NoiseConfig,
    p: int,
    n: int,
    N: int,
    T_max: int = 10_000,
) -> Optional[int]:
    """Smallest T ≤ T_max meeting initial_state_horizon_threshold, or None."""
    for T in range(1, T_max + 1):
        if T >= initial_state_horizon_threshold(cert, noise, T, p, n, N):
            return T
    return None


def eval_theorem2_bounds(
    cert: StabilityCertificate,
    noise: NoiseConfig,
    T: int,
    p: int,
    n: int,
    N: int,
    epsilon: float = 0.0,
    eta: float = 1.0,
    sys: Optional[System] = None,
) -> TheoryBounds:
    """
    E1 = √(C³/(1−ρ))·(√((σ̄_w+σ_v)/σ_u³)·(log(Tpn)/N)^{1/4} + ε/σ_u²)
    E2 = (C³/(1−ρ))·(log(Tp)/N)^{1/4}

    Passing the true system adds σ_e, the least-squares Frobenius bound, the
    ℓ1/LS ratio and ε̃ (tail of the truncated Markov sequence).
    """
    _check_stable(cert)
    if min(T, p, n, N) < 1:
        raise ValueError("T, p, n and N must be positive")
    if eta <= 0:
        raise ValueError(f"eta must be positive, got {eta}")

    su, sv = noise.sigma_u, noise.sigma_v
    c3 = cert.c_sys ** 3 / (1.0 - cert.rho)
    sw_bar = sigma_w_bar(cert, noise.sigma_w)

    E1 = math.sqrt(c3) * (
        math.sqrt((sw_bar + sv) / su ** 3) * (math.log(T * p * n) / N) ** 0.25 + epsilon / su ** 2
    )
    E2 = c3 * (math.log(T * p) / N) ** 0.25

    extras = {}
    if sys is not None:
        s_e = effective_sigma_e(sys, cert, T)
        ls_fro = eval_theorem1_bound(cert, noise, sys, T, N)
        extras = dict(
            sigma_e=s_e,
            ls_bound_fro=ls_fro,
            ratio=(math.sqrt(sys.m) * max(E1, E2)) / ls_fro if ls_fro > 0 else math.inf,
            epsilon_tilde=epsilon_tilde(sys, cert, T),
        )

    return TheoryBounds(
        T0=horizon_threshold(cert, noise, T, p, n, N, epsilon),
        T0_alt=horizon_threshold(cert, noise, T, p, n, N, epsilon, use_sigma_u=True),
        E1=E1,
        E2=E2,
        sigma_w_bar=sw_bar,
        R=2.0 * c3,
        kappa=su ** 2 / 4.0,
        f_slack=128.0 * su ** 2 * c3 ** 2 * math.sqrt(eta * math.log(T * p) / N),
        eta=eta,
        epsilon=epsilon,
        lambda_lower=lambda_lower_bound(cert, noise, T, p, n, N, eta),
        **extras,
    )


# ═══════════════════════════════════════════════════════════════
# LEAST-SQUARES BASELINE
# ═══════════════════════════════════════════════════════════════

def effective_sigma_e(sys: System, cert: StabilityCertificate, T: int) -> float:
    """σ_e = Φ(A)·‖CA^{T−1}‖·√(T‖Γ_∞‖ / (1 − ρ(A)^{2T}))."""
    CAT = sys.C @ np.linalg.matrix_power(sys.A, T - 1)
    denom = 1.0 - cert.spectral_radius ** (2 * T)
    return float(cert.phi * np.linalg.norm(CAT, 2) * math.sqrt(T * cert.gamma_inf_norm / denom))


def ls_sample_requirement(T: int, q: int, N: int) -> float:
    """T·q·log²(Tq)·log²(Nq)."""
    return T * q * math.log(T * q) ** 2 * math.log(N * q) ** 2


def ls_sample_ok(T: int, q: int, N: int) -> bool:
    return N >= ls_sample_requirement(T, q, N)


def eval_theorem1_bound(
    cert: StabilityCertificate,
    noise: NoiseConfig,
    sys: System,
    T: int,
    N: int,
    spectral: bool = False,
) -> float:
    """
    Frobenius: ((σ_v+σ_e)√m + σ_w‖F‖₂)/σ_u · √(Tq log²(Tq) log²(Nq)/N)
    Spectral:  (σ_v+σ_e+σ_w‖F‖₂)/σ_u · same factor
    The sample requirement is reported by ls_sample_ok, not enforced.
    """
    q = sys.p + sys.n + sys.m
    s_e = effective_sigma_e(sys, cert, T)
    F_norm = float(np.linalg.norm(build_F(sys, T), 2))
    shape = math.sqrt(ls_sample_requirement(T, q, N) / N)
    if spectral:
        scale = noise.sigma_v + s_e + noise.sigma_w * F_norm
    else:
        scale = (noise.sigma_v + s_e) * math.sqrt(sys.m) + noise.sigma_w * F_norm
    return scale / noise.sigma_u * shape


def ratio_terms(T: int, p: int, n: int, m: int, N: int, epsilon: float):
    """The two terms bounding the ℓ1/LS Frobenius ratio: (N log(Tpn)/(T²(n+m+p)))^{1/4}, (Nε²/(T(n+m+p)))^{1/2}."""
    size = n + m + p
    a = (N * math.log(T * p * n) / (T ** 2 * size)) ** 0.25
    b = math.sqrt(N * epsilon ** 2 / (T * size))
    return a, b


# ═══════════════════════════════════════════════════════════════
# HIGHER-ORDER MARKOV AND HANKEL
# ═══════════════════════════════════════════════════════════════

def epsilon_tilde(sys: System, cert: StabilityCertificate, T: int) -> float:
    """√‖C‖_∞ (C_sys/(1−ρ)) ρ^{(T−1)/2}: bound on the tail beyond block T−1."""
    C_inf = float(np.linalg.norm(sys.C, np.inf))
    return math.sqrt(C_inf) * _gain(cert) * cert.rho ** ((T - 1) / 2.0)


def tail_threshold(sys: System, cert: StabilityCertificate, eps_tilde: float) -> float:
    """T ≥ [log‖C‖_∞ + 2log(C_sys/(1−ρ)) + 2log(1/ε̃)]/(1−ρ) + 1."""
    if eps_tilde <= 0:
        return math.inf
    terms = [
        _safe_log(float(np.linalg.norm(sys.C, np.inf))),
        2 * math.log(_gain(cert)),
        -2 * math.log(eps_tilde),
    ]
    return _threshold(terms, cert.rho, offset=1.0)


def hankel_error_bounds(markov_2inf_error: float, eps_tilde: float, T: int, m: int):
    """(‖H−Ĥ‖_{2,∞} bound, ‖H−Ĥ‖_F bound) from the Markov (2,∞) error and ε̃."""
    return markov_2inf_error + eps_tilde, math.sqrt(T * m) * (markov_2inf_error + math.sqrt(2.0) * eps_tilde)


# ═══════════════════════════════════════════════════════════════
# λ LOWER BOUND TERMS
# ═══════════════════════════════════════════════════════════════

def process_noise_term_bound(cert: StabilityCertificate, noise: NoiseConfig, T: int, p: int, n: int, N: int, eta: float = 1.0) -> float:
    """4√2 σ_u σ_w (C_sys²/(1−ρ)) √((1+η) log(Tpn)/N), bounding (2/N)‖UᵀWF_{i:}ᵀ‖_∞."""
    return (4 * math.sqrt(2) * noise.sigma_u * noise.sigma_w * cert.c_sys ** 2 / (1.0 - cert.rho)
            * math.sqrt((1 + eta) * math.log(T * p * n) / N))


def initial_state_term_bound(cert: StabilityCertificate, T: int, eta: float = 1.0) -> float:
    """2ρ^{T/2}(1+η), bounding (2/N)‖UᵀE_{:i}‖_∞."""
    return 2 * cert.rho ** (T / 2.0) * (1 + eta)


def measurement_noise_term_bound(noise: NoiseConfig, T: int, p: int, N: int, eta: float = 1.0) -> float:
    """4σ_uσ_v √((1+η) log(Tp)/N), bounding (2/N)‖UᵀV_{:i}‖_∞."""
    return 4 * noise.sigma_u * noise.sigma_v * math.sqrt((1 + eta) * math.log(T * p) / N)


def lambda_lower_bound(cert: StabilityCertificate, noise: NoiseConfig, T: int, p: int, n: int, N: int, eta: float = 1.0) -> float:
    return (process_noise_term_bound(cert, noise, T, p, n, N, eta)
            + initial_state_term_bound(cert, T, eta)
            + measurement_noise_term_bound(noise, T, p, N, eta))


# ═══════════════════════════════════════════════════════════════
# RESTRICTED SINGULAR VALUE OBJECTS
# ═══════════════════════════════════════════════════════════════

def autocorrelation(theta: np.ndarray, T: int, p: int) -> np.ndarray:
    """R(τ) = Σ_{k<(T−τ)p} θ_k θ_{k+τp} for τ = 0..T−1."""
    theta = np.asarray(theta, dtype=float).reshape(-1)
    if theta.size != T * p:
        raise DimensionError(f"theta must have length Tp = {T * p}, got {theta.size}")
    return np.array([theta[:(T - tau) * p] @ theta[tau * p:] for tau in range(T)])


def build_P(theta: np.ndarray, N: int, T: int, p: int) -> np.ndarray:
    """Symmetric Toeplitz P_ij = R(|i−j|), zero beyond lag T−1."""
    R = autocorrelation(theta, T, p)
    col = np.zeros(N)
    k = min(N, T)
    col[:k] = R[:k]
    return toeplitz(col)


def rsv_rhs(theta: np.ndarray, sigma_u: float, eta: float, T: int, p: int, N: int) -> float:
    """(σ_u²/2)‖θ‖² − σ_u²√(η log(Tp)/N)‖θ‖₁²."""
    theta = np.asarray(theta, dtype=float)
    slack = math.sqrt(eta * math.log(T * p) / N) if T * p > 1 else 0.0
    return sigma_u ** 2 * (0.5 * float(theta @ theta) - slack * float(np.sum(np.abs(theta))) ** 2)


def rsv_hypothesis(N: int, eta: float, T: int, p: int) -> bool:
    """N ≥ 4η log²(Tp)."""
    return N >= 4 * eta * math.log(T * p) ** 2


# ═══════════════════════════════════════════════════════════════
# ROW-WISE CHECKS
# ═══════════════════════════════════════════════════════════════

def check_row_l1(G: MarkovMatrix, cert: StabilityCertificate) -> RowL1Check:
    """‖G_{i:}‖₁ ≤ R = 2C_sys³/(1−ρ) for every row."""
    _check_stable(cert)
    R = 2.0 * cert.c_sys ** 3 / (1.0 - cert.rho)
    row_l1 = np.sum(np.abs(G.G), axis=1)
    margins = R - row_l1
    return RowL1Check(passed=margins >= 0, row_l1=row_l1, margins=margins, R=R)


def deterministic_bound(
    delta_row: np.ndarray,
    R: float,
    kappa: float,
    f_val: float,
    lam: float,
    assumptions: Sequence[bool] = (True, True, True),
    g_true: Optional[np.ndarray] = None,
) -> DeterministicBoundCheck:
    """‖Δ_{i:}‖² ≤ max{(2/κ)f, (88R/κ²)λ}; the support size |{j : |g*_j| ≥ λ}| is reported when g_true is given."""
    if kappa <= 0:
        raise ValueError(f"kappa must be positive, got {kappa}")
    delta_row = np.asarray(delta_row, dtype=float)
    err = float(delta_row @ delta_row)
    f_term = 2.0 / kappa * f_val
    lam_term = 88.0 * R / kappa ** 2 * lam
    threshold = max(f_term, lam_term)
    support = None if g_true is None else int(np.sum(np.abs(np.asarray(g_true)) >= lam))
    return DeterministicBoundCheck(
        holds=err <= threshold,
        error_sq=err,
        threshold=threshold,
        f_term=f_term,
        lambda_term=lam_term,
        assumptions_hold=bool(all(assumptions)),
        support_size=support,
    )
