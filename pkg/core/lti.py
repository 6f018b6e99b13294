# core/lti.py
"""
Partially observed LTI systems:
- synthetic generator (banded A, selector B, Gaussian C, D = 0)
- single-trajectory simulation from x_0 = 0
- stability certificate (ρ, C_sys, Φ(A), ‖Γ_∞‖)
- true Markov matrix [D, CB, CAB, …]
"""

from typing import Optional

import numpy as np
from scipy.sparse.linalg import eigs

from core.errors import DimensionError, GeneratorError, UnstableSystemError
from core.models import MarkovMatrix, NoiseConfig, StabilityCertificate, System, Trajectory
from core.rng import stream

DENSE_EIG_MAX_DIM = 512
MAX_REDRAWS = 16
GAMMA_TAIL_TOL = 1e-12
GAMMA_MAX_TERMS = 100_000
NILPOTENT_RHO = 0.5


def spectral_radius(A: np.ndarray) -> float:
    """ρ(A): dense eigensolver up to n = 512, implicitly restarted Arnoldi above."""
    A = np.asarray(A, dtype=float)
    if A.shape[0] <= DENSE_EIG_MAX_DIM:
        return float(np.max(np.abs(np.linalg.eigvals(A))))
    vals = eigs(A, k=1, which="LM", tol=1e-12, return_eigenvectors=False)
    return float(np.abs(vals[0]))


def l1_operator_norm(M: np.ndarray) -> float:
    """Larger of the induced 1- and ∞-norms (max column / row absolute sum)."""
    M = np.atleast_2d(M)
    if M.size == 0:
        return 0.0
    return float(max(np.linalg.norm(M, 1), np.linalg.norm(M, np.inf)))


def generate_paper_system(
    n: int,
    m: int,
    p: int,
    bandwidth: int = 5,
    target_rho: float = 0.8,
    seed: int = 0,
) -> System:
    """Banded A rescaled to ρ(A) = target_rho, B_{ij} = 1 iff i = 4j (1-based), C ~ N(0, 1/m), D = 0."""
    if min(n, m, p) < 1:
        raise DimensionError(f"dimensions must be positive, got n={n}, m={m}, p={p}")
    if not 0 < target_rho < 1:
        raise ValueError(f"target_rho must lie in (0, 1), got {target_rho}")
    if bandwidth < 0:
        raise ValueError(f"bandwidth must be nonnegative, got {bandwidth}")

    idx = np.arange(n)
    band = np.abs(np.subtract.outer(idx, idx)) <= bandwidth

    for attempt in range(MAX_REDRAWS + 1):
        rng = stream(seed, "A", attempt)
        A = np.where(band, rng.uniform(-0.5, 0.5, size=(n, n)), 0.0)
        rho = spectral_radius(A)
        if rho > 0:
            break
    else:
        raise GeneratorError(f"rho(A) = 0 after {MAX_REDRAWS} redraws (seed={seed})")

    A = A * (target_rho / rho)

    B = np.zeros((n, p))
    for j in range(1, p + 1):
        i = 4 * j
        if i <= n:
            B[i - 1, j - 1] = 1.0

    C = stream(seed, "C").normal(0.0, 1.0 / np.sqrt(m), size=(m, n))
    D = np.zeros((m, p))
    return System(A, B, C, D)


def rollout(
    sys: System,
    inputs: np.ndarray,
    process_noise: Optional[np.ndarray] = None,
    measurement_noise: Optional[np.ndarray] = None,
    noise: Optional[NoiseConfig] = None,
) -> Trajectory:
    """Replay the recurrence from x_0 = 0 for given input and noise sequences."""
    u = np.asarray(inputs, dtype=float)
    if u.ndim == 1 and sys.p == 1:
        u = u.reshape(-1, 1)
    if u.ndim != 2:
        raise DimensionError(f"inputs must be L×p (p={sys.p}), got shape {u.shape}")
    L = u.shape[0]
    w = np.zeros((L, sys.n)) if process_noise is None else np.asarray(process_noise, dtype=float).reshape(L, sys.n)
    v = np.zeros((L, sys.m)) if measurement_noise is None else np.asarray(measurement_noise, dtype=float).reshape(L, sys.m)
    if u.shape[1] != sys.p:
        raise DimensionError(f"inputs have {u.shape[1]} channels, system expects p={sys.p}")

    A, B, C, D = sys.A, sys.B, sys.C, sys.D
    x = np.zeros((L + 1, sys.n))
    y = np.zeros((L, sys.m))
    for t in range(L):
        y[t] = C @ x[t] + D @ u[t] + v[t]
        x[t + 1] = A @ x[t] + B @ u[t] + w[t]

    return Trajectory(
        inputs=u,
        states=x,
        process_noise=w,
        measurement_noise=v,
        outputs=y,
        noise=noise if noise is not None else NoiseConfig(),
    )


def simulate(sys: System, noise: NoiseConfig, length: int) -> Trajectory:
    """Draw u ~ N(0, σ_u² I), w, v element-wise Gaussian and roll out `length` steps."""
    if length < 1:
        raise ValueError(f"length must be at least 1, got {length}")
    u = noise.sigma_u * stream(noise.seed, "u").standard_normal((length, sys.p))
    w = noise.sigma_w * stream(noise.seed, "w").standard_normal((length, sys.n))
    v = noise.sigma_v * stream(noise.seed, "v").standard_normal((length, sys.m))
    return rollout(sys, u, w, v, noise)


def steady_state_covariance(
    A: np.ndarray,
    B: np.ndarray,
    noise: NoiseConfig,
    rho: float,
    phi: float,
) -> np.ndarray:
    """Γ_∞ = Σ_i σ_w² A^i (Aᵀ)^i + σ_u² A^i B Bᵀ (Aᵀ)^i, truncated once the tail estimate is ≤ 1e-12."""
    n = A.shape[0]
    Q = noise.sigma_w ** 2 * np.eye(n) + noise.sigma_u ** 2 * (B @ B.T)
    scale = (noise.sigma_w ** 2 + noise.sigma_u ** 2 * np.linalg.norm(B, 2) ** 2) * phi ** 2 / (1.0 - rho ** 2)

    total = Q.copy()
    term = Q
    for i in range(1, GAMMA_MAX_TERMS):
        if rho ** (2 * i) * scale <= GAMMA_TAIL_TOL:
            break
        term = A @ term @ A.T
        total += term
    return total


def certify_stability(
    sys: System,
    tau_max: int = 200,
    noise: Optional[NoiseConfig] = None,
) -> StabilityCertificate:
    """Smallest C_sys with ‖A^τ‖₁ ≤ C_sys ρ^τ on τ = 0..tau_max, plus Φ(A) and ‖Γ_∞‖."""
    if tau_max < 0:
        raise ValueError("tau_max must be nonnegative")
    noise = noise or NoiseConfig()
    A = sys.A
    radius = spectral_radius(A)
    if radius >= 1:
        raise UnstableSystemError(radius)

    norms1 = np.empty(tau_max + 1)
    norms2 = np.empty(tau_max + 1)
    power = np.eye(sys.n)
    for tau in range(tau_max + 1):
        norms1[tau] = l1_operator_norm(power)
        norms2[tau] = np.linalg.norm(power, 2)
        power = power @ A

    rho = radius
    if rho == 0.0 and np.any(norms1[1:] > 0):
        # nilpotent: no certificate exists at rate 0
        rho = NILPOTENT_RHO

    taus = np.arange(tau_max + 1)
    with np.errstate(divide="ignore", invalid="ignore", over="ignore"):
        decay = rho ** taus
        ratio1 = np.where(norms1 > 0, norms1 / decay, 0.0)
        ratio2 = np.where(norms2 > 0, norms2 / decay, 0.0)

    c_sys = float(max(
        1.0,
        l1_operator_norm(sys.B),
        l1_operator_norm(sys.C),
        l1_operator_norm(sys.D),
        float(np.max(ratio1)),
    ))
    phi = float(max(1.0, np.max(ratio2)))
    gamma = steady_state_covariance(A, sys.B, noise, rho, phi)

    return StabilityCertificate(
        rho=float(rho),
        c_sys=c_sys,
        spectral_radius=radius,
        phi=phi,
        gamma_inf_norm=float(np.linalg.norm(gamma, 2)),
        tau_max=tau_max,
    )


def markov_matrix(sys: System, K: int) -> MarkovMatrix:
    """True order-K Markov matrix [D, CB, CAB, …, CA^{K−2}B] ∈ R^{m×Kp}."""
    if K < 1:
        raise ValueError(f"K must be at least 1, got {K}")
    blocks = [sys.D]
    CAk = sys.C
    for _ in range(K - 1):
        blocks.append(CAk @ sys.B)
        CAk = CAk @ sys.A
    return MarkovMatrix(G=np.hstack(blocks), p=sys.p)
