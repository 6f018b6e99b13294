# core/realization.py
"""
Higher-order Markov and Hankel matrices, and the Ho-Kalman realization.
"""

from typing import Optional, Tuple

import numpy as np

from core.errors import DimensionError, IllConditionedError, RankCollapseError
from core.lti import markov_matrix
from core.models import HankelMatrix, MarkovMatrix, Realization

HANKEL_MODES = ("true", "padded")
MIN_SV_RATIO = 1e-12


def extend_markov(G_hat: MarkovMatrix, K: int) -> MarkovMatrix:
    """Ĝ^{(K)} = [Ĝ, 0_{m×(K−T)p}]."""
    if K < G_hat.K:
        raise DimensionError(f"K={K} is shorter than the estimate's horizon T={G_hat.K}")
    pad = np.zeros((G_hat.m, (K - G_hat.K) * G_hat.p))
    return MarkovMatrix(
        G=np.hstack([G_hat.G, pad]),
        p=G_hat.p,
        underdetermined=G_hat.underdetermined,
        lam=G_hat.lam,
        kkt_residuals=G_hat.kkt_residuals,
        converged=G_hat.converged,
    )


def build_hankel(G: MarkovMatrix, K: int, mode: str = "true") -> HankelMatrix:
    """
    K×K block-Hankel matrix whose (i, j) block is Markov block i+j.

    'true' needs 2K−1 blocks. 'padded' takes an order-T estimate with T ≤ K and
    leaves every block with i+j ≥ T at zero.
    """
    if mode not in HANKEL_MODES:
        raise ValueError(f"mode must be one of {HANKEL_MODES}, got {mode!r}")
    if K < 1:
        raise ValueError(f"K must be at least 1, got {K}")
    if mode == "true" and G.K < 2 * K - 1:
        raise DimensionError(f"insufficient blocks: order-{K} Hankel needs {2 * K - 1}, have {G.K}")
    if mode == "padded" and G.K > K:
        raise DimensionError(f"insufficient blocks: padded Hankel needs T ≤ K (T={G.K}, K={K})")

    m, p = G.m, G.p
    H = np.zeros((K * m, K * p))
    for i in range(K):
        for j in range(K):
            if i + j < G.K:
                H[i * m:(i + 1) * m, j * p:(j + 1) * p] = G.block(i + j)
    return HankelMatrix(H=H, K=K, m=m, p=p, provenance=mode)


def _markov_sequence(H: HankelMatrix):
    """Blocks 0..2K−2 read off the first block row and the last block column."""
    K = H.K
    seq = [H.block(0, k) for k in range(K)]
    seq += [H.block(i, K - 1) for i in range(1, K)]
    return seq


def hankel_split(K: int) -> Tuple[int, int]:
    """Near-square (K₁, K₂) block split of the D-free Hankel."""
    K1 = int(np.ceil((K - 1) / 2))
    K2 = max(1, K - 1 - K1)
    return K1, K2


def ho_kalman(
    H: HankelMatrix,
    rank: Optional[int] = None,
    sv_threshold: float = 1e-10,
) -> Realization:
    """
    Balanced realization (Â, B̂, Ĉ, D̂) from a block-Hankel matrix.

    H⁻ holds Markov blocks 1.. (D removed), H⁺ the same shifted by one block.
    With H⁻ = U Σ Vᵀ truncated to r: O = U_r Σ_r^{1/2}, Q = Σ_r^{1/2} V_rᵀ,
    Ĉ = O[:m], B̂ = Q[:, :p], Â = O⁺ H⁺ Q⁺, D̂ = block 0.
    """
    K, m, p = H.K, H.m, H.p
    if K < 2:
        raise DimensionError(f"Ho-Kalman needs K ≥ 2, got {K}")

    seq = _markov_sequence(H)
    K1, K2 = hankel_split(K)
    H_minus = np.block([[seq[i + j + 1] for j in range(K2)] for i in range(K1)])
    H_plus = np.block([[seq[i + j + 2] for j in range(K2)] for i in range(K1)])

    U, s, Vt = np.linalg.svd(H_minus, full_matrices=False)
    max_rank = min(K1 * m, K2 * p)

    if rank is None:
        r = int(np.sum(s > sv_threshold * s[0])) if s.size and s[0] > 0 else 0
    else:
        if rank > max_rank:
            raise DimensionError(f"rank {rank} exceeds min(K₁m, K₂p) = {max_rank}")
        r = int(rank)
    if r <= 0 or s[0] == 0:
        raise RankCollapseError("rank collapse: no singular value above threshold")
    if s[r - 1] / s[0] < MIN_SV_RATIO:
        raise IllConditionedError(
            f"ill-conditioned pseudo-inverse: σ_r/σ_1 = {s[r - 1] / s[0]:.3g} < {MIN_SV_RATIO}"
        )

    root = np.sqrt(s[:r])
    O = U[:, :r] * root
    Q = root[:, None] * Vt[:r]
    O_pinv = (U[:, :r] / root).T          # Σ^{-1/2} U_rᵀ
    Q_pinv = Vt[:r].T / root              # V_r Σ^{-1/2}

    return Realization(
        A_hat=O_pinv @ H_plus @ Q_pinv,
        B_hat=Q[:, :p],
        C_hat=O[:m],
        D_hat=np.array(seq[0], dtype=float),
        singular_values=s,
    )


def realization_markov(r: Realization, K: int) -> MarkovMatrix:
    """Order-K Markov matrix generated by a realization."""
    return markov_matrix(r.as_system(), K)


def realization_distance(r1: Realization, r2: Realization, K: int) -> float:
    """‖G^{(K)}(r1) − G^{(K)}(r2)‖_F; invariant under similarity transforms."""
    if r1.C_hat.shape[0] != r2.C_hat.shape[0] or r1.B_hat.shape[1] != r2.B_hat.shape[1]:
        raise DimensionError("realizations have different (m, p)")
    return float(np.linalg.norm(realization_markov(r1, K).G - realization_markov(r2, K).G))
