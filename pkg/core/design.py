# core/design.py
"""Assemble the concatenated regression problem from one trajectory and a horizon T."""

from typing import Optional

import numpy as np

from core.errors import HorizonError
from core.models import RegressionData, System, Trajectory


def stack_lagged(seq: np.ndarray, T: int) -> np.ndarray:
    """
    Rows [s_tᵀ, s_{t−1}ᵀ, …, s_{t−T+1}ᵀ] for t = T−1, …, L−1 (newest block first).

    seq is L×d; the result is (L−T+1)×Td.
    """
    L = seq.shape[0]
    N = L - T + 1
    return np.hstack([seq[T - 1 - j:T - 1 - j + N] for j in range(T)])


def build_F(sys: System, T: int) -> np.ndarray:
    """F = [0, C, CA, …, CA^{T−2}] ∈ R^{m×Tn}."""
    if T < 1:
        raise ValueError(f"T must be at least 1, got {T}")
    blocks = [np.zeros((sys.m, sys.n))]
    CAk = sys.C
    for _ in range(T - 1):
        blocks.append(CAk)
        CAk = CAk @ sys.A
    return np.hstack(blocks)


def build_regression(traj: Trajectory, T: int, sys: Optional[System] = None) -> RegressionData:
    """
    Y rows y_{T−1}..y_{T+N−2}, U rows ū_{T−1}..ū_{T+N−2}, N = L − T + 1.

    With the true system supplied, the diagnostic W, E, V, F are filled in and
    Y = U Gᵀ + W Fᵀ + E + V holds up to round-off.
    """
    if T < 1:
        raise ValueError(f"T must be at least 1, got {T}")
    L = traj.length
    if L < T:
        raise HorizonError(T, L)

    Y = traj.outputs[T - 1:]
    U = stack_lagged(traj.inputs, T)
    p = traj.inputs.shape[1]

    if sys is None:
        return RegressionData(Y=Y, U=U, T=T, p=p)

    N = L - T + 1
    W = stack_lagged(traj.process_noise, T)
    CAT1 = sys.C @ np.linalg.matrix_power(sys.A, T - 1)
    E = traj.states[:N] @ CAT1.T          # e_t = C A^{T−1} x_{t−T+1}
    V = traj.measurement_noise[T - 1:]
    return RegressionData(Y=Y, U=U, T=T, p=p, W=W, E=E, V=V, F=build_F(sys, T), n=sys.n)
