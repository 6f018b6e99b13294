# core/models.py
"""Data models for the application."""

from dataclasses import dataclass, field
from typing import Dict, List, Optional, Tuple

import numpy as np
from pydantic import BaseModel, validator

from core.errors import DimensionError


def _frozen_array(value, ndim: int = 2) -> np.ndarray:
    """Copy into a read-only float array of the requested rank."""
    arr = np.array(value, dtype=float)
    if ndim == 2:
        arr = np.atleast_2d(arr)
    elif ndim == 1:
        arr = np.atleast_1d(arr).reshape(-1)
    arr.setflags(write=False)
    return arr


# ═══════════════════════════════════════════════════════════════
# LTI SYSTEMS AND TRAJECTORIES
# ═══════════════════════════════════════════════════════════════

@dataclass(frozen=True)
class System:
    """Partially observed LTI system x' = Ax + Bu + w, y = Cx + Du + v."""
    A: np.ndarray                   # n×n
    B: np.ndarray                   # n×p
    C: np.ndarray                   # m×n
    D: np.ndarray                   # m×p

    def __post_init__(self):
        for name in ("A", "B", "C", "D"):
            object.__setattr__(self, name, _frozen_array(getattr(self, name)))
        n, m, p = self.n, self.m, self.p
        if self.A.shape != (n, n):
            raise DimensionError(f"A must be square, got {self.A.shape}")
        if self.B.shape[0] != n:
            raise DimensionError(f"B has {self.B.shape[0]} rows, expected n={n}")
        if self.C.shape[1] != n:
            raise DimensionError(f"C has {self.C.shape[1]} columns, expected n={n}")
        if self.D.shape != (m, p):
            raise DimensionError(f"D must be {m}×{p}, got {self.D.shape}")

    @property
    def n(self) -> int:
        return self.A.shape[0]

    @property
    def m(self) -> int:
        return self.C.shape[0]

    @property
    def p(self) -> int:
        return self.B.shape[1]

    def __repr__(self):
        return f"System(n={self.n}, m={self.m}, p={self.p})"


@dataclass(frozen=True)
class StabilityCertificate:
    """Decay certificate ‖A^τ‖₁ ≤ c_sys·rho^τ plus the constants of the least-squares bound."""
    rho: float                      # decay rate, in [0, 1)
    c_sys: float                    # ≥ max{1, ‖B‖₁, ‖C‖₁, ‖D‖₁}
    spectral_radius: float          # ρ(A)
    phi: float                      # Φ(A) = max_τ ‖A^τ‖₂ / ρ(A)^τ
    gamma_inf_norm: float           # ‖Γ_∞‖₂
    tau_max: int = 0                # checked range 0..tau_max


@dataclass(frozen=True)
class NoiseConfig:
    """Standard deviations of input, process and measurement noise."""
    sigma_u: float = 1.0
    sigma_w: float = 0.0
    sigma_v: float = 0.0
    seed: int = 0

    def __post_init__(self):
        if not self.sigma_u > 0:
            raise ValueError(f"sigma_u must be positive, got {self.sigma_u}")
        if self.sigma_w < 0 or self.sigma_v < 0:
            raise ValueError("sigma_w and sigma_v must be nonnegative")

    @classmethod
    def from_variances(cls, sigma_w2: float, sigma_v2: float, sigma_u: float = 1.0, seed: int = 0):
        return cls(sigma_u=sigma_u, sigma_w=float(np.sqrt(sigma_w2)), sigma_v=float(np.sqrt(sigma_v2)), seed=seed)


@dataclass(frozen=True)
class Trajectory:
    """Single rollout; row t of each array is the sample at time t."""
    inputs: np.ndarray              # L×p
    states: np.ndarray              # (L+1)×n, states[0] = 0
    process_noise: np.ndarray       # L×n
    measurement_noise: np.ndarray   # L×m
    outputs: np.ndarray             # L×m
    noise: NoiseConfig

    def __post_init__(self):
        for name in ("inputs", "states", "process_noise", "measurement_noise", "outputs"):
            object.__setattr__(self, name, _frozen_array(getattr(self, name)))
        L = self.inputs.shape[0]
        if self.states.shape[0] != L + 1:
            raise DimensionError("states must hold one more sample than inputs")
        for name in ("process_noise", "measurement_noise", "outputs"):
            if getattr(self, name).shape[0] != L:
                raise DimensionError(f"{name} must hold {L} samples")

    @property
    def length(self) -> int:
        return self.inputs.shape[0]


# ═══════════════════════════════════════════════════════════════
# REGRESSION AND ESTIMATES
# ═══════════════════════════════════════════════════════════════

@dataclass(frozen=True)
class RegressionData:
    """Concatenated regression Y = U Gᵀ + W Fᵀ + E + V."""
    Y: np.ndarray                   # N×m
    U: np.ndarray                   # N×Tp, rows ū_t newest block first
    T: int
    p: int
    W: Optional[np.ndarray] = None  # N×Tn (diagnostic)
    E: Optional[np.ndarray] = None  # N×m  (diagnostic)
    V: Optional[np.ndarray] = None  # N×m  (diagnostic)
    F: Optional[np.ndarray] = None  # m×Tn (diagnostic)
    n: Optional[int] = None

    def __post_init__(self):
        for name in ("Y", "U", "W", "E", "V", "F"):
            value = getattr(self, name)
            if value is not None:
                object.__setattr__(self, name, _frozen_array(value))
        if self.U.shape != (self.Y.shape[0], self.T * self.p):
            raise DimensionError(f"U must be {self.Y.shape[0]}×{self.T * self.p}, got {self.U.shape}")

    @property
    def N(self) -> int:
        return self.Y.shape[0]

    @property
    def m(self) -> int:
        return self.Y.shape[1]

    @property
    def q(self) -> Optional[int]:
        return None if self.n is None else self.p + self.n + self.m

    @property
    def has_diagnostics(self) -> bool:
        return self.W is not None


@dataclass(frozen=True)
class MarkovMatrix:
    """Horizontal stack [D, G_0, …, G_{K−2}] ∈ R^{m×Kp}."""
    G: np.ndarray
    p: int
    underdetermined: bool = False           # LS only: N < Tp or rank(U) < Tp
    lam: Optional[float] = None             # lasso only
    kkt_residuals: Optional[np.ndarray] = None
    converged: Optional[np.ndarray] = None

    def __post_init__(self):
        object.__setattr__(self, "G", _frozen_array(self.G))
        if self.p < 1 or self.G.shape[1] % self.p:
            raise DimensionError(f"G has {self.G.shape[1]} columns, not a multiple of p={self.p}")

    @property
    def K(self) -> int:
        return self.G.shape[1] // self.p

    @property
    def m(self) -> int:
        return self.G.shape[0]

    def block(self, k: int) -> np.ndarray:
        """k-th column block; block 0 is D, block k ≥ 1 is C A^{k−1} B."""
        if not 0 <= k < self.K:
            raise IndexError(f"block {k} outside 0..{self.K - 1}")
        return self.G[:, k * self.p:(k + 1) * self.p]


@dataclass(frozen=True)
class LassoConfig:
    """Solver settings for the row-wise lasso."""
    lam: float = 0.0
    tol: float = 1e-10              # relative objective decrease
    max_iters: int = 100_000        # coordinate-descent sweeps
    epsilon: float = 0.0            # residual-state term of the λ rule
    kkt_tol: float = 1e-6
    debug: bool = False             # assert monotone objective

    def __post_init__(self):
        if self.lam < 0:
            raise ValueError(f"lambda must be nonnegative, got {self.lam}")
        if not self.tol > 0:
            raise ValueError(f"tol must be positive, got {self.tol}")
        if self.max_iters < 1:
            raise ValueError("max_iters must be at least 1")


@dataclass(frozen=True)
class LassoSolution:
    coef: np.ndarray
    kkt_residual: float
    iterations: int
    converged: bool
    objective: float


@dataclass(frozen=True)
class ErrorReport:
    delta: np.ndarray               # G − Ĝ
    row_l2: np.ndarray
    norm_2inf: float
    norm_fro: float
    norm_spec: float

    def as_record(self) -> Dict[str, float]:
        return {
            "norm_2inf": self.norm_2inf,
            "norm_fro": self.norm_fro,
            "norm_spec": self.norm_spec,
            "row_l2": [float(x) for x in self.row_l2],
        }


# ═══════════════════════════════════════════════════════════════
# REALIZATION
# ═══════════════════════════════════════════════════════════════

@dataclass(frozen=True)
class HankelMatrix:
    H: np.ndarray                   # Km×Kp
    K: int
    m: int
    p: int
    provenance: str                 # 'true' or 'padded'

    def block(self, i: int, j: int) -> np.ndarray:
        return self.H[i * self.m:(i + 1) * self.m, j * self.p:(j + 1) * self.p]


@dataclass(frozen=True)
class Realization:
    A_hat: np.ndarray
    B_hat: np.ndarray
    C_hat: np.ndarray
    D_hat: np.ndarray
    singular_values: np.ndarray

    @property
    def r(self) -> int:
        return self.A_hat.shape[0]

    def as_system(self) -> System:
        return System(self.A_hat, self.B_hat, self.C_hat, self.D_hat)


# ═══════════════════════════════════════════════════════════════
# THEORY AND VERIFICATION
# ═══════════════════════════════════════════════════════════════

@dataclass(frozen=True)
class TheoryBounds:
    """Closed-form quantities of the regularized estimator's guarantee (unit constants)."""
    T0: float                       # horizon threshold with log(σ_w+σ_v)
    T0_alt: float                   # same threshold with log(σ_w+σ_u)
    E1: float
    E2: float
    sigma_w_bar: float
    R: float
    kappa: float
    f_slack: float
    eta: float
    epsilon: float
    sigma_e: Optional[float] = None
    ls_bound_fro: Optional[float] = None
    ratio: Optional[float] = None
    epsilon_tilde: Optional[float] = None
    lambda_lower: Optional[float] = None

    @property
    def markov_2inf_bound(self) -> float:
        return max(self.E1, self.E2)

    def as_record(self) -> Dict[str, Optional[float]]:
        return {k: (None if v is None else float(v)) for k, v in self.__dict__.items()}


@dataclass(frozen=True)
class RowL1Check:
    passed: np.ndarray              # bool per row
    row_l1: np.ndarray
    margins: np.ndarray             # R − ‖G_{i:}‖₁
    R: float

    @property
    def all_passed(self) -> bool:
        return bool(np.all(self.passed))


@dataclass(frozen=True)
class DeterministicBoundCheck:
    holds: bool
    error_sq: float
    threshold: float
    f_term: float
    lambda_term: float
    assumptions_hold: bool
    support_size: Optional[int] = None


@dataclass(frozen=True)
class VerificationReport:
    """Monte Carlo verification record: {lemma, params, trials, success_rate, margin_quantiles}."""
    lemma: str
    params: Dict[str, float]
    trials: int
    success_rate: float
    margin_quantiles: Dict[str, float]
    hypothesis_met: bool = True
    extra: Dict[str, object] = field(default_factory=dict)

    def as_record(self) -> Dict[str, object]:
        return {
            "lemma": self.lemma,
            "params": dict(self.params),
            "trials": self.trials,
            "success_rate": self.success_rate,
            "margin_quantiles": dict(self.margin_quantiles),
            "hypothesis_met": self.hypothesis_met,
            **({"extra": self.extra} if self.extra else {}),
        }


# ═══════════════════════════════════════════════════════════════
# EXPERIMENT HARNESS
# ═══════════════════════════════════════════════════════════════

LAMBDA_RULES = ("simulation", "theorem", "fixed")
ESTIMATORS = ("lasso", "ls")


class ExperimentConfig(BaseModel):
    """Grid definition for the reproduction experiments."""
    n: int = 40
    m: int = 10
    p: int = 10
    bandwidth: int = 5
    target_rho: float = 0.8
    T_grid: List[int] = [10]
    N_grid: List[int] = [40, 80, 160, 320]
    noise_grid: List[Tuple[float, float]] = [(0.1, 0.1)]   # (σ_w², σ_v²)
    sigma_u: float = 1.0
    seeds: List[int] = list(range(10))
    base_seed: int = 0
    lambda_rule: str = "simulation"
    c0: float = 0.2
    epsilon: float = 0.0
    lambda_value: float = 0.0
    estimators: List[str] = list(ESTIMATORS)
    outputs: str = "results"
    hankel_order: Optional[int] = None      # defaults to T per cell
    tau_max: int = 200

    @validator("n", "m", "p", "tau_max")
    def _positive(cls, value):
        if value < 1:
            raise ValueError("must be a positive integer")
        return value

    @validator("bandwidth")
    def _bandwidth(cls, value):
        if value < 0:
            raise ValueError("must be nonnegative")
        return value

    @validator("target_rho")
    def _rho(cls, value):
        if not 0 < value < 1:
            raise ValueError("target_rho must lie in (0, 1)")
        return value

    @validator("T_grid", "N_grid", "seeds", "noise_grid", "estimators")
    def _non_empty(cls, value):
        if not value:
            raise ValueError("grid must be non-empty")
        return value

    @validator("T_grid", "N_grid", each_item=True)
    def _positive_items(cls, value):
        if value < 1:
            raise ValueError("grid values must be positive")
        return value

    @validator("noise_grid", each_item=True)
    def _noise(cls, value):
        if value[0] < 0 or value[1] < 0:
            raise ValueError("noise variances must be nonnegative")
        return value

    @validator("sigma_u")
    def _sigma_u(cls, value):
        if not value > 0:
            raise ValueError("sigma_u must be positive")
        return value

    @validator("lambda_rule")
    def _rule(cls, value):
        if value not in LAMBDA_RULES:
            raise ValueError(f"lambda_rule must be one of {LAMBDA_RULES}")
        return value

    @validator("estimators", each_item=True)
    def _estimator(cls, value):
        if value not in ESTIMATORS:
            raise ValueError(f"estimator must be one of {ESTIMATORS}")
        return value

    @validator("hankel_order")
    def _hankel_order(cls, value, values):
        if value is None:
            return value
        longest = max(values.get("T_grid") or [1])
        if value < longest:
            raise ValueError(f"hankel_order {value} is below the longest horizon T={longest}; "
                             "padded Hankel matrices need T ≤ hankel_order")
        return value

    @validator("lambda_value", "epsilon", "c0")
    def _nonneg(cls, value):
        if value < 0:
            raise ValueError("must be nonnegative")
        return value


@dataclass
class ExperimentRecord:
    """One (T, N, noise, seed, estimator) cell of the grid."""
    n: int
    m: int
    p: int
    T: int
    N: int
    sigma_w2: float
    sigma_v2: float
    seed: int
    estimator: str
    lam: Optional[float]
    underdetermined: bool
    markov_fro: float
    markov_2inf: float
    hankel_fro: float
    hankel_2inf: float
    wall_time: float
    E1: Optional[float] = None
    E2: Optional[float] = None
    ls_bound_fro: Optional[float] = None
    ratio: Optional[float] = None

    def sort_key(self):
        return (self.T, self.N, self.sigma_w2, self.sigma_v2, self.seed, self.estimator)


@dataclass
class ExperimentFailure:
    T: int
    N: int
    sigma_w2: float
    sigma_v2: float
    seed: int
    message: str


@dataclass
class ExperimentReport:
    records: List[ExperimentRecord] = field(default_factory=list)
    failures: List[ExperimentFailure] = field(default_factory=list)

    @property
    def ok(self) -> bool:
        return not self.failures

    def sorted(self) -> "ExperimentReport":
        return ExperimentReport(
            records=sorted(self.records, key=ExperimentRecord.sort_key),
            failures=sorted(self.failures, key=lambda f: (f.T, f.N, f.sigma_w2, f.sigma_v2, f.seed)),
        )


@dataclass
class SweepSummary:
    """Median of one metric along one grid axis, for one estimator."""
    axis: str                       # 'T' or 'noise'
    values: List                    # grid values along the axis
    estimator: str
    metric: str
    medians: List[float]
    non_monotone: Optional[bool]    # decrease-then-increase; None when the grid is too short
    report: ExperimentReport
