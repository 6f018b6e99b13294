# core/config.py
"""Centralized configuration management."""

import os
from dotenv import load_dotenv


def _env_float(name: str, default: float) -> float:
    try:
        return float(os.getenv(name, str(default)).strip())
    except ValueError:
        return default


def _env_int(name: str, default: int) -> int:
    try:
        return int(os.getenv(name, str(default)).strip())
    except ValueError:
        return default


def _env_flag(name: str, default: bool) -> bool:
    raw = os.getenv(name, "").strip().lower()
    if not raw:
        return default
    return raw in ("1", "true", "yes", "on")


class Config:
    """Application configuration loaded from environment variables."""
    
    def __init__(self):
        load_dotenv(override=True)
        
        # Output locations
        self.OUTPUT_DIR = os.getenv("SYSID_OUTPUT_DIR", "results").strip() or "results"
        
        # Lasso solver
        self.LASSO_TOL = _env_float("SYSID_LASSO_TOL", 1e-10)
        if self.LASSO_TOL <= 0:
            self.LASSO_TOL = 1e-10
        self.LASSO_MAX_ITERS = _env_int("SYSID_LASSO_MAX_ITERS", 100_000)
        if self.LASSO_MAX_ITERS < 1:
            self.LASSO_MAX_ITERS = 100_000
        self.KKT_TOL = _env_float("SYSID_KKT_TOL", 1e-6)
        if self.KKT_TOL <= 0:
            self.KKT_TOL = 1e-6
        self.LASSO_DEBUG = _env_flag("SYSID_LASSO_DEBUG", False)
        
        # Realization / certificates
        self.SV_THRESHOLD = _env_float("SYSID_SV_THRESHOLD", 1e-10)
        self.TAU_MAX = _env_int("SYSID_TAU_MAX", 200)
        if self.TAU_MAX < 1:
            self.TAU_MAX = 200
        
        # Console output
        self.VERBOSE = _env_flag("SYSID_VERBOSE", True)
    
    def lasso_config(self, lam: float = 0.0, epsilon: float = 0.0):
        """Build a LassoConfig carrying the solver settings from the environment."""
        from core.models import LassoConfig
        return LassoConfig(
            lam=lam,
            tol=self.LASSO_TOL,
            max_iters=self.LASSO_MAX_ITERS,
            epsilon=epsilon,
            kkt_tol=self.KKT_TOL,
            debug=self.LASSO_DEBUG,
        )
