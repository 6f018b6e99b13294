# core/errors.py
"""Exception hierarchy shared by the numerical core, the harness and the CLI."""


class SysIdError(Exception):
    """Base class for every error raised by this project."""


class DimensionError(SysIdError, ValueError):
    """Matrix or vector shapes are inconsistent."""


class UnstableSystemError(SysIdError):
    """Raised when rho(A) >= 1."""

    def __init__(self, spectral_radius: float):
        self.spectral_radius = spectral_radius
        super().__init__(
            f"system unstable — method assumptions violated (rho(A) = {spectral_radius:.6g})"
        )


class GeneratorError(SysIdError):
    """The random system generator kept producing degenerate draws."""


class HorizonError(SysIdError, ValueError):
    """Raised when the trajectory is shorter than the horizon."""

    def __init__(self, horizon: int, length: int):
        self.horizon = horizon
        self.length = length
        super().__init__(f"horizon exceeds trajectory length (T={horizon}, L={length})")


class RankCollapseError(SysIdError):
    """Ho-Kalman found no singular value above the threshold."""


class IllConditionedError(SysIdError):
    """Ho-Kalman pseudo-inverse would divide by a vanishing singular value."""


class ConfigError(SysIdError, ValueError):
    """Experiment configuration is malformed."""


class SchemaError(SysIdError, ValueError):
    """A serialized artifact does not follow its documented schema."""


class ConvergenceWarning(UserWarning):
    """The lasso solver hit max_iters before its KKT certificate was met."""
