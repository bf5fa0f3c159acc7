"""
Error hierarchy for mppgeo
Every failure carries the CLI exit code it maps to
"""

from typing import Dict, Optional, Tuple


class MPPGeoError(Exception):
    """Base class for all library errors"""

    exit_code = 1
    kind = "error"

    def __init__(self, message: str, **details):
        super().__init__(message)
        self.message = message
        self.details = details

    def to_dict(self) -> Dict:
        """Machine-readable form written to stderr by the CLI"""
        payload = {"error": self.kind, "message": self.message, "exit_code": self.exit_code}
        payload.update({k: v for k, v in self.details.items() if _is_plain(v)})
        return payload


def _is_plain(value) -> bool:
    return isinstance(value, (str, int, float, bool, type(None), list, tuple, dict))


class ConfigError(MPPGeoError):
    """Invalid or incomplete experiment configuration"""

    exit_code = 2
    kind = "config"


class IntegrationError(MPPGeoError):
    """Failure while evaluating geometry or integrating an ODE"""

    exit_code = 3
    kind = "integration"


class ChartDomainError(IntegrationError):
    """Point lies outside the chart domain"""

    kind = "chart_domain"


class ChartExitError(IntegrationError):
    """Trajectory left the chart domain; the partial trajectory is attached"""

    kind = "chart_exit"

    def __init__(self, message: str, exit_time: float, trajectory=None):
        super().__init__(message, exit_time=exit_time)
        self.exit_time = exit_time
        self.trajectory = trajectory


class NonPositiveMetricError(IntegrationError):
    """Metric (or cometric) is not symmetric positive definite at a point"""

    kind = "non_positive_metric"


class FrameDegeneracyError(IntegrationError):
    """Frame lost full column rank"""

    kind = "frame_degeneracy"


class NonHorizontalPathError(IntegrationError):
    """Frame path violates the horizontality constraint beyond tolerance"""

    kind = "non_horizontal"


class CoincidentLandmarksError(IntegrationError):
    """Two landmarks coincide, the kernel matrix is singular"""

    kind = "coincident_landmarks"

    def __init__(self, message: str, pair: Tuple[int, int]):
        super().__init__(message, pair=list(pair))
        self.pair = pair


class SolverError(MPPGeoError):
    """Boundary value or estimation solver failed"""

    exit_code = 4
    kind = "solver"


class ShootingError(SolverError):
    """Shooting did not reach the target within the restart budget"""

    kind = "shooting"

    def __init__(self, message: str, result=None, residual: Optional[float] = None):
        super().__init__(message, residual=residual)
        self.result = result


class EstimationError(SolverError):
    """An estimator's inner problem failed"""

    kind = "estimation"

    def __init__(self, message: str, index: Optional[int] = None):
        super().__init__(message, index=index)
        self.index = index


class CovarianceCollapseError(EstimationError):
    """Frame estimate hit the rank guard"""

    kind = "covariance_collapse"
