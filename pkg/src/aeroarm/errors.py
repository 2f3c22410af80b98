"""Exception hierarchy shared across the toolkit."""


class AeroArmError(Exception):
    """Base class for all toolkit errors."""


class UnreachablePointError(AeroArmError):
    """Tip point cannot be realized by a constant-curvature arc of the given length."""


class InfeasibleConfigError(AeroArmError):
    """Segment configuration violates a geometric constraint (e.g. tendon length <= 0)."""


class InconsistentActuationError(AeroArmError):
    """Tendon displacements violate the antagonistic-pair structure beyond tolerance."""


class SingularConfigurationError(AeroArmError):
    """Operation undefined at or too close to the straight-arm singularity."""


class ZeroThrustError(AeroArmError):
    """Thrust command has zero norm; desired attitude is undefined."""


class UnreachableAttitudeError(AeroArmError):
    """Thrust points straight down; the attitude quaternion map is singular."""


class InfeasibleTensionError(AeroArmError):
    """Tension floor cannot be satisfied without exceeding the actuator limit."""


class GimbalLockError(AeroArmError):
    """UAV pitch reached the Euler-angle singularity guard."""


class IntegrationFault(AeroArmError):
    """Integrator produced a non-finite state."""


class InconsistentMeasurementError(AeroArmError):
    """Sensor reading is incompatible with the geometric model."""
