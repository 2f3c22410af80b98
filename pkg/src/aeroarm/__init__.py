"""Tendon-driven continuum arm on a quadrotor: kinematics, dynamics, control,
sensing and a deterministic scenario simulator."""

from .config import SimConfig, default_config_toml, load_config
from .control import (AdaptiveState, ArmGains, ArmTaskController, TensionLoopParams,
                      UavGains, desired_attitude, tension_regulator,
                      uav_attitude_control, uav_position_control)
from .dynamics import (GeneralizedForces, InertiaParams, SystemState, actuator_forces,
                       coriolis_matrix, forward_dynamics, gravity_vector,
                       kinetic_energy, mass_matrix, potential_energy, spring_forces,
                       step, tension_coupling_matrix, total_energy)
from .errors import (AeroArmError, GimbalLockError, InconsistentActuationError,
                     InconsistentMeasurementError, InfeasibleConfigError,
                     InfeasibleTensionError, IntegrationFault,
                     SingularConfigurationError, UnreachableAttitudeError,
                     UnreachablePointError, ZeroThrustError)
from .harness import RunResult, check_thresholds, emit_logs, run_scenario
from .pcc import (ArmConfig, RigidPose, SegmentConfig, canonical_segment, compose_chain,
                  end_effector_world_pose, segment_config_from_tip,
                  segment_tip_displacement, segment_transform)
from .scenarios import SCENARIOS, Scenario, get_scenario
from .sensors import (ImuReading, ImuSensor, NoiseModel, TensionReading, TensionSensor,
                      config_from_imu, estimate_ee_pose)
from .tendon import (TendonGeometry, TendonState, actuation_from_config,
                     actuation_jacobian, config_from_actuation,
                     instantaneous_actuation, section_actuation, tendon_lengths)

__version__ = "0.1.0"
