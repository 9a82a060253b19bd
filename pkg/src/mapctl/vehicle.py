"""Single-track vehicle model: chassis parameters, tire forces, and dynamics.

All quantities use the ISO body frame (x forward, y left, z up); a positive
steering angle turns left. Forces are in Newton, angles in radians.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field

# Below this longitudinal speed slip angles are ill-conditioned and callers
# must switch to the kinematic model.
V_MIN = 0.5

GRAVITY = 9.81


@dataclass(frozen=True)
class VehicleParams:
    m: float = 3.5        # vehicle mass [kg]
    i_z: float = 0.05     # yaw moment of inertia [kg m^2]
    l_f: float = 0.15     # CG to front axle [m]
    l_r: float = 0.17     # CG to rear axle [m]
    h_cg: float = 0.07    # CG height above ground [m]
    mu: float = 1.0       # friction coefficient, reporting only (peak grip lives in D)
    g: float = GRAVITY    # gravity [m/s^2]

    def __post_init__(self):
        for name in ("m", "i_z", "l_f", "l_r", "h_cg", "mu", "g"):
            if getattr(self, name) <= 0.0:
                raise ValueError(f"VehicleParams.{name} must be strictly positive")

    @property
    def l_wb(self) -> float:
        """Wheelbase [m]."""
        return self.l_f + self.l_r


@dataclass(frozen=True)
class AxleTireParams:
    """Magic-formula coefficients for one axle (dimensionless)."""

    b: float   # stiffness factor
    c: float   # shape factor
    d: float   # peak value factor
    e: float   # curvature factor

    def __post_init__(self):
        if self.b <= 0.0:
            raise ValueError("stiffness factor B must be > 0")
        if not 0.0 < self.c <= 1.5:
            raise ValueError("shape factor C must be in (0, 1.5]")
        if self.d <= 0.0:
            raise ValueError("peak factor D must be > 0")
        if self.e > 1.1:
            raise ValueError("curvature factor E must be <= 1.1")


# Plausible defaults for a 1:10 car; not identified values, see config docs.
DEFAULT_FRONT_TIRE = AxleTireParams(b=9.0, c=1.35, d=1.0, e=0.9)
DEFAULT_REAR_TIRE = AxleTireParams(b=10.0, c=1.35, d=1.05, e=0.9)


@dataclass(frozen=True)
class TireModel:
    """Axle tire curves: Pacejka per axle, or linear cornering stiffness."""

    kind: str = "pacejka"                 # "pacejka" | "linear"
    front: AxleTireParams = DEFAULT_FRONT_TIRE
    rear: AxleTireParams = DEFAULT_REAR_TIRE
    c_front: float = 0.0                  # linear cornering stiffness [N/rad]
    c_rear: float = 0.0

    def __post_init__(self):
        if self.kind not in ("pacejka", "linear"):
            raise ValueError(f"unknown tire model kind {self.kind!r}")
        if self.kind == "linear" and (self.c_front <= 0.0 or self.c_rear <= 0.0):
            raise ValueError("linear cornering stiffness must be > 0")

    @staticmethod
    def pacejka(front: AxleTireParams, rear: AxleTireParams) -> "TireModel":
        return TireModel(kind="pacejka", front=front, rear=rear)

    @staticmethod
    def linear(c_front: float, c_rear: float) -> "TireModel":
        return TireModel(kind="linear", c_front=c_front, c_rear=c_rear)

    def axle_force(self, axle: str, alpha: float, f_z: float) -> float:
        """Lateral axle force at slip angle alpha under load f_z.

        The force opposes the slip angle (restoring), which is what the
        equations of motion need: a left turn builds negative front slip and
        the front axle then pushes left.
        """
        if self.kind == "linear":
            return linear_force(alpha, self.c_front if axle == "front" else self.c_rear)
        p = self.front if axle == "front" else self.rear
        return -pacejka_force(alpha, f_z, 1.0, p)


@dataclass
class VehicleState:
    x: float = 0.0         # world position [m]
    y: float = 0.0
    yaw: float = 0.0       # heading [rad], normalized to (-pi, pi]
    v_x: float = 0.0       # body-frame longitudinal velocity [m/s]
    v_y: float = 0.0       # body-frame lateral velocity [m/s]
    yaw_rate: float = 0.0  # [rad/s]

    def copy(self) -> "VehicleState":
        return VehicleState(self.x, self.y, self.yaw, self.v_x, self.v_y, self.yaw_rate)


@dataclass
class StateDerivative:
    x_dot: float
    y_dot: float
    yaw_dot: float
    v_x_dot: float
    v_y_dot: float
    yaw_rate_dot: float


def normalize_angle(angle: float) -> float:
    """Wrap an angle to (-pi, pi]."""
    wrapped = math.fmod(angle + math.pi, 2.0 * math.pi)
    if wrapped <= 0.0:
        wrapped += 2.0 * math.pi
    return wrapped - math.pi


def slip_angles(state: VehicleState, delta: float, params: VehicleParams) -> tuple[float, float]:
    """Front and rear slip angles for the current motion state.

    Raises ValueError for v_x <= 0 where the angles are undefined.
    """
    if state.v_x <= 0.0:
        raise ValueError("slip angles undefined for v_x <= 0")
    alpha_f = math.atan((state.v_y + state.yaw_rate * params.l_f) / state.v_x) - delta
    alpha_r = math.atan((state.v_y - state.yaw_rate * params.l_r) / state.v_x)
    return alpha_f, alpha_r


def axle_loads(a_long: float, params: VehicleParams) -> tuple[float, float]:
    """Vertical axle loads under longitudinal acceleration a_long [m/s^2].

    Negative loads (extreme a_long) are clamped to zero so downstream friction
    capacity never goes negative.
    """
    l_sum = params.l_r + params.l_f
    f_zf = (params.m * params.g * params.l_r - params.m * a_long * params.h_cg) / l_sum
    f_zr = (params.m * params.g * params.l_f + params.m * a_long * params.h_cg) / l_sum
    return max(f_zf, 0.0), max(f_zr, 0.0)


def pacejka_force(alpha: float, f_z: float, mu: float, p: AxleTireParams) -> float:
    """Magic-formula lateral force curve, shift factors omitted.

    Returns the force-vs-slip curve value mu * F_z * D * sin(C * atan(B*alpha
    - E*(B*alpha - atan(B*alpha)))); positive slip gives positive force. The
    dynamics negate this to obtain the restoring axle force.
    """
    if f_z < 0.0:
        raise ValueError("vertical load must be >= 0")
    b_alpha = p.b * alpha
    return mu * f_z * p.d * math.sin(p.c * math.atan(b_alpha - p.e * (b_alpha - math.atan(b_alpha))))


def linear_force(alpha: float, stiffness: float) -> float:
    """Linear restoring tire force -stiffness * alpha [N]."""
    return -stiffness * alpha


def cornering_stiffness(f_z: float, mu: float, p: AxleTireParams) -> float:
    """Slope of the Pacejka curve at zero slip: mu * F_z * B * C * D [N/rad]."""
    return mu * f_z * p.b * p.c * p.d


def dynamics_derivative(
    state: VehicleState,
    delta: float,
    a_long: float,
    params: VehicleParams,
    tires: TireModel,
) -> StateDerivative:
    """Time derivative of the dynamic single-track model.

    Lateral dynamics:
        v_y_dot    = (F_yr + F_yf) / m - v_x * yaw_rate
        yaw_accel  = (-l_r * F_yr + l_f * F_yf) / I_z
    with axle forces from the tire model at the current slip angles. The
    steering angle enters only through the front slip angle.
    """
    alpha_f, alpha_r = slip_angles(state, delta, params)
    f_zf, f_zr = axle_loads(a_long, params)
    f_yf = tires.axle_force("front", alpha_f, f_zf)
    f_yr = tires.axle_force("rear", alpha_r, f_zr)

    cos_yaw = math.cos(state.yaw)
    sin_yaw = math.sin(state.yaw)
    return StateDerivative(
        x_dot=state.v_x * cos_yaw - state.v_y * sin_yaw,
        y_dot=state.v_x * sin_yaw + state.v_y * cos_yaw,
        yaw_dot=state.yaw_rate,
        v_x_dot=a_long,
        v_y_dot=(f_yr + f_yf) / params.m - state.v_x * state.yaw_rate,
        yaw_rate_dot=(-params.l_r * f_yr + params.l_f * f_yf) / params.i_z,
    )


def kinematic_derivative(
    state: VehicleState,
    delta: float,
    a_long: float,
    params: VehicleParams,
) -> StateDerivative:
    """No-slip (Ackermann) model used below V_MIN: yaw rate is algebraic."""
    yaw_rate = state.v_x * math.tan(delta) / params.l_wb
    cos_yaw = math.cos(state.yaw)
    sin_yaw = math.sin(state.yaw)
    return StateDerivative(
        x_dot=state.v_x * cos_yaw,
        y_dot=state.v_x * sin_yaw,
        yaw_dot=yaw_rate,
        v_x_dot=a_long,
        v_y_dot=0.0,
        yaw_rate_dot=0.0,
    )
