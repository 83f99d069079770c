"""Kinematic bicycle model and Ackermann turning geometry.

Units are grid cells and seconds. Slip angle is taken as zero, so the model is

    x' = v cos(psi),  y' = v sin(psi),  v' = a,  psi' = v tan(delta) / L
"""
import math
from dataclasses import dataclass

TWO_PI = 2.0 * math.pi


def normalize_angle(angle):
    """Wrap an angle into (-pi, pi]."""
    a = math.remainder(angle, TWO_PI)
    return math.pi if a == -math.pi else a


@dataclass(frozen=True)
class VehicleParams:
    wheelbase: float = 2.8
    track: float = 1.6
    body_length: float = 4.5
    body_width: float = 2.0
    delta_max: float = math.radians(33.0)
    a_min: float = -1.0
    a_max: float = 1.0
    v_max: float = 2.0

    def __post_init__(self):
        if not (self.wheelbase > 0 and self.track > 0):
            raise ValueError("wheelbase and track must be positive")
        if not 0 <= self.delta_max < math.pi / 2:
            raise ValueError("delta_max must lie in [0, pi/2)")
        if not self.a_min <= 0 <= self.a_max:
            raise ValueError("acceleration bounds must bracket zero")
        if self.v_max <= 0:
            raise ValueError("v_max must be positive")

    @property
    def rear_overhang(self):
        # axles sit symmetrically inside the body
        return max(0.0, (self.body_length - self.wheelbase) / 2.0)

    @property
    def front_reach(self):
        """Distance from the rear axle to the front bumper."""
        return self.wheelbase + self.rear_overhang


@dataclass(frozen=True)
class VehicleState:
    x: float = 0.0
    y: float = 0.0
    v: float = 0.0
    psi: float = 0.0

    def __post_init__(self):
        if not all(math.isfinite(f) for f in (self.x, self.y, self.v, self.psi)):
            raise ValueError(f"non-finite vehicle state {self}")
        object.__setattr__(self, "psi", normalize_angle(self.psi))

    def as_tuple(self):
        return (self.x, self.y, self.v, self.psi)


@dataclass(frozen=True)
class ControlInput:
    a: float = 0.0
    delta: float = 0.0

    def within(self, params):
        return (params.a_min <= self.a <= params.a_max
                and -params.delta_max <= self.delta <= params.delta_max)


def step(state, u, dt, params):
    """Advance ``state`` by one explicit-Euler step of length ``dt``."""
    if dt <= 0:
        raise ValueError("dt must be positive")
    x, y, v, psi = state.x, state.y, state.v, state.psi
    v_next = min(max(v + u.a * dt, -params.v_max), params.v_max)
    return VehicleState(
        x + v * math.cos(psi) * dt,
        y + v * math.sin(psi) * dt,
        v_next,
        psi + v * math.tan(u.delta) / params.wheelbase * dt,
    )


def min_turn_radius(params):
    """Tightest rear-axle turning radius, L / tan(delta_max)."""
    if not 0 < params.delta_max < math.pi / 2:
        raise ValueError("minimum turning radius needs 0 < delta_max < pi/2")
    return params.wheelbase / math.tan(params.delta_max)


def steering_for_radius(radius, params):
    return math.atan(params.wheelbase / radius)


def footprint_radius(params, margin=0.0):
    """Circumscribed circle of the body plus a safety margin."""
    if margin < 0:
        raise ValueError("margin must be non-negative")
    return math.hypot(params.body_length / 2.0, params.body_width / 2.0) + margin
