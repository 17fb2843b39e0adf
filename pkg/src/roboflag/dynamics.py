"""Vehicle models for the RoboFlag Drill.

Defenders (and, in the replanning game, attackers) obey the reduced
omni-drive model ``x'' + x' = u`` per axis.  Because the system is linear
and time invariant, propagation under a constant input is done in closed
form.  Attackers in the planning model move along straight lines at
constant velocity until they are intercepted or reach the Defense Zone.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, replace
from enum import Enum

import numpy as np

CONTROL_TOL = 1e-9


class ValidationError(ValueError):
    """Raised when a value violates a model invariant."""


def _check_finite(**values: float) -> None:
    for name, value in values.items():
        if not math.isfinite(value):
            raise ValidationError(f"{name} must be finite, got {value!r}")


@dataclass(frozen=True)
class DefenderState:
    x: float
    y: float
    vx: float = 0.0
    vy: float = 0.0

    def __post_init__(self):
        _check_finite(x=self.x, y=self.y, vx=self.vx, vy=self.vy)

    @property
    def position(self) -> tuple[float, float]:
        return (self.x, self.y)

    @property
    def velocity(self) -> tuple[float, float]:
        return (self.vx, self.vy)


@dataclass(frozen=True)
class ControlInput:
    ux: float
    uy: float

    def __post_init__(self):
        _check_finite(ux=self.ux, uy=self.uy)
        if self.ux * self.ux + self.uy * self.uy > 1.0 + CONTROL_TOL:
            raise ValidationError(f"control ({self.ux}, {self.uy}) outside the unit disk")


@dataclass(frozen=True)
class SampleGrid:
    T: float = 0.1
    N_a: int = 1000

    def __post_init__(self):
        if not (self.T > 0 and math.isfinite(self.T)):
            raise ValidationError("sample period T must be positive")
        if self.N_a < 1:
            raise ValidationError("sample count N_a must be at least 1")

    def sample_time(self, k: int) -> float:
        return k * self.T


class DeactivationReason(str, Enum):
    INTERCEPTED = "intercepted"
    ENTERED_ZONE = "entered_zone"


@dataclass(frozen=True)
class AttackerTrack:
    """Straight-line attacker with an absorbing active/inactive mode."""

    p: float
    q: float
    vp: float
    vq: float
    active: int = 1
    t_deactivated: float | None = None
    reason: DeactivationReason | None = None

    def __post_init__(self):
        _check_finite(p=self.p, q=self.q, vp=self.vp, vq=self.vq)
        if self.active not in (0, 1):
            raise ValidationError("active flag must be 0 or 1")
        if self.active == 0 and self.t_deactivated is None:
            raise ValidationError("inactive attacker needs a deactivation time")
        if self.active == 1 and self.t_deactivated is not None:
            raise ValidationError("active attacker cannot carry a deactivation time")

    @property
    def speed(self) -> float:
        return math.hypot(self.vp, self.vq)


@dataclass(frozen=True)
class OmniDriveParams:
    mass: float = 1.0
    inertia: float = 1.0
    arm_length: float = 1.0
    u_theta: float = 0.0

    def __post_init__(self):
        if min(self.mass, self.inertia, self.arm_length) <= 0:
            raise ValidationError("mass, inertia and arm length must be positive")
        if abs(self.u_theta) > 3.0:
            raise ValidationError("|u_theta| must not exceed 3")

    @property
    def rotational_damping(self) -> float:
        return 2.0 * self.mass * self.arm_length ** 2 / self.inertia


def step_axis(pos: float, vel: float, u: float, dt: float) -> tuple[float, float]:
    """Exact response of ``x'' + x' = u`` over ``dt`` with constant ``u``."""
    decay = math.exp(-dt)
    dv = vel - u
    return pos + u * dt + dv * (1.0 - decay), u + dv * decay


def step_defender(s: DefenderState, u: ControlInput, dt: float) -> DefenderState:
    if not (dt > 0 and math.isfinite(dt)):
        raise ValidationError(f"dt must be positive and finite, got {dt!r}")
    x, vx = step_axis(s.x, s.vx, u.ux, dt)
    y, vy = step_axis(s.y, s.vy, u.uy, dt)
    return DefenderState(x, y, vx, vy)


def attacker_position_at(a: AttackerTrack, grid: SampleGrid, t: float) -> tuple[float, float]:
    """Position of a straight-line attacker at time ``t``.

    Follows the sampled recursion: the position at sample ``k = floor(t/T)``
    plus the in-between motion, with the motion gated by the active flag.
    Once deactivated the attacker stays where it was at ``t_deactivated``.
    """
    if t < 0:
        raise ValidationError("time must be nonnegative")
    if a.active == 0 and t >= a.t_deactivated:
        t = a.t_deactivated
    k = math.floor(t / grid.T)
    tk = grid.sample_time(k)
    # sample recursion with a[j] = 1 for j < k collapses to a single product
    pk, qk = a.p + a.vp * tk, a.q + a.vq * tk
    return (pk + a.vp * (t - tk), qk + a.vq * (t - tk))


def deactivate(a: AttackerTrack, t: float, reason: DeactivationReason | str) -> AttackerTrack:
    if a.active != 1:
        raise ValidationError("attacker is already inactive")
    if t < 0:
        raise ValidationError("time must be nonnegative")
    reason = DeactivationReason(reason)
    return replace(a, active=0, t_deactivated=float(t), reason=reason)


def motor_matrix(theta: float) -> np.ndarray:
    s60 = math.pi / 3.0
    return np.array([
        [-math.sin(theta), -math.sin(s60 - theta), math.sin(s60 + theta)],
        [math.cos(theta), -math.cos(s60 - theta), -math.cos(s60 + theta)],
        [1.0, 1.0, 1.0],
    ])


def motor_matrix_apply(theta: float, voltages) -> np.ndarray:
    U = np.asarray(voltages, dtype=float)
    if U.shape != (3,):
        raise ValidationError("expected three motor voltages")
    if np.any(np.abs(U) > 1.0):
        raise ValidationError("motor voltages must lie in [-1, 1]")
    return motor_matrix(theta) @ U


def restricted_control_ok(u) -> bool:
    """Membership in the largest orientation-independent control set."""
    ux, uy, ut = (float(c) for c in u)
    if abs(ut) > 3.0:
        return False
    radius = (3.0 - abs(ut)) / 2.0
    return ux * ux + uy * uy <= radius * radius
