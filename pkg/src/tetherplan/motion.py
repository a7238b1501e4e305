"""Tether-space motion primitives: polar PID position control, Jacobian velocity control, gimbal pointing."""
from __future__ import annotations

import math
from dataclasses import dataclass, field

import numpy as np

from .errors import SingularityError
from .tether import PolarCoords, inverse_position, wrap_angle

DEFAULT_SINGULARITY = 1e-2  # minimum |cos(theta)|, i.e. |det J| / L^2
DEFAULT_L_MIN = 1e-3


@dataclass(frozen=True)
class PidGains:
    kp: tuple = (1.2, 1.2, 1.2)  # (L, theta, phi)
    ki: tuple = (0.0, 0.0, 0.0)
    kd: tuple = (0.1, 0.1, 0.1)
    integral_clamp: float = 1.0
    max_rates: tuple = (1.0, 0.8, 0.8)  # m/s, rad/s, rad/s

    def __post_init__(self):
        for name in ("kp", "ki", "kd"):
            v = getattr(self, name)
            if isinstance(v, (int, float)):
                v = (float(v),) * 3
            v = tuple(float(x) for x in v)
            if len(v) != 3 or min(v) < 0:
                raise ValueError(f"{name} needs three non-negative gains")
            object.__setattr__(self, name, v)
        rates = self.max_rates
        if isinstance(rates, (int, float)):
            rates = (float(rates),) * 3
        object.__setattr__(self, "max_rates", tuple(float(r) for r in rates))
        if self.integral_clamp <= 0 or min(self.max_rates) <= 0:
            raise ValueError("clamps must be positive")


@dataclass(frozen=True)
class GimbalCommand:
    vehicle_yaw: float
    camera_pitch: float
    camera_roll: float = 0.0

    def optical_axis(self):
        c = math.cos(self.camera_pitch)
        return np.array([
            c * math.sin(self.vehicle_yaw),
            math.sin(self.camera_pitch),
            c * math.cos(self.vehicle_yaw),
        ])


def jacobian(p):
    """d(x, y, z) / d(L, theta, phi) of the straight-tether map."""
    L, th, ph = p.L, p.theta, p.phi
    ct, st = math.cos(th), math.sin(th)
    cp, sp = math.cos(ph), math.sin(ph)
    return np.array([
        [ct * sp, -L * st * sp, L * ct * cp],
        [st, L * ct, 0.0],
        [ct * cp, -L * st * cp, -L * ct * sp],
    ])


def velocity_command(current, v_des, singularity=DEFAULT_SINGULARITY, L_min=DEFAULT_L_MIN):
    """Polar rates (L', theta', phi') producing Cartesian velocity ``v_des``."""
    if current.L <= L_min:
        raise SingularityError("tether singularity: length below minimum")
    if abs(math.cos(current.theta)) < singularity:
        raise SingularityError("tether singularity: elevation too close to the pole")
    J = jacobian(current)
    rates = np.linalg.solve(J, np.asarray(v_des, dtype=np.float64))
    return tuple(float(r) for r in rates)


class PositionController:
    """Three independent PID loops on (L, theta, phi) with rate clamps."""

    def __init__(self, gains=None):
        self.gains = gains or PidGains()
        self.reset()

    def reset(self):
        self._integral = [0.0, 0.0, 0.0]
        self._prev_err = None

    def errors(self, current, target, frame_origin, phi_hint=None):
        goal = inverse_position(target, frame_origin, current.phi if phi_hint is None else phi_hint)
        return (
            goal.L - current.L,
            goal.theta - current.theta,
            wrap_angle(goal.phi - current.phi),
        )

    def command(self, current, target, frame_origin, dt):
        """Rate command toward Cartesian ``target`` expressed about ``frame_origin``."""
        if dt <= 0:
            raise ValueError("dt must be positive")
        if tuple(target) == tuple(frame_origin):
            raise ValueError("target coincides with the tether frame origin")
        err = self.errors(current, target, frame_origin)
        g = self.gains
        out = []
        for ch in range(3):
            self._integral[ch] = min(
                g.integral_clamp, max(-g.integral_clamp, self._integral[ch] + err[ch] * dt)
            )
            deriv = 0.0 if self._prev_err is None else (err[ch] - self._prev_err[ch]) / dt
            u = g.kp[ch] * err[ch] + g.ki[ch] * self._integral[ch] + g.kd[ch] * deriv
            out.append(min(g.max_rates[ch], max(-g.max_rates[ch], u)))
        self._prev_err = err
        return tuple(out)


def position_command(current, target, frame_origin, gains, dt, controller=None):
    """One PID update; pass ``controller`` to keep integrator/derivative state across calls."""
    controller = controller or PositionController(gains)
    return controller.command(current, target, frame_origin, dt)


def gimbal_pointing(uav, poi, prev_yaw=0.0):
    """Vehicle yaw and camera pitch aiming the optical axis at ``poi``; roll stays level."""
    d = np.asarray(poi, dtype=np.float64) - np.asarray(uav, dtype=np.float64)
    n = float(np.linalg.norm(d))
    if n == 0.0:
        raise ValueError("uav coincides with the point of interest")
    horiz = math.hypot(d[0], d[2])
    if horiz <= 1e-12 * n:
        return GimbalCommand(prev_yaw, math.copysign(math.pi / 2, d[1]), 0.0)
    return GimbalCommand(math.atan2(d[0], d[2]), math.atan2(d[1], horiz), 0.0)
