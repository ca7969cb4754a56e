"""Swing-foot trajectory: planar cubics plus a takeoff / plateau / landing height profile."""

from __future__ import annotations

from dataclasses import dataclass, field

import numpy as np

from .geom import CubicSegment, InvalidDurationError, Pose2, cubic_between, wrap_angle


@dataclass
class SwingTrajectory:
    """Foot path for one single-support phase.

    x(t), y(t) and yaw(t) are single cubics with zero endpoint velocities.
    z(t) rises to the apex, holds it over the plateau window in the middle of
    the phase, and lands back at ground height; all joins are C1.
    """

    start: Pose2
    end: Pose2
    ground_z: float
    apex: float
    duration: float
    plateau_ratio: float = 0.30
    _x: CubicSegment = field(init=False, repr=False)
    _y: CubicSegment = field(init=False, repr=False)
    _yaw: CubicSegment = field(init=False, repr=False)
    _z_up: CubicSegment = field(init=False, repr=False)
    _z_down: CubicSegment = field(init=False, repr=False)

    def __post_init__(self):
        if self.duration <= 0:
            raise InvalidDurationError("swing duration must be positive")
        if not 0.0 < self.plateau_ratio < 1.0:
            raise ValueError("plateau ratio must be in (0, 1)")
        if self.apex <= 0:
            raise ValueError("swing apex height must be positive")
        T = self.duration
        self._x = cubic_between(self.start.x, 0.0, self.end.x, 0.0, T)
        self._y = cubic_between(self.start.y, 0.0, self.end.y, 0.0, T)
        dyaw = wrap_angle(self.end.theta - self.start.theta)
        self._yaw = cubic_between(self.start.theta, 0.0, self.start.theta + dyaw, 0.0, T)
        t1, t2 = self.phase_times
        top = self.ground_z + self.apex
        self._z_up = cubic_between(self.ground_z, 0.0, top, 0.0, t1)
        self._z_down = cubic_between(top, 0.0, self.ground_z, 0.0, T - t2)

    @property
    def phase_times(self):
        """(takeoff end, landing start): the plateau covers the middle of the phase."""
        half_gap = 0.5 * (1.0 - self.plateau_ratio)
        return half_gap * self.duration, (half_gap + self.plateau_ratio) * self.duration

    def pose(self, t: float) -> Pose2:
        t = min(max(t, 0.0), self.duration)
        return Pose2(self._x.value(t), self._y.value(t), self._yaw.value(t))

    def height(self, t: float) -> float:
        t = min(max(t, 0.0), self.duration)
        t1, t2 = self.phase_times
        if t < t1:
            return self._z_up.value(t)
        if t <= t2:
            return self.ground_z + self.apex
        return self._z_down.value(t - t2)

    def height_velocity(self, t: float) -> float:
        t = min(max(t, 0.0), self.duration)
        t1, t2 = self.phase_times
        if t < t1:
            return self._z_up.velocity(t)
        if t <= t2:
            return 0.0
        return self._z_down.velocity(t - t2)

    def planar_velocity(self, t: float) -> np.ndarray:
        t = min(max(t, 0.0), self.duration)
        return np.array([self._x.velocity(t), self._y.velocity(t), self._yaw.velocity(t)])


def swing_trajectory(
    start: Pose2,
    end: Pose2,
    ground_z: float,
    swing_height: float,
    duration: float,
    plateau_ratio: float = 0.30,
) -> SwingTrajectory:
    return SwingTrajectory(start, end, ground_z, swing_height, duration, plateau_ratio)
