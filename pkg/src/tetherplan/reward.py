"""Viewpoint-quality reward: a scored hemisphere of 30 samples around an affordance.

Sample order (what score files index into):

* 0-11  : elevation 20 deg, azimuth 0, 30, ..., 330 deg
* 12-23 : elevation 50 deg, azimuth 0, 30, ..., 330 deg
* 24-29 : elevation 80 deg, azimuth 0, 60, ..., 300 deg

Azimuth is measured from ``forward`` toward ``left = up x forward``.
"""
from __future__ import annotations

from dataclasses import dataclass
from functools import cached_property

import numpy as np

from .errors import ConfigError

UP = np.array([0.0, 1.0, 0.0])
N_SAMPLES = 30
GROUPS = ("left", "right", "front", "back", "above")
TIE_RTOL = 1e-12

_RINGS = ((20.0, 12, 30.0), (50.0, 12, 30.0), (80.0, 6, 60.0))


@dataclass(frozen=True)
class AffordancePose:
    center: tuple
    forward: tuple
    radius: float

    def __post_init__(self):
        f = np.asarray(self.forward, dtype=np.float64)
        if abs(f[1]) > 1e-12 or abs(np.linalg.norm(f) - 1.0) > 1e-9:
            raise ConfigError("affordance forward must be a horizontal unit vector")
        if not self.radius > 0:
            raise ConfigError("hemisphere radius must be positive")
        object.__setattr__(self, "center", tuple(float(v) for v in self.center))
        object.__setattr__(self, "forward", tuple(float(v) for v in f))

    @property
    def left(self):
        return np.cross(UP, self.forward)


def sample_layout():
    """(elevation_deg, azimuth_deg) for the 30 samples in documented order."""
    out = []
    for elev, n, spacing in _RINGS:
        out.extend((elev, i * spacing) for i in range(n))
    return out


def _group(elev, az):
    if elev >= 80.0:
        return "above"
    a = (az + 180.0) % 360.0 - 180.0
    if abs(a) <= 45.0:
        return "front"
    if abs(a) >= 135.0:
        return "back"
    return "left" if a > 0 else "right"


def normalize_metrics(metrics):
    """Min-max inversion: lowest error x time maps to 1, highest to 0."""
    m = np.asarray(metrics, dtype=np.float64)
    lo, hi = m.min(), m.max()
    if hi == lo:
        return np.ones_like(m)
    return (hi - m) / (hi - lo)


@dataclass(frozen=True, eq=False)
class ViewpointQualityMap:
    affordance: AffordancePose
    directions: np.ndarray  # (30, 3) unit vectors
    groups: tuple
    metrics: np.ndarray
    rewards: np.ndarray
    require_poi_los: bool = False

    @cached_property
    def positions(self):
        pos = np.asarray(self.affordance.center) + self.affordance.radius * self.directions
        pos.flags.writeable = False
        return pos

    @property
    def max_reward(self):
        return float(self.rewards.max())

    def group_counts(self):
        return {g: self.groups.count(g) for g in GROUPS}

    def scaled(self, factor):
        """Copy with every reward multiplied by ``factor`` (> 0)."""
        return ViewpointQualityMap(
            self.affordance, self.directions, self.groups, self.metrics,
            self.rewards * factor, self.require_poi_los,
        )

    def nearest_sample(self, p):
        p = np.asarray(p, dtype=np.float64)
        center = np.asarray(self.affordance.center)
        if np.array_equal(p, center):
            raise ValueError("degenerate viewpoint: query equals affordance center")
        d = np.linalg.norm(self.positions - p, axis=1)
        # rounding can split exact geometric ties; lowest index wins within TIE_RTOL
        return int(np.flatnonzero(d <= d.min() * (1.0 + TIE_RTOL))[0])

    def quality(self, p, world=None):
        """Reward of the hemisphere sample nearest to ``p``.

        With ``require_poi_los`` and a world given, viewpoints without line of
        sight to the affordance center score 0.
        """
        r = float(self.rewards[self.nearest_sample(p)])
        if self.require_poi_los and world is not None:
            if not world.line_of_sight(p, self.affordance.center):
                return 0.0
        return r


def build_hemisphere(pose, scores, require_poi_los=False):
    scores = np.asarray(scores, dtype=np.float64)
    if scores.shape != (N_SAMPLES,):
        raise ConfigError(f"expected {N_SAMPLES} metric values, got {scores.size}")
    if np.any(scores < 0) or not np.all(np.isfinite(scores)):
        raise ConfigError("metric values must be finite and non-negative")
    f = np.asarray(pose.forward)
    left = pose.left
    dirs, groups = [], []
    for elev, az in sample_layout():
        e, a = np.radians(elev), np.radians(az)
        dirs.append(np.cos(e) * (np.cos(a) * f + np.sin(a) * left) + np.sin(e) * UP)
        groups.append(_group(elev, az))
    dirs = np.array(dirs)
    dirs.flags.writeable = False
    rewards = normalize_metrics(scores)
    rewards.flags.writeable = False
    return ViewpointQualityMap(pose, dirs, tuple(groups), scores, rewards, require_poi_los)


def viewpoint_quality(p, qmap, world=None):
    return qmap.quality(p, world)
