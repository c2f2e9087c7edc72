"""Hexagonal 19-cell layout and user-to-interferer distances."""

from __future__ import annotations

import math
from dataclasses import dataclass

import numpy as np

from .errors import DomainError

N_INTERFERERS = 18
CORNER_ANGLE_DEG = 0.0
EDGE_ANGLE_DEG = 30.0


@dataclass(frozen=True)
class NetworkGeometry:
    """Macrocell layout with inter-site distance 2R.

    BS 0 sits at the origin.  BSs 1-6 form the first ring (distance 2R) at
    angles 30, 90, ..., 330 degrees; BSs 7-18 form the second ring at angles
    30, 60, ..., 360 degrees, alternating between 4R and 2R*sqrt(3).  The
    user moves along ``user_angle_deg`` from BS 0; 0 degrees points at a
    cell corner.
    """

    R: float = 866.0
    beta: float = 3.76
    d_min: float = 35.0
    user_angle_deg: float = CORNER_ANGLE_DEG

    def __post_init__(self):
        if not self.R > 0:
            raise DomainError("R must be positive")
        if self.beta < 2:
            raise DomainError("path-loss exponent must be >= 2")
        if not self.d_min > 0:
            raise DomainError("d_min must be positive")

    @property
    def bs_positions(self) -> np.ndarray:
        pts = [(0.0, 0.0)]
        for j in range(6):
            ang = math.radians(30.0 + 60.0 * j)
            pts.append((2 * self.R * math.cos(ang), 2 * self.R * math.sin(ang)))
        for j in range(12):
            ang = math.radians(30.0 + 30.0 * j)
            rad = 4 * self.R if j % 2 == 0 else 2 * self.R * math.sqrt(3.0)
            pts.append((rad * math.cos(ang), rad * math.sin(ang)))
        return np.array(pts)

    @property
    def user_direction(self) -> np.ndarray:
        ang = math.radians(self.user_angle_deg)
        return np.array([math.cos(ang), math.sin(ang)])

    @property
    def corner_distance(self) -> float:
        return 2.0 * self.R / math.sqrt(3.0)

    def cell_boundary(self, angle_deg: float | None = None) -> float:
        """Distance from BS 0 to its hexagon boundary along ``angle_deg``."""
        ang = self.user_angle_deg if angle_deg is None else angle_deg
        off = (ang - 30.0) % 60.0
        off = min(off, 60.0 - off)
        return self.R / math.cos(math.radians(off))


def hex_layout(R: float = 866.0, beta: float = 3.76, d_min: float = 35.0,
               user_angle_deg: float = CORNER_ANGLE_DEG) -> NetworkGeometry:
    return NetworkGeometry(R, beta, d_min, user_angle_deg)


def interferer_distances(geom: NetworkGeometry, r: float,
                         angle_deg: float | None = None) -> np.ndarray:
    """Distances from a user at ``r`` along the user ray to BSs 1-18."""
    ang = geom.user_angle_deg if angle_deg is None else angle_deg
    if r < geom.d_min - 1e-9:
        raise DomainError(f"r={r} is below the minimum distance {geom.d_min}")
    limit = geom.cell_boundary(ang)
    if r > limit * (1 + 1e-12):
        raise DomainError(f"r={r} lies outside the cell (boundary {limit:.1f} m at {ang} deg)")
    u = r * np.array([math.cos(math.radians(ang)), math.sin(math.radians(ang))])
    pos = geom.bs_positions[1:]
    return np.hypot(pos[:, 0] - u[0], pos[:, 1] - u[1])
