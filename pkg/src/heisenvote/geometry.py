"""
Grid target scene and the angular geometry shared by scoring, metrics and
simulation.

Conventions: the viewer's eye sits at the origin, +z is the forward axis and
+y is world up. Targets are spheres laid out on a plane normal to +z. Target
ids are row-major integers, row 0 at the top.
"""
from __future__ import annotations

import math
from dataclasses import dataclass
from enum import Enum

import numpy as np

UP = (0.0, 1.0, 0.0)
FORWARD = (0.0, 0.0, 1.0)

STUDY_WIDTHS = (0.14, 0.28, 0.42)
STUDY_SPACINGS = (0.30, 0.50, 0.70)


class Quadrant(str, Enum):
    """Shift direction relative to the initial aim, in the view basis."""

    TOP_RIGHT = "TopRight"
    TOP_LEFT = "TopLeft"
    BOTTOM_RIGHT = "BottomRight"
    BOTTOM_LEFT = "BottomLeft"


QUADRANTS = tuple(Quadrant)


def _as_vec(v, name="vector") -> np.ndarray:
    arr = np.asarray(v, dtype=float)
    if arr.shape != (3,):
        raise ValueError(f"{name} must be a 3-vector, got shape {arr.shape}")
    if not np.all(np.isfinite(arr)):
        raise ValueError(f"{name} must be finite")
    return arr


def normalize(v) -> np.ndarray:
    arr = _as_vec(v)
    n = np.linalg.norm(arr)
    if n == 0.0:
        raise ValueError("cannot normalize a zero-length vector")
    return arr / n


@dataclass(frozen=True)
class Ray:
    """A pointing ray. ``direction`` is unit length (1e-9)."""

    origin: tuple[float, float, float]
    direction: tuple[float, float, float]

    def __post_init__(self):
        o = _as_vec(self.origin, "origin")
        d = _as_vec(self.direction, "direction")
        if abs(np.linalg.norm(d) - 1.0) > 1e-9:
            raise ValueError("ray direction must be unit length")
        object.__setattr__(self, "origin", tuple(float(x) for x in o))
        object.__setattr__(self, "direction", tuple(float(x) for x in d))

    @classmethod
    def toward(cls, origin, point) -> "Ray":
        o = _as_vec(origin, "origin")
        return cls(tuple(o), tuple(normalize(_as_vec(point, "point") - o)))


@dataclass(frozen=True)
class SceneLayout:
    rows: int
    cols: int
    target_width: float
    target_spacing: float
    viewer_distance: float
    ids: tuple[int, ...]
    centers: np.ndarray  # (rows*cols, 3), indexed by id
    selectable_ids: tuple[int, ...]

    @property
    def pitch(self) -> float:
        return self.target_width + self.target_spacing

    @property
    def radius(self) -> float:
        return self.target_width / 2.0

    @property
    def inner_rows(self) -> int:
        return max(self.rows - 2, 0)

    @property
    def inner_cols(self) -> int:
        return max(self.cols - 2, 0)

    @property
    def target_centers(self) -> list[tuple[int, tuple[float, float, float]]]:
        return [(i, tuple(self.centers[i].tolist())) for i in self.ids]

    def center(self, target_id: int) -> np.ndarray:
        if target_id not in self._id_set:
            raise ValueError(f"unknown target id {target_id}")
        return self.centers[target_id]

    @property
    def _id_set(self) -> frozenset:
        return frozenset(self.ids)

    def __eq__(self, other):
        if not isinstance(other, SceneLayout):
            return NotImplemented
        return (self.rows, self.cols, self.target_width, self.target_spacing,
                self.viewer_distance) == (other.rows, other.cols, other.target_width,
                                          other.target_spacing, other.viewer_distance)

    def __hash__(self):
        return hash((self.rows, self.cols, self.target_width, self.target_spacing,
                     self.viewer_distance))


def build_grid(width: float, spacing: float, rows: int = 7, cols: int = 7,
               distance: float = 8.0) -> SceneLayout:
    """Place ``rows x cols`` spheres on a plane ``distance`` metres ahead.

    ``spacing`` is the edge-to-edge gap, so the centre pitch is
    ``width + spacing``. The selectable set is the grid minus its outer ring.
    """
    if not width > 0:
        raise ValueError("width must be positive")
    if not distance > 0:
        raise ValueError("distance must be positive")
    if spacing < 0:
        raise ValueError("spacing must be non-negative")
    if rows < 1 or cols < 1:
        raise ValueError("rows and cols must be >= 1")
    pitch = width + spacing
    r_idx, c_idx = np.divmod(np.arange(rows * cols), cols)
    x = (c_idx - (cols - 1) / 2.0) * pitch
    y = ((rows - 1) / 2.0 - r_idx) * pitch
    centers = np.column_stack([x, y, np.full(rows * cols, float(distance))])
    centers.setflags(write=False)
    inner = tuple(int(r * cols + c) for r in range(1, rows - 1) for c in range(1, cols - 1))
    return SceneLayout(rows=rows, cols=cols, target_width=float(width),
                       target_spacing=float(spacing), viewer_distance=float(distance),
                       ids=tuple(range(rows * cols)), centers=centers,
                       selectable_ids=inner)


def angular_offset(dir_a, dir_b) -> float:
    """Angle in degrees between two unit directions."""
    a = _as_vec(dir_a)
    b = _as_vec(dir_b)
    na, nb = np.linalg.norm(a), np.linalg.norm(b)
    if na == 0.0 or nb == 0.0:
        raise ValueError("zero-length direction")
    cos = float(np.dot(a, b) / (na * nb))
    return math.degrees(math.acos(min(1.0, max(-1.0, cos))))


def angular_size(width: float, distance: float) -> float:
    """Full visual angle (degrees) of a target of ``width`` at ``distance``."""
    if not (width > 0 and distance > 0):
        raise ValueError("width and distance must be positive")
    return math.degrees(2.0 * math.atan(width / (2.0 * distance)))


def angles_to_points(origins: np.ndarray, directions: np.ndarray,
                     points: np.ndarray) -> np.ndarray:
    """Angles (degrees) between each ray and the direction to each point.

    ``origins``/``directions`` are (N, 3), ``points`` is (K, 3); returns (N, K).
    """
    to = points[None, :, :] - origins[:, None, :]
    dist = np.linalg.norm(to, axis=2)
    if np.any(dist == 0.0):
        raise ValueError("point coincides with a ray origin")
    cos = np.einsum("nkj,nj->nk", to, directions) / dist
    return np.degrees(np.arccos(np.clip(cos, -1.0, 1.0)))


def raycast_many(origins: np.ndarray, directions: np.ndarray,
                 layout: SceneLayout) -> np.ndarray:
    """Vectorised :func:`raycast`; returns an int array with -1 for no hit."""
    origins = np.atleast_2d(np.asarray(origins, dtype=float))
    directions = np.atleast_2d(np.asarray(directions, dtype=float))
    to = layout.centers[None, :, :] - origins[:, None, :]
    dist = np.linalg.norm(to, axis=2)
    cos = np.einsum("nkj,nj->nk", to, directions) / dist
    ang = np.degrees(np.arccos(np.clip(cos, -1.0, 1.0)))
    half = np.degrees(np.arctan(layout.radius / dist))
    hit = ang <= half + 1e-9
    # nearest hit wins; ties on distance resolve to the smaller id (argmin)
    masked = np.where(hit, dist, np.inf)
    best = np.argmin(masked, axis=1)
    return np.where(np.isfinite(masked[np.arange(len(best)), best]), best, -1)


def raycast(ray: Ray, layout: SceneLayout) -> int | None:
    """Id of the nearest target hit by ``ray`` or ``None``.

    A target counts as hit when the ray lies within the target's angular
    radius ``atan(r / D)`` as seen from the ray origin (boundary inclusive).
    """
    hit = raycast_many(np.asarray([ray.origin]), np.asarray([ray.direction]), layout)[0]
    return None if hit < 0 else int(hit)


def view_basis(forward, up_reference=UP) -> tuple[np.ndarray, np.ndarray]:
    """(right, up) unit vectors orthogonal to ``forward``.

    right = forward x up_reference, up = right x forward.
    """
    f = normalize(forward)
    right = np.cross(f, _as_vec(up_reference, "up_reference"))
    n = np.linalg.norm(right)
    if n < 1e-12:
        raise ValueError("direction is parallel to the up reference")
    right /= n
    return right, np.cross(right, f)


def rotate_toward(direction, right, up, magnitude: float, azimuth: float) -> np.ndarray:
    """Rotate ``direction`` by ``magnitude`` degrees toward the in-plane
    heading ``azimuth`` (degrees, 0 = right, 90 = up) of the given basis."""
    m, phi = math.radians(magnitude), math.radians(azimuth)
    axis = math.cos(phi) * np.asarray(right) + math.sin(phi) * np.asarray(up)
    out = math.cos(m) * np.asarray(direction, dtype=float) + math.sin(m) * axis
    return out / np.linalg.norm(out)


def slerp(a: np.ndarray, b: np.ndarray, s: np.ndarray) -> np.ndarray:
    """Spherical interpolation between unit vectors ``a`` and ``b`` at fractions ``s``."""
    s = np.asarray(s, dtype=float)[:, None]
    omega = math.acos(min(1.0, max(-1.0, float(np.dot(a, b)))))
    if omega < 1e-12:
        return np.repeat(a[None, :], len(s), axis=0)
    so = math.sin(omega)
    out = (np.sin((1.0 - s) * omega) * a + np.sin(s * omega) * b) / so
    return out / np.linalg.norm(out, axis=1, keepdims=True)
