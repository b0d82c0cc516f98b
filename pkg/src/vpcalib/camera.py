"""Pinhole camera with a centered principal point.

Conventions (asserted by round-trip tests):

* image x to the right, image y down, the camera looks along +z;
* world up is +y;
* ``R = Rz(roll) @ Rx(pitch) @ Ry(yaw)`` maps world directions into the
  camera frame, so yaw turns about the world vertical and never moves the
  horizon;
* positive pitch puts the zenith above the image center (camera tilted up).
"""

import math
from dataclasses import dataclass

import numpy as np

from .errors import DegenerateInput, NoRealFocal


def rot_x(a):
    c, s = math.cos(a), math.sin(a)
    return np.array([[1.0, 0.0, 0.0], [0.0, c, s], [0.0, -s, c]])


def rot_y(a):
    c, s = math.cos(a), math.sin(a)
    return np.array([[c, 0.0, -s], [0.0, 1.0, 0.0], [s, 0.0, c]])


def rot_z(a):
    c, s = math.cos(a), math.sin(a)
    return np.array([[c, s, 0.0], [-s, c, 0.0], [0.0, 0.0, 1.0]])


def rotation(pitch, yaw, roll):
    return rot_z(roll) @ rot_x(pitch) @ rot_y(yaw)


def wrap_yaw(theta):
    """Reduce yaw to (-pi/4, pi/4]: Manhattan x and z axes are interchangeable."""
    q = math.pi / 2
    t = math.fmod(theta + math.pi / 4, q)
    if t <= 0:
        t += q
    return t - math.pi / 4


def fov_to_focal(fov, extent):
    return extent / (2.0 * math.tan(fov / 2.0))


def focal_to_fov(f, extent):
    return 2.0 * math.atan(extent / (2.0 * f))


@dataclass(frozen=True)
class CameraParams:
    f: float
    pitch: float
    yaw: float
    roll: float
    width: int
    height: int

    def __post_init__(self):
        if not (self.f > 0 and self.width > 0 and self.height > 0):
            raise DegenerateInput(f"invalid camera: {self}")

    @property
    def principal_point(self):
        return self.width / 2.0, self.height / 2.0

    @property
    def K(self):
        cu, cv = self.principal_point
        return np.array([[self.f, 0.0, cu], [0.0, self.f, cv], [0.0, 0.0, 1.0]])

    @property
    def R(self):
        return rotation(self.pitch, self.yaw, self.roll)

    @property
    def up(self):
        """World up expressed in the camera frame."""
        return self.R[:, 1]

    @property
    def vfov(self):
        return focal_to_fov(self.f, self.height)

    def to_json(self):
        return {
            "f_px": float(self.f),
            "pitch_deg": math.degrees(self.pitch),
            "yaw_deg": math.degrees(self.yaw),
            "roll_deg": math.degrees(self.roll),
            "width": int(self.width),
            "height": int(self.height),
        }

    @classmethod
    def from_json(cls, d):
        return cls(
            f=float(d["f_px"]),
            pitch=math.radians(d["pitch_deg"]),
            yaw=math.radians(d["yaw_deg"]),
            roll=math.radians(d["roll_deg"]),
            width=int(d["width"]),
            height=int(d["height"]),
        )


@dataclass(frozen=True)
class PseudoIntrinsics:
    """Guessed intrinsics with focal min(W, H)/2 and the image center as principal point."""

    width: int
    height: int

    @property
    def f(self):
        return min(self.width, self.height) / 2.0

    @property
    def K(self):
        return np.array(
            [[self.f, 0.0, self.width / 2.0], [0.0, self.f, self.height / 2.0], [0.0, 0.0, 1.0]]
        )

    @property
    def K_inv(self):
        f = self.f
        return np.array(
            [[1.0 / f, 0.0, -self.width / (2.0 * f)], [0.0, 1.0 / f, -self.height / (2.0 * f)], [0.0, 0.0, 1.0]]
        )

    def points_to_pseudo(self, xy):
        """Pixel coordinates ``(N, 2)`` to pseudo-normalized ``(N, 2)``."""
        xy = np.asarray(xy, dtype=float)
        return (xy - np.array([self.width / 2.0, self.height / 2.0])) / self.f


def project(cam, point):
    """Homogeneous image point of a world point (or direction)."""
    return cam.K @ cam.R @ np.asarray(point, dtype=float)


def to_pseudo(p, pi):
    return pi.K_inv @ np.asarray(p, dtype=float)


def from_pseudo(p, pi):
    return pi.K @ np.asarray(p, dtype=float)


def line_to_pseudo(line, pi):
    """Lines map with the inverse transpose of the point map."""
    return pi.K.T @ np.asarray(line, dtype=float)


def line_from_pseudo(line, pi):
    return pi.K_inv.T @ np.asarray(line, dtype=float)


def pseudo_direction(v, f_rel):
    """Camera-frame direction of a pseudo-space point given f / f_pseudo."""
    v = np.asarray(v, dtype=float)
    return np.array([v[0], v[1], f_rel * v[2]])


def _zenith_angles(d):
    d = d / np.linalg.norm(d)
    if d[1] < 0 or (d[1] == 0 and d[0] < 0):
        d = -d
    pitch = -math.asin(max(-1.0, min(1.0, d[2])))
    roll = math.atan2(d[0], d[1])
    return pitch, roll


def angles_from_zenith(z, f, pi):
    """(pitch, roll) of a camera with yaw 0 whose zenith is ``z`` (pseudo space)."""
    z = np.asarray(z, dtype=float)
    if not np.any(z[:2]):
        raise DegenerateInput("zenith at the principal point")
    return _zenith_angles(pseudo_direction(z, f / pi.f))


def calibrate_from_vps(z, h, pi):
    """Focal length (pixels) and rotation from the zenith and one horizontal VP.

    Both points are in pseudo space. Raises :class:`NoRealFocal` when the two
    points cannot be images of orthogonal directions.
    """
    z = np.asarray(z, dtype=float)
    h = np.asarray(h, dtype=float)
    nz, nh = np.linalg.norm(z), np.linalg.norm(h)
    if nz == 0 or nh == 0:
        raise DegenerateInput("zero vanishing point")
    z = z / nz
    h = h / nh
    if np.hypot(z[0], z[1]) < 1e-12 or np.hypot(h[0], h[1]) < 1e-12:
        raise DegenerateInput("vanishing point at the principal point")
    if np.linalg.norm(np.cross(z, h)) < 1e-12:
        raise DegenerateInput("vanishing points coincide")

    planar = z[0] * h[0] + z[1] * h[1]
    ww = z[2] * h[2]
    if abs(ww) < 1e-12:
        # one VP at infinity: orthogonality holds for any focal iff planar == 0
        if abs(planar) > 1e-9:
            raise NoRealFocal("VP at infinity not orthogonal to the other VP")
        f_rel = 1.0
    else:
        f2 = -planar / ww
        if not f2 > 0:
            raise NoRealFocal(f"f^2 = {f2:.3g} <= 0")
        f_rel = math.sqrt(f2)

    f = f_rel * pi.f
    pitch, roll = _zenith_angles(pseudo_direction(z, f_rel))
    d_h = pseudo_direction(h, f_rel)
    d_h = d_h / np.linalg.norm(d_h)
    w = (rot_z(roll) @ rot_x(pitch)).T @ d_h
    yaw = wrap_yaw(math.atan2(w[2], w[0]))
    return f, rotation(pitch, yaw, roll), (pitch, yaw, roll)


def vps_from_rotation(R, f, pi):
    """Pseudo-space VPs of the world x, y (zenith) and z axes, shape ``(3, 3)`` rows."""
    scale = np.diag([f / pi.f, f / pi.f, 1.0])
    return (scale @ R).T


def horizon_from_up(up, f, width, height):
    """Image line (pixels) of all horizontal directions for a camera-frame up vector."""
    cu, cv = width / 2.0, height / 2.0
    K_inv_T = np.array([[1.0 / f, 0.0, 0.0], [0.0, 1.0 / f, 0.0], [-cu / f, -cv / f, 1.0]])
    return K_inv_T @ np.asarray(up, dtype=float)


def horizon_from_camera(cam):
    return horizon_from_up(cam.up, cam.f, cam.width, cam.height)


def horizon_border_y(line, width):
    """y of the line at the left (x=0) and right (x=W) borders, or None if vertical."""
    a, b, c = np.asarray(line, dtype=float)
    if abs(b) < 1e-15 * max(abs(a), abs(c), 1.0):
        return None
    return -c / b, -(a * width + c) / b
