"""Weak-perspective camera: 7 parameters (scale, tx, ty, qw, qx, qy, qz)."""

from __future__ import annotations

import warnings
from dataclasses import dataclass

import torch

QUAT_TOLERANCE = 1e-3


@dataclass
class CameraPose:
    scale: torch.Tensor  # scalar > 0
    translation: torch.Tensor  # (2,)
    quaternion: torch.Tensor  # (4,) unit (w, x, y, z)

    @classmethod
    def from_vector(cls, vec) -> "CameraPose":
        v = torch.as_tensor(vec, dtype=torch.float64).reshape(7)
        if v[0] <= 0:
            raise ValueError("camera scale must be positive")
        q = v[3:7]
        norm = torch.linalg.norm(q)
        if norm == 0:
            raise ValueError("zero quaternion")
        if abs(float(norm) - 1.0) > QUAT_TOLERANCE:
            warnings.warn(f"quaternion norm {float(norm):.4f} != 1; normalizing")
        return cls(scale=v[0], translation=v[1:3], quaternion=q / norm)

    def to_vector(self):
        return torch.cat(
            [self.scale.reshape(1), self.translation, self.quaternion]
        ).tolist()


def quaternion_to_matrix(q: torch.Tensor) -> torch.Tensor:
    """Rotation matrix from a unit quaternion (w, x, y, z)."""
    w, x, y, z = q[0], q[1], q[2], q[3]
    return torch.stack(
        [
            torch.stack([1 - 2 * (y * y + z * z), 2 * (x * y - w * z), 2 * (x * z + w * y)]),
            torch.stack([2 * (x * y + w * z), 1 - 2 * (x * x + z * z), 2 * (y * z - w * x)]),
            torch.stack([2 * (x * z - w * y), 2 * (y * z + w * x), 1 - 2 * (x * x + y * y)]),
        ]
    )


def rotate(vertices: torch.Tensor, pose: CameraPose) -> torch.Tensor:
    """Rotate n x 3 vertices into camera frame (no scale/translation)."""
    R = quaternion_to_matrix(pose.quaternion.to(vertices.dtype))
    return vertices @ R.T


def project(vertices: torch.Tensor, pose: CameraPose) -> torch.Tensor:
    """Weak-perspective projection: p = scale * (R v)_xy + t, per vertex."""
    cam = rotate(vertices, pose)
    s = pose.scale.to(vertices.dtype)
    t = pose.translation.to(vertices.dtype)
    return s * cam[:, :2] + t


def camera_depth(vertices: torch.Tensor, pose: CameraPose) -> torch.Tensor:
    """Per-vertex depth in camera frame (larger z = farther from the viewer)."""
    return rotate(vertices, pose)[:, 2]
