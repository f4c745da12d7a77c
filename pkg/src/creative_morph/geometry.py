"""Fixed-topology symmetric mesh: template, symmetry expansion, regularizers, OBJ I/O."""

from __future__ import annotations

import math
from dataclasses import dataclass, field

import numpy as np
import torch

PLANE_AXIS = 0  # symmetry plane is x = 0

CANONICAL_LEVEL = 3
CANONICAL_COUNTS = (372, 270, 102)  # n_left, n_mirrored, n_plane


class TemplateConstructionError(ValueError):
    pass


@dataclass
class SymmetricTopology:
    """Index bookkeeping for a mirror-symmetric closed triangle mesh.

    Vertices 0..n_left-1 are the predicted ("left") half, which includes the
    n_plane vertices lying on the symmetry plane. Vertices n_left..n_total-1
    are reflections of the off-plane left vertices.
    """

    n_left: int
    n_mirrored: int
    n_plane: int
    faces: np.ndarray  # (F, 3) int64
    left_index_map: np.ndarray  # (n_mirrored,) left vertex index for each mirrored vertex
    plane_indices: np.ndarray  # (n_plane,) indices (< n_left) of on-plane vertices
    plane_axis: int = PLANE_AXIS
    keypoint_indices: np.ndarray = field(default_factory=lambda: np.zeros(0, dtype=np.int64))

    @property
    def n_total(self) -> int:
        return self.n_left + self.n_mirrored

    @property
    def mirror_index_map(self) -> np.ndarray:
        """Full involution on vertex indices: reflect(reflect(i)) == i."""
        m = np.arange(self.n_total, dtype=np.int64)
        mirrored = np.arange(self.n_left, self.n_total, dtype=np.int64)
        m[self.left_index_map] = mirrored
        m[mirrored] = self.left_index_map
        return m

    def validate(self) -> None:
        if self.n_left != self.n_mirrored + self.n_plane:
            raise ValueError("n_left must equal n_mirrored + n_plane")
        if self.faces.min() < 0 or self.faces.max() >= self.n_total:
            raise ValueError("face index out of range")
        m = self.mirror_index_map
        if not np.array_equal(m[m], np.arange(self.n_total)):
            raise ValueError("mirror map is not an involution")


def _ring_sizes(level: int) -> tuple[int, list[int]]:
    """Boundary ring size and interior ring sizes for a given subdivision level.

    The half-mesh is a spherical cap: a boundary ring on the symmetry plane,
    interior rings shrinking by a fixed step, and a fan-capped final ring.
    """
    boundary = 34 * level
    rings = []
    size = boundary - 16
    while size >= 18:
        rings.append(size)
        size -= 16
    return boundary, rings


def build_template(subdivision_level: int) -> tuple[SymmetricTopology, torch.Tensor]:
    """Construct the symmetric sphere-like template mesh.

    At ``subdivision_level=3`` the partition is exactly 372 predicted /
    270 mirrored / 102 on-plane vertices (642 total). Deterministic.
    """
    if subdivision_level < 1:
        raise TemplateConstructionError(
            "subdivision_level must be >= 1; level 3 gives the canonical "
            "372/270/102 partition"
        )
    boundary, interior = _ring_sizes(subdivision_level)

    # Ring latitudes: boundary at x=0, interior rings climbing toward the +x pole.
    n_rings = 1 + len(interior)
    sizes = [boundary] + interior
    thetas = [0.5 * math.pi * j / n_rings for j in range(n_rings)]

    verts: list[list[float]] = []
    ring_start: list[int] = []
    for size, theta in zip(sizes, thetas):
        ring_start.append(len(verts))
        r = math.cos(theta)
        x = math.sin(theta)
        for k in range(size):
            phi = 2.0 * math.pi * k / size
            verts.append([x, r * math.cos(phi), r * math.sin(phi)])

    n_plane = boundary
    n_left = len(verts)
    n_mirrored = n_left - n_plane

    faces: list[tuple[int, int, int]] = []

    def bridge(start_a: int, size_a: int, start_b: int, size_b: int) -> None:
        """Zipper-triangulate between two parallel rings (sizes may differ)."""
        ia = ib = 0
        while ia < size_a or ib < size_b:
            frac_a = (ia + 1) / size_a
            frac_b = (ib + 1) / size_b
            a0 = start_a + (ia % size_a)
            b0 = start_b + (ib % size_b)
            if ib >= size_b or (ia < size_a and frac_a <= frac_b):
                a1 = start_a + ((ia + 1) % size_a)
                faces.append((a0, a1, b0))
                ia += 1
            else:
                b1 = start_b + ((ib + 1) % size_b)
                faces.append((a0, b1, b0))
                ib += 1

    for j in range(n_rings - 1):
        bridge(ring_start[j], sizes[j], ring_start[j + 1], sizes[j + 1])
    # Cap the last ring with a fan from its first vertex (no extra pole vertex).
    top, top_size = ring_start[-1], sizes[-1]
    for k in range(1, top_size - 1):
        faces.append((top, top + k, top + k + 1))

    # Mirror: duplicate off-plane vertices with the plane axis negated.
    left_index_map = np.arange(n_plane, n_left, dtype=np.int64)
    index_of = np.arange(n_left, dtype=np.int64)
    mirror_of = index_of.copy()
    mirror_of[n_plane:] = np.arange(n_left, n_left + n_mirrored)
    for v in list(verts[n_plane:n_left]):
        verts.append([-v[0], v[1], v[2]])
    for a, b, c in list(faces):
        faces.append((mirror_of[c], mirror_of[b], mirror_of[a]))

    coords = np.asarray(verts, dtype=np.float64)
    coords[:n_plane, PLANE_AXIS] = 0.0

    topo = SymmetricTopology(
        n_left=n_left,
        n_mirrored=n_mirrored,
        n_plane=n_plane,
        faces=np.asarray(faces, dtype=np.int64),
        left_index_map=left_index_map,
        plane_indices=np.arange(n_plane, dtype=np.int64),
    )
    topo.validate()
    if subdivision_level == CANONICAL_LEVEL and (
        (topo.n_left, topo.n_mirrored, topo.n_plane) != CANONICAL_COUNTS
    ):
        raise TemplateConstructionError(
            f"canonical level produced {(topo.n_left, topo.n_mirrored, topo.n_plane)}, "
            f"expected {CANONICAL_COUNTS}"
        )
    return topo, torch.from_numpy(coords)


def expand_symmetric(half: torch.Tensor, topo: SymmetricTopology) -> torch.Tensor:
    """Expand predicted left-half coordinates (3 x n_left) to the full mesh.

    On-plane vertices have their plane coordinate hard-projected to zero;
    mirrored vertices are exact reflections. Differentiable in ``half``.
    """
    if half.shape != (3, topo.n_left):
        raise ValueError(f"expected half of shape (3, {topo.n_left}), got {tuple(half.shape)}")
    left = half.T  # (n_left, 3)
    axis_mask = torch.zeros(3, dtype=left.dtype, device=left.device)
    axis_mask[topo.plane_axis] = 1.0
    plane_sel = torch.zeros(topo.n_left, 1, dtype=left.dtype, device=left.device)
    plane_sel[torch.from_numpy(topo.plane_indices)] = 1.0
    left = left * (1.0 - plane_sel * axis_mask)
    mirrored = left[torch.from_numpy(topo.left_index_map)] * (1.0 - 2.0 * axis_mask)
    return torch.cat([left, mirrored], dim=0)


def edge_list(topo: SymmetricTopology) -> np.ndarray:
    """Unique undirected edges (E, 2) from the face list."""
    cached = getattr(topo, "_edge_cache", None)
    if cached is not None:
        return cached
    f = topo.faces
    e = np.concatenate([f[:, [0, 1]], f[:, [1, 2]], f[:, [2, 0]]], axis=0)
    e = np.sort(e, axis=1)
    e = np.unique(e, axis=0)
    topo._edge_cache = e
    return e


def _adjacency(topo: SymmetricTopology) -> torch.Tensor:
    """Row-normalized one-ring adjacency (n_total x n_total), sparse."""
    cached = getattr(topo, "_adj_cache", None)
    if cached is not None:
        return cached
    e = edge_list(topo)
    n = topo.n_total
    rows = np.concatenate([e[:, 0], e[:, 1]])
    cols = np.concatenate([e[:, 1], e[:, 0]])
    deg = np.bincount(rows, minlength=n).astype(np.float64)
    vals = 1.0 / deg[rows]
    idx = torch.from_numpy(np.stack([rows, cols]))
    adj = torch.sparse_coo_tensor(idx, torch.from_numpy(vals), (n, n)).coalesce()
    topo._adj_cache = adj
    return adj


def laplacian_energy(mesh: torch.Tensor, topo: SymmetricTopology) -> torch.Tensor:
    """Mean squared deviation of each vertex from its one-ring centroid."""
    adj = _adjacency(topo).to(mesh.dtype)
    centroid = torch.sparse.mm(adj, mesh)
    return ((mesh - centroid) ** 2).sum(dim=1).mean()


def edge_energy(mesh: torch.Tensor, topo: SymmetricTopology) -> torch.Tensor:
    """Mean squared edge length over the unique edge list."""
    e = edge_list(topo)
    d = mesh[torch.from_numpy(e[:, 0])] - mesh[torch.from_numpy(e[:, 1])]
    return (d ** 2).sum(dim=1).mean()


def project_keypoints(points: torch.Tensor, topo: SymmetricTopology) -> torch.Tensor:
    """Project N x 3 points onto the symmetry plane (zero the plane coordinate)."""
    if points.ndim != 2 or points.shape[1] != 3 or points.shape[0] < 1:
        raise ValueError("points must be N x 3 with N >= 1")
    mask = torch.ones(3, dtype=points.dtype, device=points.device)
    mask[topo.plane_axis] = 0.0
    return points * mask


def template_uv(topo: SymmetricTopology, coords: torch.Tensor) -> np.ndarray:
    """Spherical per-vertex UV coordinates in [0, 1]^2 for the template."""
    v = coords.detach().cpu().numpy()
    x, y, z = v[:, 0], v[:, 1], v[:, 2]
    u = (np.arctan2(z, y) / (2.0 * np.pi)) % 1.0
    w = np.arccos(np.clip(x / np.maximum(np.linalg.norm(v, axis=1), 1e-12), -1, 1)) / np.pi
    return np.stack([u, 1.0 - w], axis=1)


def export_obj(
    mesh: torch.Tensor,
    topo: SymmetricTopology,
    path,
    uv: np.ndarray | None = None,
) -> None:
    """Write a Wavefront OBJ (v / optional vt / 1-based f lines)."""
    v = mesh.detach().cpu().numpy()
    if v.shape != (topo.n_total, 3):
        raise ValueError("mesh does not match topology")
    lines = [f"v {a:.6f} {b:.6f} {c:.6f}" for a, b, c in v]
    if uv is not None:
        if len(uv) != topo.n_total:
            raise ValueError("uv count must equal vertex count")
        lines += [f"vt {a:.6f} {b:.6f}" for a, b in uv]
        lines += [
            f"f {f[0]+1}/{f[0]+1} {f[1]+1}/{f[1]+1} {f[2]+1}/{f[2]+1}" for f in topo.faces
        ]
    else:
        lines += [f"f {f[0]+1} {f[1]+1} {f[2]+1}" for f in topo.faces]
    try:
        with open(path, "w") as fh:
            fh.write("\n".join(lines) + "\n")
    except OSError as exc:
        raise OSError(f"failed to write OBJ to {path}: {exc}") from exc


def parse_obj(path) -> tuple[np.ndarray, np.ndarray, np.ndarray]:
    """Read back vertices, uvs and faces from an OBJ written by export_obj."""
    vs, vts, fs = [], [], []
    with open(path) as fh:
        for line in fh:
            parts = line.split()
            if not parts:
                continue
            if parts[0] == "v":
                vs.append([float(p) for p in parts[1:4]])
            elif parts[0] == "vt":
                vts.append([float(p) for p in parts[1:3]])
            elif parts[0] == "f":
                fs.append([int(p.split("/")[0]) - 1 for p in parts[1:4]])
    return np.asarray(vs), np.asarray(vts), np.asarray(fs, dtype=np.int64)
