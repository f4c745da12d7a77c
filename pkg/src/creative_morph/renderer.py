"""Differentiable silhouette rasterizer, bilinear sampling, and a z-buffered preview renderer."""

from __future__ import annotations

from dataclasses import dataclass, field

import numpy as np
import torch
import torch.nn.functional as F_nn

from .camera import CameraPose, camera_depth, project
from .geometry import SymmetricTopology

# sigmoid argument beyond which a face's contribution is below float precision
_CUTOFF = 45.0


@dataclass
class RenderConfig:
    sigma: float = 1e-4  # softness of the squared-distance sigmoid
    resolution: int = 64
    near: float = -10.0
    far: float = 10.0
    background: tuple = field(default=(1.0, 1.0, 1.0))

    def __post_init__(self):
        if self.sigma <= 0:
            raise ValueError("sigma must be positive")


def pixel_grid(resolution: int, dtype=torch.float64) -> torch.Tensor:
    """Pixel-center coordinates, (H*W, 2) in [-1, 1]^2; row-major, y up with row index."""
    step = 2.0 / resolution
    centers = torch.arange(resolution, dtype=dtype) * step + step / 2.0 - 1.0
    y, x = torch.meshgrid(centers, centers, indexing="ij")
    return torch.stack([x.reshape(-1), y.reshape(-1)], dim=1)


def _triangle_pairs(tri_2d: torch.Tensor, resolution: int, radius: float):
    """(pixel, face) candidate pairs whose distance can matter.

    Selection uses detached coordinates; only pairs within the dilated face
    bounding box are evaluated. Returns (pix_idx, face_idx).
    """
    t = tri_2d.detach()
    lo = t.min(dim=1).values - radius  # (F, 2)
    hi = t.max(dim=1).values + radius
    step = 2.0 / resolution
    centers = torch.arange(resolution, dtype=t.dtype) * step + step / 2.0 - 1.0
    in_x = (centers[None, :] >= lo[:, 0:1]) & (centers[None, :] <= hi[:, 0:1])  # (F, W)
    in_y = (centers[None, :] >= lo[:, 1:2]) & (centers[None, :] <= hi[:, 1:2])  # (F, H)
    box = in_y[:, :, None] & in_x[:, None, :]  # (F, H, W)
    idx = box.reshape(box.shape[0], -1).nonzero(as_tuple=False)
    return idx[:, 1], idx[:, 0]


def _point_triangle_sq_dist(p: torch.Tensor, tri: torch.Tensor):
    """Squared distance from points to triangle boundaries, plus inside flags.

    p: (N, 2) points; tri: (N, 3, 2) one triangle per point.
    Returns (d2, inside) with d2 the min over the three edges.
    """
    d2 = None
    for i in range(3):
        a = tri[:, i]
        b = tri[:, (i + 1) % 3]
        ab = b - a
        denom = (ab * ab).sum(dim=1).clamp_min(1e-30)
        t = (((p - a) * ab).sum(dim=1) / denom).clamp(0.0, 1.0)
        proj = a + t[:, None] * ab
        di = ((p - proj) ** 2).sum(dim=1)
        d2 = di if d2 is None else torch.minimum(d2, di)

    e0 = tri[:, 1] - tri[:, 0]
    e1 = tri[:, 2] - tri[:, 1]
    e2 = tri[:, 0] - tri[:, 2]

    def cross(u, v):
        return u[:, 0] * v[:, 1] - u[:, 1] * v[:, 0]

    c0 = cross(e0, p - tri[:, 0])
    c1 = cross(e1, p - tri[:, 1])
    c2 = cross(e2, p - tri[:, 2])
    area = cross(e0, -e2)
    inside = ((c0 >= 0) & (c1 >= 0) & (c2 >= 0)) | ((c0 <= 0) & (c1 <= 0) & (c2 <= 0))
    inside = inside & (area.abs() > 1e-30)  # degenerate faces count as outside
    return d2, inside


def soft_silhouette_tris(tri_2d: torch.Tensor, cfg: RenderConfig) -> torch.Tensor:
    """Soft occupancy image from projected triangles (F, 3, 2); values in [0, 1].

    Per-face coverage D_j(p) = sigmoid(delta * d^2 / sigma) with delta = +1
    inside the face; the image is the probabilistic union over faces.
    Differentiable with respect to the triangle vertices.
    """
    res = cfg.resolution
    radius = float(np.sqrt(_CUTOFF * cfg.sigma))
    pix_idx, face_idx = _triangle_pairs(tri_2d, res, radius)
    grid = pixel_grid(res, dtype=tri_2d.dtype)

    if pix_idx.numel() == 0:
        return torch.zeros(res, res, dtype=tri_2d.dtype) + tri_2d.sum() * 0.0

    p = grid[pix_idx]
    tri = tri_2d[face_idx]
    d2, inside = _point_triangle_sq_dist(p, tri)
    sign = torch.where(inside, 1.0, -1.0).to(tri_2d.dtype)
    arg = sign * d2 / cfg.sigma
    # log(1 - sigmoid(a)) = -softplus(a); union = 1 - exp(sum of logs)
    log_miss = -F_nn.softplus(arg)
    acc = torch.zeros(res * res, dtype=tri_2d.dtype)
    acc = acc.index_add(0, pix_idx, log_miss)
    return (1.0 - torch.exp(acc)).reshape(res, res)


def soft_silhouette(
    mesh: torch.Tensor, topo: SymmetricTopology, pose: CameraPose, cfg: RenderConfig
) -> torch.Tensor:
    proj = project(mesh, pose)
    tri = proj[torch.from_numpy(topo.faces)]
    return soft_silhouette_tris(tri, cfg)


def bilinear_sample(image: torch.Tensor, coords: torch.Tensor) -> torch.Tensor:
    """Sample a C x H x W image at n x 2 coords in [-1, 1]^2 (align-corners, border clamp).

    Returns n x C. Exact at grid-aligned coordinates; differentiable in both
    the image and the coordinates.
    """
    if not torch.isfinite(coords).all():
        raise ValueError("coords must be finite")
    C, H, W = image.shape
    x = (coords[:, 0] + 1.0) * 0.5 * (W - 1)
    y = (coords[:, 1] + 1.0) * 0.5 * (H - 1)
    x = x.clamp(0.0, W - 1.0)
    y = y.clamp(0.0, H - 1.0)
    x0 = x.floor().clamp(0, W - 2) if W > 1 else x.floor().clamp(0, 0)
    y0 = y.floor().clamp(0, H - 2) if H > 1 else y.floor().clamp(0, 0)
    fx = (x - x0).to(image.dtype)
    fy = (y - y0).to(image.dtype)
    x0 = x0.long()
    y0 = y0.long()
    x1 = (x0 + 1).clamp(max=W - 1)
    y1 = (y0 + 1).clamp(max=H - 1)
    flat = image.reshape(C, -1)

    def at(yy, xx):
        return flat[:, yy * W + xx].T  # (n, C)

    top = at(y0, x0) * (1 - fx)[:, None] + at(y0, x1) * fx[:, None]
    bot = at(y1, x0) * (1 - fx)[:, None] + at(y1, x1) * fx[:, None]
    return top * (1 - fy)[:, None] + bot * fy[:, None]


def render_textured(
    mesh: torch.Tensor,
    topo: SymmetricTopology,
    pose: CameraPose,
    uv_texture: torch.Tensor,  # H x W x 3 in [0, 1]
    uv_coords: torch.Tensor,  # n_total x 2 in [0, 1]^2
    cfg: RenderConfig,
) -> torch.Tensor:
    """Z-buffered textured render, (res, res, 3).

    Nearest-depth face wins per pixel; face color is the UV texture sampled at
    the barycentric-interpolated UV. Differentiable with respect to the texture.
    """
    res = cfg.resolution
    dtype = uv_texture.dtype
    bg = torch.tensor(cfg.background, dtype=dtype)
    out = bg.repeat(res * res, 1)

    proj = project(mesh, pose).to(dtype)
    depth = camera_depth(mesh, pose).to(dtype)
    faces_t = torch.from_numpy(topo.faces)
    tri = proj[faces_t]  # (F, 3, 2)
    tri_z = depth[faces_t]  # (F, 3)
    tri_uv = uv_coords.to(dtype)[faces_t]  # (F, 3, 2)

    pix_idx, face_idx = _triangle_pairs(tri, res, 0.0)
    if pix_idx.numel() == 0:
        return out.reshape(res, res, 3)

    grid = pixel_grid(res, dtype=dtype)
    p = grid[pix_idx]
    t = tri[face_idx]
    v0 = t[:, 1] - t[:, 0]
    v1 = t[:, 2] - t[:, 0]
    v2 = p - t[:, 0]
    den = v0[:, 0] * v1[:, 1] - v0[:, 1] * v1[:, 0]
    ok = den.abs() > 1e-20
    den = torch.where(ok, den, torch.ones_like(den))
    w1 = (v2[:, 0] * v1[:, 1] - v2[:, 1] * v1[:, 0]) / den
    w2 = (v0[:, 0] * v2[:, 1] - v0[:, 1] * v2[:, 0]) / den
    w0 = 1.0 - w1 - w2
    covered = ok & (w0 >= 0) & (w1 >= 0) & (w2 >= 0)
    if not covered.any():
        return out.reshape(res, res, 3)

    pix_idx = pix_idx[covered]
    face_idx = face_idx[covered]
    bary = torch.stack([w0[covered], w1[covered], w2[covered]], dim=1)
    z = (tri_z[face_idx] * bary).sum(dim=1)

    zbuf = torch.full((res * res,), float("inf"), dtype=dtype)
    zbuf = zbuf.scatter_reduce(0, pix_idx, z, reduce="amin", include_self=True)
    # first candidate matching the winning depth takes the pixel
    win = z <= zbuf[pix_idx] + 1e-12
    order = torch.argsort(pix_idx[win], stable=True)
    sel = win.nonzero(as_tuple=False).squeeze(1)[order]
    pix_sel = pix_idx[sel]
    keep = torch.ones_like(pix_sel, dtype=torch.bool)
    keep[1:] = pix_sel[1:] != pix_sel[:-1]
    sel = sel[keep]

    uv = (tri_uv[face_idx[sel]] * bary[sel][:, :, None]).sum(dim=1)  # (k, 2) in [0,1]
    tex = uv_texture.permute(2, 0, 1)  # 3 x H x W
    colors = bilinear_sample(tex, uv * 2.0 - 1.0)
    out = out.index_put((pix_idx[sel],), colors)
    return out.reshape(res, res, 3)


def coverage_mask(
    mesh: torch.Tensor, topo: SymmetricTopology, pose: CameraPose, resolution: int
) -> torch.Tensor:
    """Hard binary coverage from the z-buffer path (no texture), (res, res)."""
    uv = torch.zeros(topo.n_total, 2, dtype=torch.float64)
    tex = torch.ones(2, 2, 3, dtype=torch.float64)
    cfg = RenderConfig(resolution=resolution, background=(0.0, 0.0, 0.0))
    img = render_textured(mesh, topo, pose, tex, uv, cfg)
    return (img[:, :, 0] > 0.5).to(torch.float64)


def save_image_png(values: np.ndarray, path) -> None:
    """Save HxW (grayscale) or HxWx3 (RGB) values in [0, 1] as 8-bit PNG, y up."""
    from PIL import Image

    arr = np.clip(np.asarray(values), 0.0, 1.0)
    arr = (arr * 255.0 + 0.5).astype(np.uint8)
    arr = arr[::-1]  # row 0 is y = -1 (bottom); PNG rows go top-down
    Image.fromarray(arr).save(path)


def load_image_png(path, dtype=np.float64) -> np.ndarray:
    from PIL import Image

    arr = np.asarray(Image.open(path), dtype=dtype) / 255.0
    return arr[::-1].copy()
