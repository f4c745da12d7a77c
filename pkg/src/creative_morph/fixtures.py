"""Synthetic proto-bird fixture generation and the sample-directory loader."""

from __future__ import annotations

import json
from dataclasses import dataclass
from pathlib import Path

import numpy as np
import torch

from . import geometry, renderer
from .camera import CameraPose
from .geometry import SymmetricTopology, build_template, expand_symmetric
from .renderer import RenderConfig, coverage_mask, render_textured
from .texture_style import TEXTURE_H, TEXTURE_W, validate_mask

IMAGE_RES = 256
N_KEYPOINTS = 15

# fixed palette of body/accent colors cycled across instances
_BODY_COLORS = [
    (0.75, 0.35, 0.20),
    (0.25, 0.45, 0.75),
    (0.55, 0.60, 0.25),
    (0.60, 0.30, 0.60),
    (0.30, 0.60, 0.55),
    (0.70, 0.55, 0.25),
]


@dataclass
class FixtureSample:
    sample_id: str
    image: np.ndarray  # 256 x 256 x 3 in [0, 1]
    silhouette: np.ndarray  # 256 x 256 in {0, 1}
    semantic_mask: np.ndarray  # 128 x 256 labels {1..5}
    pose: CameraPose
    keypoint_indices: np.ndarray  # (15,)
    uv_texture: np.ndarray  # 128 x 256 x 3 in [0, 1]


def default_keypoint_indices(topo: SymmetricTopology) -> np.ndarray:
    """15 fixed template vertices, spread along the symmetry-plane ring."""
    sel = np.round(np.linspace(0, topo.n_plane - 1, N_KEYPOINTS)).astype(np.int64)
    return topo.plane_indices[sel]


def proto_bird_vertices(
    topo: SymmetricTopology, template: torch.Tensor, params: dict
) -> torch.Tensor:
    """Deform the template into an ellipsoid-family 'proto-bird'.

    Deformation acts on the left half (functions of the template coordinates
    that respect the mirror symmetry), then expands symmetrically.
    """
    left = template[: topo.n_left].clone()
    x, y, z = left[:, 0], left[:, 1], left[:, 2]
    ax = params["aspect"]
    sx = x * ax[0]
    sy = y * ax[1]
    sz = z * ax[2]
    # neck/head bulge toward +y, tail stretch toward -y
    neck = params["neck"] * torch.exp(-((y - 0.8) ** 2) / 0.15)
    tail = params["tail"] * torch.exp(-((y + 0.9) ** 2) / 0.2)
    sy = sy + neck * (y > 0).to(left.dtype) - tail * (y < 0).to(left.dtype)
    sz = sz + params["belly"] * torch.exp(-(y ** 2) / 0.3) * (z < 0).to(left.dtype) * z.abs()
    half = torch.stack([sx, sy, sz], dim=1).T
    return expand_symmetric(half, topo)


def paint_semantic_mask() -> np.ndarray:
    """Fixed UV part layout: four v-bands (head/neck/belly/back) with a margin."""
    labels = np.full((TEXTURE_H, TEXTURE_W), 5, dtype=np.int64)
    margin = 8
    bands = [(0.72, 1.0, 1), (0.54, 0.72, 2), (0.28, 0.54, 3), (0.0, 0.28, 4)]
    for lo, hi, lab in bands:
        r0 = int(lo * TEXTURE_H)
        r1 = int(hi * TEXTURE_H)
        labels[r0:r1, margin : TEXTURE_W - margin] = lab
    return labels


def paint_uv_texture(rng: np.random.Generator, idx: int) -> np.ndarray:
    """Banded, speckled UV texture matching the semantic layout."""
    base = np.array(_BODY_COLORS[idx % len(_BODY_COLORS)])
    tex = np.ones((TEXTURE_H, TEXTURE_W, 3)) * base
    labels = paint_semantic_mask()
    shifts = {1: 0.25, 2: -0.15, 3: 0.15, 4: -0.25, 5: 0.0}
    for lab, shift in shifts.items():
        tex[labels == lab] = np.clip(base + shift + rng.uniform(-0.1, 0.1, 3), 0.05, 0.95)
    speckle = rng.uniform(-0.06, 0.06, size=(TEXTURE_H, TEXTURE_W, 1))
    return np.clip(tex + speckle, 0.0, 1.0)


def _random_pose(rng: np.random.Generator) -> CameraPose:
    axis = rng.normal(size=3)
    axis /= np.linalg.norm(axis)
    angle = rng.uniform(-0.5, 0.5)
    q = np.concatenate([[np.cos(angle / 2)], np.sin(angle / 2) * axis])
    scale = rng.uniform(0.45, 0.6)
    t = rng.uniform(-0.08, 0.08, size=2)
    return CameraPose.from_vector([scale, t[0], t[1], *q])


def generate_fixtures(n: int, seed: int, out_dir) -> Path:
    """Write n deterministic proto-bird samples plus a manifest to out_dir."""
    out = Path(out_dir)
    out.mkdir(parents=True, exist_ok=True)
    topo, template = build_template(geometry.CANONICAL_LEVEL)
    uv_coords = torch.from_numpy(geometry.template_uv(topo, template))
    kp = default_keypoint_indices(topo)
    rng = np.random.default_rng(seed)
    cfg = RenderConfig(resolution=IMAGE_RES)
    samples = []
    for i in range(n):
        sid = f"sample_{i:03d}"
        for _attempt in range(20):
            params = {
                "aspect": torch.tensor(rng.uniform([0.55, 0.8, 0.55], [0.8, 1.25, 0.8])),
                "neck": float(rng.uniform(0.0, 0.3)),
                "tail": float(rng.uniform(0.0, 0.35)),
                "belly": float(rng.uniform(0.0, 0.4)),
            }
            pose = _random_pose(rng)
            mesh = proto_bird_vertices(topo, template, params)
            sil = coverage_mask(mesh, topo, pose, IMAGE_RES).numpy()
            frac = sil.mean()
            if 0.05 <= frac <= 0.6:
                break
        else:
            raise RuntimeError(f"could not generate an in-range silhouette for {sid}")
        texture = paint_uv_texture(rng, i)
        labels = paint_semantic_mask()
        img = render_textured(
            mesh, topo, pose, torch.from_numpy(texture), uv_coords, cfg
        ).numpy()

        renderer.save_image_png(img, out / f"{sid}_image.png")
        renderer.save_image_png(sil, out / f"{sid}_silhouette.png")
        renderer.save_image_png(texture, out / f"{sid}_texture.png")
        np.save(out / f"{sid}_semantic_mask.npy", labels)
        with open(out / f"{sid}_meta.json", "w") as fh:
            json.dump(
                {
                    "pose": pose.to_vector(),
                    "keypoint_indices": kp.tolist(),
                    "silhouette_fraction": float(frac),
                },
                fh,
                indent=1,
                sort_keys=True,
            )
        samples.append(
            {
                "id": sid,
                "image": f"{sid}_image.png",
                "silhouette": f"{sid}_silhouette.png",
                "texture": f"{sid}_texture.png",
                "semantic_mask": f"{sid}_semantic_mask.npy",
                "meta": f"{sid}_meta.json",
            }
        )
    with open(out / "manifest.json", "w") as fh:
        json.dump({"seed": seed, "samples": samples}, fh, indent=1, sort_keys=True)
    return out


def load_fixtures(fixture_dir) -> list[FixtureSample]:
    root = Path(fixture_dir)
    with open(root / "manifest.json") as fh:
        manifest = json.load(fh)
    out = []
    for entry in manifest["samples"]:
        with open(root / entry["meta"]) as fh:
            meta = json.load(fh)
        out.append(
            FixtureSample(
                sample_id=entry["id"],
                image=renderer.load_image_png(root / entry["image"]),
                silhouette=(renderer.load_image_png(root / entry["silhouette"]) > 0.5).astype(
                    np.float64
                ),
                semantic_mask=validate_mask(np.load(root / entry["semantic_mask"])),
                pose=CameraPose.from_vector(meta["pose"]),
                keypoint_indices=np.asarray(meta["keypoint_indices"], dtype=np.int64),
                uv_texture=renderer.load_image_png(root / entry["texture"]),
            )
        )
    return out
