"""Two-stage training: shape first, then texture; seeded, resumable, checkpointed."""

from __future__ import annotations

import json
from dataclasses import dataclass, field, replace
from pathlib import Path

import numpy as np
import torch
from torch import nn

from .checkpoint import ModelBundle, load_checkpoint, save_checkpoint
from .fixtures import FixtureSample
from .geometry import (
    CANONICAL_LEVEL,
    build_template,
    edge_energy,
    expand_symmetric,
    laplacian_energy,
    project_keypoints,
)
from .losses import (
    LossWeights,
    content_loss,
    keypoint_loss,
    mask_loss,
    shape_total,
    style_loss,
    texture_total,
)
from .renderer import RenderConfig, soft_silhouette
from .shape_gen import TransferControls
from .texture_style import StylizerConfig, downsample_mask, stylize_features


class TrainingDiverged(RuntimeError):
    pass


@dataclass
class TrainConfig:
    stage: str = "shape"
    iterations: int = 800
    batch_size: int = 2  # (source, target) pairs per iteration
    lr: float = 1e-3
    lr_decay: float = 1.0
    seed: int = 0
    dim: int = 64
    layers: int = 4
    channels: int = 16
    render_resolution: int = 64
    sigma: float = 1e-4
    texture_method: str = "sadain"
    checkpoint_every: int = 200
    weights: LossWeights = field(default_factory=LossWeights)
    recon_weight: float = 1.0  # pixel reconstruction term in texture training
    fixture_dir: str = ""
    out_dir: str = "runs/default"

    def __post_init__(self):
        if self.iterations < 0 or self.batch_size < 1:
            raise ValueError("iterations and batch size must be positive")
        if not (0.0 < self.lr_decay <= 1.0):
            raise ValueError("lr decay must lie in (0, 1]")
        if self.stage == "shape" and self.batch_size < 2:
            raise ValueError("shape stage needs >= 2 pairs per batch (batch-norm)")

    @classmethod
    def paper_scale(cls, stage: str = "shape") -> "TrainConfig":
        return cls(
            stage=stage,
            iterations=100_000 if stage == "shape" else 80_000,
            batch_size=8,
            lr=1e-4,
            lr_decay=0.9995,
            dim=512,
            layers=8,
            channels=512,
        )

    @classmethod
    def from_json(cls, path, overrides: dict | None = None) -> "TrainConfig":
        with open(path) as fh:
            raw = json.load(fh)
        weights = LossWeights(**raw.pop("weights", {}))
        cfg = cls(weights=weights, **raw)
        if overrides:
            known = {k: _coerce(cfg, k, v) for k, v in overrides.items()}
            cfg = replace(cfg, **known)
        return cfg


def _coerce(cfg: TrainConfig, key: str, value: str):
    current = getattr(cfg, key)  # raises AttributeError for unknown keys
    if isinstance(current, bool):
        return value in ("1", "true", "True")
    return type(current)(value)


class PerceptualEncoder(nn.Module):
    """Frozen fixed-seed conv features for the perceptual loss (any HxWx3 image)."""

    def __init__(self, seed: int = 4321, channels: int = 24):
        super().__init__()
        gen = torch.Generator().manual_seed(seed)
        self.conv1 = nn.Conv2d(3, channels, 3, stride=2, padding=1)
        self.conv2 = nn.Conv2d(channels, channels, 3, stride=2, padding=1)
        for m in (self.conv1, self.conv2):
            with torch.no_grad():
                m.weight.copy_(torch.randn(m.weight.shape, generator=gen) * 0.1)
                m.bias.zero_()
            for p in m.parameters():
                p.requires_grad_(False)

    def forward(self, img: torch.Tensor) -> torch.Tensor:
        x = img.permute(2, 0, 1)[None].float()
        x = torch.relu(self.conv1(x))
        return self.conv2(x)[0]


def _as_rgb(mask_img: torch.Tensor) -> torch.Tensor:
    return mask_img[:, :, None].expand(-1, -1, 3)


def _downsample_binary(mask: np.ndarray, res: int) -> torch.Tensor:
    h = mask.shape[0]
    k = h // res
    pooled = mask.reshape(res, k, res, k).mean(axis=(1, 3))
    return torch.from_numpy(pooled).float()


def _pair_indices(n: int, batch: int, sampler: torch.Generator) -> list[tuple[int, int]]:
    src = torch.randint(0, n, (batch,), generator=sampler)
    off = torch.randint(1, max(n, 2), (batch,), generator=sampler)
    tgt = (src + off) % n
    return list(zip(src.tolist(), tgt.tolist()))


def _append_log(log_path, record: dict):
    if log_path is None:
        return
    with open(log_path, "a") as fh:
        fh.write(json.dumps(record) + "\n")


def train_shape(
    cfg: TrainConfig,
    fixtures: list[FixtureSample],
    resume_from=None,
    log_path=None,
) -> tuple[ModelBundle, list[dict]]:
    """Optimize the shape generator on reconstruction + transfer objectives."""
    topo, template = build_template(CANONICAL_LEVEL)
    template_left = template[: topo.n_left].T.float()

    if resume_from is not None:
        bundle, extra = load_checkpoint(
            resume_from,
            expect={"dim": cfg.dim, "layers": cfg.layers, "channels": cfg.channels},
        )
    else:
        bundle = ModelBundle.create(cfg.dim, cfg.layers, topo.n_left, cfg.channels, cfg.seed)
        extra = {}

    gen = bundle.shape_gen
    gen.train()
    # Batches are built from a handful of fixtures, so per-batch feature
    # statistics are degenerate (near-duplicate rows). Keep normalization
    # layers on their running statistics so training matches inference.
    for m in gen.modules():
        if isinstance(m, torch.nn.BatchNorm1d):
            m.eval()
    opt = torch.optim.Adam(gen.parameters(), lr=cfg.lr)
    sampler = torch.Generator().manual_seed(cfg.seed + 1)
    start = 0
    if extra.get("optimizer"):
        opt.load_state_dict(extra["optimizer"])
        sampler.set_state(extra["sampler"])
        start = bundle.iteration

    images = torch.stack([torch.from_numpy(f.image).float() for f in fixtures])
    gt_masks = [_downsample_binary(f.silhouette, cfg.render_resolution) for f in fixtures]
    rcfg = RenderConfig(sigma=cfg.sigma, resolution=cfg.render_resolution)
    percep = PerceptualEncoder()
    gt_feats = [percep(_as_rgb(m)) for m in gt_masks]
    kp_idx = torch.from_numpy(fixtures[0].keypoint_indices)
    controls = TransferControls(alpha=0.0, training=True)

    out_dir = Path(cfg.out_dir)
    out_dir.mkdir(parents=True, exist_ok=True)
    log: list[dict] = []
    n = len(fixtures)

    def save(path):
        save_checkpoint(
            bundle,
            path,
            extra={"optimizer": opt.state_dict(), "sampler": sampler.get_state(), "stage": "shape"},
        )

    for it in range(start, cfg.iterations):
        for group in opt.param_groups:
            group["lr"] = cfg.lr * cfg.lr_decay ** it

        pairs = _pair_indices(n, cfg.batch_size, sampler)
        rows = []
        for s, t in pairs:
            rows += [(s, s), (t, t), (s, t)]
        src_imgs = images[[r[0] for r in rows]]
        tgt_imgs = images[[r[1] for r in rows]]
        offs = gen.offsets(src_imgs, tgt_imgs, controls)
        meshes = [expand_symmetric(template_left + offs[i], topo) for i in range(len(rows))]

        recon_mesh: dict[int, torch.Tensor] = {}
        for i, (s, t) in enumerate(rows):
            if s == t and s not in recon_mesh:
                recon_mesh[s] = meshes[i]

        l_mask = 0.0
        l_per = 0.0
        for fid, mesh in recon_mesh.items():
            sil = soft_silhouette(mesh, topo, fixtures[fid].pose, rcfg)
            l_mask = l_mask + mask_loss(gt_masks[fid], sil)
            l_per = l_per + ((percep(_as_rgb(sil)) - gt_feats[fid]) ** 2).sum().sqrt()
        l_mask = l_mask / len(recon_mesh)
        l_per = l_per / len(recon_mesh)

        l_key = 0.0
        for j, (s, t) in enumerate(pairs):
            transfer = meshes[3 * j + 2]
            p = project_keypoints(transfer[kp_idx], topo)
            p_s = project_keypoints(recon_mesh[s][kp_idx], topo)
            p_t = project_keypoints(recon_mesh[t][kp_idx], topo)
            l_key = l_key + keypoint_loss(p, p_s, p_t)
        l_key = l_key / len(pairs)

        l_lap = sum(laplacian_energy(m, topo) for m in meshes) / len(meshes)
        l_edge = sum(edge_energy(m, topo) for m in meshes) / len(meshes)

        total, report = shape_total(l_mask, l_per, l_key, l_lap, l_edge, cfg.weights)
        if not torch.isfinite(total):
            save(out_dir / "last_good.pt")
            raise TrainingDiverged(f"non-finite loss at iteration {it}")

        opt.zero_grad()
        total.backward()
        opt.step()
        bundle.iteration = it + 1

        rec = {"iter": it, **report.components, "total": report.total}
        log.append(rec)
        _append_log(log_path, rec)
        if cfg.checkpoint_every and (it + 1) % cfg.checkpoint_every == 0:
            save(out_dir / f"shape_{it + 1:06d}.pt")

    save(out_dir / "shape_final.pt")
    return bundle, log


def train_texture(
    cfg: TrainConfig,
    fixtures: list[FixtureSample],
    bundle: ModelBundle | None = None,
    resume_from=None,
    log_path=None,
) -> tuple[ModelBundle, list[dict]]:
    """Optimize the texture decoder against style/content (+ reconstruction) losses."""
    topo, _template = build_template(CANONICAL_LEVEL)
    if resume_from is not None:
        bundle, extra = load_checkpoint(resume_from, expect={"channels": cfg.channels})
    else:
        if bundle is None:
            bundle = ModelBundle.create(cfg.dim, cfg.layers, topo.n_left, cfg.channels, cfg.seed)
        extra = {}

    enc = bundle.texture_encoder
    dec = bundle.texture_decoder
    dec.train()
    opt = torch.optim.Adam(dec.parameters(), lr=cfg.lr)
    sampler = torch.Generator().manual_seed(cfg.seed + 2)
    start = 0
    if extra.get("optimizer"):
        opt.load_state_dict(extra["optimizer"])
        sampler.set_state(extra["sampler"])
        start = bundle.iteration

    textures = [torch.from_numpy(f.uv_texture).float() for f in fixtures]
    masks_ds = [downsample_mask(f.semantic_mask) for f in fixtures]
    with torch.no_grad():
        feats = [enc(t) for t in textures]
    scfg = StylizerConfig(method=cfg.texture_method)  # gates off during training

    out_dir = Path(cfg.out_dir)
    out_dir.mkdir(parents=True, exist_ok=True)
    log: list[dict] = []
    n = len(fixtures)

    def save(path):
        save_checkpoint(
            bundle,
            path,
            extra={
                "optimizer": opt.state_dict(),
                "sampler": sampler.get_state(),
                "stage": "texture",
            },
        )

    enc_before = [p.detach().clone() for p in enc.parameters()]

    for it in range(start, cfg.iterations):
        for group in opt.param_groups:
            group["lr"] = cfg.lr * cfg.lr_decay ** it

        pairs = _pair_indices(n, cfg.batch_size, sampler)
        l_style = 0.0
        l_content = 0.0
        l_recon = 0.0
        for s, t in pairs:
            styled = stylize_features(feats[s], feats[t], masks_ds[s], scfg)
            out_img = dec(styled)
            out_feat = enc(out_img)
            l_style = l_style + style_loss(out_feat, styled, masks_ds[s])
            l_content = l_content + content_loss(out_feat, styled)
            l_recon = l_recon + ((dec(feats[s]) - textures[s]) ** 2).mean()
        l_style = l_style / len(pairs)
        l_content = l_content / len(pairs)
        l_recon = l_recon / len(pairs)

        total, report = texture_total(l_style, l_content, cfg.weights)
        total = total + cfg.recon_weight * l_recon
        if not torch.isfinite(total):
            save(out_dir / "last_good.pt")
            raise TrainingDiverged(f"non-finite loss at iteration {it}")

        opt.zero_grad()
        total.backward()
        opt.step()
        bundle.iteration = it + 1

        rec = {
            "iter": it,
            **report.components,
            "recon": float(l_recon.detach()),
            "total": float(total.detach()),
        }
        log.append(rec)
        _append_log(log_path, rec)
        if cfg.checkpoint_every and (it + 1) % cfg.checkpoint_every == 0:
            save(out_dir / f"texture_{it + 1:06d}.pt")

    for p, before in zip(enc.parameters(), enc_before):
        assert torch.equal(p, before), "frozen texture encoder was mutated"

    save(out_dir / "texture_final.pt")
    return bundle, log
