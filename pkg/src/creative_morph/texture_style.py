"""Semantic UV texture transfer: masked statistics, SAdaIN, SLST, SEFDM, switch gates."""

from __future__ import annotations

from dataclasses import dataclass, field

import numpy as np
import torch
from torch import nn

TEXTURE_H, TEXTURE_W = 128, 256
FEAT_H, FEAT_W = 64, 128
SEMANTIC_PARTS = (1, 2, 3, 4)  # head, neck, belly, back
NON_SEMANTIC = 5
PART_NAMES = {1: "head", 2: "neck", 3: "belly", 4: "back", 5: "non_semantic"}


class EmptyPart(Exception):
    """A part mask selects no cells; callers fall back to source passthrough."""


@dataclass
class StylizerConfig:
    method: str = "sadain"  # sadain | slst | sefdm
    slst_mode: str = "wct"  # wct | literal
    switch_gates: tuple = (False, False, False, False)
    stochastic_gates: bool = False
    epsilon: float = 1e-5
    seed: int = 0
    passthrough_report: list = field(default_factory=list)

    def __post_init__(self):
        if self.method not in ("sadain", "slst", "sefdm"):
            raise ValueError(f"unknown stylizer method {self.method!r}")
        if self.slst_mode not in ("wct", "literal"):
            raise ValueError(f"unknown slst mode {self.slst_mode!r}")
        if self.epsilon <= 0:
            raise ValueError("epsilon must be positive")

    def resolved_gates(self) -> tuple:
        if not self.stochastic_gates:
            return tuple(bool(g) for g in self.switch_gates)
        rng = np.random.default_rng(self.seed)
        return tuple(bool(b) for b in rng.integers(0, 2, size=4))


def validate_mask(labels: np.ndarray) -> np.ndarray:
    labels = np.asarray(labels)
    if labels.shape != (TEXTURE_H, TEXTURE_W):
        raise ValueError(f"mask must be {TEXTURE_H}x{TEXTURE_W}, got {labels.shape}")
    if not np.isin(labels, [1, 2, 3, 4, 5]).all():
        raise ValueError("mask labels must lie in {1..5}")
    return labels.astype(np.int64)


def downsample_mask(labels: np.ndarray) -> np.ndarray:
    """2x2 mode-pool the semantic mask; ties go to the smallest label."""
    labels = validate_mask(labels)
    blocks = labels.reshape(FEAT_H, 2, FEAT_W, 2).transpose(0, 2, 1, 3).reshape(FEAT_H, FEAT_W, 4)
    counts = np.stack([(blocks == i).sum(axis=2) for i in range(1, 6)], axis=0)
    return np.argmax(counts, axis=0) + 1  # argmax takes the first (smallest) on ties


def part_one_hot(mask_ds: np.ndarray, i: int) -> np.ndarray:
    if i not in (1, 2, 3, 4, 5):
        raise ValueError("part index must be 1..5")
    return (np.asarray(mask_ds) == i).astype(np.float64)


def masked_moments(v: torch.Tensor, part: torch.Tensor, epsilon: float):
    """Per-channel mean and std over cells selected by the binary part grid.

    v: (C, H, W); part: (H, W). Population variance, stabilized by epsilon.
    """
    count = part.sum()
    if count < 1:
        raise EmptyPart
    w = part.to(v.dtype)
    mu = (v * w).sum(dim=(1, 2)) / count
    var = (((v - mu[:, None, None]) * w) ** 2).sum(dim=(1, 2)) / count
    sigma = torch.sqrt(var + epsilon)
    return mu, sigma


def _gated_parts(v_s, v_t, mask_ds, cfg: StylizerConfig):
    """Yield (part_label, part_grid, src_feature, tgt_feature) honoring switch gates."""
    gates = cfg.resolved_gates()
    for i in SEMANTIC_PARTS:
        part = torch.from_numpy(part_one_hot(mask_ds, i)).to(v_s.dtype)
        if gates[i - 1]:
            yield i, part, v_t, v_s
        else:
            yield i, part, v_s, v_t


def sadain(v_s: torch.Tensor, v_t: torch.Tensor, mask_ds: np.ndarray, cfg: StylizerConfig):
    """Semantic AdaIN: per-part target statistics imposed on source; part 5 passthrough."""
    out = v_s.clone()
    for i, part, src, tgt in _gated_parts(v_s, v_t, mask_ds, cfg):
        try:
            mu_s, sig_s = masked_moments(src, part, cfg.epsilon)
            mu_t, sig_t = masked_moments(tgt, part, cfg.epsilon)
        except EmptyPart:
            cfg.passthrough_report.append((PART_NAMES[i], "empty"))
            continue
        norm = sig_t[:, None, None] * (src - mu_s[:, None, None]) / sig_s[:, None, None]
        styled = norm + mu_t[:, None, None]
        out = out * (1 - part) + styled * part
    return out


def _masked_cov(x: torch.Tensor, part_idx, epsilon: float):
    """Centered covariance (C x C) of features at the part cells."""
    cells = x.reshape(x.shape[0], -1)[:, part_idx]  # (C, n)
    mu = cells.mean(dim=1, keepdim=True)
    c = cells - mu
    return c @ c.T / cells.shape[1] + epsilon * torch.eye(x.shape[0], dtype=x.dtype), mu[:, 0]


def _matrix_power(m: torch.Tensor, power: float, epsilon: float):
    vals, vecs = torch.linalg.eigh(m)
    vals = vals.clamp_min(epsilon)
    return vecs @ torch.diag(vals ** power) @ vecs.T


def slst(v_s: torch.Tensor, v_t: torch.Tensor, mask_ds: np.ndarray, cfg: StylizerConfig):
    """Semantic linear style transfer.

    "wct" mode recolors each part's centered source features with the target
    covariance; "literal" mode applies cov(V_S) cov(V_T) V_S on the part cells.
    Part 5 is source passthrough.
    """
    out = v_s.clone()
    C = v_s.shape[0]
    for i, part, src, tgt in _gated_parts(v_s, v_t, mask_ds, cfg):
        idx = part.reshape(-1).nonzero(as_tuple=False).squeeze(1)
        if idx.numel() < 2:
            cfg.passthrough_report.append((PART_NAMES[i], "too_few_cells"))
            continue
        if cfg.slst_mode == "wct":
            cov_s, mu_s = _masked_cov(src, idx, cfg.epsilon)
            cov_t, mu_t = _masked_cov(tgt, idx, cfg.epsilon)
            transform = _matrix_power(cov_t, 0.5, cfg.epsilon) @ _matrix_power(
                cov_s, -0.5, cfg.epsilon
            )
            centered = src.reshape(C, -1)[:, idx] - mu_s[:, None]
            styled_cells = transform @ centered + mu_t[:, None]
        else:
            cov_s, _ = _masked_cov(src, idx, cfg.epsilon)
            cov_t, _ = _masked_cov(tgt, idx, cfg.epsilon)
            styled_cells = (cov_s @ cov_t @ src.reshape(C, -1))[:, idx]
        flat = out.reshape(C, -1).clone()
        flat[:, idx] = styled_cells.to(out.dtype)
        out = flat.reshape(v_s.shape)
    return out


def ehm_sort_match(src: torch.Tensor, tgt: torch.Tensor) -> torch.Tensor:
    """Exact histogram matching of two equal-length value sequences.

    Output k takes sorted(tgt) at the rank of src_k; ties in src break by
    original index (stable sort), so the output is a permutation of tgt.
    """
    if src.shape != tgt.shape or src.ndim != 1 or src.numel() < 1:
        raise ValueError("src and tgt must be equal-length 1-D sequences")
    order = torch.argsort(src, stable=True)
    tgt_sorted = torch.sort(tgt).values
    out = torch.empty_like(tgt_sorted)
    out[order] = tgt_sorted
    return out


def _resample_sorted(values: torch.Tensor, n: int) -> torch.Tensor:
    """Sorted linear resampling of a value sequence to length n."""
    v = torch.sort(values).values
    if v.numel() == n:
        return v
    pos = torch.linspace(0, v.numel() - 1, n, dtype=v.dtype)
    lo = pos.floor().long().clamp(max=v.numel() - 1)
    hi = (lo + 1).clamp(max=v.numel() - 1)
    frac = pos - lo.to(v.dtype)
    return v[lo] * (1 - frac) + v[hi] * frac


def sefdm(v_s: torch.Tensor, v_t: torch.Tensor, mask_ds: np.ndarray, cfg: StylizerConfig):
    """Semantic exact feature distribution matching.

    Per part and channel the source cells take the target's exact value
    multiset; gradients pass straight through to the source values. Unequal
    source/target cell counts are handled by sorted linear resampling of the
    target values (reported).
    """
    out = v_s.clone()
    C = v_s.shape[0]
    for i, part, src, tgt in _gated_parts(v_s, v_t, mask_ds, cfg):
        idx = part.reshape(-1).nonzero(as_tuple=False).squeeze(1)
        if idx.numel() < 1:
            cfg.passthrough_report.append((PART_NAMES[i], "empty"))
            continue
        src_cells = src.reshape(C, -1)[:, idx]
        tgt_cells = tgt.reshape(C, -1)[:, idx]
        matched = torch.stack(
            [ehm_sort_match(src_cells[c], tgt_cells[c]) for c in range(C)]
        )
        # straight-through: forward value is exactly `matched`, gradient is
        # the identity with respect to the source cells
        styled = matched.detach() + (src_cells - src_cells.detach())
        flat = out.reshape(C, -1).clone()
        flat[:, idx] = styled.to(out.dtype)
        out = flat.reshape(v_s.shape)
    return out


def sefdm_cross_mask(v_s, v_t, mask_s, mask_t, cfg: StylizerConfig):
    """SEFDM variant for per-instance masks with unequal part cell counts."""
    out = v_s.clone()
    C = v_s.shape[0]
    gates = cfg.resolved_gates()
    for i in SEMANTIC_PARTS:
        idx_s = torch.from_numpy(part_one_hot(mask_s, i)).reshape(-1).nonzero().squeeze(1)
        idx_t = torch.from_numpy(part_one_hot(mask_t, i)).reshape(-1).nonzero().squeeze(1)
        if gates[i - 1]:
            idx_s, idx_t = idx_t, idx_s
            src_map, tgt_map = v_t, v_s
        else:
            src_map, tgt_map = v_s, v_t
        if idx_s.numel() < 1 or idx_t.numel() < 1:
            cfg.passthrough_report.append((PART_NAMES[i], "empty"))
            continue
        if idx_s.numel() != idx_t.numel():
            cfg.passthrough_report.append((PART_NAMES[i], "resampled"))
        src_cells = src_map.reshape(C, -1)[:, idx_s]
        tgt_cells = tgt_map.reshape(C, -1)[:, idx_t]
        matched = torch.stack(
            [
                ehm_sort_match(src_cells[c], _resample_sorted(tgt_cells[c], idx_s.numel()))
                for c in range(C)
            ]
        )
        # straight-through: forward value is exactly `matched`, gradient is
        # the identity with respect to the source cells
        styled = matched.detach() + (src_cells - src_cells.detach())
        flat = out.reshape(C, -1).clone()
        flat[:, idx_s] = styled.to(out.dtype)
        out = flat.reshape(v_s.shape)
    return out


STYLIZERS = {"sadain": sadain, "slst": slst, "sefdm": sefdm}


class TextureEncoder(nn.Module):
    """Frozen fixed-seed conv stack: 128 x 256 x 3 texture -> C x 64 x 128 features."""

    def __init__(self, channels: int = 16, seed: int = 1234):
        super().__init__()
        gen = torch.Generator().manual_seed(seed)
        self.conv1 = nn.Conv2d(3, channels, 3, padding=1)
        self.conv2 = nn.Conv2d(channels, channels, 3, stride=2, padding=1)
        self.conv3 = nn.Conv2d(channels, channels, 3, padding=1)
        self.conv4 = nn.Conv2d(channels, channels, 3, padding=1)
        for m in self.modules():
            if isinstance(m, nn.Conv2d):
                with torch.no_grad():
                    m.weight.copy_(torch.randn(m.weight.shape, generator=gen) * 0.12)
                    m.bias.zero_()
        for p in self.parameters():
            p.requires_grad_(False)

    def forward(self, uv: torch.Tensor) -> torch.Tensor:
        """uv: (H, W, 3) in [0, 1] -> (C, 64, 128)."""
        if uv.shape != (TEXTURE_H, TEXTURE_W, 3):
            raise ValueError(f"expected {TEXTURE_H}x{TEXTURE_W}x3 texture, got {tuple(uv.shape)}")
        x = uv.permute(2, 0, 1)[None].float()
        x = torch.relu(self.conv1(x))
        x = torch.relu(self.conv2(x))
        x = torch.relu(self.conv3(x))
        x = self.conv4(x)
        return x[0]


class TextureDecoder(nn.Module):
    """Trainable upsampler: C x 64 x 128 features -> 128 x 256 x 3 texture in [0, 1]."""

    def __init__(self, channels: int = 16):
        super().__init__()
        self.conv1 = nn.Conv2d(channels, channels, 3, padding=1)
        self.conv2 = nn.Conv2d(channels, channels, 3, padding=1)
        self.conv3 = nn.Conv2d(channels, channels, 3, padding=1)
        self.conv4 = nn.Conv2d(channels, 3, 3, padding=1)

    def forward(self, feat: torch.Tensor) -> torch.Tensor:
        x = feat[None].float()
        x = torch.relu(self.conv1(x))
        x = nn.functional.interpolate(x, scale_factor=2, mode="nearest")
        x = torch.relu(self.conv2(x))
        x = torch.relu(self.conv3(x))
        x = torch.sigmoid(self.conv4(x))
        return x[0].permute(1, 2, 0)


def stylize_features(v_s, v_t, mask_ds, cfg: StylizerConfig):
    return STYLIZERS[cfg.method](v_s, v_t, mask_ds, cfg)


def stylize_uv(
    u_s: torch.Tensor,
    u_t: torch.Tensor,
    mask: np.ndarray,
    cfg: StylizerConfig,
    encoder: TextureEncoder,
    decoder: TextureDecoder,
) -> torch.Tensor:
    """Full semantic texture transfer: encode, stylize per part, decode.

    The non-semantic region of the decoded image is overwritten with the
    source texture pixels, mirroring the feature-level part-5 passthrough.
    """
    mask = validate_mask(mask)
    mask_ds = downsample_mask(mask)
    with torch.no_grad():
        v_s = encoder(u_s)
        v_t = encoder(u_t)
        styled = stylize_features(v_s, v_t, mask_ds, cfg)
        out = decoder(styled).to(u_s.dtype)
    non_sem = torch.from_numpy(part_one_hot(mask, NON_SEMANTIC)).to(u_s.dtype)[:, :, None]
    return out * (1 - non_sem) + u_s * non_sem
