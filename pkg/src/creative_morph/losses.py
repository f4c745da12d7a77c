"""Training objectives: negative-IoU mask loss, perceptual, keypoint, and texture losses."""

from __future__ import annotations

import json
import warnings
from dataclasses import dataclass, field

import torch

from .texture_style import SEMANTIC_PARTS, EmptyPart, masked_moments, part_one_hot


@dataclass
class LossWeights:
    mask: float = 1.0
    perceptual: float = 1.0
    keypoint: float = 1.0
    laplacian: float = 0.1
    edge: float = 0.1
    style: float = 1.0
    content: float = 1.0


def _scalar(v) -> float:
    return float(v.detach()) if torch.is_tensor(v) else float(v)


@dataclass
class LossReport:
    components: dict = field(default_factory=dict)
    total: float = 0.0

    def to_json(self, iteration: int) -> str:
        rec = {"iter": iteration, **self.components, "total": self.total}
        return json.dumps(rec)


def mask_loss(m: torch.Tensor, m_pred: torch.Tensor) -> torch.Tensor:
    """Negative soft IoU: 1 - |M * M_pred| / |M + M_pred - M * M_pred|."""
    inter = (m * m_pred).sum()
    union = (m + m_pred - m * m_pred).sum()
    if union <= 0:
        warnings.warn("both masks are empty; mask loss defined as 0")
        return inter * 0.0
    return 1.0 - inter / union


def mask_loss_pair(m_s, pred_s, m_t, pred_t) -> torch.Tensor:
    return mask_loss(m_s, pred_s) + mask_loss(m_t, pred_t)


def perceptual_loss(img: torch.Tensor, img_pred: torch.Tensor, encoder) -> torch.Tensor:
    """L2 norm of the encoder-feature difference between two images."""
    return torch.linalg.norm(encoder(img) - encoder(img_pred))


def perceptual_loss_pair(i_s, p_s, i_t, p_t, encoder) -> torch.Tensor:
    return perceptual_loss(i_s, p_s, encoder) + perceptual_loss(i_t, p_t, encoder)


def keypoint_loss(
    p: torch.Tensor, p_s: torch.Tensor, p_t: torch.Tensor, lam: float = 1.0
) -> torch.Tensor:
    """(1 / 2N) sum_i (||p_i - pS_i|| + lam * ||p_i - pT_i||), Euclidean per point."""
    if not (p.shape == p_s.shape == p_t.shape):
        raise ValueError("keypoint sets must share shape")
    n = p.shape[0]
    d_s = torch.linalg.norm(p - p_s, dim=1)
    d_t = torch.linalg.norm(p - p_t, dim=1)
    return (d_s + lam * d_t).sum() / (2.0 * n)


def shape_total(
    mask: torch.Tensor,
    perceptual: torch.Tensor,
    keypoint: torch.Tensor,
    laplacian: torch.Tensor,
    edge: torch.Tensor,
    weights: LossWeights = LossWeights(),
) -> tuple[torch.Tensor, LossReport]:
    total = (
        weights.mask * mask
        + weights.perceptual * perceptual
        + weights.keypoint * keypoint
        + weights.laplacian * laplacian
        + weights.edge * edge
    )
    report = LossReport(
        components={
            "mask": _scalar(mask),
            "perceptual": _scalar(perceptual),
            "keypoint": _scalar(keypoint),
            "laplacian": _scalar(laplacian),
            "edge": _scalar(edge),
        },
        total=_scalar(total),
    )
    return total, report


def style_loss(out_feat: torch.Tensor, styled_feat: torch.Tensor, mask_ds, epsilon=1e-5):
    """L2 distance between per-part masked (mu, sigma) of output and stylized features."""
    loss = out_feat.sum() * 0.0
    for i in SEMANTIC_PARTS:
        part = torch.from_numpy(part_one_hot(mask_ds, i)).to(out_feat.dtype)
        try:
            mu_o, sig_o = masked_moments(out_feat, part, epsilon)
            mu_t, sig_t = masked_moments(styled_feat, part, epsilon)
        except EmptyPart:
            continue
        loss = loss + ((mu_o - mu_t) ** 2).sum() + ((sig_o - sig_t) ** 2).sum()
    return loss


def content_loss(out_feat: torch.Tensor, styled_feat: torch.Tensor) -> torch.Tensor:
    return ((out_feat - styled_feat) ** 2).mean()


def texture_total(style, content, weights: LossWeights = LossWeights()):
    total = weights.style * style + weights.content * content
    report = LossReport(
        components={"style": _scalar(style), "content": _scalar(content)}, total=_scalar(total)
    )
    return total, report
