"""Shape transfer generator: image encoder, stacked dual residual gate units, scale mixing, MLP head."""

from __future__ import annotations

from dataclasses import dataclass

import torch
from torch import nn

from .geometry import SymmetricTopology, expand_symmetric


@dataclass
class TransferControls:
    alpha: float = 0.0
    training: bool = False

    def __post_init__(self):
        if abs(self.alpha) > 1.0:
            raise ValueError("alpha must lie in [-1, 1]")


class ImageEncoder(nn.Module):
    """Small trainable conv encoder: H x W x 3 image in [0, 1] -> D-vector."""

    def __init__(self, dim: int):
        super().__init__()
        self.dim = dim
        chans = [3, 16, 32, 32, 64, 64]
        layers = []
        for cin, cout in zip(chans[:-1], chans[1:]):
            layers += [nn.Conv2d(cin, cout, 3, stride=2, padding=1), nn.ReLU()]
        self.conv = nn.Sequential(*layers)
        self.fc = nn.Linear(chans[-1], dim)

    def forward(self, images: torch.Tensor) -> torch.Tensor:
        """images: (B, H, W, 3) or (H, W, 3); returns (B, D) or (D,)."""
        single = images.ndim == 3
        if single:
            images = images[None]
        if images.shape[-1] != 3:
            raise ValueError(f"expected channel-last RGB images, got {tuple(images.shape)}")
        x = images.permute(0, 3, 1, 2)
        x = self.conv(x).mean(dim=(2, 3))
        out = self.fc(x)
        return out[0] if single else out


class GateUnit(nn.Module):
    """One dual residual gate unit.

    g = sigmoid(W [F_S, F_T]); each branch adds ReLU(BN(W_b (F_b * g)))
    back onto its input. The gate projection carries a bias; branch linears
    rely on the batch-norm shift.
    """

    def __init__(self, dim: int):
        super().__init__()
        self.gate = nn.Linear(2 * dim, dim)
        self.w_s = nn.Linear(dim, dim, bias=False)
        self.w_t = nn.Linear(dim, dim, bias=False)
        self.bn_s = nn.BatchNorm1d(dim, momentum=0.1)
        self.bn_t = nn.BatchNorm1d(dim, momentum=0.1)

    def forward(self, f_s: torch.Tensor, f_t: torch.Tensor):
        g = torch.sigmoid(self.gate(torch.cat([f_s, f_t], dim=-1)))
        f_s = f_s + torch.relu(self.bn_s(self.w_s(f_s * g)))
        f_t = f_t + torch.relu(self.bn_t(self.w_t(f_t * g)))
        return f_s, f_t


class DRGNet(nn.Module):
    """L stacked gate units refining source/target features in parallel."""

    def __init__(self, dim: int, layers: int):
        super().__init__()
        if layers < 1:
            raise ValueError("need at least one gate unit")
        self.units = nn.ModuleList(GateUnit(dim) for _ in range(layers))

    def forward(self, f_s: torch.Tensor, f_t: torch.Tensor):
        for unit in self.units:
            f_s, f_t = unit(f_s, f_t)
        return f_s, f_t


def apply_scale(f_s: torch.Tensor, f_t: torch.Tensor, controls: TransferControls):
    """Blend refined features: [(1 - alpha) F_S, (1 + alpha) F_T].

    During training both multipliers are fixed to one.
    """
    if controls.training:
        return f_s, f_t
    a = controls.alpha
    return (1.0 - a) * f_s, (1.0 + a) * f_t


class MLPHead(nn.Module):
    """Two ReLU layers then a linear map to per-vertex offsets (3 x n_left)."""

    def __init__(self, dim: int, n_left: int):
        super().__init__()
        self.n_left = n_left
        self.f1 = nn.Linear(2 * dim, dim, bias=False)
        self.f2 = nn.Linear(dim, dim, bias=False)
        self.out = nn.Linear(dim, 3 * n_left, bias=False)

    def forward(self, f_s: torch.Tensor, f_t: torch.Tensor) -> torch.Tensor:
        h = torch.relu(self.f1(torch.cat([f_s, f_t], dim=-1)))
        h = torch.relu(self.f2(h))
        o = self.out(h)
        return o.reshape(*o.shape[:-1], 3, self.n_left)


class ShapeGenerator(nn.Module):
    """Full shape branch: images -> features -> DRGNet -> head -> offsets."""

    def __init__(self, dim: int, layers: int, n_left: int, offset_scale: float = 0.1):
        super().__init__()
        self.encoder = ImageEncoder(dim)
        self.drgnet = DRGNet(dim, layers)
        self.head = MLPHead(dim, n_left)
        self.offset_scale = offset_scale

    def offsets(self, src_img: torch.Tensor, tgt_img: torch.Tensor, controls: TransferControls):
        """Batched offsets (B, 3, n_left) from (B, H, W, 3) image pairs."""
        f_s = self.encoder(src_img)
        f_t = self.encoder(tgt_img)
        f_s, f_t = self.drgnet(f_s, f_t)
        f_s, f_t = apply_scale(f_s, f_t, controls)
        return self.head(f_s, f_t) * self.offset_scale


def generate_shape(
    src_img: torch.Tensor,
    tgt_img: torch.Tensor,
    generator: ShapeGenerator,
    topo: SymmetricTopology,
    template: torch.Tensor,
    controls: TransferControls,
) -> torch.Tensor:
    """Generate the full symmetric mesh for one image pair (inference path)."""
    generator.eval()
    with torch.no_grad():
        off = generator.offsets(src_img[None], tgt_img[None], controls)[0]
    half = template[: topo.n_left].T.to(off.dtype) + off
    return expand_symmetric(half, topo)
