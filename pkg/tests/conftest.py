import numpy as np
import pytest
import torch

from creative_morph.geometry import CANONICAL_LEVEL, SymmetricTopology, build_template


@pytest.fixture(scope="session")
def canonical():
    topo, verts = build_template(CANONICAL_LEVEL)
    return topo, verts


@pytest.fixture(scope="session")
def mini():
    """Small template (level 1) for gradient checks."""
    topo, verts = build_template(1)
    return topo, verts


@pytest.fixture(scope="session")
def flat_tri_topo():
    """Single triangle lying in the symmetry plane (minimal valid topology)."""
    topo = SymmetricTopology(
        n_left=3,
        n_mirrored=0,
        n_plane=3,
        faces=np.array([[0, 1, 2]], dtype=np.int64),
        left_index_map=np.zeros(0, dtype=np.int64),
        plane_indices=np.arange(3, dtype=np.int64),
    )
    verts = torch.tensor([[0.0, 0.0, 0.0], [0.0, 1.0, 0.0], [0.0, 0.0, 2.0]], dtype=torch.float64)
    return topo, verts


def finite_diff_grad(fn, x: torch.Tensor, step: float = 1e-4) -> torch.Tensor:
    """Central finite differences of a scalar function at x."""
    x = x.detach().clone().contiguous()
    g = torch.zeros_like(x)
    flat = x.reshape(-1)
    gf = g.reshape(-1)
    for i in range(flat.numel()):
        orig = flat[i].item()
        flat[i] = orig + step
        hi = float(fn(x))
        flat[i] = orig - step
        lo = float(fn(x))
        flat[i] = orig
        gf[i] = (hi - lo) / (2 * step)
    return g


def rel_err(a: torch.Tensor, b: torch.Tensor) -> float:
    denom = max(float(a.abs().max()), float(b.abs().max()), 1e-12)
    return float((a - b).abs().max()) / denom
