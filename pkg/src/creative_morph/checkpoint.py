"""Versioned checkpoint container for the model bundle and training state."""

from __future__ import annotations

from dataclasses import dataclass

import torch

from .shape_gen import ShapeGenerator
from .texture_style import TextureDecoder, TextureEncoder

FORMAT_VERSION = 1


class CheckpointError(ValueError):
    pass


@dataclass
class ModelBundle:
    """All trainable parameters plus the hyperparameters that shape them."""

    dim: int
    layers: int
    n_left: int
    channels: int
    seed: int
    shape_gen: ShapeGenerator
    texture_encoder: TextureEncoder
    texture_decoder: TextureDecoder
    iteration: int = 0

    @classmethod
    def create(cls, dim: int, layers: int, n_left: int, channels: int, seed: int):
        torch.manual_seed(seed)
        return cls(
            dim=dim,
            layers=layers,
            n_left=n_left,
            channels=channels,
            seed=seed,
            shape_gen=ShapeGenerator(dim, layers, n_left),
            texture_encoder=TextureEncoder(channels),
            texture_decoder=TextureDecoder(channels),
        )

    def manifest(self) -> dict:
        return {
            "format_version": FORMAT_VERSION,
            "dim": self.dim,
            "layers": self.layers,
            "n_left": self.n_left,
            "channels": self.channels,
            "seed": self.seed,
            "iteration": self.iteration,
        }


def save_checkpoint(bundle: ModelBundle, path, extra: dict | None = None) -> None:
    payload = {
        "manifest": bundle.manifest(),
        "shape_gen": bundle.shape_gen.state_dict(),
        "texture_encoder": bundle.texture_encoder.state_dict(),
        "texture_decoder": bundle.texture_decoder.state_dict(),
        "extra": extra or {},
    }
    torch.save(payload, path)


def load_checkpoint(path, expect: dict | None = None) -> tuple[ModelBundle, dict]:
    try:
        payload = torch.load(path, weights_only=False)
    except Exception as exc:
        raise CheckpointError(f"cannot read checkpoint {path}: {exc}") from exc
    man = payload.get("manifest")
    if not man or man.get("format_version") != FORMAT_VERSION:
        raise CheckpointError(f"unsupported checkpoint format in {path}")
    if expect:
        for key, val in expect.items():
            if man.get(key) != val:
                raise CheckpointError(
                    f"checkpoint {key}={man.get(key)} does not match configured {val}"
                )
    bundle = ModelBundle.create(
        man["dim"], man["layers"], man["n_left"], man["channels"], man["seed"]
    )
    bundle.iteration = man["iteration"]
    bundle.shape_gen.load_state_dict(payload["shape_gen"])
    bundle.texture_encoder.load_state_dict(payload["texture_encoder"])
    bundle.texture_decoder.load_state_dict(payload["texture_decoder"])
    return bundle, payload.get("extra", {})
