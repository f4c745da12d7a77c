"""Command-line entry points (fixtures, training, transfer, sweeps, ablation, serve)."""

from __future__ import annotations

import json
import sys
from pathlib import Path

import click
import numpy as np
import torch

from .checkpoint import load_checkpoint
from .fixtures import generate_fixtures, load_fixtures
from .inference import InferencePipeline, mask_iou
from .renderer import RenderConfig, soft_silhouette
from .trainer import TrainConfig, train_shape, train_texture

CONTEXT = {"auto_envvar_prefix": "CREATIVE_MORPH"}


def _fail(message: str, code: int = 1):
    click.echo(json.dumps({"error": message}), err=True)
    sys.exit(code)


def _parse_gates(text: str):
    parts = text.split(",")
    if len(parts) != 4 or any(p not in ("0", "1") for p in parts):
        _fail(f"--sg must be four comma-separated 0/1 flags, got {text!r}", 2)
    return tuple(p == "1" for p in parts)


def _load_sample(path: str):
    """A sample is addressed as FIXTURE_DIR/sample_id."""
    p = Path(path)
    samples = load_fixtures(p.parent)
    for s in samples:
        if s.sample_id == p.name:
            return s
    _fail(f"unknown sample {p.name} in {p.parent}", 2)


@click.group(context_settings=CONTEXT)
def main():
    """Single-view 3D style transfer toolkit."""


@main.group()
def fixtures():
    """Synthetic fixture sets."""


@fixtures.command("generate")
@click.option("--n", type=int, required=True)
@click.option("--seed", type=int, default=0, show_default=True)
@click.option("--out", "out_dir", type=click.Path(), required=True)
def fixtures_generate(n, seed, out_dir):
    if n < 1:
        _fail("--n must be >= 1", 2)
    path = generate_fixtures(n, seed, out_dir)
    click.echo(f"wrote {n} samples to {path}")


@main.group()
def train():
    """Train a pipeline stage."""


def _train_config(config, overrides, stage):
    kv = {}
    for item in overrides:
        if "=" not in item:
            _fail(f"--override expects k=v, got {item!r}", 2)
        k, v = item.split("=", 1)
        kv[k] = v
    try:
        cfg = TrainConfig.from_json(config, kv)
    except (OSError, ValueError, AttributeError, TypeError) as exc:
        _fail(f"bad config: {exc}", 2)
    return cfg


@train.command("shape")
@click.option("--config", type=click.Path(exists=True), required=True)
@click.option("--override", multiple=True)
@click.option("--resume", type=click.Path(exists=True), default=None)
def train_shape_cmd(config, override, resume):
    cfg = _train_config(config, override, "shape")
    fx = load_fixtures(cfg.fixture_dir)
    log_path = Path(cfg.out_dir) / "shape_log.jsonl"
    Path(cfg.out_dir).mkdir(parents=True, exist_ok=True)
    _bundle, log = train_shape(cfg, fx, resume_from=resume, log_path=log_path)
    click.echo(f"final: {json.dumps(log[-1]) if log else 'no iterations'}")


@train.command("texture")
@click.option("--config", type=click.Path(exists=True), required=True)
@click.option("--override", multiple=True)
@click.option("--resume", type=click.Path(exists=True), default=None)
def train_texture_cmd(config, override, resume):
    cfg = _train_config(config, override, "texture")
    fx = load_fixtures(cfg.fixture_dir)
    log_path = Path(cfg.out_dir) / "texture_log.jsonl"
    Path(cfg.out_dir).mkdir(parents=True, exist_ok=True)
    _bundle, log = train_texture(cfg, fx, resume_from=resume, log_path=log_path)
    click.echo(f"final: {json.dumps(log[-1]) if log else 'no iterations'}")


@main.command()
@click.option("--source", required=True)
@click.option("--target", required=True)
@click.option("--alpha", type=float, default=0.0, show_default=True)
@click.option("--sg", default="0,0,0,0", show_default=True)
@click.option("--method", default="sadain", show_default=True)
@click.option("--checkpoint", "ckpt", type=click.Path(exists=True), required=True)
@click.option("--seed", type=int, default=None)
@click.option("--out", "out_dir", type=click.Path(), required=True)
def transfer(source, target, alpha, sg, method, ckpt, seed, out_dir):
    """Generate mesh.obj, texture.png, render.png, silhouette.png, report.json."""
    if abs(alpha) > 1.0:
        _fail(f"alpha must lie in [-1, 1], got {alpha}", 2)
    if method not in ("sadain", "slst", "sefdm"):
        _fail(f"unknown method {method!r}", 2)
    gates = _parse_gates(sg)
    bundle, _ = load_checkpoint(ckpt)
    pipe = InferencePipeline(bundle)
    result = pipe.transfer(
        _load_sample(source), _load_sample(target), alpha, gates, method, seed
    )
    paths = pipe.write_outputs(result, out_dir)
    click.echo(json.dumps(paths))


@main.command("sweep-alpha")
@click.option("--source", required=True)
@click.option("--target", required=True)
@click.option("--steps", type=int, default=9, show_default=True)
@click.option("--checkpoint", "ckpt", type=click.Path(exists=True), required=True)
@click.option("--method", default="sadain", show_default=True)
@click.option("--out", "out_dir", type=click.Path(), required=True)
def sweep_alpha(source, target, steps, ckpt, method, out_dir):
    """Render the alpha interpolation strip from -1 to 1."""
    if steps < 2:
        _fail("--steps must be >= 2", 2)
    bundle, _ = load_checkpoint(ckpt)
    pipe = InferencePipeline(bundle)
    src = _load_sample(source)
    tgt = _load_sample(target)
    out = Path(out_dir)
    out.mkdir(parents=True, exist_ok=True)
    rows = []
    for i, alpha in enumerate(np.linspace(-1.0, 1.0, steps)):
        result = pipe.transfer(src, tgt, float(alpha), method=method)
        from .renderer import save_image_png

        save_image_png(result.render.numpy(), out / f"alpha_{i:02d}.png")
        kp = result.mesh[torch.from_numpy(src.keypoint_indices)]
        rows.append({"step": i, "alpha": float(alpha), "keypoints": kp.tolist()})
    with open(out / "sweep.json", "w") as fh:
        json.dump(rows, fh, indent=1)
    click.echo(f"wrote {steps} renders to {out}")


@main.command("ablate-drgnet")
@click.option("--layers", "layers_csv", default="1,2,4,8", show_default=True)
@click.option("--config", type=click.Path(exists=True), required=True)
@click.option("--out", "out_path", type=click.Path(), default=None)
def ablate_drgnet(layers_csv, config, out_path):
    """Train per gate-unit depth and report reconstruction mask IoU on the fixture set."""
    try:
        depths = [int(x) for x in layers_csv.split(",")]
        if any(d < 1 for d in depths):
            raise ValueError
    except ValueError:
        _fail(f"--layers must be comma-separated positive ints, got {layers_csv!r}", 2)
    base = _train_config(config, (), "shape")
    fx = load_fixtures(base.fixture_dir)
    table = []
    for depth in depths:
        from dataclasses import replace

        cfg = replace(base, layers=depth, out_dir=f"{base.out_dir}/ablate_L{depth}")
        bundle, log = train_shape(cfg, fx)
        pipe = InferencePipeline(bundle)
        ious = []
        for f in fx:
            result = pipe.transfer(f, f, alpha=0.0)
            sil = soft_silhouette(
                result.mesh.double(), pipe.topo, f.pose,
                RenderConfig(resolution=f.silhouette.shape[0]),
            )
            ious.append(mask_iou(sil.numpy(), f.silhouette))
        table.append(
            {"layers": depth, "mask_iou": float(np.mean(ious)), "final_loss": log[-1]["total"]}
        )
    text = json.dumps({"rows": table}, indent=1)
    if out_path:
        Path(out_path).write_text(text)
    click.echo(text)


@main.command()
@click.option("--checkpoint", "ckpt", type=click.Path(exists=True), required=True)
@click.option("--assets", "assets_dir", type=click.Path(exists=True), required=True)
@click.option("--port", type=int, default=8000, show_default=True)
@click.option("--host", default="127.0.0.1", show_default=True)
@click.option("--static", "static_dir", type=click.Path(exists=True), default=None,
              help="Directory of studio UI assets to host at /")
def serve(ckpt, assets_dir, port, host, static_dir):
    """Run the inference HTTP service for the studio UI."""
    import uvicorn

    from .service import create_app

    app = create_app(ckpt, assets_dir, static_dir=static_dir)
    uvicorn.run(app, host=host, port=port, log_level="warning")


if __name__ == "__main__":
    main()
