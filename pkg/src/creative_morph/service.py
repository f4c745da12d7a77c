"""Inference HTTP service: assets, transfer, mesh downloads."""

from __future__ import annotations

import base64
import hashlib
import io
import threading
import time
import uuid

import numpy as np
from fastapi import FastAPI, HTTPException
from fastapi.middleware.cors import CORSMiddleware
from fastapi.responses import Response
from pydantic import BaseModel, Field, field_validator

from .checkpoint import load_checkpoint
from .fixtures import load_fixtures
from .inference import InferencePipeline


class TransferRequest(BaseModel):
    source_id: str
    target_id: str
    alpha: float = Field(default=0.0, ge=-1.0, le=1.0)
    switch_gates: list[bool] = Field(default_factory=lambda: [False] * 4)
    texture_method: str = "sadain"
    seed: int | None = None

    @field_validator("switch_gates")
    @classmethod
    def _four_gates(cls, v):
        if len(v) != 4:
            raise ValueError("switch_gates must have exactly 4 entries")
        return v

    @field_validator("texture_method")
    @classmethod
    def _known_method(cls, v):
        if v not in ("sadain", "slst", "sefdm"):
            raise ValueError(f"unknown texture method {v!r}")
        return v


def _png_bytes(values: np.ndarray) -> bytes:
    from PIL import Image

    arr = (np.clip(values, 0, 1) * 255.0 + 0.5).astype(np.uint8)[::-1]
    buf = io.BytesIO()
    Image.fromarray(arr).save(buf, format="PNG")
    return buf.getvalue()


def create_app(checkpoint_path, assets_dir, static_dir=None) -> FastAPI:
    bundle, _ = load_checkpoint(checkpoint_path)
    samples = {s.sample_id: s for s in load_fixtures(assets_dir)}
    pipeline = InferencePipeline(bundle)
    meshes: dict[str, str] = {}  # job id -> OBJ text
    lock = threading.Lock()

    app = FastAPI(title="creative-morph inference service")
    # the studio frontend may be hosted on a different origin than the API
    app.add_middleware(
        CORSMiddleware, allow_origins=["*"], allow_methods=["*"], allow_headers=["*"]
    )

    @app.get("/api/health")
    def health():
        return {"status": "ok", "checkpoint": str(checkpoint_path)}

    @app.get("/api/assets")
    def assets():
        return [
            {"id": sid, "thumbnail_url": f"/api/thumbnail/{sid}.png"}
            for sid in sorted(samples)
        ]

    @app.get("/api/thumbnail/{asset_id}.png")
    def thumbnail(asset_id: str):
        if asset_id not in samples:
            raise HTTPException(404, f"unknown asset {asset_id!r}")
        return Response(_png_bytes(samples[asset_id].image), media_type="image/png")

    responses: dict[str, dict] = {}  # seeded requests replay byte-identically

    @app.post("/api/transfer")
    def transfer(req: TransferRequest):
        for key in (req.source_id, req.target_id):
            if key not in samples:
                raise HTTPException(404, f"unknown asset {key!r}")
        digest = hashlib.sha256(
            f"{req.source_id}|{req.target_id}|{req.alpha}|{req.switch_gates}|"
            f"{req.texture_method}|{req.seed}".encode()
        ).hexdigest()[:16]
        if req.seed is not None:
            with lock:
                cached = responses.get(digest)
            if cached is not None:
                return cached
        t0 = time.perf_counter()
        result = pipeline.transfer(
            samples[req.source_id],
            samples[req.target_id],
            alpha=req.alpha,
            switch_gates=tuple(req.switch_gates),
            method=req.texture_method,
            seed=req.seed,
        )
        import os
        import tempfile

        from .geometry import export_obj

        fd, tmp_path = tempfile.mkstemp(suffix=".obj")
        os.close(fd)
        try:
            export_obj(result.mesh, pipeline.topo, tmp_path, uv=pipeline.uv_coords.numpy())
            with open(tmp_path) as fh:
                obj_text = fh.read()
        finally:
            os.unlink(tmp_path)

        job_id = digest if req.seed is not None else uuid.uuid4().hex[:16]
        payload = {
            "render_png_b64": base64.b64encode(_png_bytes(result.render.numpy())).decode(),
            "texture_png_b64": base64.b64encode(_png_bytes(result.texture.numpy())).decode(),
            "mesh_url": f"/api/mesh/{job_id}.obj",
            "alpha": req.alpha,
            "gates": req.switch_gates,
            "method": req.texture_method,
            "timing_ms": round((time.perf_counter() - t0) * 1000.0, 1),
        }
        with lock:
            meshes[job_id] = obj_text
            if req.seed is not None:
                responses[digest] = payload
        return payload

    @app.get("/api/mesh/{job_id}.obj")
    def mesh(job_id: str):
        with lock:
            body = meshes.get(job_id)
        if body is None:
            raise HTTPException(404, "unknown mesh job")
        return Response(body, media_type="text/plain")

    if static_dir is not None:
        from fastapi.staticfiles import StaticFiles

        app.mount("/", StaticFiles(directory=static_dir, html=True), name="studio")

    return app
