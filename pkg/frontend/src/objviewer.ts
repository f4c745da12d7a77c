/** Minimal OBJ parsing and canvas wireframe viewer with orbit/zoom. */

export interface ParsedMesh {
  vertices: Float32Array; // xyz triples
  faces: Uint32Array; // vertex index triples, 0-based
}

export function parseObj(text: string): ParsedMesh {
  const vertices: number[] = [];
  const faces: number[] = [];
  for (const raw of text.split("\n")) {
    const parts = raw.trim().split(/\s+/);
    if (parts[0] === "v") {
      if (parts.length < 4) throw new Error(`malformed vertex line: ${raw}`);
      for (let i = 1; i <= 3; i++) {
        const value = Number(parts[i]);
        if (!Number.isFinite(value)) throw new Error(`bad coordinate: ${raw}`);
        vertices.push(value);
      }
    } else if (parts[0] === "f") {
      if (parts.length < 4) throw new Error(`malformed face line: ${raw}`);
      for (let i = 1; i <= 3; i++) {
        const index = Number(parts[i]!.split("/")[0]) - 1;
        if (!Number.isInteger(index) || index < 0) throw new Error(`bad face index: ${raw}`);
        faces.push(index);
      }
    }
  }
  if (vertices.length === 0 || faces.length === 0) {
    throw new Error("OBJ contains no geometry");
  }
  const nVerts = vertices.length / 3;
  for (const f of faces) {
    if (f >= nVerts) throw new Error(`face index ${f + 1} out of range`);
  }
  return { vertices: new Float32Array(vertices), faces: new Uint32Array(faces) };
}

export interface ViewAngles {
  yaw: number;
  pitch: number;
  zoom: number;
}

/** Rotate + weak-perspective project a vertex for the wireframe preview. */
export function projectVertex(
  x: number,
  y: number,
  z: number,
  view: ViewAngles,
): [number, number] {
  const cy = Math.cos(view.yaw);
  const sy = Math.sin(view.yaw);
  const cp = Math.cos(view.pitch);
  const sp = Math.sin(view.pitch);
  const rx = cy * x + sy * z;
  const rz = -sy * x + cy * z;
  const ry = cp * y - sp * rz;
  return [rx * view.zoom, ry * view.zoom];
}

export class ObjViewer {
  view: ViewAngles = { yaw: 0.6, pitch: 0.3, zoom: 0.8 };
  private mesh: ParsedMesh | null = null;
  private dragging = false;
  private lastX = 0;
  private lastY = 0;

  constructor(private readonly canvas: HTMLCanvasElement) {
    canvas.addEventListener("pointerdown", (e) => {
      this.dragging = true;
      this.lastX = e.clientX;
      this.lastY = e.clientY;
    });
    canvas.addEventListener("pointerup", () => (this.dragging = false));
    canvas.addEventListener("pointerleave", () => (this.dragging = false));
    canvas.addEventListener("pointermove", (e) => {
      if (!this.dragging) return;
      this.view.yaw += (e.clientX - this.lastX) * 0.01;
      this.view.pitch += (e.clientY - this.lastY) * 0.01;
      this.lastX = e.clientX;
      this.lastY = e.clientY;
      this.draw();
    });
    canvas.addEventListener("wheel", (e) => {
      e.preventDefault();
      this.view.zoom *= e.deltaY < 0 ? 1.1 : 0.9;
      this.draw();
    });
  }

  setMesh(mesh: ParsedMesh): void {
    this.mesh = mesh;
    this.draw();
  }

  draw(): void {
    const ctx = this.canvas.getContext("2d");
    if (!ctx || !this.mesh) return;
    const { width, height } = this.canvas;
    ctx.clearRect(0, 0, width, height);
    ctx.strokeStyle = "#3c6e71";
    ctx.lineWidth = 0.5;
    const half = Math.min(width, height) / 2;
    const v = this.mesh.vertices;
    const project = (i: number): [number, number] => {
      const [px, py] = projectVertex(v[3 * i]!, v[3 * i + 1]!, v[3 * i + 2]!, this.view);
      return [width / 2 + px * half, height / 2 - py * half];
    };
    const f = this.mesh.faces;
    ctx.beginPath();
    for (let t = 0; t < f.length; t += 3) {
      const a = project(f[t]!);
      const b = project(f[t + 1]!);
      const c = project(f[t + 2]!);
      ctx.moveTo(a[0], a[1]);
      ctx.lineTo(b[0], b[1]);
      ctx.lineTo(c[0], c[1]);
      ctx.closePath();
    }
    ctx.stroke();
  }
}
