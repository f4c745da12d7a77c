/** Mocked API fixtures shared by the contract tests. */

import type { FetchLike, TransferRequest, TransferResponse } from "../src/api.js";

// 1x1 transparent PNG
export const TINY_PNG_B64 =
  "iVBORw0KGgoAAAANSUhEUgAAAAEAAAABCAYAAAAfFcSJAAAADUlEQVR42mP8z8BQDwAEhQGAhKmMIQAAAABJRU5ErkJggg==";

export const SAMPLE_OBJ = [
  "v 0.0 0.0 0.0",
  "v 1.0 0.0 0.0",
  "v 0.0 1.0 0.0",
  "v 0.0 0.0 1.0",
  "vt 0.0 0.0",
  "f 1/1 2/1 3/1",
  "f 1/1 3/1 4/1",
].join("\n");

export const ASSETS = [
  { id: "sample_000", thumbnail_url: "/api/thumbnail/sample_000.png" },
  { id: "sample_001", thumbnail_url: "/api/thumbnail/sample_001.png" },
];

export function transferResponseFor(request: TransferRequest): TransferResponse {
  return {
    render_png_b64: TINY_PNG_B64,
    texture_png_b64: TINY_PNG_B64,
    mesh_url: `/api/mesh/job-${request.alpha}.obj`,
    alpha: request.alpha,
    gates: request.switch_gates,
    method: request.texture_method,
    timing_ms: 12.5,
  };
}

export interface MockServer {
  fetch: FetchLike;
  transfers: TransferRequest[];
  meshText: string;
  failMesh: boolean;
}

/** In-memory stand-in for the inference service, recording transfer payloads. */
export function mockServer(): MockServer {
  const server: MockServer = {
    transfers: [],
    meshText: SAMPLE_OBJ,
    failMesh: false,
    fetch: async (url, init) => {
      const path = url.replace(/^https?:\/\/[^/]+/, "");
      if (path === "/api/health") {
        return jsonResponse({ status: "ok" });
      }
      if (path === "/api/assets") {
        return jsonResponse(ASSETS);
      }
      if (path === "/api/transfer" && init?.method === "POST") {
        const request = JSON.parse(String(init.body)) as TransferRequest;
        server.transfers.push(request);
        return jsonResponse(transferResponseFor(request));
      }
      if (path.startsWith("/api/mesh/")) {
        if (server.failMesh) return new Response("gone", { status: 404 });
        return new Response(server.meshText, { status: 200 });
      }
      return new Response("not found", { status: 404 });
    },
  };
  return server;
}

function jsonResponse(body: unknown): Response {
  return new Response(JSON.stringify(body), {
    status: 200,
    headers: { "Content-Type": "application/json" },
  });
}

export const flush = (): Promise<void> => new Promise((resolve) => setTimeout(resolve, 0));
