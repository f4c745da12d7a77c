/** Typed client for the inference HTTP API, with outbound schema validation. */

import { z } from "zod";

export const TransferRequestSchema = z.object({
  source_id: z.string().min(1),
  target_id: z.string().min(1),
  alpha: z.number().min(-1).max(1),
  switch_gates: z.array(z.boolean()).length(4),
  texture_method: z.enum(["sadain", "slst", "sefdm"]),
  seed: z.number().int().nullable(),
});

export type TransferRequest = z.infer<typeof TransferRequestSchema>;

export const TransferResponseSchema = z.object({
  render_png_b64: z.string(),
  texture_png_b64: z.string(),
  mesh_url: z.string(),
  alpha: z.number(),
  gates: z.array(z.boolean()).length(4),
  method: z.string(),
  timing_ms: z.number(),
});

export type TransferResponse = z.infer<typeof TransferResponseSchema>;

export const AssetSchema = z.object({
  id: z.string(),
  thumbnail_url: z.string(),
});

export type Asset = z.infer<typeof AssetSchema>;

export type FetchLike = (url: string, init?: RequestInit) => Promise<Response>;

export class ApiError extends Error {
  constructor(readonly status: number, message: string) {
    super(message);
  }
}

export class ApiClient {
  constructor(
    private readonly baseUrl: string = "",
    private readonly fetchImpl: FetchLike = (...args) => fetch(...args),
  ) {}

  async health(): Promise<{ status: string }> {
    const res = await this.fetchImpl(`${this.baseUrl}/api/health`);
    if (!res.ok) throw new ApiError(res.status, "health check failed");
    return res.json();
  }

  async listAssets(): Promise<Asset[]> {
    const res = await this.fetchImpl(`${this.baseUrl}/api/assets`);
    if (!res.ok) throw new ApiError(res.status, "asset listing failed");
    return z.array(AssetSchema).parse(await res.json());
  }

  /** Validates the request client-side before any network traffic. */
  async transfer(request: TransferRequest): Promise<TransferResponse> {
    const body = TransferRequestSchema.parse(request);
    const res = await this.fetchImpl(`${this.baseUrl}/api/transfer`, {
      method: "POST",
      headers: { "Content-Type": "application/json" },
      body: JSON.stringify(body),
    });
    if (!res.ok) {
      throw new ApiError(res.status, `transfer failed (${res.status})`);
    }
    return TransferResponseSchema.parse(await res.json());
  }

  async fetchMesh(meshUrl: string): Promise<string> {
    const res = await this.fetchImpl(`${this.baseUrl}${meshUrl}`);
    if (!res.ok) throw new ApiError(res.status, "mesh download failed");
    return res.text();
  }
}
