/** Studio state: current controls, last result, append-only history. */

import type { TransferRequest, TransferResponse } from "./api.js";

export interface Controls {
  sourceId: string | null;
  targetId: string | null;
  alpha: number;
  gates: [boolean, boolean, boolean, boolean];
  method: "sadain" | "slst" | "sefdm";
  seed: number | null;
}

export interface HistoryEntry {
  request: TransferRequest;
  response: TransferResponse;
}

export const GATE_LABELS = ["head", "neck", "belly", "back"] as const;

export const clampAlpha = (alpha: number): number =>
  Math.min(1, Math.max(-1, alpha));

export function defaultControls(): Controls {
  return {
    sourceId: null,
    targetId: null,
    alpha: 0,
    gates: [false, false, false, false],
    method: "sadain",
    seed: null,
  };
}

/** Controls -> outbound request payload; null asset selections are a caller error. */
export function toRequest(controls: Controls): TransferRequest {
  if (controls.sourceId === null || controls.targetId === null) {
    throw new Error("select a source and a target asset first");
  }
  return {
    source_id: controls.sourceId,
    target_id: controls.targetId,
    alpha: clampAlpha(controls.alpha),
    switch_gates: [...controls.gates],
    texture_method: controls.method,
    seed: controls.seed,
  };
}

/** Request payload -> controls, for history replay. */
export function fromRequest(request: TransferRequest): Controls {
  return {
    sourceId: request.source_id,
    targetId: request.target_id,
    alpha: request.alpha,
    gates: [
      request.switch_gates[0] ?? false,
      request.switch_gates[1] ?? false,
      request.switch_gates[2] ?? false,
      request.switch_gates[3] ?? false,
    ],
    method: request.texture_method,
    seed: request.seed,
  };
}

export class StudioStore {
  controls: Controls = defaultControls();
  lastResponse: TransferResponse | null = null;
  private readonly entries: HistoryEntry[] = [];
  private listeners: Array<() => void> = [];

  get history(): readonly HistoryEntry[] {
    return this.entries;
  }

  subscribe(listener: () => void): () => void {
    this.listeners.push(listener);
    return () => {
      this.listeners = this.listeners.filter((l) => l !== listener);
    };
  }

  private emit(): void {
    for (const listener of this.listeners) listener();
  }

  update(patch: Partial<Controls>): void {
    if (patch.alpha !== undefined) patch = { ...patch, alpha: clampAlpha(patch.alpha) };
    this.controls = { ...this.controls, ...patch };
    this.emit();
  }

  toggleGate(index: 0 | 1 | 2 | 3): void {
    const gates = [...this.controls.gates] as Controls["gates"];
    gates[index] = !gates[index];
    this.update({ gates });
  }

  recordResult(request: TransferRequest, response: TransferResponse): void {
    this.lastResponse = response;
    this.entries.push({ request, response });
    this.emit();
  }

  /** Restore the controls of a past entry exactly (what-if replay). */
  restore(index: number): void {
    const entry = this.entries[index];
    if (!entry) throw new Error(`no history entry ${index}`);
    this.controls = fromRequest(entry.request);
    this.lastResponse = entry.response;
    this.emit();
  }
}
