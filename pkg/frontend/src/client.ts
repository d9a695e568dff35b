import type {
  MelMatrix, Observation, ObservationPage, Policy, TrainingManifestRow,
  WhatIfResult,
} from "./types.js";

export type FetchLike = (
  input: string,
  init?: { method?: string; headers?: Record<string, string>; body?: string },
) => Promise<{ ok: boolean; status: number; json(): Promise<unknown> }>;

export class ServiceError extends Error {
  constructor(readonly status: number, detail: string) {
    super(detail);
    this.name = "ServiceError";
  }
}

/** Thin typed wrapper over the service HTTP API; every console action goes
 * through here — there is no other channel to server state. */
export class HydrowatchClient {
  constructor(
    private readonly baseUrl: string,
    private readonly fetchFn: FetchLike = fetch as unknown as FetchLike,
  ) {}

  private async request<T>(path: string, method = "GET", body?: unknown):
      Promise<T> {
    const resp = await this.fetchFn(`${this.baseUrl}${path}`, {
      method,
      headers: body === undefined ? {} : { "content-type": "application/json" },
      body: body === undefined ? undefined : JSON.stringify(body),
    });
    const payload = await resp.json() as Record<string, unknown>;
    if (!resp.ok) {
      const detail = typeof payload?.detail === "string"
        ? payload.detail : `request failed with status ${resp.status}`;
      throw new ServiceError(resp.status, detail);
    }
    return payload as T;
  }

  listObservations(opts: { flag?: "anomaly"; cursor?: number; limit?: number }
      = {}): Promise<ObservationPage> {
    const params = new URLSearchParams();
    if (opts.flag) params.set("flag", opts.flag);
    if (opts.cursor !== undefined) params.set("cursor", String(opts.cursor));
    if (opts.limit !== undefined) params.set("limit", String(opts.limit));
    const qs = params.toString();
    return this.request(`/observations${qs ? `?${qs}` : ""}`);
  }

  getObservation(id: string): Promise<Observation> {
    return this.request(`/observations/${id}`);
  }

  getMel(id: string): Promise<MelMatrix> {
    return this.request(`/observations/${id}/mel`);
  }

  audioUrl(id: string): string {
    return `${this.baseUrl}/observations/${id}/audio`;
  }

  submitLabel(id: string, label: string, operator: string):
      Promise<{ ok: boolean }> {
    return this.request(`/observations/${id}/label`, "POST",
                        { label, operator });
  }

  getPolicy(): Promise<Policy> {
    return this.request("/policy");
  }

  updatePolicy(draft: Policy): Promise<{ version: number }> {
    return this.request("/policy", "PUT", draft);
  }

  /** Replay stored observations under a draft without activating it. */
  whatIf(draft: Policy): Promise<WhatIfResult> {
    return this.request("/policy/whatif", "POST", draft);
  }

  trainingManifest(): Promise<{ samples: TrainingManifestRow[] }> {
    return this.request("/training-manifest");
  }

  eventsUrl(): string {
    return `${this.baseUrl}/events`;
  }
}
