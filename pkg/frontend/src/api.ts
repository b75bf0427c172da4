/**
 * Thin client for the cloning service. The editor never computes any
 * cloning math itself; every displayed pixel comes from these calls.
 */

import type { Anchor, CloneOptions, CloneResult, SessionInfo, SplitMode } from "./types.js";

export class ServiceError extends Error {
  constructor(
    public status: number,
    public code: string,
    public detail: string,
    public hint?: string,
  ) {
    super(`${code}: ${detail}`);
  }
}

export type FetchLike = (url: string, init?: RequestInit) => Promise<Response>;

export class ServiceClient {
  constructor(
    private baseUrl: string,
    private fetchFn: FetchLike = (u, i) => fetch(u, i),
  ) {}

  private async throwServiceError(res: Response): Promise<never> {
    let code = "unknown";
    let detail = res.statusText;
    let hint: string | undefined;
    try {
      const body = await res.json();
      code = body.error ?? code;
      detail = body.detail ?? detail;
      hint = body.hint;
    } catch {
      /* non-JSON error body */
    }
    throw new ServiceError(res.status, code, detail, hint);
  }

  async createSession(
    source: Blob,
    boundary: Array<{ phi: number; theta: number }>,
    options: { split?: SplitMode; supersampling?: number } = {},
  ): Promise<SessionInfo> {
    const form = new FormData();
    form.append("source", source, "source.png");
    form.append("boundary", JSON.stringify(boundary));
    if (options.split) form.append("split", options.split);
    if (options.supersampling) form.append("supersampling", String(options.supersampling));
    const res = await this.fetchFn(`${this.baseUrl}/sessions`, {
      method: "POST",
      body: form,
    });
    if (!res.ok) await this.throwServiceError(res);
    return (await res.json()) as SessionInfo;
  }

  async uploadTarget(target: Blob): Promise<string> {
    const form = new FormData();
    form.append("file", target, "target.png");
    const res = await this.fetchFn(`${this.baseUrl}/targets`, {
      method: "POST",
      body: form,
    });
    if (!res.ok) await this.throwServiceError(res);
    return (await res.json()).target_id as string;
  }

  async clone(
    sessionId: string,
    targetId: string,
    anchor: Anchor,
    options: CloneOptions = {},
  ): Promise<CloneResult> {
    const body: Record<string, unknown> = { anchor, target_id: targetId };
    if (options.supersampling) body.supersampling = options.supersampling;
    if (options.rect) body.rect = options.rect;
    const res = await this.fetchFn(`${this.baseUrl}/sessions/${sessionId}/clone`, {
      method: "POST",
      headers: { "content-type": "application/json" },
      body: JSON.stringify(body),
    });
    if (!res.ok) await this.throwServiceError(res);
    const blob = new Uint8Array(await res.arrayBuffer());
    return {
      blob,
      timings: {
        membraneMs: Number(res.headers.get("membrane_ms") ?? "0"),
        rasterMs: Number(res.headers.get("raster_ms") ?? "0"),
      },
    };
  }

  async diagnosticsCsv(sessionId: string): Promise<string> {
    const res = await this.fetchFn(`${this.baseUrl}/sessions/${sessionId}/diagnostics`);
    if (!res.ok) await this.throwServiceError(res);
    return res.text();
  }
}
