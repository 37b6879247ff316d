/** Thin fetch client for GET /health, POST /v1/detect, POST /v1/match. */

import type {
  DetectResponse,
  DetectorParams,
  HealthResponse,
  MatchResponse,
} from "./types.js";

export class ServiceError extends Error {
  constructor(
    readonly status: number,
    readonly code: string,
    message: string,
  ) {
    super(message);
    this.name = "ServiceError";
  }
}

export interface Timed<T> {
  body: T;
  timingMs: number | null;
}

async function throwServiceError(resp: Response): Promise<never> {
  let code = "unknown";
  let message = `HTTP ${resp.status}`;
  try {
    const doc = await resp.json();
    if (typeof doc.code === "string") code = doc.code;
    if (typeof doc.message === "string") message = doc.message;
  } catch {
    // non-JSON error body; keep the generic message
  }
  throw new ServiceError(resp.status, code, message);
}

function readTiming(resp: Response): number | null {
  const raw = resp.headers.get("X-Timing-Ms");
  if (raw === null) return null;
  const value = Number(raw);
  return Number.isFinite(value) ? value : null;
}

function appendParams(form: FormData, params: DetectorParams): void {
  form.append("contrast_threshold", String(params.contrast_threshold));
  form.append("edge_ratio", String(params.edge_ratio));
  form.append("scales_per_octave", String(params.scales_per_octave));
  form.append("upsample", params.upsample ? "true" : "false");
  form.append("sigma0", String(params.sigma0));
}

export async function getHealth(baseUrl: string): Promise<HealthResponse> {
  const resp = await fetch(`${baseUrl}/health`);
  if (!resp.ok) await throwServiceError(resp);
  return (await resp.json()) as HealthResponse;
}

export async function postDetect(
  baseUrl: string,
  image: Blob,
  params: DetectorParams,
): Promise<Timed<DetectResponse>> {
  const form = new FormData();
  form.append("image", image, "image");
  appendParams(form, params);
  const resp = await fetch(`${baseUrl}/v1/detect`, { method: "POST", body: form });
  if (!resp.ok) await throwServiceError(resp);
  return { body: (await resp.json()) as DetectResponse, timingMs: readTiming(resp) };
}

export async function postMatch(
  baseUrl: string,
  imageA: Blob,
  imageB: Blob,
  params: DetectorParams,
  ratioThreshold: number,
): Promise<Timed<MatchResponse>> {
  const form = new FormData();
  form.append("image_a", imageA, "image_a");
  form.append("image_b", imageB, "image_b");
  appendParams(form, params);
  form.append("ratio_threshold", String(ratioThreshold));
  const resp = await fetch(`${baseUrl}/v1/match`, { method: "POST", body: form });
  if (!resp.ok) await throwServiceError(resp);
  return { body: (await resp.json()) as MatchResponse, timingMs: readTiming(resp) };
}
