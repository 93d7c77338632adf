/** Thin typed client over the reconstruction service HTTP API. */

export interface DatasetInfo {
  id: string;
  n_frames: number;
  wavelengths: number[];
}

export interface FrameMeta {
  dataset_id: string;
  frame_index: number;
  n_time: number;
  n_detectors: number;
  sampling_rate_hz: number;
  t0_offset_samples: number;
  file: string;
}

export interface SosGridInfo {
  min_mps: number;
  max_mps: number;
  step_mps: number;
  values: number[];
}

export interface ReconRequest {
  dataset_id: string;
  frame_index: number;
  method: string;
  sos_mps: number;
  lambda_reg?: number | null;
  session_id?: string;
  seq?: number;
}

export interface ReconResponse {
  image_b64: string;
  png_b64: string;
  residual_norm: number | null;
  elapsed_ms: number;
  sos_used: number;
  method: string;
  nx: number;
  ny: number;
}

export class ApiError extends Error {
  constructor(readonly status: number, detail: string) {
    super(detail);
  }
}

async function getJson<T>(url: string): Promise<T> {
  const res = await fetch(url);
  if (!res.ok) {
    throw new ApiError(res.status, await errorDetail(res));
  }
  return (await res.json()) as T;
}

async function errorDetail(res: Response): Promise<string> {
  try {
    const body = await res.json();
    if (body && typeof body.detail === "string") {
      return body.detail;
    }
  } catch {
    /* non-JSON error body */
  }
  return `${res.status} ${res.statusText}`;
}

export function fetchDatasets(): Promise<DatasetInfo[]> {
  return getJson("/api/datasets");
}

export function fetchFrameMeta(datasetId: string, frame: number): Promise<FrameMeta> {
  return getJson(`/api/datasets/${encodeURIComponent(datasetId)}/frames/${frame}/meta`);
}

export function fetchSosGrid(): Promise<SosGridInfo> {
  return getJson("/api/sos-grid");
}

export async function postRecon(req: ReconRequest): Promise<ReconResponse> {
  const res = await fetch("/api/recon", {
    method: "POST",
    headers: { "Content-Type": "application/json" },
    body: JSON.stringify(req),
  });
  if (!res.ok) {
    throw new ApiError(res.status, await errorDetail(res));
  }
  return (await res.json()) as ReconResponse;
}
