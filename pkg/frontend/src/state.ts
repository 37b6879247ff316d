/** Session state and the detect/match controllers.
 *
 * The controllers own the request lifecycle: each action bumps a sequence
 * number, and a response is applied only if no newer request of the same
 * kind has been issued in the meantime (stale responses are discarded).
 * Every number the UI displays comes from a service response stored here.
 */

import { postDetect, postMatch, ServiceError } from "./api.js";
import type {
  DetectResponse,
  DetectorParams,
  EchoedParameters,
  MatchResponse,
} from "./types.js";
import { DEFAULT_PARAMS } from "./types.js";

export interface ViewOptions {
  showCircles: boolean;
  showOrientations: boolean;
  lineOpacity: number;
}

export interface SessionState {
  baseUrl: string;
  imageA: Blob | null;
  imageB: Blob | null;
  params: DetectorParams;
  ratioThreshold: number;
  view: ViewOptions;
  lastDetect: DetectResponse | null;
  lastMatch: MatchResponse | null;
  detectTimingMs: number | null;
  matchTimingMs: number | null;
  error: string | null;
  seq: { detect: number; match: number };
}

export function createState(baseUrl = ""): SessionState {
  return {
    baseUrl,
    imageA: null,
    imageB: null,
    params: { ...DEFAULT_PARAMS },
    ratioThreshold: 0.8,
    view: { showCircles: true, showOrientations: true, lineOpacity: 0.8 },
    lastDetect: null,
    lastMatch: null,
    detectTimingMs: null,
    matchTimingMs: null,
    error: null,
    seq: { detect: 0, match: 0 },
  };
}

/** Fold the service's echoed parameters back into the controls. */
export function applyEcho(params: DetectorParams, echo: EchoedParameters): DetectorParams {
  return {
    contrast_threshold: echo.contrast_threshold,
    edge_ratio: echo.edge_ratio,
    scales_per_octave: echo.scales_per_octave,
    upsample: echo.upsample,
    sigma0: echo.sigma0,
  };
}

export function displayedKeypointCount(state: SessionState): number | null {
  return state.lastDetect ? state.lastDetect.keypoints.length : null;
}

export function displayedMatchCount(state: SessionState): number | null {
  return state.lastMatch ? state.lastMatch.matches.length : null;
}

function describeError(err: unknown): string {
  if (err instanceof ServiceError) return `${err.code}: ${err.message}`;
  if (err instanceof Error) return err.message;
  return String(err);
}

/** Detect on image A; resolves to true if the response was applied. */
export async function runDetect(state: SessionState): Promise<boolean> {
  if (!state.imageA) {
    state.error = "upload an image first";
    return false;
  }
  const seq = ++state.seq.detect;
  state.error = null;
  try {
    const { body, timingMs } = await postDetect(state.baseUrl, state.imageA, state.params);
    if (seq !== state.seq.detect) return false; // superseded by a newer request
    state.lastDetect = body;
    state.detectTimingMs = timingMs;
    state.params = applyEcho(state.params, body.parameters);
    return true;
  } catch (err) {
    if (seq !== state.seq.detect) return false;
    state.error = describeError(err); // parameters and images stay untouched
    return false;
  }
}

/** Match image A against image B; resolves to true if applied. */
export async function runMatch(state: SessionState): Promise<boolean> {
  if (!state.imageA || !state.imageB) {
    state.error = "upload both images first";
    return false;
  }
  const seq = ++state.seq.match;
  state.error = null;
  try {
    const { body, timingMs } = await postMatch(
      state.baseUrl,
      state.imageA,
      state.imageB,
      state.params,
      state.ratioThreshold,
    );
    if (seq !== state.seq.match) return false;
    state.lastMatch = body;
    state.matchTimingMs = timingMs;
    state.params = applyEcho(state.params, body.parameters);
    if (body.parameters.ratio_threshold !== undefined) {
      state.ratioThreshold = body.parameters.ratio_threshold;
    }
    return true;
  } catch (err) {
    if (seq !== state.seq.match) return false;
    state.error = describeError(err);
    return false;
  }
}
