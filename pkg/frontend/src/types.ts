/** Wire types for the detect/match service (mirrors the JSON bodies). */

export interface EchoedParameters {
  scales_per_octave: number;
  sigma0: number;
  assumed_blur: number;
  upsample: boolean;
  num_octaves: number | null;
  contrast_threshold: number;
  edge_ratio: number;
  border: number;
  max_refine_steps: number;
  ratio_threshold?: number;
}

export interface WireKeypoint {
  x: number;
  y: number;
  sigma: number;
  orientation: number;
  response: number;
}

export interface DetectResponse {
  image_width: number;
  image_height: number;
  parameters: EchoedParameters;
  keypoints: WireKeypoint[];
  descriptors: number[][];
}

export interface ImageSummary {
  width: number;
  height: number;
  keypoints: number;
}

export interface WireMatch {
  index_a: number;
  index_b: number;
  distance: number;
  ratio: number;
}

export interface MatchResponse {
  image_a: ImageSummary;
  image_b: ImageSummary;
  parameters: EchoedParameters;
  matches: WireMatch[];
}

export interface HealthResponse {
  status: string;
  version: string;
}

/** The subset of detector parameters exposed as controls. */
export interface DetectorParams {
  contrast_threshold: number;
  edge_ratio: number;
  scales_per_octave: number;
  upsample: boolean;
  sigma0: number;
}

export const DEFAULT_PARAMS: DetectorParams = {
  contrast_threshold: 0.03,
  edge_ratio: 10,
  scales_per_octave: 3,
  upsample: true,
  sigma0: 1.6,
};
