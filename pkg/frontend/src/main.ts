/** DOM wiring for the single-page client.
 *
 * All numbers on screen are read from the last service response held in
 * session state; the page itself computes nothing.
 */

import { getHealth, postDetect } from "./api.js";
import { drawKeypointOverlay, drawMatchOverlay } from "./overlay.js";
import { decodePgm, isPgm } from "./pgm.js";
import {
  createState,
  displayedKeypointCount,
  displayedMatchCount,
  runDetect,
  runMatch,
} from "./state.js";
import type { WireKeypoint } from "./types.js";

const state = createState("");
const bitmaps: { a: ImageBitmap | null; b: ImageBitmap | null } = { a: null, b: null };

// keypoint geometry for the current match overlay; the match body carries
// only counts and index pairs, so geometry comes from detect responses
const matchKeypoints: { a: WireKeypoint[]; b: WireKeypoint[] } = { a: [], b: [] };

const $ = <T extends HTMLElement>(id: string) => document.getElementById(id) as T;

async function toBitmap(blob: Blob): Promise<ImageBitmap> {
  const bytes = new Uint8Array(await blob.arrayBuffer());
  if (isPgm(bytes)) {
    const { width, height, rgba } = decodePgm(bytes);
    return createImageBitmap(new ImageData(rgba, width, height));
  }
  return createImageBitmap(blob);
}

function render(): void {
  $("error").textContent = state.error ?? "";
  $("error").hidden = state.error === null;

  const kpCount = displayedKeypointCount(state);
  const detectTiming =
    state.detectTimingMs === null ? "" : ` in ${state.detectTimingMs.toFixed(1)} ms`;
  $("detect-status").textContent =
    kpCount === null ? "" : `${kpCount} keypoints${detectTiming}`;

  const matchCount = displayedMatchCount(state);
  const matchTiming =
    state.matchTimingMs === null ? "" : ` in ${state.matchTimingMs.toFixed(1)} ms`;
  $("match-status").textContent =
    matchCount === null ? "" : `${matchCount} matches${matchTiming}`;

  // round-trip: controls always show the parameters the service echoed
  ($("contrast_threshold") as HTMLInputElement).value = String(state.params.contrast_threshold);
  ($("edge_ratio") as HTMLInputElement).value = String(state.params.edge_ratio);
  ($("scales_per_octave") as HTMLInputElement).value = String(state.params.scales_per_octave);
  ($("sigma0") as HTMLInputElement).value = String(state.params.sigma0);
  ($("upsample") as HTMLInputElement).checked = state.params.upsample;
  ($("ratio_threshold") as HTMLInputElement).value = String(state.ratioThreshold);
  $("ratio-value").textContent = state.ratioThreshold.toFixed(2);

  const detectCanvas = $("detect-canvas") as HTMLCanvasElement;
  if (state.lastDetect && bitmaps.a) {
    const ctx = detectCanvas.getContext("2d")!;
    drawKeypointOverlay(ctx, bitmaps.a, state.lastDetect.keypoints, state.view);
  }
  const matchCanvas = $("match-canvas") as HTMLCanvasElement;
  if (state.lastMatch && bitmaps.a && bitmaps.b && matchKeypoints.a.length) {
    const ctx = matchCanvas.getContext("2d")!;
    drawMatchOverlay(
      ctx,
      bitmaps.a,
      bitmaps.b,
      state.lastMatch.matches,
      matchKeypoints.a,
      matchKeypoints.b,
      state.view,
    );
  }
}

function hookUpload(inputId: string, dropId: string, slot: "a" | "b"): void {
  const assign = async (file: File | null) => {
    if (!file) return;
    if (slot === "a") state.imageA = file;
    else state.imageB = file;
    try {
      bitmaps[slot] = await toBitmap(file);
      $(`${dropId}-name`).textContent = file.name;
    } catch (err) {
      state.error = `cannot preview ${file.name}: ${String(err)}`;
    }
    render();
  };
  const input = $(inputId) as HTMLInputElement;
  input.addEventListener("change", () => assign(input.files?.[0] ?? null));
  const zone = $(dropId);
  zone.addEventListener("dragover", (ev) => {
    ev.preventDefault();
    zone.classList.add("dragging");
  });
  zone.addEventListener("dragleave", () => zone.classList.remove("dragging"));
  zone.addEventListener("drop", (ev) => {
    ev.preventDefault();
    zone.classList.remove("dragging");
    assign(ev.dataTransfer?.files?.[0] ?? null);
  });
}

function readParams(): void {
  state.params = {
    contrast_threshold: Number(($("contrast_threshold") as HTMLInputElement).value),
    edge_ratio: Number(($("edge_ratio") as HTMLInputElement).value),
    scales_per_octave: Number(($("scales_per_octave") as HTMLInputElement).value),
    upsample: ($("upsample") as HTMLInputElement).checked,
    sigma0: Number(($("sigma0") as HTMLInputElement).value),
  };
}

async function detectAction(): Promise<void> {
  readParams();
  await runDetect(state);
  render();
}

async function matchAction(): Promise<void> {
  readParams();
  state.ratioThreshold = Number(($("ratio_threshold") as HTMLInputElement).value);
  const applied = await runMatch(state);
  if (applied && state.imageA && state.imageB) {
    try {
      const [ra, rb] = await Promise.all([
        postDetect(state.baseUrl, state.imageA, state.params),
        postDetect(state.baseUrl, state.imageB, state.params),
      ]);
      matchKeypoints.a = ra.body.keypoints;
      matchKeypoints.b = rb.body.keypoints;
    } catch {
      matchKeypoints.a = [];
      matchKeypoints.b = [];
    }
  }
  render();
}

function init(): void {
  hookUpload("file-a", "drop-a", "a");
  hookUpload("file-b", "drop-b", "b");
  $("detect-btn").addEventListener("click", () => void detectAction());
  $("match-btn").addEventListener("click", () => void matchAction());
  // re-query on slider release, not while dragging
  $("ratio_threshold").addEventListener("change", () => void matchAction());
  $("ratio_threshold").addEventListener("input", () => {
    $("ratio-value").textContent = Number(
      ($("ratio_threshold") as HTMLInputElement).value,
    ).toFixed(2);
  });
  for (const id of ["show-circles", "show-orientations", "line-opacity"]) {
    $(id).addEventListener("change", () => {
      state.view = {
        showCircles: ($("show-circles") as HTMLInputElement).checked,
        showOrientations: ($("show-orientations") as HTMLInputElement).checked,
        lineOpacity: Number(($("line-opacity") as HTMLInputElement).value),
      };
      render();
    });
  }
  getHealth("")
    .then((h) => {
      $("health").textContent = `service ok, version ${h.version}`;
    })
    .catch(() => {
      $("health").textContent = "service unreachable";
    });
  render();
}

init();
