/** Overlay geometry and canvas drawing for keypoints and matches.
 *
 * Geometry builders are pure so they can be unit-tested headlessly; the
 * draw functions are a thin canvas layer over them.
 */

import type { WireKeypoint, WireMatch } from "./types.js";
import type { ViewOptions } from "./state.js";

export const RADIUS_PER_SIGMA = 2.0;

export interface Circle {
  x: number;
  y: number;
  r: number;
}

export interface Segment {
  x1: number;
  y1: number;
  x2: number;
  y2: number;
}

export function keypointCircles(keypoints: readonly WireKeypoint[]): Circle[] {
  return keypoints.map((kp) => ({
    x: kp.x,
    y: kp.y,
    r: Math.max(1, RADIUS_PER_SIGMA * kp.sigma),
  }));
}

export function orientationTicks(keypoints: readonly WireKeypoint[]): Segment[] {
  return keypoints.map((kp) => {
    const r = Math.max(1, RADIUS_PER_SIGMA * kp.sigma);
    return {
      x1: kp.x,
      y1: kp.y,
      x2: kp.x + r * Math.cos(kp.orientation),
      y2: kp.y + r * Math.sin(kp.orientation),
    };
  });
}

/** Line segments for the side-by-side composite; B is shifted right by offsetX. */
export function matchSegments(
  matches: readonly WireMatch[],
  keypointsA: readonly WireKeypoint[],
  keypointsB: readonly WireKeypoint[],
  offsetX: number,
): Segment[] {
  return matches.map((m) => {
    const a = keypointsA[m.index_a];
    const b = keypointsB[m.index_b];
    return { x1: a.x, y1: a.y, x2: b.x + offsetX, y2: b.y };
  });
}

export function drawKeypointOverlay(
  ctx: CanvasRenderingContext2D,
  bitmap: ImageBitmap,
  keypoints: readonly WireKeypoint[],
  view: ViewOptions,
): void {
  ctx.canvas.width = bitmap.width;
  ctx.canvas.height = bitmap.height;
  ctx.drawImage(bitmap, 0, 0);
  ctx.lineWidth = 1;
  ctx.strokeStyle = "rgba(255, 60, 40, 0.9)";
  if (view.showCircles) {
    for (const c of keypointCircles(keypoints)) {
      ctx.beginPath();
      ctx.arc(c.x, c.y, c.r, 0, 2 * Math.PI);
      ctx.stroke();
    }
  }
  if (view.showOrientations) {
    for (const s of orientationTicks(keypoints)) {
      ctx.beginPath();
      ctx.moveTo(s.x1, s.y1);
      ctx.lineTo(s.x2, s.y2);
      ctx.stroke();
    }
  }
}

export function drawMatchOverlay(
  ctx: CanvasRenderingContext2D,
  bitmapA: ImageBitmap,
  bitmapB: ImageBitmap,
  matches: readonly WireMatch[],
  keypointsA: readonly WireKeypoint[],
  keypointsB: readonly WireKeypoint[],
  view: ViewOptions,
): void {
  ctx.canvas.width = bitmapA.width + bitmapB.width;
  ctx.canvas.height = Math.max(bitmapA.height, bitmapB.height);
  ctx.fillStyle = "#111";
  ctx.fillRect(0, 0, ctx.canvas.width, ctx.canvas.height);
  ctx.drawImage(bitmapA, 0, 0);
  ctx.drawImage(bitmapB, bitmapA.width, 0);
  ctx.lineWidth = 1;
  ctx.strokeStyle = `rgba(40, 220, 40, ${view.lineOpacity})`;
  for (const s of matchSegments(matches, keypointsA, keypointsB, bitmapA.width)) {
    ctx.beginPath();
    ctx.moveTo(s.x1, s.y1);
    ctx.lineTo(s.x2, s.y2);
    ctx.stroke();
  }
}
