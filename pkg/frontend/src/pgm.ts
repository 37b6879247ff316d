/** Minimal binary PGM (P5) decoder so the interchange format previews
 * in the browser, which has no native netpbm support. */

export interface DecodedPgm {
  width: number;
  height: number;
  /** RGBA pixels, gray replicated, alpha 255. */
  rgba: Uint8ClampedArray<ArrayBuffer>;
}

export function isPgm(bytes: Uint8Array): boolean {
  return bytes.length >= 2 && bytes[0] === 0x50 && bytes[1] === 0x35; // "P5"
}

export function decodePgm(bytes: Uint8Array): DecodedPgm {
  if (!isPgm(bytes)) throw new Error("not a binary PGM file");
  let pos = 2;

  const isSpace = (c: number) => c === 0x20 || c === 0x09 || c === 0x0a || c === 0x0d;

  function nextToken(): string {
    while (pos < bytes.length) {
      if (bytes[pos] === 0x23) {
        // comment runs to end of line
        while (pos < bytes.length && bytes[pos] !== 0x0a) pos++;
      } else if (isSpace(bytes[pos])) {
        pos++;
      } else {
        break;
      }
    }
    const start = pos;
    while (pos < bytes.length && !isSpace(bytes[pos])) pos++;
    if (start === pos) throw new Error("truncated PGM header");
    return String.fromCharCode(...bytes.subarray(start, pos));
  }

  const width = parseInt(nextToken(), 10);
  const height = parseInt(nextToken(), 10);
  const maxval = parseInt(nextToken(), 10);
  if (!(width > 0) || !(height > 0)) throw new Error("bad PGM dimensions");
  if (!(maxval > 0) || maxval > 255) throw new Error("unsupported PGM maxval");
  pos++; // single whitespace byte after maxval

  const count = width * height;
  if (bytes.length - pos < count) throw new Error("PGM raster too short");
  const rgba = new Uint8ClampedArray(count * 4);
  for (let i = 0; i < count; i++) {
    const v = Math.round((bytes[pos + i] / maxval) * 255);
    rgba[4 * i] = v;
    rgba[4 * i + 1] = v;
    rgba[4 * i + 2] = v;
    rgba[4 * i + 3] = 255;
  }
  return { width, height, rgba };
}
