// Binary PPM (P6) decoding for the server's canvas bitmaps.

export interface PpmImage {
  width: number;
  height: number;
  rgba: Uint8ClampedArray<ArrayBuffer>;
}

export function parsePpm(bytes: Uint8Array): PpmImage {
  if (bytes[0] !== 0x50 || bytes[1] !== 0x36) {
    throw new Error("not a P6 PPM");
  }
  // header: three whitespace-separated tokens after the magic
  let i = 2;
  const tokens: number[] = [];
  while (tokens.length < 3 && i < bytes.length) {
    while (i < bytes.length && isWs(bytes[i])) i++;
    if (bytes[i] === 0x23) {
      while (i < bytes.length && bytes[i] !== 0x0a) i++; // comment line
      continue;
    }
    let value = 0;
    let any = false;
    while (i < bytes.length && bytes[i] >= 0x30 && bytes[i] <= 0x39) {
      value = value * 10 + (bytes[i] - 0x30);
      i++;
      any = true;
    }
    if (!any) throw new Error("malformed PPM header");
    tokens.push(value);
  }
  i++; // single whitespace after maxval
  const [width, height, maxval] = tokens;
  if (maxval !== 255) throw new Error(`unsupported maxval ${maxval}`);
  const need = width * height * 3;
  if (bytes.length - i < need) throw new Error("truncated PPM body");
  const rgba = new Uint8ClampedArray(width * height * 4);
  for (let p = 0; p < width * height; p++) {
    rgba[p * 4] = bytes[i + p * 3];
    rgba[p * 4 + 1] = bytes[i + p * 3 + 1];
    rgba[p * 4 + 2] = bytes[i + p * 3 + 2];
    rgba[p * 4 + 3] = 255;
  }
  return { width, height, rgba };
}

function isWs(b: number): boolean {
  return b === 0x20 || b === 0x09 || b === 0x0a || b === 0x0d;
}

/** Re-encode to P6 (used to verify lossless round trips in tests). */
export function encodePpm(img: PpmImage): Uint8Array {
  const header = `P6\n${img.width} ${img.height}\n255\n`;
  const head = new TextEncoder().encode(header);
  const out = new Uint8Array(head.length + img.width * img.height * 3);
  out.set(head, 0);
  for (let p = 0; p < img.width * img.height; p++) {
    out[head.length + p * 3] = img.rgba[p * 4];
    out[head.length + p * 3 + 1] = img.rgba[p * 4 + 1];
    out[head.length + p * 3 + 2] = img.rgba[p * 4 + 2];
  }
  return out;
}
