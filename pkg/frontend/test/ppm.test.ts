import { describe, expect, it } from "vitest";

import { encodePpm, parsePpm } from "../src/ppm.js";

function ppmBytes(header: string, body: number[]): Uint8Array {
  const head = new TextEncoder().encode(header);
  const out = new Uint8Array(head.length + body.length);
  out.set(head, 0);
  out.set(body, head.length);
  return out;
}

describe("parsePpm", () => {
  it("decodes a 2x2 white image", () => {
    const img = parsePpm(ppmBytes("P6\n2 2\n255\n", Array(12).fill(255)));
    expect(img.width).toBe(2);
    expect(img.height).toBe(2);
    expect(img.rgba).toHaveLength(16);
    expect([...img.rgba.slice(0, 4)]).toEqual([255, 255, 255, 255]);
  });

  it("preserves pixel order row-major", () => {
    const body = [
      10, 20, 30,   40, 50, 60,
      70, 80, 90,   100, 110, 120,
    ];
    const img = parsePpm(ppmBytes("P6\n2 2\n255\n", body));
    expect([...img.rgba.slice(4, 7)]).toEqual([40, 50, 60]); // x=1, y=0
    expect([...img.rgba.slice(8, 11)]).toEqual([70, 80, 90]); // x=0, y=1
  });

  it("round-trips through encodePpm byte-identically", () => {
    const body = Array.from({ length: 3 * 6 * 4 }, (_, i) => (i * 37) % 256);
    const original = ppmBytes("P6\n6 4\n255\n", body);
    expect([...encodePpm(parsePpm(original))]).toEqual([...original]);
  });

  it("rejects wrong magic and truncated bodies", () => {
    expect(() => parsePpm(ppmBytes("P5\n2 2\n255\n", Array(12).fill(0)))).toThrow(/P6/);
    expect(() => parsePpm(ppmBytes("P6\n2 2\n255\n", Array(5).fill(0)))).toThrow(/truncated/);
  });
});
