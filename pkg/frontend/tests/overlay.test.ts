import { describe, expect, it } from "vitest";

import { maskToRgba } from "../src/overlay.js";
import { MASK_BG, MASK_FG, MASK_UNKNOWN } from "../src/types.js";

describe("maskToRgba", () => {
  it("tints fg green, bg blue, unknown transparent", () => {
    const mask = new Uint8Array([MASK_FG, MASK_BG, MASK_UNKNOWN]);
    const rgba = maskToRgba(mask, 1.0);
    expect(Array.from(rgba.slice(0, 4))).toEqual([64, 200, 96, 255]);
    expect(Array.from(rgba.slice(4, 8))).toEqual([64, 112, 224, 255]);
    expect(rgba[11]).toBe(0); // unknown alpha
  });

  it("derives every pixel from the mask alone", () => {
    // single-source-of-truth: the buffer is a pure function of the mask
    const mask = new Uint8Array([MASK_FG, MASK_FG, MASK_BG, MASK_UNKNOWN]);
    const a = maskToRgba(mask, 0.5);
    const b = maskToRgba(mask, 0.5);
    expect(Array.from(a)).toEqual(Array.from(b));
  });

  it("clamps opacity into [0, 1]", () => {
    const mask = new Uint8Array([MASK_FG]);
    expect(maskToRgba(mask, 7)[3]).toBe(255);
    expect(maskToRgba(mask, -1)[3]).toBe(0);
  });
});
