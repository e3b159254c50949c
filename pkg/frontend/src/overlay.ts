/** Tri-mask to RGBA conversion. Every overlay pixel comes from the decoded
 * service response; nothing is recomputed or smoothed locally. */

import { MASK_BG, MASK_FG } from "./types.js";

export interface OverlayColors {
  fg: [number, number, number];
  bg: [number, number, number];
}

export const DEFAULT_COLORS: OverlayColors = {
  fg: [64, 200, 96], // green
  bg: [64, 112, 224], // blue
};

/**
 * Build an RGBA buffer (length h*w*4) from a decoded tri-mask.
 * FG and BG pixels are tinted; UNKNOWN stays fully transparent.
 */
export function maskToRgba(
  mask: Uint8Array,
  alpha: number,
  colors: OverlayColors = DEFAULT_COLORS,
): Uint8ClampedArray<ArrayBuffer> {
  const a = Math.round(Math.min(1, Math.max(0, alpha)) * 255);
  const out = new Uint8ClampedArray(new ArrayBuffer(mask.length * 4));
  for (let i = 0; i < mask.length; i++) {
    const offset = i * 4;
    if (mask[i] === MASK_FG) {
      out[offset] = colors.fg[0];
      out[offset + 1] = colors.fg[1];
      out[offset + 2] = colors.fg[2];
      out[offset + 3] = a;
    } else if (mask[i] === MASK_BG) {
      out[offset] = colors.bg[0];
      out[offset + 1] = colors.bg[1];
      out[offset + 2] = colors.bg[2];
      out[offset + 3] = a;
    }
    // UNKNOWN: leave transparent
  }
  return out;
}
