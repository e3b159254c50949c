/** Run-length decoding for the tri-mask payload returned by the service. */

/**
 * Decode [value, run, value, run, ...] pairs into a row-major byte mask.
 * Throws if the runs do not cover the mask exactly.
 */
export function decodeRle(runs: number[], height: number, width: number): Uint8Array {
  const size = height * width;
  const out = new Uint8Array(size);
  let pos = 0;
  for (let i = 0; i + 1 < runs.length; i += 2) {
    const value = runs[i];
    const run = runs[i + 1];
    if (run < 0 || pos + run > size) {
      throw new Error(`run-length data overflows ${size}-pixel mask`);
    }
    out.fill(value, pos, pos + run);
    pos += run;
  }
  if (pos !== size) {
    throw new Error(`run-length data covers ${pos} of ${size} pixels`);
  }
  return out;
}
