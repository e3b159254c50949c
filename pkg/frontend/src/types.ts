/** Shared wire and UI types for the annotation tool. */

/** (row, col) pixel coordinate, zero-based, image space. */
export type Point = [number, number];

export type PointRole = "salient" | "background";

export type LayerKind = "falsecolor" | "specsal" | "edges";

/** Tri-mask state codes as used in the RLE payload. */
export const MASK_BG = 0;
export const MASK_UNKNOWN = 1;
export const MASK_FG = 2;

export interface PointsPayload {
  frame: [number, number];
  salient: Point[];
  background: Point;
}

export interface SceneSummary {
  id: string;
  height: number;
  width: number;
  bands: number;
}

export interface LabelRequest {
  points: PointsPayload;
  scale: number;
  tau: number;
}

export interface LabelResponse {
  height: number;
  width: number;
  counts: { fg: number; bg: number; unknown: number };
  leak: boolean;
  rle: number[];
  scale: number;
  tau: number;
}

export interface ExportBundle {
  points: PointsPayload;
  scale: number;
  tau: number;
  /** base64-encoded 16-bit PGM, exactly what the CLI consumes. */
  label_pgm: string;
}
