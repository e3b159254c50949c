/** Pure annotation-state transitions. Effects (requests, rendering) live in
 * the controller; everything here is synchronous and unit-testable. */

import type { LabelResponse, LayerKind, Point, PointRole, PointsPayload } from "./types.js";

export const TAU_MIN = 0;
export const TAU_MAX = 2;

interface PointsSnapshot {
  salient: Point[];
  background: Point | null;
}

export interface UiState {
  sceneId: string | null;
  frame: [number, number] | null;
  layer: LayerKind;
  salient: Point[];
  background: Point | null;
  tau: number;
  scale: number;
  /** Last successful label response; null until one arrives. */
  overlay: LabelResponse | null;
  /** True when points/params changed after the overlay was computed. */
  overlayStale: boolean;
  leak: boolean;
  hint: string | null;
  history: PointsSnapshot[];
}

export function initialState(): UiState {
  return {
    sceneId: null,
    frame: null,
    layer: "falsecolor",
    salient: [],
    background: null,
    tau: 0.5,
    scale: 0.5,
    overlay: null,
    overlayStale: false,
    leak: false,
    hint: null,
    history: [],
  };
}

/** A label request is possible once at least one salient point and the
 * background point are placed. */
export function annotationComplete(state: UiState): boolean {
  return state.salient.length > 0 && state.background !== null;
}

export function selectScene(state: UiState, sceneId: string, frame: [number, number]): UiState {
  return {
    ...initialState(),
    sceneId,
    frame,
    layer: state.layer,
    tau: state.tau,
    scale: state.scale,
  };
}

export function setLayer(state: UiState, layer: LayerKind): UiState {
  return { ...state, layer };
}

function snapshot(state: UiState): PointsSnapshot {
  return { salient: [...state.salient], background: state.background };
}

function inFrame(state: UiState, point: Point): boolean {
  if (!state.frame) return false;
  const [r, c] = point;
  return r >= 0 && c >= 0 && r < state.frame[0] && c < state.frame[1];
}

/**
 * Place a point. Salient points accumulate (one per object); a new
 * background point replaces the previous one. Clicks outside the image
 * are ignored. The previous configuration is pushed onto the undo stack.
 */
export function placePoint(state: UiState, point: Point, role: PointRole): UiState {
  if (!inFrame(state, point)) {
    return state;
  }
  const next: UiState = {
    ...state,
    history: [...state.history, snapshot(state)],
    overlayStale: state.overlay !== null,
    hint: null,
  };
  if (role === "salient") {
    next.salient = [...state.salient, point];
  } else {
    next.background = point;
  }
  if (!annotationComplete(next)) {
    next.hint =
      next.background === null
        ? "place a background point to compute a label"
        : "place at least one salient point";
  }
  return next;
}

/** Clamp tau into [0, 2]; identical values produce the same state object so
 * callers can skip duplicate requests by identity. */
export function setTau(state: UiState, tau: number): UiState {
  const clamped = Math.min(TAU_MAX, Math.max(TAU_MIN, tau));
  if (clamped === state.tau) {
    return state;
  }
  return { ...state, tau: clamped, overlayStale: state.overlay !== null };
}

export function setScale(state: UiState, scale: number): UiState {
  if (scale === state.scale || scale <= 0) {
    return state;
  }
  return { ...state, scale, overlayStale: state.overlay !== null };
}

/** Pop one snapshot; with an empty stack this is a no-op. */
export function undo(state: UiState): UiState {
  if (state.history.length === 0) {
    return state;
  }
  const last = state.history[state.history.length - 1];
  const cleared = last.salient.length === 0 && last.background === null;
  return {
    ...state,
    salient: last.salient,
    background: last.background,
    history: state.history.slice(0, -1),
    overlay: cleared ? null : state.overlay,
    overlayStale: !cleared && state.overlay !== null,
    leak: cleared ? false : state.leak,
    hint: null,
  };
}

/** Install a fresh label response; the overlay becomes current. */
export function applyLabel(state: UiState, response: LabelResponse): UiState {
  return {
    ...state,
    overlay: response,
    overlayStale: false,
    leak: response.leak,
  };
}

export function requestPayload(state: UiState): PointsPayload {
  if (!annotationComplete(state) || !state.frame) {
    throw new Error("annotation incomplete: need salient + background points");
  }
  return {
    frame: state.frame,
    salient: state.salient,
    background: state.background as Point,
  };
}

export function exportReady(state: UiState): boolean {
  return state.overlay !== null;
}
