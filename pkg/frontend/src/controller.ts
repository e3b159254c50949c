/** DOM-free annotation controller: owns the UI state, talks to the
 * service through the scheduler, and notifies a listener on every state
 * change. The browser layer (main.ts) and the integration tests drive
 * exactly the same code paths. */

import { ApiClient } from "./api.js";
import { decodeRle } from "./rle.js";
import { RequestScheduler, SchedulerClock } from "./scheduler.js";
import {
  UiState,
  annotationComplete,
  applyLabel,
  exportReady,
  initialState,
  placePoint,
  requestPayload,
  selectScene,
  setLayer,
  setScale,
  setTau,
  undo,
} from "./state.js";
import type {
  ExportBundle,
  LabelRequest,
  LabelResponse,
  LayerKind,
  Point,
  PointRole,
  SceneSummary,
} from "./types.js";

export interface ControllerEvents {
  onState?: (state: UiState) => void;
  onError?: (message: string) => void;
}

export class AnnotationController {
  state: UiState = initialState();
  scenes: SceneSummary[] = [];
  /** Decoded mask for the current overlay (row-major state codes). */
  mask: Uint8Array | null = null;

  private scheduler: RequestScheduler<LabelRequest, LabelResponse>;

  constructor(
    private api: ApiClient,
    private events: ControllerEvents = {},
    clock?: SchedulerClock,
  ) {
    this.scheduler = new RequestScheduler(
      (request) => {
        if (!this.state.sceneId) throw new Error("no scene selected");
        return this.api.proposeLabel(this.state.sceneId, request);
      },
      (response, request) => this.acceptLabel(response, request),
      (error) => this.events.onError?.(String(error)),
      250,
      clock,
    );
  }

  get busy(): boolean {
    return this.scheduler.busy;
  }

  async loadScenes(): Promise<SceneSummary[]> {
    this.scenes = await this.api.listScenes();
    this.emit();
    return this.scenes;
  }

  selectScene(sceneId: string): void {
    const scene = this.scenes.find((s) => s.id === sceneId);
    if (!scene) {
      this.events.onError?.(`unknown scene ${sceneId}`);
      return;
    }
    this.mask = null;
    this.state = selectScene(this.state, scene.id, [scene.height, scene.width]);
    this.emit();
  }

  setLayer(layer: LayerKind): void {
    this.state = setLayer(this.state, layer);
    this.emit();
  }

  previewUrl(): string | null {
    if (!this.state.sceneId) return null;
    const params: Record<string, string> = {};
    if (this.state.layer === "edges") {
      params.source = "merged";
      params.scale = String(this.state.scale);
    }
    return this.api.previewUrl(this.state.sceneId, this.state.layer, params);
  }

  /** Handle a click already mapped to image coordinates. Out-of-frame
   * clicks are ignored; an incomplete annotation stores the point and
   * shows a hint instead of firing a request. */
  placePoint(point: Point, role: PointRole): void {
    const next = placePoint(this.state, point, role);
    if (next === this.state) return; // ignored click
    this.state = next;
    this.maybeRequest();
    this.emit();
  }

  setTau(tau: number): void {
    const next = setTau(this.state, tau);
    if (next === this.state) return; // deduplicated
    this.state = next;
    this.maybeRequest();
    this.emit();
  }

  setScale(scale: number): void {
    const next = setScale(this.state, scale);
    if (next === this.state) return;
    this.state = next;
    this.maybeRequest();
    this.emit();
  }

  undo(): void {
    this.state = undo(this.state);
    if (this.state.overlay === null) {
      this.mask = null;
    }
    this.maybeRequest();
    this.emit();
  }

  canExport(): boolean {
    return exportReady(this.state);
  }

  async exportBundle(): Promise<ExportBundle> {
    if (!this.state.sceneId || !this.canExport()) {
      throw new Error("nothing to export yet");
    }
    return this.api.exportBundle(this.state.sceneId);
  }

  /** Wait until no request is queued or in flight (test helper). */
  async settle(pollMs = 10): Promise<void> {
    while (this.scheduler.busy) {
      await new Promise((resolve) => setTimeout(resolve, pollMs));
    }
  }

  private maybeRequest(): void {
    if (!annotationComplete(this.state)) return;
    this.scheduler.submit({
      points: requestPayload(this.state),
      scale: this.state.scale,
      tau: this.state.tau,
    });
  }

  private acceptLabel(response: LabelResponse, request: LabelRequest): void {
    // guard against a scene switch racing the response
    if (!this.state.frame || this.state.frame[0] !== response.height) return;
    this.mask = decodeRle(response.rle, response.height, response.width);
    this.state = applyLabel(this.state, response);
    // the response is current only if the inputs did not move on
    const current =
      request.tau === this.state.tau &&
      request.scale === this.state.scale &&
      request.points.salient.length === this.state.salient.length;
    this.state.overlayStale = !current;
    this.emit();
  }

  private emit(): void {
    this.events.onState?.(this.state);
  }
}
