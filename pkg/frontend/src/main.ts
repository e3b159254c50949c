/** Browser bootstrap: canvas rendering, pointer handling, slider wiring.
 * All behavior lives in AnnotationController; this file only adapts it to
 * the DOM. */

import { ApiClient } from "./api.js";
import { AnnotationController } from "./controller.js";
import { maskToRgba } from "./overlay.js";
import type { UiState } from "./state.js";
import type { PointRole } from "./types.js";

const api = new ApiClient("");

const sceneSelect = document.getElementById("scene") as HTMLSelectElement;
const layerSelect = document.getElementById("layer") as HTMLSelectElement;
const roleSelect = document.getElementById("role") as HTMLSelectElement;
const tauSlider = document.getElementById("tau") as HTMLInputElement;
const tauValue = document.getElementById("tau-value") as HTMLSpanElement;
const scaleSelect = document.getElementById("scale") as HTMLSelectElement;
const opacitySlider = document.getElementById("opacity") as HTMLInputElement;
const undoButton = document.getElementById("undo") as HTMLButtonElement;
const exportButton = document.getElementById("export") as HTMLButtonElement;
const leakBadge = document.getElementById("leak") as HTMLSpanElement;
const staleBadge = document.getElementById("stale") as HTMLSpanElement;
const hintLine = document.getElementById("hint") as HTMLSpanElement;
const countsLine = document.getElementById("counts") as HTMLSpanElement;
const statusLine = document.getElementById("status") as HTMLSpanElement;
const baseCanvas = document.getElementById("base") as HTMLCanvasElement;
const overlayCanvas = document.getElementById("overlay") as HTMLCanvasElement;

const baseImage = new Image();
let baseLoaded = false;

const controller = new AnnotationController(api, {
  onState: render,
  onError: (message) => {
    statusLine.textContent = message;
    statusLine.classList.add("error");
  },
});

function canvasToImage(event: MouseEvent): [number, number] | null {
  const rect = overlayCanvas.getBoundingClientRect();
  const frame = controller.state.frame;
  if (!frame) return null;
  const col = Math.floor(((event.clientX - rect.left) / rect.width) * frame[1]);
  const row = Math.floor(((event.clientY - rect.top) / rect.height) * frame[0]);
  if (row < 0 || col < 0 || row >= frame[0] || col >= frame[1]) return null;
  return [row, col];
}

function drawBase(): void {
  const ctx = baseCanvas.getContext("2d");
  if (!ctx || !baseLoaded) return;
  ctx.imageSmoothingEnabled = false;
  ctx.clearRect(0, 0, baseCanvas.width, baseCanvas.height);
  ctx.drawImage(baseImage, 0, 0, baseCanvas.width, baseCanvas.height);
}

function drawOverlay(state: UiState): void {
  const ctx = overlayCanvas.getContext("2d");
  if (!ctx || !state.frame) return;
  const [h, w] = state.frame;
  overlayCanvas.width = w;
  overlayCanvas.height = h;
  ctx.clearRect(0, 0, w, h);
  if (controller.mask && state.overlay) {
    const alpha = Number(opacitySlider.value);
    const rgba = maskToRgba(controller.mask, alpha);
    ctx.putImageData(new ImageData(rgba, w, h), 0, 0);
  }
  // points on top: salient crosses in green, background in blue
  ctx.lineWidth = 1;
  for (const [r, c] of state.salient) {
    drawCross(ctx, c, r, "#2ecc40");
  }
  if (state.background) {
    drawCross(ctx, state.background[1], state.background[0], "#4070e0");
  }
}

function drawCross(ctx: CanvasRenderingContext2D, x: number, y: number, color: string): void {
  ctx.strokeStyle = color;
  ctx.beginPath();
  ctx.moveTo(x - 4, y);
  ctx.lineTo(x + 4, y);
  ctx.moveTo(x, y - 4);
  ctx.lineTo(x, y + 4);
  ctx.stroke();
}

function refreshPreview(): void {
  const url = controller.previewUrl();
  if (!url) return;
  baseLoaded = false;
  baseImage.onload = () => {
    baseLoaded = true;
    const frame = controller.state.frame;
    if (frame) {
      baseCanvas.width = frame[1];
      baseCanvas.height = frame[0];
    }
    drawBase();
  };
  baseImage.src = url;
}

function render(state: UiState): void {
  leakBadge.hidden = !state.leak;
  staleBadge.hidden = !state.overlayStale;
  hintLine.textContent = state.hint ?? "";
  exportButton.disabled = !controller.canExport();
  undoButton.disabled = state.history.length === 0;
  tauValue.textContent = state.tau.toFixed(2);
  if (state.overlay) {
    const { fg, bg, unknown } = state.overlay.counts;
    countsLine.textContent = `fg ${fg} / bg ${bg} / unknown ${unknown}`;
  } else {
    countsLine.textContent = "";
  }
  statusLine.classList.remove("error");
  statusLine.textContent = controller.busy ? "computing label..." : "";
  drawOverlay(state);
}

overlayCanvas.addEventListener("click", (event) => {
  const point = canvasToImage(event);
  if (!point) return;
  const role = roleSelect.value as PointRole;
  controller.placePoint(point, role);
});

overlayCanvas.addEventListener("contextmenu", (event) => {
  // right-click always places the background point
  event.preventDefault();
  const point = canvasToImage(event);
  if (point) controller.placePoint(point, "background");
});

tauSlider.addEventListener("input", () => controller.setTau(Number(tauSlider.value)));
scaleSelect.addEventListener("change", () => controller.setScale(Number(scaleSelect.value)));
opacitySlider.addEventListener("input", () => render(controller.state));
undoButton.addEventListener("click", () => controller.undo());
layerSelect.addEventListener("change", () => {
  controller.setLayer(layerSelect.value as never);
  refreshPreview();
});
sceneSelect.addEventListener("change", () => {
  controller.selectScene(sceneSelect.value);
  refreshPreview();
});

exportButton.addEventListener("click", async () => {
  try {
    const bundle = await controller.exportBundle();
    download(`${controller.state.sceneId}.points.json`, JSON.stringify(bundle.points));
    download(
      `${controller.state.sceneId}.label.pgm`,
      Uint8Array.from(atob(bundle.label_pgm), (ch) => ch.charCodeAt(0)),
    );
  } catch (error) {
    statusLine.textContent = String(error);
  }
});

function download(filename: string, content: string | Uint8Array): void {
  const blob = new Blob([content as BlobPart]);
  const link = document.createElement("a");
  link.href = URL.createObjectURL(blob);
  link.download = filename;
  link.click();
  URL.revokeObjectURL(link.href);
}

async function boot(): Promise<void> {
  const scenes = await controller.loadScenes();
  sceneSelect.replaceChildren(
    ...scenes.map((scene) => {
      const option = document.createElement("option");
      option.value = scene.id;
      option.textContent = `${scene.id} (${scene.height}x${scene.width}, ${scene.bands} bands)`;
      return option;
    }),
  );
  if (scenes.length > 0) {
    controller.selectScene(scenes[0].id);
    refreshPreview();
  }
}

void boot();
