/** Thin fetch client for the annotation service. */

import type { ExportBundle, LabelRequest, LabelResponse, SceneSummary } from "./types.js";

export class ApiError extends Error {
  constructor(public status: number, message: string) {
    super(message);
  }
}

async function checked<T>(response: Response): Promise<T> {
  if (!response.ok) {
    let detail = response.statusText;
    try {
      const body = await response.json();
      detail = typeof body.detail === "string" ? body.detail : JSON.stringify(body.detail);
    } catch {
      /* non-JSON error body */
    }
    throw new ApiError(response.status, detail);
  }
  return (await response.json()) as T;
}

export class ApiClient {
  constructor(private baseUrl: string = "") {}

  async listScenes(): Promise<SceneSummary[]> {
    return checked(await fetch(`${this.baseUrl}/api/scenes`));
  }

  previewUrl(sceneId: string, layer: string, params: Record<string, string> = {}): string {
    const query = new URLSearchParams(params).toString();
    return `${this.baseUrl}/api/scenes/${sceneId}/${layer}.png${query ? "?" + query : ""}`;
  }

  async proposeLabel(sceneId: string, request: LabelRequest): Promise<LabelResponse> {
    return checked(
      await fetch(`${this.baseUrl}/api/scenes/${sceneId}/label`, {
        method: "POST",
        headers: { "content-type": "application/json" },
        body: JSON.stringify(request),
      }),
    );
  }

  async exportBundle(sceneId: string): Promise<ExportBundle> {
    return checked(await fetch(`${this.baseUrl}/api/scenes/${sceneId}/export`));
  }
}
