/** Typed client for the session service HTTP API.
 *
 * The UI consumes this API exclusively; it never links against the
 * simulator directly, so every piece of UI state is reconstructible from
 * these endpoints alone.
 */

import { SnapCell, parseSnaps } from "./snaps.js";

export type Polarity = "+" | "-";
export type Workspace = "table" | "hand";

export interface SessionInfo {
  session_id: string;
  phase: string;
  step_count: number;
  max_steps: number;
  table_size: number;
  hand_size: number;
  action_space: number;
  terminal: boolean;
}

export interface Score {
  f1_b: number;
  f1_e: number;
  f1_a: number;
  aed: number;
}

export interface ActionResult {
  success: boolean;
  terminal: boolean;
  phase: string;
  step_count: number;
  score?: Score;
}

export interface ShapeEntry {
  id: number;
  name: string;
}

export interface ColorEntry {
  id: number;
  name: string;
  rgb: [number, number, number];
}

/** An action in the service's record form. */
export type ActionRecord = { type: string } & Record<string, unknown>;

export class ApiError extends Error {
  constructor(
    public status: number,
    public detail: string,
  ) {
    super(`HTTP ${status}: ${detail}`);
  }
}

async function raise(resp: Response): Promise<never> {
  let detail = resp.statusText;
  try {
    const body = await resp.json();
    if (body && typeof body.detail === "string") detail = body.detail;
  } catch {
    // keep the status text
  }
  throw new ApiError(resp.status, detail);
}

export class ApiClient {
  constructor(
    private base: string,
    private fetchFn: typeof fetch = fetch,
  ) {}

  private async json<T>(path: string, init?: RequestInit): Promise<T> {
    const resp = await this.fetchFn(this.base + path, init);
    if (!resp.ok) await raise(resp);
    return (await resp.json()) as T;
  }

  createSession(body: {
    seed?: number;
    size?: number;
    dataset?: string;
    scene?: string;
    config?: Record<string, number>;
  }): Promise<SessionInfo> {
    return this.json("/sessions", {
      method: "POST",
      headers: { "content-type": "application/json" },
      body: JSON.stringify(body),
    });
  }

  frameUrl(sid: string, workspace: Workspace, revision: number): string {
    // The revision defeats browser caching between steps.
    return `${this.base}/sessions/${sid}/frames/${workspace}.png?r=${revision}`;
  }

  async fetchFrame(sid: string, workspace: Workspace): Promise<ArrayBuffer> {
    const resp = await this.fetchFn(
      `${this.base}/sessions/${sid}/frames/${workspace}.png`,
    );
    if (!resp.ok) await raise(resp);
    return resp.arrayBuffer();
  }

  async fetchSnaps(
    sid: string,
    workspace: Workspace,
    polarity: Polarity,
  ): Promise<SnapCell[]> {
    const pol = polarity === "+" ? "pos" : "neg";
    const resp = await this.fetchFn(
      `${this.base}/sessions/${sid}/snaps?workspace=${workspace}&polarity=${pol}`,
    );
    if (!resp.ok) await raise(resp);
    return parseSnaps(await resp.text());
  }

  postAction(sid: string, record: ActionRecord): Promise<ActionResult> {
    return this.json(`/sessions/${sid}/action`, {
      method: "POST",
      headers: { "content-type": "application/json" },
      body: JSON.stringify({ record }),
    });
  }

  getScore(sid: string): Promise<Score> {
    return this.json(`/sessions/${sid}/score`);
  }

  async deleteSession(sid: string): Promise<void> {
    const resp = await this.fetchFn(`${this.base}/sessions/${sid}`, {
      method: "DELETE",
    });
    if (!resp.ok) await raise(resp);
  }

  getShapes(): Promise<ShapeEntry[]> {
    return this.json("/shapes");
  }

  getColors(): Promise<ColorEntry[]> {
    return this.json("/colors");
  }
}
