/** UI event layer: all play-screen state and interaction logic, DOM-free.
 *
 * Every field of the state derives from server responses; the browser view
 * (ui.ts) renders this state and forwards raw input events here.  Tests
 * drive the same entry points headlessly.
 */

import {
  ActionRecord,
  ActionResult,
  ApiClient,
  ApiError,
  ColorEntry,
  Polarity,
  Score,
  SessionInfo,
  ShapeEntry,
  Workspace,
} from "./api.js";
import { Cell, clickToCell } from "./cellmap.js";
import { SnapCell } from "./snaps.js";

export type ClickMode = "disassemble" | "assemble" | "assemble-origin" | "rotate";

export interface Banner {
  kind: "error" | "info";
  text: string;
}

export interface FrameData {
  bytes: ArrayBuffer;
  revision: number;
}

export interface PlayState {
  sessionId: string | null;
  phase: string;
  stepCount: number;
  maxSteps: number;
  tableSize: number;
  handSize: number;
  terminal: boolean;
  score: Score | null;
  frames: Record<Workspace, FrameData | null>;
  snaps: Record<Workspace, Record<Polarity, SnapCell[]>>;
  shapes: ShapeEntry[];
  colors: ColorEntry[];
  banners: Banner[];
  busy: boolean;
  queued: number;
}

export interface ControlState {
  mode: ClickMode;
  tablePolarity: Polarity;
  handPolarity: Polarity;
  rotateAngle: 90 | 180 | 270;
  overlay: boolean;
  selectedShape: number | null;
  selectedColor: number | null;
  pendingHandCell: Cell | null;
}

const EMPTY_SNAPS = (): Record<Workspace, Record<Polarity, SnapCell[]>> => ({
  table: { "+": [], "-": [] },
  hand: { "+": [], "-": [] },
});

export class PlayController {
  state: PlayState = {
    sessionId: null,
    phase: "unknown",
    stepCount: 0,
    maxSteps: 0,
    tableSize: 256,
    handSize: 96,
    terminal: false,
    score: null,
    frames: { table: null, hand: null },
    snaps: EMPTY_SNAPS(),
    shapes: [],
    colors: [],
    banners: [],
    busy: false,
    queued: 0,
  };

  controls: ControlState = {
    mode: "disassemble",
    tablePolarity: "+",
    handPolarity: "-",
    rotateAngle: 90,
    overlay: true,
    selectedShape: null,
    selectedColor: null,
    pendingHandCell: null,
  };

  private queue: Promise<void> = Promise.resolve();
  private revision = 0;

  onChange: (c: PlayController) => void;

  constructor(
    private api: ApiClient,
    onChange: (c: PlayController) => void = () => {},
  ) {
    this.onChange = onChange;
  }

  private notify(): void {
    this.onChange(this);
  }

  private banner(kind: Banner["kind"], text: string): void {
    this.state.banners.push({ kind, text });
    if (this.state.banners.length > 5) this.state.banners.shift();
    this.notify();
  }

  dismissBanners(): void {
    this.state.banners = [];
    this.notify();
  }

  /** Populate the shape and color pickers. */
  async loadCatalog(): Promise<void> {
    this.state.shapes = await this.api.getShapes();
    this.state.colors = await this.api.getColors();
    this.notify();
  }

  /** Start a fresh episode. */
  async start(body: Parameters<ApiClient["createSession"]>[0]): Promise<void> {
    const info = await this.api.createSession(body);
    this.adoptInfo(info);
    await this.refresh();
  }

  /** Re-attach to a live session (page reload): rebuild the view purely
   * from server data.  The phase shows as unknown until the next action
   * response reports it. */
  async attach(sessionId: string): Promise<void> {
    this.state.sessionId = sessionId;
    this.state.phase = "unknown";
    try {
      this.state.score = await this.api.getScore(sessionId);
      this.state.terminal = true;
    } catch (e) {
      if (e instanceof ApiError && e.status === 409) {
        this.state.score = null;
        this.state.terminal = false;
      } else {
        throw e;
      }
    }
    await this.refresh();
  }

  private adoptInfo(info: SessionInfo): void {
    this.state.sessionId = info.session_id;
    this.state.phase = info.phase;
    this.state.stepCount = info.step_count;
    this.state.maxSteps = info.max_steps;
    this.state.tableSize = info.table_size;
    this.state.handSize = info.hand_size;
    this.state.terminal = info.terminal;
    this.state.score = null;
    this.state.frames = { table: null, hand: null };
    this.state.snaps = EMPTY_SNAPS();
    this.controls.pendingHandCell = null;
    this.notify();
  }

  /** Fetch both frames and all four snap grids. */
  async refresh(): Promise<void> {
    const sid = this.state.sessionId;
    if (sid === null) return;
    const [table, hand] = await Promise.all([
      this.api.fetchFrame(sid, "table"),
      this.api.fetchFrame(sid, "hand"),
    ]);
    this.revision += 1;
    this.state.frames = {
      table: { bytes: table, revision: this.revision },
      hand: { bytes: hand, revision: this.revision },
    };
    const [tp, tn, hp, hn] = await Promise.all([
      this.api.fetchSnaps(sid, "table", "+"),
      this.api.fetchSnaps(sid, "table", "-"),
      this.api.fetchSnaps(sid, "hand", "+"),
      this.api.fetchSnaps(sid, "hand", "-"),
    ]);
    this.state.snaps = {
      table: { "+": tp, "-": tn },
      hand: { "+": hp, "-": hn },
    };
    this.notify();
  }

  /** Submit one action record.  Requests are strictly serialized: while one
   * is in flight, further submissions queue behind it. */
  submit(record: ActionRecord): Promise<ActionResult | null> {
    this.state.queued += 1;
    this.notify();
    const run = this.queue.then(() => this.execute(record));
    this.queue = run.then(
      () => undefined,
      () => undefined,
    );
    return run;
  }

  private async execute(record: ActionRecord): Promise<ActionResult | null> {
    this.state.queued -= 1;
    const sid = this.state.sessionId;
    if (sid === null || this.state.terminal) return null;
    this.state.busy = true;
    this.notify();
    try {
      const result = await this.api.postAction(sid, record);
      this.state.phase = result.phase;
      this.state.stepCount = result.step_count;
      this.state.terminal = result.terminal;
      if (result.score) this.state.score = result.score;
      if (!result.success) {
        this.banner("info", `${record.type} had no effect`);
      }
      await this.refresh();
      return result;
    } catch (e) {
      const text = e instanceof ApiError ? e.detail : String(e);
      this.banner("error", text);
      return null;
    } finally {
      this.state.busy = false;
      this.notify();
    }
  }

  // -- input events ----------------------------------------------------------

  /** Whether the Pick control may submit. */
  get canPick(): boolean {
    return (
      this.controls.selectedShape !== null &&
      this.controls.selectedColor !== null &&
      !this.state.terminal
    );
  }

  pick(): Promise<ActionResult | null> | null {
    if (!this.canPick) return null;
    return this.submit({
      type: "Pick",
      shape_id: this.controls.selectedShape,
      color_id: this.controls.selectedColor,
    });
  }

  pressEnd(): Promise<ActionResult | null> {
    return this.submit({ type: "End" });
  }

  pressSwitchPhase(): Promise<ActionResult | null> {
    return this.submit({ type: "SwitchPhase" });
  }

  rotateCamera(
    workspace: Workspace,
    direction: "left" | "right" | "up" | "down" | "frame",
  ): Promise<ActionResult | null> {
    return this.submit({ type: "RotateCamera", workspace, direction });
  }

  /** A click on a workspace frame, in display pixels. */
  clickFrame(
    workspace: Workspace,
    displayX: number,
    displayY: number,
    scale: number = 1,
  ): Promise<ActionResult | null> | null {
    const size =
      workspace === "table" ? this.state.tableSize : this.state.handSize;
    const cell = clickToCell(displayX, displayY, size, scale);
    if (cell === null) return null; // out-of-frame clicks are ignored
    return this.clickCell(workspace, cell);
  }

  /** A click resolved to a cursor cell. */
  clickCell(workspace: Workspace, cell: Cell): Promise<ActionResult | null> | null {
    const c = this.controls;
    if (workspace === "hand") {
      if (c.mode === "assemble") {
        c.pendingHandCell = cell;
        this.notify();
        return null; // waits for the table-side click
      }
      if (c.mode === "assemble-origin") {
        return this.submit({
          type: "AssembleOrigin",
          hand_x: cell.x,
          hand_y: cell.y,
          polarity: c.handPolarity,
        });
      }
      return null;
    }
    switch (c.mode) {
      case "disassemble":
        return this.submit({
          type: "Disassemble",
          x: cell.x,
          y: cell.y,
          polarity: c.tablePolarity,
        });
      case "rotate":
        return this.submit({
          type: "RotateBrick",
          x: cell.x,
          y: cell.y,
          polarity: c.tablePolarity,
          angle: c.rotateAngle,
        });
      case "assemble": {
        if (c.pendingHandCell === null) {
          this.banner("info", "select a hand connection point first");
          return null;
        }
        const hand = c.pendingHandCell;
        c.pendingHandCell = null;
        return this.submit({
          type: "Assemble",
          hand_x: hand.x,
          hand_y: hand.y,
          hand_polarity: c.handPolarity,
          table_x: cell.x,
          table_y: cell.y,
          table_polarity: c.tablePolarity,
        });
      }
      default:
        return null;
    }
  }

  async dispose(): Promise<void> {
    const sid = this.state.sessionId;
    if (sid !== null) {
      try {
        await this.api.deleteSession(sid);
      } catch {
        // session may have expired already
      }
    }
  }
}
