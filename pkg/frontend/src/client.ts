// Conference client: joins a session over the relay's websocket, sends
// gaze (pointer fallback) and audio at the tick rate the server
// announces, and paints its own grid from state broadcasts. Gaze of
// others AT this viewer shows as a tile glow; everything fancier
// (arrows, poses) arrives pre-computed in frames on the host console.

import {
  decode,
  encode,
  makeAudio,
  makeGaze,
  makeJoin,
  makeObserve,
  type Msg,
  type Role,
  type StateMsg,
} from "./protocol.js";
import { classifyPoint, DwellClassifier, type OwnedRect } from "./gaze.js";
import { tileRects } from "./grid.js";
import { renderFrame } from "./render.js";

// the subset of WebSocket both browsers and the ws package provide
export interface SocketLike {
  send(data: string): void;
  close(): void;
  onopen: ((ev?: unknown) => void) | null;
  onmessage: ((ev: { data: unknown }) => void) | null;
  onclose: ((ev?: unknown) => void) | null;
  onerror: ((ev?: unknown) => void) | null;
}

export interface ClientOptions {
  url: string;
  session: string;
  role?: Role;
  mount: HTMLElement;
  screenW: number;
  screenH: number;
  makeSocket?: (url: string) => SocketLike;
  /** host console: member id to observe as soon as the session allows */
  observe?: string | null;
  speakingLevel?: number;
}

const MIC_BADGE_LEVEL = 0.25;

export class GazeClient {
  readonly options: ClientOptions;
  id: string | null = null;
  members: string[] = [];
  tickMs = 16;

  private socket: SocketLike | null = null;
  private rects: OwnedRect[] = [];
  private readonly dwell = new DwellClassifier();
  private pointer: { x: number; y: number } | null = null;
  private seq = 0;
  private tick = 0;
  private timer: ReturnType<typeof setInterval> | null = null;
  private lastSentTarget: string | null = null;
  private speaking = false;
  private lastSentLevel = 0;
  private grid: HTMLElement;
  private console_: HTMLElement;
  private closedByUs = false;
  private welcomeWaiters: (() => void)[] = [];

  constructor(options: ClientOptions) {
    this.options = options;
    const doc = options.mount.ownerDocument;
    this.grid = doc.createElement("div");
    this.grid.className = "grid";
    this.console_ = doc.createElement("div");
    this.console_.className = "observe-console";
    options.mount.append(this.grid, this.console_);
    options.mount.addEventListener("mousemove", (ev) => {
      const me = ev as MouseEvent;
      this.pointer = { x: me.clientX, y: me.clientY };
    });
  }

  connect(): void {
    const make =
      this.options.makeSocket ??
      ((url: string) => new WebSocket(url) as unknown as SocketLike);
    const socket = make(this.options.url);
    this.socket = socket;
    socket.onopen = () => {
      socket.send(
        encode(makeJoin(this.options.session, this.options.role ?? "participant")),
      );
    };
    socket.onmessage = (ev) => {
      this.handle(decode(String(ev.data)));
    };
    socket.onclose = () => {
      this.stopTicking();
    };
    socket.onerror = () => {};
  }

  close(): void {
    this.closedByUs = true;
    this.stopTicking();
    this.socket?.close();
  }

  /** Resolves once the server has welcomed us. */
  ready(): Promise<void> {
    if (this.id !== null) {
      return Promise.resolve();
    }
    return new Promise((resolve) => this.welcomeWaiters.push(resolve));
  }

  setSpeaking(on: boolean): void {
    this.speaking = on;
  }

  /** Display rects currently used for hit testing (test hook). */
  get tileGeometry(): OwnedRect[] {
    return this.rects;
  }

  private handle(msg: Msg): void {
    switch (msg.kind) {
      case "welcome": {
        this.id = msg.id;
        this.members = [...msg.members];
        this.tickMs = msg.tick_ms;
        this.rebuildGrid();
        this.startTicking();
        if (this.options.observe) {
          this.socket?.send(encode(makeObserve(this.options.observe)));
        }
        for (const w of this.welcomeWaiters.splice(0)) {
          w();
        }
        break;
      }
      case "peer-joined":
        if (!this.members.includes(msg.id)) {
          this.members.push(msg.id);
        }
        this.rebuildGrid();
        break;
      case "peer-left":
        this.members = this.members.filter((m) => m !== msg.id);
        this.rebuildGrid();
        break;
      case "state":
        this.applyState(msg);
        break;
      case "snapshot":
        renderFrame(this.console_, msg.frame, {
          scale: this.options.screenW / msg.frame.tiles.screen_w,
        });
        break;
      case "error":
        this.grid.dataset.lastError = msg.code;
        break;
      default:
        break; // signal relays and echoes are for the media layer
    }
  }

  private startTicking(): void {
    this.stopTicking();
    this.timer = setInterval(() => this.onTick(), this.tickMs);
  }

  private stopTicking(): void {
    if (this.timer !== null) {
      clearInterval(this.timer);
      this.timer = null;
    }
  }

  private onTick(): void {
    if (this.id === null || this.socket === null) {
      return;
    }
    const now = this.tick * this.tickMs;
    this.tick += 1;
    const raw =
      this.pointer === null
        ? null
        : classifyPoint(this.pointer.x, this.pointer.y, this.rects, this.id);
    const target = this.dwell.update(raw, now);
    // one gaze message per tick; the server coalesces and dedupes
    this.seq += 1;
    this.socket.send(encode(makeGaze(this.seq, this.id, target, now)));
    this.lastSentTarget = target;
    const level = this.speaking ? this.options.speakingLevel ?? 0.8 : 0.0;
    if (level !== this.lastSentLevel) {
      this.seq += 1;
      this.socket.send(encode(makeAudio(this.seq, this.id, level)));
      this.lastSentLevel = level;
    }
  }

  private rebuildGrid(): void {
    this.rects = tileRects(
      this.members,
      this.options.screenW,
      this.options.screenH,
    );
    const doc = this.grid.ownerDocument;
    this.grid.textContent = "";
    for (const r of this.rects) {
      const el = doc.createElement("div");
      el.className = "tile";
      el.dataset.owner = r.owner;
      el.style.position = "absolute";
      el.style.left = `${r.x}px`;
      el.style.top = `${r.y}px`;
      el.style.width = `${r.w}px`;
      el.style.height = `${r.h}px`;
      const label = doc.createElement("span");
      label.className = "tile-label";
      label.textContent = r.owner === this.id ? `${r.owner} (you)` : r.owner;
      el.appendChild(label);
      const mic = doc.createElement("span");
      mic.className = "mic";
      el.appendChild(mic);
      this.grid.appendChild(el);
    }
  }

  private applyState(msg: StateMsg): void {
    const gazingAtMe = new Set(
      msg.edges.filter((e) => e.target === this.id).map((e) => e.source),
    );
    const loud = new Set(
      msg.audio.filter((a) => a.level >= MIC_BADGE_LEVEL).map((a) => a.id),
    );
    for (const el of Array.from(this.grid.children) as HTMLElement[]) {
      const owner = el.dataset.owner ?? "";
      el.classList.toggle("glow", gazingAtMe.has(owner));
      const mic = el.querySelector(".mic");
      if (mic !== null) {
        mic.className = loud.has(owner) ? "mic on" : "mic";
      }
    }
    this.grid.dataset.tick = String(msg.tick);
  }
}
