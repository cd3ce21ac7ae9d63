// Pointer-to-target classification against the tiles this client is
// actually displaying. Matches the relay's semantics: the concentric
// half-width x half-height central area of a tile counts as looking at
// its owner, boundaries inclusive, own tile never reported, and a
// change must hold for the dwell time before it is reported.

export const DWELL_MS = 100.0;

export interface OwnedRect {
  owner: string;
  x: number;
  y: number;
  w: number;
  h: number;
}

export function centralRect(
  r: OwnedRect,
): { x1: number; y1: number; x2: number; y2: number } {
  return {
    x1: r.x + r.w / 4.0,
    y1: r.y + r.h / 4.0,
    x2: r.x + (3.0 * r.w) / 4.0,
    y2: r.y + (3.0 * r.h) / 4.0,
  };
}

export function classifyPoint(
  px: number,
  py: number,
  rects: OwnedRect[],
  self: string,
): string | null {
  for (const r of rects) {
    const c = centralRect(r);
    if (c.x1 <= px && px <= c.x2 && c.y1 <= py && py <= c.y2) {
      return r.owner === self ? null : r.owner;
    }
  }
  return null;
}

export class DwellClassifier {
  private reported: string | null = null;
  private pending: string | null = null;
  private since: number | null = null;

  constructor(private readonly dwellMs: number = DWELL_MS) {}

  /** Feed the raw candidate for this tick; returns the stable target. */
  update(candidate: string | null, t: number): string | null {
    if (this.since === null || candidate !== this.pending) {
      this.pending = candidate;
      this.since = t;
    }
    if (this.pending !== this.reported && t - this.since >= this.dwellMs) {
      this.reported = this.pending;
    }
    return this.reported;
  }

  get current(): string | null {
    return this.reported;
  }
}
