// The client's own video grid. This is display geometry for the local
// viewport only; the relay's layout engine keeps its own idea of tile
// geometry for frames it renders, and the two never need to agree.

import type { OwnedRect } from "./gaze.js";

export const GUTTER_PX = 16;

export function gridShape(n: number): { cols: number; rows: number } {
  const cols = Math.ceil(Math.sqrt(n));
  const rows = Math.ceil(n / cols);
  return { cols, rows };
}

export function tileRects(
  members: string[],
  screenW: number,
  screenH: number,
  gutter: number = GUTTER_PX,
): OwnedRect[] {
  const n = members.length;
  if (n === 0) {
    return [];
  }
  const { cols, rows } = gridShape(n);
  const cellW = (screenW - gutter * (cols + 1)) / cols;
  const cellH = (screenH - gutter * (rows + 1)) / rows;
  const rects: OwnedRect[] = [];
  for (let i = 0; i < n; i++) {
    const row = Math.floor(i / cols);
    const col = i % cols;
    const inRow = row === rows - 1 ? n - row * cols : cols;
    // center a short last row
    const rowOffset = ((cols - inRow) * (cellW + gutter)) / 2;
    rects.push({
      owner: members[i]!,
      x: gutter + rowOffset + col * (cellW + gutter),
      y: gutter + row * (cellH + gutter),
      w: cellW,
      h: cellH,
    });
  }
  return rects;
}
