// Applies a received render frame to the DOM verbatim. Nothing here
// decides what to draw; the frame already carries tile geometry, arrow
// endpoints, glow intensities, poses and mic flags, and this module's
// only job is to turn each directive into elements and styles.

import type { FrameDict } from "./protocol.js";

const SVG_NS = "http://www.w3.org/2000/svg";

export interface RenderOptions {
  /** Uniform scale from frame coordinates to CSS pixels. */
  scale?: number;
}

export function renderFrame(
  root: HTMLElement,
  frame: FrameDict,
  options: RenderOptions = {},
): void {
  const doc = root.ownerDocument;
  const s = options.scale ?? 1.0;
  root.textContent = ""; // rebuild; the frame is the whole truth
  root.dataset.mode = frame.mode;
  root.dataset.viewer = frame.viewer;
  root.dataset.t = String(frame.t);
  root.style.position = "relative";
  root.style.width = `${frame.tiles.screen_w * s}px`;
  root.style.height = `${frame.tiles.screen_h * s}px`;

  const glow = new Map(frame.glows.map((g) => [g.owner, g.intensity]));
  const pose = new Map(frame.poses.map((p) => [p.owner, p]));
  const mic = new Map(frame.mic_icons.map((m) => [m.owner, m.on]));

  for (const tile of frame.tiles.tiles) {
    const el = doc.createElement("div");
    el.className = "tile";
    el.dataset.owner = tile.owner;
    el.style.position = "absolute";
    el.style.left = `${tile.x * s}px`;
    el.style.top = `${tile.y * s}px`;
    el.style.width = `${tile.w * s}px`;
    el.style.height = `${tile.h * s}px`;

    const intensity = glow.get(tile.owner);
    if (intensity !== undefined) {
      el.classList.add("glow");
      el.style.setProperty("--glow", String(intensity));
      el.style.boxShadow = `0 0 24px 8px rgba(120, 200, 255, ${intensity})`;
    }
    const p = pose.get(tile.owner);
    if (p !== undefined && (p.yaw_deg !== 0 || p.shake_px !== 0)) {
      el.style.transform =
        `perspective(800px) rotateY(${p.yaw_deg}deg)` +
        ` translateX(${p.shake_px * s}px)`;
    }

    const label = doc.createElement("span");
    label.className = "tile-label";
    label.textContent = tile.owner;
    el.appendChild(label);

    const micEl = doc.createElement("span");
    micEl.className = mic.get(tile.owner) ? "mic on" : "mic";
    el.appendChild(micEl);

    root.appendChild(el);
  }

  if (frame.arrows.length > 0) {
    const svg = doc.createElementNS(SVG_NS, "svg");
    svg.setAttribute("class", "arrows");
    svg.setAttribute(
      "viewBox",
      `0 0 ${frame.tiles.screen_w} ${frame.tiles.screen_h}`,
    );
    svg.setAttribute("width", String(frame.tiles.screen_w * s));
    svg.setAttribute("height", String(frame.tiles.screen_h * s));
    svg.style.position = "absolute";
    svg.style.left = "0";
    svg.style.top = "0";
    svg.style.pointerEvents = "none";
    const defs = doc.createElementNS(SVG_NS, "defs");
    const marker = doc.createElementNS(SVG_NS, "marker");
    marker.setAttribute("id", "arrowhead");
    marker.setAttribute("markerWidth", "8");
    marker.setAttribute("markerHeight", "6");
    marker.setAttribute("refX", "8");
    marker.setAttribute("refY", "3");
    marker.setAttribute("orient", "auto");
    const head = doc.createElementNS(SVG_NS, "path");
    head.setAttribute("d", "M0,0 L8,3 L0,6 Z");
    marker.appendChild(head);
    defs.appendChild(marker);
    svg.appendChild(defs);
    for (const a of frame.arrows) {
      const line = doc.createElementNS(SVG_NS, "line");
      line.setAttribute("x1", String(a.x1));
      line.setAttribute("y1", String(a.y1));
      line.setAttribute("x2", String(a.x2));
      line.setAttribute("y2", String(a.y2));
      line.setAttribute("opacity", String(a.opacity));
      line.setAttribute("data-source", a.source);
      line.setAttribute("data-target", a.target);
      line.setAttribute("marker-end", "url(#arrowhead)");
      svg.appendChild(line);
    }
    root.appendChild(svg);
  }
}
