// Entry point. URL parameters pick the session and role:
//   ?session=demo&server=ws://localhost:8765
//   ?role=host&observe=u1       host console rendering observed frames
//   ?skip-calibration=1         jump straight into the call
//
// Gaze source is the pointer. A webcam estimator can swap in by feeding
// CalibrationPanel and GazeClient the same {x, y} predictions.

import { CalibrationPanel } from "./calibration.js";
import { GazeClient } from "./client.js";

function param(name: string, fallback: string): string {
  return new URLSearchParams(window.location.search).get(name) ?? fallback;
}

function startCall(): void {
  const mount = document.getElementById("app");
  if (mount === null) {
    throw new Error("missing #app mount point");
  }
  const client = new GazeClient({
    url: param("server", "ws://localhost:8765"),
    session: param("session", "demo"),
    role: param("role", "participant") === "host" ? "host" : "participant",
    observe: param("observe", "") || null,
    mount,
    screenW: window.innerWidth,
    screenH: window.innerHeight,
  });
  window.addEventListener("keydown", (ev) => {
    if (ev.code === "Space") {
      client.setSpeaking(true);
    }
  });
  window.addEventListener("keyup", (ev) => {
    if (ev.code === "Space") {
      client.setSpeaking(false);
    }
  });
  client.connect();
}

function boot(): void {
  if (param("skip-calibration", "") === "1" || param("role", "") === "host") {
    startCall();
    return;
  }
  const panel = new CalibrationPanel(document, {
    screenW: window.innerWidth,
    screenH: window.innerHeight,
  });
  document.body.appendChild(panel.root);
  const feed = (ev: MouseEvent) => panel.feed({ x: ev.clientX, y: ev.clientY });
  window.addEventListener("mousemove", feed);
  panel.root
    .querySelector(".calibration-proceed")
    ?.addEventListener("click", () => {
      window.removeEventListener("mousemove", feed);
      panel.root.remove();
      startCall();
    });
}

boot();
