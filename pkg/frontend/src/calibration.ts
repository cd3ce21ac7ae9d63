// Nine-point calibration: show a dot, collect gaze predictions while
// the user fixates it, score the pooled cloud. The scoring function is
// a direct port of the server-side one and is held bit-equal to it by
// fixture tests, since both ends gate on the same 80% line.

export const CALIBRATION_PASS_PCT = 80.0;
export const CALIBRATION_RADIUS_PX = 60.0;
export const CALIBRATION_REF_SCREEN_W = 1920.0;

export interface Point {
  x: number;
  y: number;
}

export interface CalibrationReport {
  accuracy: number; // percent of predictions inside the radius
  samplesUsed: number;
  passed: boolean;
}

export function calibrationRadius(screenW: number): number {
  return (CALIBRATION_RADIUS_PX * screenW) / CALIBRATION_REF_SCREEN_W;
}

export function scoreCalibration(
  predictions: Point[],
  target: Point,
  radius: number,
): CalibrationReport {
  if (predictions.length === 0) {
    throw new Error("calibration needs at least one prediction");
  }
  let inside = 0;
  for (const p of predictions) {
    if (Math.hypot(p.x - target.x, p.y - target.y) <= radius) {
      inside += 1;
    }
  }
  const accuracy = (100.0 * inside) / predictions.length;
  return {
    accuracy,
    samplesUsed: predictions.length,
    passed: accuracy >= CALIBRATION_PASS_PCT,
  };
}

export function ninePoints(screenW: number, screenH: number): Point[] {
  const fractions = [0.1, 0.5, 0.9];
  const points: Point[] = [];
  for (const fy of fractions) {
    for (const fx of fractions) {
      points.push({ x: fx * screenW, y: fy * screenH });
    }
  }
  return points;
}

export interface FlowOptions {
  screenW: number;
  screenH: number;
  samplesPerPoint?: number;
}

/** Click-through state machine; UI drives it, tests drive it directly.
 *
 * Every prediction is scored against the point it was captured for,
 * then pooled into one report, so a single bad corner cannot hide
 * behind eight good ones.
 */
export class CalibrationFlow {
  readonly points: Point[];
  readonly radius: number;
  private readonly perPoint: number;
  private index = 0;
  private captured: { prediction: Point; target: Point }[] = [];
  private current: Point[] = [];

  constructor(options: FlowOptions) {
    this.points = ninePoints(options.screenW, options.screenH);
    this.radius = calibrationRadius(options.screenW);
    this.perPoint = options.samplesPerPoint ?? 20;
  }

  get done(): boolean {
    return this.index >= this.points.length;
  }

  get activePoint(): Point | null {
    return this.done ? null : this.points[this.index]!;
  }

  get progress(): { point: number; total: number; samples: number } {
    return {
      point: Math.min(this.index + 1, this.points.length),
      total: this.points.length,
      samples: this.current.length,
    };
  }

  /** Feed one gaze (or pointer) prediction; advances automatically. */
  addSample(prediction: Point): void {
    const target = this.activePoint;
    if (target === null) {
      return; // flow finished, late samples are dropped
    }
    this.current.push(prediction);
    if (this.current.length >= this.perPoint) {
      for (const p of this.current) {
        this.captured.push({ prediction: p, target });
      }
      this.current = [];
      this.index += 1;
    }
  }

  report(): CalibrationReport {
    if (this.captured.length === 0) {
      throw new Error("calibration needs at least one prediction");
    }
    let inside = 0;
    for (const { prediction, target } of this.captured) {
      const d = Math.hypot(prediction.x - target.x, prediction.y - target.y);
      if (d <= this.radius) {
        inside += 1;
      }
    }
    const accuracy = (100.0 * inside) / this.captured.length;
    return {
      accuracy,
      samplesUsed: this.captured.length,
      passed: accuracy >= CALIBRATION_PASS_PCT,
    };
  }
}

/** DOM panel around the flow: dot to fixate, progress text, proceed
 * button that stays disabled until the report passes. */
export class CalibrationPanel {
  readonly root: HTMLElement;
  readonly flow: CalibrationFlow;
  private readonly dot: HTMLElement;
  private readonly status: HTMLElement;
  private readonly proceed: HTMLButtonElement;
  private onDone: ((report: CalibrationReport) => void) | null = null;

  constructor(doc: Document, options: FlowOptions) {
    this.flow = new CalibrationFlow(options);
    this.root = doc.createElement("div");
    this.root.className = "calibration";
    this.dot = doc.createElement("div");
    this.dot.className = "calibration-dot";
    this.status = doc.createElement("div");
    this.status.className = "calibration-status";
    this.proceed = doc.createElement("button");
    this.proceed.className = "calibration-proceed";
    this.proceed.textContent = "Proceed";
    this.proceed.disabled = true;
    this.root.append(this.dot, this.status, this.proceed);
    this.placeDot();
  }

  whenDone(fn: (report: CalibrationReport) => void): void {
    this.onDone = fn;
  }

  get proceedEnabled(): boolean {
    return !this.proceed.disabled;
  }

  feed(prediction: Point): void {
    if (this.flow.done) {
      return;
    }
    this.flow.addSample(prediction);
    this.placeDot();
    if (this.flow.done) {
      const report = this.flow.report();
      this.status.textContent = `accuracy ${report.accuracy.toFixed(1)}% (${
        report.passed ? "passed" : "below 80%, redo calibration"
      })`;
      this.proceed.disabled = !report.passed;
      if (this.onDone) {
        this.onDone(report);
      }
    }
  }

  private placeDot(): void {
    const p = this.flow.activePoint;
    if (p === null) {
      this.dot.style.display = "none";
      return;
    }
    const { point, total, samples } = this.flow.progress;
    this.dot.style.left = `${p.x}px`;
    this.dot.style.top = `${p.y}px`;
    this.status.textContent = `point ${point}/${total}, hold (${samples})`;
  }
}
