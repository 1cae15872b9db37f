/** Hover-dwell recorder: the browser stand-in for an eye tracker.
 *
 *  While the pointer rests inside a collage cell, one gaze-schema sample is
 *  synthesized per 20 ms of hover (a 50 Hz-equivalent stream), stamped at the
 *  pointer's coordinates with pupil = 0 and valid = 1.  Timestamps are
 *  monotone and relative to whatever clock the caller feeds in (the app uses
 *  milliseconds since the round became visible).
 */

import type { GazeSample } from "./api.js";

export const SAMPLE_PERIOD_MS = 20;

export class DwellRecorder {
  private currentCell: string | null = null;
  private residenceStart = 0;
  private ticksEmitted = 0;
  private lastX = 0;
  private lastY = 0;
  private out: GazeSample[] = [];

  /** Report the pointer's state: inside `cellId` (or null for outside) at
   *  logical coordinates (x, y) at time `tMs`.  Samples due since the last
   *  report are synthesized at the position the pointer held during that
   *  interval. */
  update(cellId: string | null, x: number, y: number, tMs: number): void {
    if (cellId === this.currentCell) {
      if (cellId !== null) {
        this.emitDue(tMs);
        this.lastX = x;
        this.lastY = y;
      }
      return;
    }
    if (this.currentCell !== null) this.emitDue(tMs);
    this.currentCell = cellId;
    if (cellId !== null) {
      this.residenceStart = tMs;
      this.ticksEmitted = 0;
      this.lastX = x;
      this.lastY = y;
    }
  }

  /** The pointer left every cell at time `tMs`. */
  leave(tMs: number): void {
    this.update(null, 0, 0, tMs);
  }

  /** Synthesize samples due up to `tMs` without changing pointer state. */
  flush(tMs: number): void {
    if (this.currentCell !== null) this.emitDue(tMs);
  }

  /** Return all samples collected so far and reset the buffer (pointer
   *  residence state is kept, so recording continues seamlessly). */
  drain(): GazeSample[] {
    const samples = this.out;
    this.out = [];
    return samples;
  }

  /** Drop buffered samples and forget the pointer's residence. */
  reset(): void {
    this.out = [];
    this.currentCell = null;
    this.ticksEmitted = 0;
  }

  private emitDue(tMs: number): void {
    const elapsed = tMs - this.residenceStart;
    if (elapsed <= 0) return;
    const due = Math.floor(elapsed / SAMPLE_PERIOD_MS);
    for (let k = this.ticksEmitted + 1; k <= due; k++) {
      this.out.push([
        this.residenceStart + k * SAMPLE_PERIOD_MS,
        this.lastX,
        this.lastY,
        0,
        1,
      ]);
    }
    if (due > this.ticksEmitted) this.ticksEmitted = due;
  }
}
