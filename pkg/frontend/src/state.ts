/**
 * Pure view-state logic for the SoS tuner: residual formatting, slider
 * snapping, request debouncing and stale-response rejection. Kept free
 * of DOM and fetch so it is unit-testable.
 */

/** Residual readout, three decimals; em dash when unavailable. */
export function formatResidual(r: number | null | undefined): string {
  if (r === null || r === undefined || !Number.isFinite(r)) {
    return "R = —";
  }
  return `R = ${r.toFixed(3)}`;
}

export function formatElapsed(ms: number): string {
  return ms >= 1000 ? `${(ms / 1000).toFixed(2)} s` : `${ms.toFixed(0)} ms`;
}

export interface SosGrid {
  min_mps: number;
  max_mps: number;
  step_mps: number;
}

/** Snap an arbitrary slider value onto the discrete SoS grid. */
export function snapToGrid(value: number, grid: SosGrid): number {
  const steps = Math.round((value - grid.min_mps) / grid.step_mps);
  const snapped = grid.min_mps + steps * grid.step_mps;
  return Math.min(grid.max_mps, Math.max(grid.min_mps, snapped));
}

/**
 * Monotone sequence gate: each request takes a fresh number, and a
 * response is applied only if nothing newer was issued since. Out of
 * order responses (slow older reconstructions) are dropped.
 */
export class SequenceGate {
  private next = 0;
  private applied = -1;

  issue(): number {
    return this.next++;
  }

  /** True if this response is newer than anything shown so far. */
  accept(seq: number): boolean {
    if (seq <= this.applied) {
      return false;
    }
    this.applied = seq;
    return true;
  }

  get latestIssued(): number {
    return this.next - 1;
  }
}

type Timer = ReturnType<typeof setTimeout>;

/**
 * Trailing-edge debouncer: rapid slider moves collapse into one call
 * `delayMs` after the last movement.
 */
export class Debouncer {
  private timer: Timer | null = null;

  constructor(private readonly delayMs: number) {}

  schedule(fn: () => void): void {
    if (this.timer !== null) {
      clearTimeout(this.timer);
    }
    this.timer = setTimeout(() => {
      this.timer = null;
      fn();
    }, this.delayMs);
  }

  cancel(): void {
    if (this.timer !== null) {
      clearTimeout(this.timer);
      this.timer = null;
    }
  }
}

/** Random session identifier for server-side supersession of MB solves. */
export function makeSessionId(): string {
  return `ui-${Date.now().toString(36)}-${Math.random().toString(36).slice(2, 10)}`;
}
