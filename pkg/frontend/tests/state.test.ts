import { afterEach, beforeEach, describe, expect, it, vi } from "vitest";

import {
  Debouncer,
  SequenceGate,
  formatElapsed,
  formatResidual,
  makeSessionId,
  snapToGrid,
} from "../src/state.js";

describe("formatResidual", () => {
  it("renders three decimals", () => {
    expect(formatResidual(0.139)).toBe("R = 0.139");
    expect(formatResidual(0.1394999)).toBe("R = 0.139");
    expect(formatResidual(1)).toBe("R = 1.000");
    expect(formatResidual(0.9815)).toBe("R = 0.982");
  });

  it("rounds, not truncates", () => {
    expect(formatResidual(0.0005)).toBe("R = 0.001");
  });

  it("uses a dash when the residual is unavailable", () => {
    expect(formatResidual(null)).toBe("R = —");
    expect(formatResidual(undefined)).toBe("R = —");
    expect(formatResidual(Number.NaN)).toBe("R = —");
  });
});

describe("formatElapsed", () => {
  it("uses ms below a second and s above", () => {
    expect(formatElapsed(42.4)).toBe("42 ms");
    expect(formatElapsed(1234)).toBe("1.23 s");
  });
});

describe("snapToGrid", () => {
  const grid = { min_mps: 1475, max_mps: 1525, step_mps: 5 };

  it("snaps to the nearest grid value", () => {
    expect(snapToGrid(1503, grid)).toBe(1505);
    expect(snapToGrid(1502, grid)).toBe(1500);
    expect(snapToGrid(1500, grid)).toBe(1500);
  });

  it("clamps to the grid ends", () => {
    expect(snapToGrid(1400, grid)).toBe(1475);
    expect(snapToGrid(1600, grid)).toBe(1525);
  });
});

describe("SequenceGate", () => {
  it("issues increasing sequence numbers", () => {
    const gate = new SequenceGate();
    expect(gate.issue()).toBe(0);
    expect(gate.issue()).toBe(1);
    expect(gate.latestIssued).toBe(1);
  });

  it("drops responses older than the newest applied", () => {
    const gate = new SequenceGate();
    const a = gate.issue();
    const b = gate.issue();
    expect(gate.accept(b)).toBe(true); // newer lands first
    expect(gate.accept(a)).toBe(false); // stale response dropped
  });

  it("accepts in-order responses", () => {
    const gate = new SequenceGate();
    const a = gate.issue();
    const b = gate.issue();
    expect(gate.accept(a)).toBe(true);
    expect(gate.accept(b)).toBe(true);
  });
});

describe("Debouncer", () => {
  beforeEach(() => vi.useFakeTimers());
  afterEach(() => vi.useRealTimers());

  it("collapses rapid calls into the trailing one", () => {
    const d = new Debouncer(150);
    const fn = vi.fn();
    d.schedule(fn);
    vi.advanceTimersByTime(100);
    d.schedule(fn); // restart the 150 ms window
    vi.advanceTimersByTime(100);
    expect(fn).not.toHaveBeenCalled();
    vi.advanceTimersByTime(50);
    expect(fn).toHaveBeenCalledTimes(1);
  });

  it("fires separate calls when spaced out", () => {
    const d = new Debouncer(150);
    const fn = vi.fn();
    d.schedule(fn);
    vi.advanceTimersByTime(151);
    d.schedule(fn);
    vi.advanceTimersByTime(151);
    expect(fn).toHaveBeenCalledTimes(2);
  });

  it("cancel suppresses the pending call", () => {
    const d = new Debouncer(150);
    const fn = vi.fn();
    d.schedule(fn);
    d.cancel();
    vi.advanceTimersByTime(300);
    expect(fn).not.toHaveBeenCalled();
  });
});

describe("makeSessionId", () => {
  it("produces distinct ids", () => {
    expect(makeSessionId()).not.toBe(makeSessionId());
  });
});
