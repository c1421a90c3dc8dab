import { describe, expect, it } from "vitest";

import { leastSquares, logLogFit } from "../src/fit.js";

describe("leastSquares", () => {
  it("recovers an exact line", () => {
    const xs = [0, 1, 2, 3];
    const ys = xs.map((x) => 2.5 * x - 1.25);
    const fit = leastSquares(xs, ys);
    expect(fit.slope).toBeCloseTo(2.5, 12);
    expect(fit.intercept).toBeCloseTo(-1.25, 12);
    expect(fit.r2).toBeCloseTo(1.0, 12);
  });

  it("rejects degenerate input", () => {
    expect(() => leastSquares([1, 1], [0, 1])).toThrow(/degenerate/);
    expect(() => leastSquares([1], [0])).toThrow(/paired/);
  });
});

describe("logLogFit", () => {
  it("reads off an exact power law", () => {
    const scales = [1 / 16, 1 / 32, 1 / 64, 1 / 128];
    const values = scales.map((s) => Math.pow(1 / s, 0.5));
    const fit = logLogFit(scales, values);
    expect(Math.abs(fit.slope - 0.5)).toBeLessThan(1e-12);
  });
});
