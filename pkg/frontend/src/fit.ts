/** Ordinary least squares on (x, y) pairs; the plots recompute every slope
 * from raw rows rather than trusting summary values. */

export interface Fit {
  slope: number;
  intercept: number;
  r2: number;
}

export function leastSquares(xs: number[], ys: number[]): Fit {
  const n = xs.length;
  if (n < 2 || ys.length !== n) {
    throw new Error(`need >= 2 paired points, got ${n}/${ys.length}`);
  }
  const mx = xs.reduce((a, b) => a + b, 0) / n;
  const my = ys.reduce((a, b) => a + b, 0) / n;
  let sxx = 0;
  let sxy = 0;
  let syy = 0;
  for (let i = 0; i < n; i++) {
    sxx += (xs[i] - mx) * (xs[i] - mx);
    sxy += (xs[i] - mx) * (ys[i] - my);
    syy += (ys[i] - my) * (ys[i] - my);
  }
  if (sxx === 0) {
    throw new Error("degenerate fit: all x equal");
  }
  const slope = sxy / sxx;
  const intercept = my - slope * mx;
  let ssRes = 0;
  for (let i = 0; i < n; i++) {
    const r = ys[i] - (slope * xs[i] + intercept);
    ssRes += r * r;
  }
  const r2 = syy > 0 ? 1 - ssRes / syy : NaN;
  return { slope, intercept, r2 };
}

export function logLogFit(scales: number[], values: number[]): Fit {
  return leastSquares(
    scales.map((s) => Math.log(1 / s)),
    values.map((v) => Math.log(v)),
  );
}
