/**
 * Deterministic SVG document builders: pure functions of their inputs with
 * pinned styling, so repeated renders are byte-identical.
 */
import { Fit } from "./fit.js";

const WIDTH = 640;
const HEIGHT = 480;
const MARGIN = { left: 64, right: 16, top: 24, bottom: 48 };

export function fmt(x: number, digits = 6): string {
  return x.toFixed(digits);
}

interface Frame {
  x0: number;
  x1: number;
  y0: number;
  y1: number;
  sx: (x: number) => number;
  sy: (y: number) => number;
}

function frame(xs: number[], ys: number[]): Frame {
  const pad = (lo: number, hi: number): [number, number] => {
    const span = hi - lo || 1;
    return [lo - 0.05 * span, hi + 0.05 * span];
  };
  const [x0, x1] = pad(Math.min(...xs), Math.max(...xs));
  const [y0, y1] = pad(Math.min(...ys), Math.max(...ys));
  const iw = WIDTH - MARGIN.left - MARGIN.right;
  const ih = HEIGHT - MARGIN.top - MARGIN.bottom;
  return {
    x0,
    x1,
    y0,
    y1,
    sx: (x) => MARGIN.left + ((x - x0) / (x1 - x0)) * iw,
    sy: (y) => HEIGHT - MARGIN.bottom - ((y - y0) / (y1 - y0)) * ih,
  };
}

function open(title: string): string[] {
  return [
    `<svg xmlns="http://www.w3.org/2000/svg" width="${WIDTH}" height="${HEIGHT}" viewBox="0 0 ${WIDTH} ${HEIGHT}">`,
    `<rect width="${WIDTH}" height="${HEIGHT}" fill="white"/>`,
    `<text x="${WIDTH / 2}" y="16" text-anchor="middle" font-family="monospace" font-size="13">${title}</text>`,
  ];
}

function axes(f: Frame, xLabel: string, yLabel: string): string[] {
  const bx = HEIGHT - MARGIN.bottom;
  return [
    `<line x1="${MARGIN.left}" y1="${bx}" x2="${WIDTH - MARGIN.right}" y2="${bx}" stroke="black"/>`,
    `<line x1="${MARGIN.left}" y1="${MARGIN.top}" x2="${MARGIN.left}" y2="${bx}" stroke="black"/>`,
    `<text x="${WIDTH / 2}" y="${HEIGHT - 12}" text-anchor="middle" font-family="monospace" font-size="12">${xLabel}</text>`,
    `<text x="16" y="${HEIGHT / 2}" text-anchor="middle" font-family="monospace" font-size="12" transform="rotate(-90 16 ${HEIGHT / 2})">${yLabel}</text>`,
  ];
}

export function scatterWithFit(
  title: string,
  xs: number[],
  ys: number[],
  fit: Fit,
  annotation: string,
  xLabel: string,
  yLabel: string,
): string {
  const f = frame(xs, ys);
  const parts = open(title).concat(axes(f, xLabel, yLabel));
  const yA = fit.slope * f.x0 + fit.intercept;
  const yB = fit.slope * f.x1 + fit.intercept;
  parts.push(
    `<line x1="${fmt(f.sx(f.x0), 2)}" y1="${fmt(f.sy(yA), 2)}" x2="${fmt(f.sx(f.x1), 2)}" y2="${fmt(f.sy(yB), 2)}" stroke="#c22" stroke-width="1.5"/>`,
  );
  xs.forEach((x, i) => {
    parts.push(
      `<circle cx="${fmt(f.sx(x), 2)}" cy="${fmt(f.sy(ys[i]), 2)}" r="3.5" fill="#1560bd"/>`,
    );
  });
  parts.push(
    `<text x="${MARGIN.left + 10}" y="${MARGIN.top + 16}" font-family="monospace" font-size="13" class="annotation">${annotation}</text>`,
  );
  parts.push("</svg>");
  return parts.join("\n") + "\n";
}

export function heatmap(title: string, counts: number[][], annotation: string): string {
  const M = counts.length;
  let max = 0;
  for (const row of counts) for (const v of row) max = Math.max(max, v);
  const iw = WIDTH - MARGIN.left - MARGIN.right;
  const ih = HEIGHT - MARGIN.top - MARGIN.bottom;
  const cell = Math.min(iw / M, ih / M);
  const parts = open(title);
  // one rect per occupied cell; grayscale darkness by count
  for (let i = 0; i < M; i++) {
    for (let j = 0; j < M; j++) {
      const v = counts[i][j];
      if (v <= 0) continue;
      const shade = Math.max(0, 230 - Math.round((v / (max || 1)) * 200));
      const x = MARGIN.left + i * cell;
      const y = HEIGHT - MARGIN.bottom - (j + 1) * cell;
      parts.push(
        `<rect x="${fmt(x, 3)}" y="${fmt(y, 3)}" width="${fmt(cell, 3)}" height="${fmt(cell, 3)}" fill="rgb(${shade},${shade},${shade})" class="cell"/>`,
      );
    }
  }
  parts.push(
    `<text x="${MARGIN.left + 10}" y="${MARGIN.top + 16}" font-family="monospace" font-size="13" class="annotation">${annotation}</text>`,
  );
  parts.push("</svg>");
  return parts.join("\n") + "\n";
}

export function countRects(svg: string): number {
  return (svg.match(/class="cell"/g) ?? []).length;
}

export function annotationText(svg: string): string | undefined {
  const m = svg.match(/class="annotation">([^<]*)<\/text>/);
  return m?.[1];
}
