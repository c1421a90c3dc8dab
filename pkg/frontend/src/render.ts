/**
 * Figure dispatch: reads experiment CSV (or grid export), recomputes the
 * fitted slope from raw rows, checks it against the summary row, and writes
 * an SVG.  Render output is a pure function of (input files, spec).
 */
import { readFileSync, writeFileSync } from "node:fs";

import { metricRows, parseRecords, summaryValue } from "./csv.js";
import { Fit, logLogFit } from "./fit.js";
import { occupiedCells, parseDenseGrid } from "./grid.js";
import { annotationText, countRects, fmt, heatmap, scatterWithFit } from "./svg.js";

export type FigureKind = "exponent-fit" | "heatmap" | "dim-ladder";

export interface FigureSpec {
  kind: FigureKind;
  input: string;       // CSV path (exponent-fit, dim-ladder) or dense grid path
  output: string;      // SVG path
  title?: string;
}

export interface RenderResult {
  output: string;
  slope?: number;
  summarySlope?: number;
  occupied?: number;
  annotation?: string;
  svg: string;
}

const SUMMARY_TOL = 1e-6;

function renderExponentFit(spec: FigureSpec, text: string): RenderResult {
  const rows = parseRecords(text);
  const ratios = metricRows(rows, "ratio");
  if (ratios.length < 2) {
    throw new Error("exponent-fit needs at least two ratio rows");
  }
  const fit: Fit = logLogFit(
    ratios.map((r) => r.delta),
    ratios.map((r) => r.metricValue),
  );
  const summary = summaryValue(rows, "epsilon_hat");
  if (summary !== undefined && Math.abs(summary - fit.slope) > SUMMARY_TOL) {
    throw new Error(
      `recomputed slope ${fit.slope} disagrees with summary ${summary}`,
    );
  }
  const annotation = `eps_hat = ${fmt(fit.slope)}`;
  const svg = scatterWithFit(
    spec.title ?? `tube-sum ratio vs scale (run ${ratios[0].runId})`,
    ratios.map((r) => Math.log(1 / r.delta)),
    ratios.map((r) => Math.log(r.metricValue)),
    fit,
    annotation,
    "log(1/delta)",
    "log(ratio)",
  );
  return { output: spec.output, slope: fit.slope, summarySlope: summary, annotation, svg };
}

function renderDimLadder(spec: FigureSpec, text: string): RenderResult {
  const rows = parseRecords(text);
  const counts = metricRows(rows, "box_count");
  if (counts.length < 3) {
    throw new Error("dim-ladder needs at least three box_count rows");
  }
  const fit = logLogFit(
    counts.map((r) => r.h),
    counts.map((r) => r.metricValue),
  );
  const annotation = `box_dim = ${fmt(fit.slope)}`;
  const svg = scatterWithFit(
    spec.title ?? `box counts vs scale (run ${counts[0].runId})`,
    counts.map((r) => Math.log(1 / r.h)),
    counts.map((r) => Math.log(r.metricValue)),
    fit,
    annotation,
    "log(1/h)",
    "log N(h)",
  );
  return { output: spec.output, slope: fit.slope, annotation, svg };
}

function renderHeatmap(spec: FigureSpec, text: string): RenderResult {
  const grid = parseDenseGrid(text);
  const occupied = occupiedCells(grid);
  const annotation = `occupied cells = ${occupied}`;
  const svg = heatmap(
    spec.title ?? `tube-sum field (M=${grid.M})`,
    grid.counts,
    annotation,
  );
  const drawn = countRects(svg);
  if (drawn !== occupied) {
    throw new Error(`drew ${drawn} cells for ${occupied} occupied`);
  }
  return { output: spec.output, occupied, annotation, svg };
}

export function render(spec: FigureSpec): RenderResult {
  const text = readFileSync(spec.input, "utf8");
  let result: RenderResult;
  switch (spec.kind) {
    case "exponent-fit":
      result = renderExponentFit(spec, text);
      break;
    case "dim-ladder":
      result = renderDimLadder(spec, text);
      break;
    case "heatmap":
      result = renderHeatmap(spec, text);
      break;
    default:
      throw new Error(`unknown figure kind ${(spec as FigureSpec).kind}`);
  }
  writeFileSync(spec.output, result.svg);
  return result;
}

export { annotationText };
