import { mkdtempSync, readFileSync, writeFileSync } from "node:fs";
import { tmpdir } from "node:os";
import { join } from "node:path";

import { describe, expect, it } from "vitest";

import { parseRecords, SchemaError } from "../src/csv.js";
import { annotationText, render } from "../src/render.js";
import { countRects } from "../src/svg.js";

const HEADER =
  "run_id,kind,d,k,beta,delta,h,rho,seed,metric_name,metric_value,wall_ms";

function row(delta: number, name: string, value: number): string {
  return [
    "abc123def456",
    "curved-kakeya",
    "2",
    "1",
    "1",
    String(delta),
    String(delta / 4),
    "0.0625",
    "7",
    name,
    String(value),
    "0",
  ].join(",");
}

function powerLawCsv(exponent: number): string {
  const deltas = [1 / 16, 1 / 32, 1 / 64, 1 / 128, 1 / 256];
  const lines = [HEADER];
  for (const d of deltas) {
    lines.push(row(d, "ratio", Math.pow(1 / d, exponent)));
    lines.push(row(d, "lp_norm", 1.0));
  }
  // summary row as the primary would emit it (delta = 0)
  lines.push(row(0, "epsilon_hat", exponent));
  return lines.join("\n") + "\n";
}

function denseGrid(): { text: string; occupied: number } {
  const M = 16;
  const rows: string[] = ["kakeyalab-dense v1", `M=${M} h=0.125`];
  let occupied = 0;
  const mat: number[][] = [];
  for (let i = 0; i < M; i++) {
    const r: number[] = [];
    for (let j = 0; j < M; j++) {
      const v = Math.abs(i - M / 2) <= 1 ? 1 + (j % 3) : 0; // a vertical band
      if (v > 0) occupied++;
      r.push(v);
    }
    mat.push(r);
  }
  for (const r of mat) rows.push(r.join(" "));
  return { text: rows.join("\n") + "\n", occupied };
}

describe("exponent-fit figure", () => {
  it("annotates the recomputed slope, matching the summary row to 1e-6", () => {
    const dir = mkdtempSync(join(tmpdir(), "klplot-"));
    const input = join(dir, "records.csv");
    writeFileSync(input, powerLawCsv(0.5));
    const out = join(dir, "fig.svg");
    const result = render({ kind: "exponent-fit", input, output: out });
    expect(result.slope).toBeDefined();
    expect(Math.abs(result.slope! - 0.5)).toBeLessThan(1e-9);
    expect(result.summarySlope).toBe(0.5);
    expect(result.annotation).toBe("eps_hat = 0.500000");
    const svg = readFileSync(out, "utf8");
    expect(annotationText(svg)).toBe("eps_hat = 0.500000");
  });

  it("fails loudly when the summary row disagrees", () => {
    const dir = mkdtempSync(join(tmpdir(), "klplot-"));
    const input = join(dir, "bad.csv");
    const text = powerLawCsv(0.5).replace(
      row(0, "epsilon_hat", 0.5),
      row(0, "epsilon_hat", 0.75),
    );
    writeFileSync(input, text);
    expect(() =>
      render({ kind: "exponent-fit", input, output: join(dir, "x.svg") }),
    ).toThrow(/disagrees/);
  });

  it("renders byte-identically on repeated invocation", () => {
    const dir = mkdtempSync(join(tmpdir(), "klplot-"));
    const input = join(dir, "records.csv");
    writeFileSync(input, powerLawCsv(0.25));
    const outA = join(dir, "a.svg");
    const outB = join(dir, "b.svg");
    render({ kind: "exponent-fit", input, output: outA });
    render({ kind: "exponent-fit", input, output: outB });
    expect(readFileSync(outA, "utf8")).toBe(readFileSync(outB, "utf8"));
  });
});

describe("heatmap figure", () => {
  it("draws exactly one rect per occupied cell", () => {
    const dir = mkdtempSync(join(tmpdir(), "klplot-"));
    const { text, occupied } = denseGrid();
    const input = join(dir, "grid_dense.txt");
    writeFileSync(input, text);
    const out = join(dir, "heat.svg");
    const result = render({ kind: "heatmap", input, output: out });
    expect(result.occupied).toBe(occupied);
    const svg = readFileSync(out, "utf8");
    expect(countRects(svg)).toBe(occupied);
  });
});

describe("dim-ladder figure", () => {
  it("fits the box-count rows", () => {
    const dir = mkdtempSync(join(tmpdir(), "klplot-"));
    const lines = [HEADER];
    const scales = [0.25, 0.125, 0.0625, 0.03125];
    for (const h of scales) {
      const n = Math.round(Math.pow(1 / h, 0.631));
      lines.push(
        [
          "feedc0ffee00",
          "boxdim",
          "2",
          "1",
          "0.6309",
          String(h),
          String(h),
          "0.0625",
          "0",
          "box_count",
          String(n),
          "0",
        ].join(","),
      );
    }
    const input = join(dir, "boxdim.csv");
    writeFileSync(input, lines.join("\n") + "\n");
    const out = join(dir, "ladder.svg");
    const result = render({ kind: "dim-ladder", input, output: out });
    expect(result.slope).toBeGreaterThan(0.5);
    expect(result.slope).toBeLessThan(0.75);
  });
});

describe("schema validation", () => {
  it("names the missing column", () => {
    const bad = "run_id,kind,delta\nx,y,0.5\n";
    expect(() => parseRecords(bad)).toThrow(SchemaError);
    expect(() => parseRecords(bad)).toThrow(/missing column d/);
  });
});
