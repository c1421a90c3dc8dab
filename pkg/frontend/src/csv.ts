/**
 * Reader for the experiment CSV schema emitted by the kakeyalab CLI.
 *
 * Columns (one metric per row):
 * run_id,kind,d,k,beta,delta,h,rho,seed,metric_name,metric_value,wall_ms
 */

export const REQUIRED_COLUMNS = [
  "run_id",
  "kind",
  "d",
  "k",
  "beta",
  "delta",
  "h",
  "rho",
  "seed",
  "metric_name",
  "metric_value",
  "wall_ms",
] as const;

export interface MetricRow {
  runId: string;
  kind: string;
  d: number;
  k: number;
  beta: number;
  delta: number;
  h: number;
  rho: number;
  seed: number;
  metricName: string;
  metricValue: number;
  wallMs: number;
}

export class SchemaError extends Error {}

export function parseRecords(text: string): MetricRow[] {
  const lines = text.split(/\r?\n/).filter((ln) => ln.trim().length > 0);
  if (lines.length === 0) {
    throw new SchemaError("empty CSV");
  }
  const header = lines[0].split(",");
  for (const col of REQUIRED_COLUMNS) {
    if (!header.includes(col)) {
      throw new SchemaError(`missing column ${col}`);
    }
  }
  const pos = new Map(header.map((name, i) => [name, i]));
  const at = (cells: string[], name: string) => cells[pos.get(name)!];
  const rows: MetricRow[] = [];
  for (const line of lines.slice(1)) {
    const cells = line.split(",");
    if (cells.length < header.length) {
      throw new SchemaError(`short row: ${line}`);
    }
    rows.push({
      runId: at(cells, "run_id"),
      kind: at(cells, "kind"),
      d: Number(at(cells, "d")),
      k: Number(at(cells, "k")),
      beta: Number(at(cells, "beta")),
      delta: Number(at(cells, "delta")),
      h: Number(at(cells, "h")),
      rho: Number(at(cells, "rho")),
      seed: Number(at(cells, "seed")),
      metricName: at(cells, "metric_name"),
      metricValue: Number(at(cells, "metric_value")),
      wallMs: Number(at(cells, "wall_ms")),
    });
  }
  return rows;
}

export function metricRows(rows: MetricRow[], name: string): MetricRow[] {
  return rows.filter((r) => r.metricName === name);
}

export function summaryValue(rows: MetricRow[], name: string): number | undefined {
  const hit = rows.find((r) => r.metricName === name);
  return hit?.metricValue;
}
