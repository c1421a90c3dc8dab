/** Reader for the dense d=2 grid export (format tag: kakeyalab-dense v1). */

export interface DenseGrid {
  M: number;
  h: number;
  counts: number[][]; // counts[i][j], first coordinate = row
}

export function parseDenseGrid(text: string): DenseGrid {
  const lines = text.split(/\r?\n/).filter((ln) => ln.trim().length > 0);
  if (lines[0]?.trim() !== "kakeyalab-dense v1") {
    throw new Error(`not a dense grid file: ${lines[0] ?? "<empty>"}`);
  }
  const head = new Map(
    lines[1].split(/\s+/).map((tok) => {
      const [k, v] = tok.split("=");
      return [k, v] as const;
    }),
  );
  const M = Number(head.get("M"));
  const h = Number(head.get("h"));
  if (!Number.isFinite(M) || !Number.isFinite(h)) {
    throw new Error("dense grid header missing M or h");
  }
  const counts = lines.slice(2).map((ln) => ln.split(/\s+/).map(Number));
  if (counts.length !== M || counts.some((row) => row.length !== M)) {
    throw new Error(`expected ${M}x${M} matrix, got ${counts.length} rows`);
  }
  return { M, h, counts };
}

export function occupiedCells(grid: DenseGrid): number {
  let n = 0;
  for (const row of grid.counts) {
    for (const v of row) {
      if (v > 0) n++;
    }
  }
  return n;
}
