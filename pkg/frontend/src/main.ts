/** Command line entry: render one figure from experiment output.
 *
 * Usage: node dist/main.js --kind exponent-fit --input records.csv --out fig.svg
 */
import { FigureKind, render } from "./render.js";

function parseArgs(argv: string[]): Record<string, string> {
  const out: Record<string, string> = {};
  for (let i = 0; i < argv.length; i += 2) {
    const key = argv[i];
    const val = argv[i + 1];
    if (!key?.startsWith("--") || val === undefined) {
      throw new Error(`bad argument pair: ${key} ${val ?? ""}`);
    }
    out[key.slice(2)] = val;
  }
  return out;
}

const KINDS: FigureKind[] = ["exponent-fit", "heatmap", "dim-ladder"];

function main(): number {
  try {
    const args = parseArgs(process.argv.slice(2));
    const kind = args["kind"] as FigureKind;
    if (!KINDS.includes(kind)) {
      throw new Error(`--kind must be one of ${KINDS.join(", ")}`);
    }
    if (!args["input"] || !args["out"]) {
      throw new Error("--input and --out are required");
    }
    const result = render({
      kind,
      input: args["input"],
      output: args["out"],
      title: args["title"],
    });
    console.log(`${result.output}: ${result.annotation ?? "ok"}`);
    return 0;
  } catch (err) {
    console.error(`error: ${(err as Error).message}`);
    return 1;
  }
}

process.exitCode = main();
