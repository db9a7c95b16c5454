import { existsSync, mkdirSync, readdirSync, writeFileSync } from "fs";
import { basename, join } from "path";
import { CsvError, readCsv } from "./csv";
import { PlotKind, renderSvg } from "./render";
import { specFor } from "./specs";

function usage(): void {
  console.log(
    "usage: phasekick-plot <input.csv> [-o out.svg] [--kind line|overlay|histogram]\n" +
    "       phasekick-plot --all <dir> [--out <dir>]",
  );
}

export function renderFile(input: string, output: string, kind?: PlotKind): void {
  const table = readCsv(input);
  const spec = specFor(input, table, output, kind);
  writeFileSync(output, renderSvg(spec, table));
}

export function main(argv: string[]): number {
  const args = [...argv];
  let all: string | null = null;
  let out: string | null = null;
  let kind: PlotKind | undefined;
  const inputs: string[] = [];
  while (args.length) {
    const a = args.shift() as string;
    if (a === "--all") all = args.shift() ?? null;
    else if (a === "--out" || a === "-o") out = args.shift() ?? null;
    else if (a === "--kind") kind = args.shift() as PlotKind;
    else if (a === "--help" || a === "-h") {
      usage();
      return 0;
    } else inputs.push(a);
  }
  try {
    if (all) {
      const outDir = out ?? "out";
      mkdirSync(outDir, { recursive: true });
      const files = readdirSync(all).filter((f) => f.endsWith(".csv"));
      if (files.length === 0) {
        console.error(`no CSV files in ${all}`);
        return 2;
      }
      for (const f of files) {
        const target = join(outDir, f.replace(/\.csv$/, ".svg"));
        renderFile(join(all, f), target, kind);
        console.log(target);
      }
      return 0;
    }
    if (inputs.length !== 1) {
      usage();
      return 2;
    }
    if (!existsSync(inputs[0])) {
      console.error(`no such file: ${inputs[0]}`);
      return 2;
    }
    const target = out ?? basename(inputs[0]).replace(/\.csv$/, ".svg");
    renderFile(inputs[0], target, kind);
    console.log(target);
    return 0;
  } catch (err) {
    if (err instanceof CsvError) {
      console.error(`malformed input: ${err.message}`);
      return 2;
    }
    console.error(String(err));
    return 1;
  }
}

const invoked = process.argv[1] ?? "";
if (invoked.endsWith("cli.js") || invoked.endsWith("cli.ts")) {
  process.exit(main(process.argv.slice(2)));
}
