import { execFileSync } from "child_process";
import { mkdtempSync, readdirSync, readFileSync, writeFileSync } from "fs";
import { tmpdir } from "os";
import { join } from "path";
import { describe, expect, it } from "vitest";

import { CsvError, parseCsv, readCsv } from "../src/csv";
import { renderSvg } from "../src/render";
import { specFor } from "../src/specs";
import { main } from "../src/cli";

const FIXTURES = join(__dirname, "..", "fixtures");

describe("csv parsing", () => {
  it("parses numbers and keeps header order", () => {
    const t = parseCsv("a,b\n1,2.5\n3,4e-2\n");
    expect(t.columns).toEqual(["a", "b"]);
    expect(t.rows).toEqual([{ a: 1, b: 2.5 }, { a: 3, b: 0.04 }]);
  });

  it("accepts an empty body with a valid header", () => {
    const t = parseCsv("x,y\n");
    expect(t.rows).toEqual([]);
  });

  it("rejects ragged rows", () => {
    expect(() => parseCsv("a,b\n1\n")).toThrow(CsvError);
  });

  it("rejects empty input", () => {
    expect(() => parseCsv("")).toThrow(CsvError);
  });
});

describe("rendering", () => {
  it("renders every bundled scenario CSV to an SVG", () => {
    const files = readdirSync(FIXTURES).filter((f) => f.endsWith(".csv"));
    expect(files.length).toBeGreaterThanOrEqual(9);
    for (const f of files) {
      const table = readCsv(join(FIXTURES, f));
      const spec = specFor(join(FIXTURES, f), table, "unused.svg");
      const svg = renderSvg(spec, table);
      expect(svg.startsWith("<svg")).toBe(true);
      expect(svg.length).toBeGreaterThan(1000);
    }
  });

  it("renders empty data to empty axes", () => {
    const table = parseCsv("n,value\n");
    const spec = specFor("empty.csv", table, "unused.svg");
    const svg = renderSvg(spec, table);
    expect(svg.startsWith("<svg")).toBe(true);
  });

  it("fails on a missing column", () => {
    const table = parseCsv("n,value\n1,2\n");
    expect(() =>
      renderSvg({ inputPath: "x", outputPath: "y", kind: "line", x: "n",
                  series: { nope: "nope" } }, table),
    ).toThrow(CsvError);
  });

  it("fidelity fixture keeps the with-measurement curve on top", () => {
    const table = readCsv(join(FIXTURES, "fig-fidelities.csv"));
    for (const row of table.rows) {
      expect(Number(row["overlap_with_measure"]))
        .toBeGreaterThanOrEqual(Number(row["overlap_no_measure"]) - 1e-12);
    }
  });
});

describe("cli", () => {
  it("renders one file and reports the output path", () => {
    const dir = mkdtempSync(join(tmpdir(), "pkplot-"));
    const target = join(dir, "out.svg");
    const code = main([join(FIXTURES, "fig-fidelities.csv"), "-o", target]);
    expect(code).toBe(0);
    expect(readFileSync(target, "utf8").startsWith("<svg")).toBe(true);
  });

  it("renders a whole directory", () => {
    const dir = mkdtempSync(join(tmpdir(), "pkplot-"));
    const code = main(["--all", FIXTURES, "--out", dir]);
    expect(code).toBe(0);
    const svgs = readdirSync(dir).filter((f) => f.endsWith(".svg"));
    const csvs = readdirSync(FIXTURES).filter((f) => f.endsWith(".csv"));
    expect(svgs.length).toBe(csvs.length);
  });

  it("exits nonzero on malformed CSV", () => {
    const dir = mkdtempSync(join(tmpdir(), "pkplot-"));
    const bad = join(dir, "bad.csv");
    writeFileSync(bad, "a,b\n1,2,3\n");
    expect(main([bad, "-o", join(dir, "bad.svg")])).toBe(2);
  });

  it("exits nonzero on a missing file", () => {
    expect(main(["does-not-exist.csv"])).toBe(2);
  });

  it("built bundle runs as an executable", () => {
    const dir = mkdtempSync(join(tmpdir(), "pkplot-"));
    const target = join(dir, "exe.svg");
    execFileSync("node", [join(__dirname, "..", "dist", "cli.js"),
                          join(FIXTURES, "fig-intro-kickbacks.csv"),
                          "-o", target]);
    expect(readFileSync(target, "utf8").startsWith("<svg")).toBe(true);
  });
});
