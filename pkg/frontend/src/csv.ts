import { readFileSync } from "fs";

export interface Table {
  columns: string[];
  rows: Record<string, number | string>[];
}

export class CsvError extends Error {}

/** Parse the experiment CSV contract: header row, comma separated, '.'
 * decimals. Numeric cells become numbers; ragged rows are an error. An
 * empty body with a valid header is fine. */
export function parseCsv(text: string): Table {
  const lines = text.split(/\r?\n/).filter((l) => l.length > 0);
  if (lines.length === 0) throw new CsvError("empty file");
  const columns = lines[0].split(",").map((c) => c.trim());
  if (columns.length === 0 || columns.some((c) => c === "")) {
    throw new CsvError("malformed header");
  }
  const rows: Record<string, number | string>[] = [];
  for (let i = 1; i < lines.length; i++) {
    const cells = lines[i].split(",");
    if (cells.length !== columns.length) {
      throw new CsvError(`row ${i} has ${cells.length} cells, expected ${columns.length}`);
    }
    const row: Record<string, number | string> = {};
    for (let j = 0; j < columns.length; j++) {
      const raw = cells[j].trim();
      const num = Number(raw);
      row[columns[j]] = raw !== "" && Number.isFinite(num) ? num : raw;
    }
    rows.push(row);
  }
  return { columns, rows };
}

export function readCsv(path: string): Table {
  return parseCsv(readFileSync(path, "utf8"));
}

export function numericColumn(table: Table, name: string): number[] {
  if (!table.columns.includes(name)) {
    throw new CsvError(`missing column ${name}`);
  }
  return table.rows.map((r) => {
    const v = r[name];
    if (typeof v !== "number") throw new CsvError(`non-numeric cell in ${name}`);
    return v;
  });
}
