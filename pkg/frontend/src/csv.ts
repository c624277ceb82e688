import { readFileSync } from "node:fs";
import { parse } from "csv-parse/sync";

/** One parsed sweep CSV: header plus rows as string records, untouched. */
export interface SweepTable {
  path: string;
  label: string;
  columns: string[];
  rows: Record<string, string>[];
}

export class MissingColumnError extends Error {
  constructor(public readonly column: string, path: string) {
    super(`column "${column}" not found in ${path}`);
    this.name = "MissingColumnError";
  }
}

export class EmptyCsvError extends Error {
  constructor(path: string) {
    super(`no data rows in ${path}`);
    this.name = "EmptyCsvError";
  }
}

/** Parse "path:label" CLI input specs; label defaults to the path. */
export function parseCsvSpec(spec: string): { path: string; label: string } {
  const idx = spec.lastIndexOf(":");
  if (idx <= 0) return { path: spec, label: spec };
  return { path: spec.slice(0, idx), label: spec.slice(idx + 1) };
}

export function loadSweepCsv(path: string, label: string): SweepTable {
  const text = readFileSync(path, "utf8");
  const records: Record<string, string>[] = parse(text, {
    columns: true,
    skip_empty_lines: true,
    trim: false,
  });
  if (records.length === 0) throw new EmptyCsvError(path);
  const columns = Object.keys(records[0]);
  return { path, label, columns, rows: records };
}

export function requireColumns(table: SweepTable, needed: string[]): void {
  for (const col of needed) {
    if (!table.columns.includes(col)) {
      throw new MissingColumnError(col, table.path);
    }
  }
}

/** Numeric value of a cell; blank cells (failed sweep points) become null. */
export function cellValue(row: Record<string, string>, column: string): number | null {
  const raw = row[column];
  if (raw === undefined || raw.trim() === "") return null;
  const v = Number(raw);
  if (Number.isNaN(v)) {
    throw new Error(`cell "${raw}" in column "${column}" is not numeric`);
  }
  return v;
}
