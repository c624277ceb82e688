#!/usr/bin/env node
import { writeFileSync } from "node:fs";
import { Command } from "commander";
import {
  EmptyCsvError,
  MissingColumnError,
  loadSweepCsv,
  parseCsvSpec,
} from "./csv.js";
import { PlotSpec, buildSeries, buildSidecar, renderSvg } from "./figure.js";

export const EXIT_OK = 0;
export const EXIT_MISSING_COLUMN = 2;
export const EXIT_EMPTY_CSV = 3;

function sidecarPath(out: string): string {
  return out.replace(/\.[^./]+$/, "") + ".points.json";
}

async function writeFigure(svg: string, out: string): Promise<void> {
  if (out.endsWith(".png")) {
    const { Resvg } = await import("@resvg/resvg-js");
    writeFileSync(out, new Resvg(svg).render().asPng());
  } else {
    writeFileSync(out, svg);
  }
}

export async function runRender(opts: {
  csv: string[];
  x: string;
  y: string;
  logy?: boolean;
  out: string;
  title?: string;
  xlabel?: string;
  ylabel?: string;
}): Promise<void> {
  const spec: PlotSpec = {
    x: opts.x,
    y: opts.y.split(",").map((s) => s.trim()).filter((s) => s.length > 0),
    logY: Boolean(opts.logy),
    title: opts.title,
    xLabel: opts.xlabel,
    yLabel: opts.ylabel,
  };
  const tables = opts.csv.map((s) => {
    const { path, label } = parseCsvSpec(s);
    return loadSweepCsv(path, label);
  });
  const series = buildSeries(tables, spec);
  const svg = renderSvg(series, spec);
  await writeFigure(svg, opts.out);
  writeFileSync(sidecarPath(opts.out), JSON.stringify(buildSidecar(tables, spec), null, 2));
  console.log(`wrote ${opts.out} and ${sidecarPath(opts.out)}`);
}

export function makeProgram(): Command {
  const program = new Command();
  program.name("risloc-plot").description("Render localization sweep CSVs as figures");
  program
    .command("render")
    .requiredOption(
      "--csv <spec...>",
      "input CSV as path or path:label (repeatable; legend follows input order)"
    )
    .requiredOption("--x <column>", "x-axis column")
    .requiredOption("--y <columns>", "comma-separated y columns; first solid, rest dashed")
    .option("--logy", "logarithmic y axis")
    .requiredOption("--out <path>", "output image (.svg or .png)")
    .option("--title <text>")
    .option("--xlabel <text>")
    .option("--ylabel <text>")
    .action(async (opts) => {
      try {
        await runRender(opts);
      } catch (err) {
        if (err instanceof MissingColumnError) {
          console.error(err.message);
          process.exit(EXIT_MISSING_COLUMN);
        }
        if (err instanceof EmptyCsvError) {
          console.error(err.message);
          process.exit(EXIT_EMPTY_CSV);
        }
        console.error(err instanceof Error ? err.message : String(err));
        process.exit(1);
      }
    });
  return program;
}

const isDirect =
  process.argv[1] !== undefined && import.meta.url.endsWith(process.argv[1].split("/").pop()!);
if (isDirect) {
  makeProgram().parseAsync(process.argv);
}
