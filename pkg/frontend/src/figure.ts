import { scaleLinear, scaleLog } from "d3-scale";
import { SweepTable, cellValue, requireColumns } from "./csv.js";

export interface PlotSpec {
  x: string;
  y: string[]; // first column drawn solid with markers, later ones dashed
  logY: boolean;
  title?: string;
  xLabel?: string;
  yLabel?: string;
  width?: number;
  height?: number;
}

export interface SeriesPoint {
  x: number;
  y: number | null; // null = gap (blank cell in the CSV)
}

export interface Series {
  label: string;
  column: string;
  dashed: boolean;
  color: string;
  points: SeriesPoint[];
}

const PALETTE = ["#1f6fb4", "#d0541e", "#2c8a4b", "#7b52a8", "#b0336f", "#6b6b28"];

const MARGIN = { top: 40, right: 24, bottom: 52, left: 72 };

export function buildSeries(tables: SweepTable[], spec: PlotSpec): Series[] {
  const series: Series[] = [];
  tables.forEach((table, ti) => {
    requireColumns(table, [spec.x, ...spec.y]);
    spec.y.forEach((col, yi) => {
      const points = table.rows.map((row) => ({
        x: cellValue(row, spec.x) ?? NaN,
        y: cellValue(row, col),
      }));
      series.push({
        label: spec.y.length > 1 ? `${table.label} ${col}` : table.label,
        column: col,
        dashed: yi > 0,
        color: PALETTE[ti % PALETTE.length],
        points,
      });
    });
  });
  return series;
}

function esc(s: string): string {
  return s.replace(/&/g, "&amp;").replace(/</g, "&lt;").replace(/>/g, "&gt;");
}

function fmtTick(v: number): string {
  if (v !== 0 && (Math.abs(v) < 1e-3 || Math.abs(v) >= 1e4)) return v.toExponential(0);
  return `${Number(v.toPrecision(6))}`;
}

/** Split a point list at nulls so gaps interrupt the polyline. */
function segments(points: SeriesPoint[]): SeriesPoint[][] {
  const out: SeriesPoint[][] = [];
  let cur: SeriesPoint[] = [];
  for (const p of points) {
    if (p.y === null || Number.isNaN(p.x)) {
      if (cur.length > 0) out.push(cur);
      cur = [];
    } else {
      cur.push(p);
    }
  }
  if (cur.length > 0) out.push(cur);
  return out;
}

export function renderSvg(series: Series[], spec: PlotSpec): string {
  const width = spec.width ?? 720;
  const height = spec.height ?? 480;
  const innerW = width - MARGIN.left - MARGIN.right;
  const innerH = height - MARGIN.top - MARGIN.bottom;

  const xs = series.flatMap((s) => s.points.filter((p) => p.y !== null).map((p) => p.x));
  const ys = series.flatMap((s) =>
    s.points.map((p) => p.y).filter((y): y is number => y !== null)
  );
  if (xs.length === 0) throw new Error("nothing to plot: every point is blank");
  if (spec.logY && ys.some((y) => y <= 0)) {
    throw new Error("log-scale y axis requires strictly positive values");
  }

  const xScale = scaleLinear()
    .domain([Math.min(...xs), Math.max(...xs)])
    .nice()
    .range([MARGIN.left, MARGIN.left + innerW]);
  const yScale = (spec.logY ? scaleLog() : scaleLinear())
    .domain([Math.min(...ys), Math.max(...ys)])
    .nice()
    .range([MARGIN.top + innerH, MARGIN.top]);

  const parts: string[] = [];
  parts.push(
    `<svg xmlns="http://www.w3.org/2000/svg" width="${width}" height="${height}" ` +
      `viewBox="0 0 ${width} ${height}" font-family="Helvetica, Arial, sans-serif">`
  );
  parts.push(`<rect width="${width}" height="${height}" fill="white"/>`);

  // grid + ticks
  const xTicks = xScale.ticks(8);
  const yTicks = spec.logY ? yScale.ticks() : yScale.ticks(8);
  for (const t of xTicks) {
    const px = xScale(t);
    parts.push(
      `<line x1="${px}" y1="${MARGIN.top}" x2="${px}" y2="${MARGIN.top + innerH}" ` +
        `stroke="#e0e0e0" stroke-width="1"/>`
    );
    parts.push(
      `<text x="${px}" y="${MARGIN.top + innerH + 18}" text-anchor="middle" ` +
        `font-size="12" fill="#333">${fmtTick(t)}</text>`
    );
  }
  for (const t of yTicks) {
    const py = yScale(t);
    const label = spec.logY ? Math.log10(t) % 1 === 0 : true;
    parts.push(
      `<line x1="${MARGIN.left}" y1="${py}" x2="${MARGIN.left + innerW}" y2="${py}" ` +
        `stroke="#e0e0e0" stroke-width="1"/>`
    );
    if (label) {
      parts.push(
        `<text x="${MARGIN.left - 8}" y="${py + 4}" text-anchor="end" ` +
          `font-size="12" fill="#333">${fmtTick(t)}</text>`
      );
    }
  }
  parts.push(
    `<rect x="${MARGIN.left}" y="${MARGIN.top}" width="${innerW}" height="${innerH}" ` +
      `fill="none" stroke="#333" stroke-width="1"/>`
  );

  // curves
  for (const s of series) {
    const dash = s.dashed ? ` stroke-dasharray="7 4"` : "";
    for (const seg of segments(s.points)) {
      const d = seg
        .map((p, i) => `${i === 0 ? "M" : "L"}${xScale(p.x).toFixed(2)},${yScale(p.y as number).toFixed(2)}`)
        .join(" ");
      parts.push(
        `<path d="${d}" fill="none" stroke="${s.color}" stroke-width="2"${dash} class="series"/>`
      );
      if (!s.dashed) {
        for (const p of seg) {
          parts.push(
            `<circle cx="${xScale(p.x).toFixed(2)}" cy="${yScale(p.y as number).toFixed(2)}" ` +
              `r="3.5" fill="${s.color}"/>`
          );
        }
      }
    }
  }

  // legend, input order
  const legendX = MARGIN.left + 12;
  series.forEach((s, i) => {
    const ly = MARGIN.top + 16 + 18 * i;
    const dash = s.dashed ? ` stroke-dasharray="7 4"` : "";
    parts.push(
      `<line x1="${legendX}" y1="${ly}" x2="${legendX + 28}" y2="${ly}" ` +
        `stroke="${s.color}" stroke-width="2"${dash}/>`
    );
    parts.push(
      `<text x="${legendX + 34}" y="${ly + 4}" font-size="12" fill="#333" class="legend">` +
        `${esc(s.label)}${s.dashed ? " (bound)" : ""}</text>`
    );
  });

  // labels
  if (spec.title) {
    parts.push(
      `<text x="${width / 2}" y="22" text-anchor="middle" font-size="15" ` +
        `font-weight="bold" fill="#111">${esc(spec.title)}</text>`
    );
  }
  parts.push(
    `<text x="${MARGIN.left + innerW / 2}" y="${height - 12}" text-anchor="middle" ` +
      `font-size="13" fill="#111">${esc(spec.xLabel ?? spec.x)}</text>`
  );
  parts.push(
    `<text x="18" y="${MARGIN.top + innerH / 2}" text-anchor="middle" font-size="13" ` +
      `fill="#111" transform="rotate(-90 18 ${MARGIN.top + innerH / 2})">` +
      `${esc(spec.yLabel ?? spec.y.join(", "))}</text>`
  );

  parts.push("</svg>");
  return parts.join("\n");
}

/** Machine-readable record of exactly what was plotted: the input rows. */
export interface Sidecar {
  x: string;
  y: string[];
  inputs: { path: string; label: string; rows: Record<string, string>[] }[];
}

export function buildSidecar(tables: SweepTable[], spec: PlotSpec): Sidecar {
  return {
    x: spec.x,
    y: spec.y,
    inputs: tables.map((t) => ({ path: t.path, label: t.label, rows: t.rows })),
  };
}
