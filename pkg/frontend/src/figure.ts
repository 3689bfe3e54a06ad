// Deterministic SVG rendering of ABER-versus-SNR figures: semilog-y, solid
// simulation curves, dotted bound overlays, dashed comparison curves.

import type { AberCurve } from "./csv.js";

export type CurveStyle = "solid" | "dashed" | "dotted";

export interface CurveInput {
  path: string;
  label: string;
  style?: CurveStyle;
}

export interface FigureSpec {
  inputs: CurveInput[];
  output: string;
  title?: string;
  yLimits?: [number, number];
}

const STYLES: CurveStyle[] = ["solid", "dashed", "dotted"];

export function validateFigureSpec(raw: unknown): FigureSpec {
  if (typeof raw !== "object" || raw === null) {
    throw new Error("figure spec must be a JSON object");
  }
  const obj = raw as Record<string, unknown>;
  if (!Array.isArray(obj.inputs) || obj.inputs.length === 0) {
    throw new Error("figure spec needs at least one entry in 'inputs'");
  }
  const inputs: CurveInput[] = obj.inputs.map((entry, i) => {
    if (typeof entry !== "object" || entry === null) {
      throw new Error(`inputs[${i}] must be an object`);
    }
    const e = entry as Record<string, unknown>;
    if (typeof e.path !== "string" || typeof e.label !== "string") {
      throw new Error(`inputs[${i}] needs string 'path' and 'label'`);
    }
    if (e.style !== undefined && !STYLES.includes(e.style as CurveStyle)) {
      throw new Error(`inputs[${i}].style must be one of ${STYLES.join(", ")}`);
    }
    return { path: e.path, label: e.label, style: e.style as CurveStyle | undefined };
  });
  if (typeof obj.output !== "string" || obj.output === "") {
    throw new Error("figure spec needs an 'output' path");
  }
  let yLimits: [number, number] | undefined;
  if (obj.yLimits !== undefined) {
    if (
      !Array.isArray(obj.yLimits) ||
      obj.yLimits.length !== 2 ||
      typeof obj.yLimits[0] !== "number" ||
      typeof obj.yLimits[1] !== "number"
    ) {
      throw new Error("'yLimits' must be [min, max]");
    }
    yLimits = [obj.yLimits[0], obj.yLimits[1]];
    if (yLimits[0] <= 0 || yLimits[1] <= yLimits[0]) {
      throw new Error("'yLimits' must be positive and increasing (log axis)");
    }
  }
  return {
    inputs,
    output: obj.output,
    title: typeof obj.title === "string" ? obj.title : undefined,
    yLimits,
  };
}

interface Series {
  label: string;
  style: CurveStyle;
  color: string;
  marker: number; // index into the marker shapes
  points: Array<{ x: number; y: number }>;
}

const PALETTE = [
  "#1f77b4",
  "#d62728",
  "#2ca02c",
  "#9467bd",
  "#ff7f0e",
  "#8c564b",
  "#17becf",
  "#7f7f7f",
];

const WIDTH = 960;
const HEIGHT = 600;
const MARGIN = { left: 90, right: 30, top: 50, bottom: 60 };

function buildSeries(inputs: CurveInput[], curves: AberCurve[]): Series[] {
  const series: Series[] = [];
  inputs.forEach((input, i) => {
    const curve = curves[i];
    const color = PALETTE[i % PALETTE.length];
    // log axis: zero-ABER points (no observed errors) cannot be drawn
    const sim = curve.points.filter((p) => p.aber > 0);
    if (sim.length > 0) {
      series.push({
        label: input.label,
        style: input.style ?? "solid",
        color,
        marker: i % 5,
        points: sim.map((p) => ({ x: p.snrDb, y: p.aber })),
      });
    }
    const bound = curve.bound.filter((p) => p.value > 0);
    if (bound.length > 0) {
      series.push({
        label: `${input.label} (bound)`,
        style: "dotted",
        color,
        marker: -1,
        points: bound.map((p) => ({ x: p.snrDb, y: p.value })),
      });
    }
  });
  if (series.length === 0) {
    throw new Error("nothing to plot: every curve is empty or all-zero");
  }
  return series;
}

function niceTicks(lo: number, hi: number): number[] {
  const span = hi - lo || 1;
  const rawStep = span / 8;
  const mag = Math.pow(10, Math.floor(Math.log10(rawStep)));
  let step = mag;
  for (const mult of [1, 2, 5, 10]) {
    if (mag * mult >= rawStep) {
      step = mag * mult;
      break;
    }
  }
  const ticks: number[] = [];
  for (let t = Math.ceil(lo / step) * step; t <= hi + 1e-9; t += step) {
    ticks.push(Number(t.toFixed(6)));
  }
  return ticks;
}

function fmt(v: number): string {
  return v.toFixed(2);
}

const DASHES: Record<CurveStyle, string> = {
  solid: "",
  dashed: ' stroke-dasharray="10 6"',
  dotted: ' stroke-dasharray="2 5"',
};

function markerGlyph(shape: number, x: number, y: number, color: string): string {
  const s = 4;
  switch (shape) {
    case 0:
      return `<circle cx="${fmt(x)}" cy="${fmt(y)}" r="${s}" fill="${color}"/>`;
    case 1:
      return `<rect x="${fmt(x - s)}" y="${fmt(y - s)}" width="${2 * s}" height="${2 * s}" fill="${color}"/>`;
    case 2:
      return `<path d="M ${fmt(x)} ${fmt(y - s)} L ${fmt(x + s)} ${fmt(y + s)} L ${fmt(x - s)} ${fmt(y + s)} Z" fill="${color}"/>`;
    case 3:
      return `<path d="M ${fmt(x)} ${fmt(y - s)} L ${fmt(x + s)} ${fmt(y)} L ${fmt(x)} ${fmt(y + s)} L ${fmt(x - s)} ${fmt(y)} Z" fill="${color}"/>`;
    default:
      return (
        `<path d="M ${fmt(x - s)} ${fmt(y - s)} L ${fmt(x + s)} ${fmt(y + s)} ` +
        `M ${fmt(x - s)} ${fmt(y + s)} L ${fmt(x + s)} ${fmt(y - s)}" ` +
        `stroke="${color}" stroke-width="1.5"/>`
      );
  }
}

export function renderFigure(spec: FigureSpec, curves: AberCurve[]): string {
  const series = buildSeries(spec.inputs, curves);

  const xs = series.flatMap((s) => s.points.map((p) => p.x));
  const ys = series.flatMap((s) => s.points.map((p) => p.y));
  const xLo = Math.min(...xs);
  const xHi = Math.max(...xs) === xLo ? xLo + 1 : Math.max(...xs);
  let yLo: number;
  let yHi: number;
  if (spec.yLimits) {
    [yLo, yHi] = spec.yLimits;
  } else {
    yLo = Math.pow(10, Math.floor(Math.log10(Math.min(...ys))));
    yHi = Math.pow(10, Math.ceil(Math.log10(Math.max(...ys))));
    if (yLo === yHi) yHi = yLo * 10;
  }

  const plotW = WIDTH - MARGIN.left - MARGIN.right;
  const plotH = HEIGHT - MARGIN.top - MARGIN.bottom;
  const px = (x: number) => MARGIN.left + ((x - xLo) / (xHi - xLo)) * plotW;
  const py = (y: number) =>
    MARGIN.top + plotH - ((Math.log10(y) - Math.log10(yLo)) / (Math.log10(yHi) - Math.log10(yLo))) * plotH;

  const parts: string[] = [];
  parts.push(
    `<svg xmlns="http://www.w3.org/2000/svg" width="${WIDTH}" height="${HEIGHT}" viewBox="0 0 ${WIDTH} ${HEIGHT}">`,
  );
  parts.push(`<rect width="${WIDTH}" height="${HEIGHT}" fill="white"/>`);
  if (spec.title) {
    parts.push(
      `<text x="${WIDTH / 2}" y="28" text-anchor="middle" font-family="sans-serif" font-size="18">${escapeXml(spec.title)}</text>`,
    );
  }

  // gridlines and ticks
  const xTicks = niceTicks(xLo, xHi);
  for (const t of xTicks) {
    const x = px(t);
    parts.push(
      `<line x1="${fmt(x)}" y1="${MARGIN.top}" x2="${fmt(x)}" y2="${MARGIN.top + plotH}" stroke="#dddddd" stroke-width="1"/>`,
    );
    parts.push(
      `<text x="${fmt(x)}" y="${MARGIN.top + plotH + 22}" text-anchor="middle" font-family="sans-serif" font-size="13">${t}</text>`,
    );
  }
  const decadeLo = Math.ceil(Math.log10(yLo) - 1e-9);
  const decadeHi = Math.floor(Math.log10(yHi) + 1e-9);
  for (let d = decadeLo; d <= decadeHi; d++) {
    const y = py(Math.pow(10, d));
    parts.push(
      `<line x1="${MARGIN.left}" y1="${fmt(y)}" x2="${MARGIN.left + plotW}" y2="${fmt(y)}" stroke="#dddddd" stroke-width="1"/>`,
    );
    parts.push(
      `<text x="${MARGIN.left - 10}" y="${fmt(y + 4)}" text-anchor="end" font-family="sans-serif" font-size="13">1e${d}</text>`,
    );
  }

  // frame and axis labels
  parts.push(
    `<rect x="${MARGIN.left}" y="${MARGIN.top}" width="${plotW}" height="${plotH}" fill="none" stroke="black" stroke-width="1"/>`,
  );
  parts.push(
    `<text x="${MARGIN.left + plotW / 2}" y="${HEIGHT - 14}" text-anchor="middle" font-family="sans-serif" font-size="15">SNR (dB)</text>`,
  );
  parts.push(
    `<text x="24" y="${MARGIN.top + plotH / 2}" text-anchor="middle" font-family="sans-serif" font-size="15" transform="rotate(-90 24 ${MARGIN.top + plotH / 2})">ABER</text>`,
  );

  // curves, clipped to the y range by dropping out-of-range points
  for (const s of series) {
    const visible = s.points.filter((p) => p.y >= yLo && p.y <= yHi);
    if (visible.length === 0) continue;
    const coords = visible.map((p) => `${fmt(px(p.x))},${fmt(py(p.y))}`).join(" ");
    parts.push(
      `<polyline points="${coords}" fill="none" stroke="${s.color}" stroke-width="2"${DASHES[s.style]}/>`,
    );
    if (s.marker >= 0) {
      for (const p of visible) {
        parts.push(markerGlyph(s.marker, px(p.x), py(p.y), s.color));
      }
    }
  }

  // legend
  const legendX = MARGIN.left + plotW - 250;
  let legendY = MARGIN.top + 16;
  for (const s of series) {
    parts.push(
      `<line x1="${legendX}" y1="${fmt(legendY)}" x2="${legendX + 38}" y2="${fmt(legendY)}" stroke="${s.color}" stroke-width="2"${DASHES[s.style]}/>`,
    );
    if (s.marker >= 0) {
      parts.push(markerGlyph(s.marker, legendX + 19, legendY, s.color));
    }
    parts.push(
      `<text x="${legendX + 46}" y="${fmt(legendY + 4)}" font-family="sans-serif" font-size="13">${escapeXml(s.label)}</text>`,
    );
    legendY += 20;
  }

  parts.push("</svg>");
  return parts.join("\n") + "\n";
}

function escapeXml(text: string): string {
  return text
    .replaceAll("&", "&amp;")
    .replaceAll("<", "&lt;")
    .replaceAll(">", "&gt;")
    .replaceAll('"', "&quot;");
}
