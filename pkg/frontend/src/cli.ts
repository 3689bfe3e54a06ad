#!/usr/bin/env node
// smsim-plots render: turn simulator CSV curves into a semilog ABER figure.

import { readFileSync, writeFileSync } from "fs";
import { basename } from "path";
import { parseAberCsv } from "./csv.js";
import { renderFigure, validateFigureSpec, type FigureSpec } from "./figure.js";

const USAGE = `usage:
  smsim-plots render --spec <figure.json>
  smsim-plots render <curve.csv>... --out <figure.svg> [--title <text>]
                     [--y-min <v> --y-max <v>] [--dashed <label-substring>]

The JSON spec form gives per-curve labels and styles:
  { "inputs": [{"path": "sm.csv", "label": "SM", "style": "solid"}, ...],
    "output": "fig.svg", "title": "...", "yLimits": [1e-5, 0.5] }`;

function fail(message: string): never {
  process.stderr.write(`error: ${message}\n`);
  process.exit(2);
}

function parseArgs(argv: string[]): FigureSpec {
  const positional: string[] = [];
  let out: string | undefined;
  let title: string | undefined;
  let specPath: string | undefined;
  let yMin: number | undefined;
  let yMax: number | undefined;
  const dashed: string[] = [];

  for (let i = 0; i < argv.length; i++) {
    const arg = argv[i];
    const next = () => {
      if (i + 1 >= argv.length) fail(`${arg} needs a value`);
      return argv[++i];
    };
    if (arg === "--spec") specPath = next();
    else if (arg === "--out") out = next();
    else if (arg === "--title") title = next();
    else if (arg === "--y-min") yMin = Number(next());
    else if (arg === "--y-max") yMax = Number(next());
    else if (arg === "--dashed") dashed.push(next());
    else if (arg.startsWith("--")) fail(`unknown flag ${arg}`);
    else positional.push(arg);
  }

  if (specPath !== undefined) {
    if (positional.length > 0 || out !== undefined) {
      fail("--spec replaces positional CSVs and --out");
    }
    let raw: unknown;
    try {
      raw = JSON.parse(readFileSync(specPath, "utf-8"));
    } catch (err) {
      fail(`cannot read spec ${specPath}: ${(err as Error).message}`);
    }
    return validateFigureSpec(raw);
  }

  if (positional.length === 0) fail("no input CSVs given\n" + USAGE);
  if (out === undefined) fail("--out is required");
  let yLimits: [number, number] | undefined;
  if (yMin !== undefined || yMax !== undefined) {
    if (yMin === undefined || yMax === undefined) fail("give both --y-min and --y-max");
    yLimits = [yMin, yMax];
  }
  return {
    inputs: positional.map((path) => {
      const label = basename(path).replace(/\.csv$/, "");
      const style = dashed.some((d) => label.includes(d)) ? "dashed" as const : "solid" as const;
      return { path, label, style };
    }),
    output: out,
    title,
    yLimits,
  };
}

export function main(argv: string[]): number {
  if (argv.length === 0 || argv[0] === "--help" || argv[0] === "-h") {
    process.stdout.write(USAGE + "\n");
    return argv.length === 0 ? 2 : 0;
  }
  if (argv[0] !== "render") {
    process.stderr.write(`error: unknown command ${argv[0]}\n${USAGE}\n`);
    return 2;
  }
  const spec = parseArgs(argv.slice(1));
  const curves = spec.inputs.map((input) => {
    const text = readFileSync(input.path, "utf-8");
    return parseAberCsv(text, input.path);
  });
  const svg = renderFigure(spec, curves);
  writeFileSync(spec.output, svg);
  process.stdout.write(`wrote ${spec.output}\n`);
  return 0;
}

const invokedDirectly =
  process.argv[1] !== undefined && import.meta.url === new URL(`file://${process.argv[1]}`).href;
if (invokedDirectly) {
  try {
    process.exit(main(process.argv.slice(2)));
  } catch (err) {
    process.stderr.write(`error: ${(err as Error).message}\n`);
    process.exit(1);
  }
}
