import { describe, test, expect } from "vitest";
import { readFileSync, readdirSync, writeFileSync, mkdtempSync } from "fs";
import { join } from "path";
import { tmpdir } from "os";
import { parseAberCsv, CSV_HEADER } from "../src/csv.js";
import { renderFigure, validateFigureSpec } from "../src/figure.js";
import { main } from "../src/cli.js";

const FIXTURES = join(__dirname, "fixtures");

function singleCurveCsv(): string {
  const rows = Array.from({ length: 10 }, (_, i) => {
    const snr = 2 * i;
    const aber = Math.pow(10, -1 - i / 3);
    return `${snr},${aber},100000,${Math.round(aber * 100000)},`;
  });
  return `# config_digest=t\n${CSV_HEADER}\n${rows.join("\n")}\n`;
}

describe("renderFigure", () => {
  test("single curve: one solid polyline on a log axis", () => {
    const curve = parseAberCsv(singleCurveCsv());
    const svg = renderFigure(
      { inputs: [{ path: "x.csv", label: "SM" }], output: "out.svg" },
      [curve],
    );
    expect(svg.match(/<polyline/g)).toHaveLength(1);
    expect(svg).not.toContain("stroke-dasharray=\"2 5\"");
    expect(svg).toContain("1e-4"); // decade tick labels from the log axis
    expect(svg).toContain("SNR (dB)");
  });

  test("curve plus bound: solid and dotted line styles", () => {
    const lines = singleCurveCsv().trimEnd().split("\n");
    const boosted = lines.map((l, i) =>
      i < 2 ? l : l.replace(/,$/, `,${Number(l.split(",")[1]) * 1.5}`),
    );
    const curve = parseAberCsv(boosted.join("\n"));
    const svg = renderFigure(
      { inputs: [{ path: "x.csv", label: "SM" }], output: "out.svg" },
      [curve],
    );
    expect(svg.match(/<polyline/g)).toHaveLength(2);
    expect(svg).toContain('stroke-dasharray="2 5"'); // dotted bound overlay
    expect(svg).toContain("SM (bound)");
  });

  test("comparison style renders dashed", () => {
    const curve = parseAberCsv(singleCurveCsv());
    const svg = renderFigure(
      { inputs: [{ path: "x.csv", label: "SMX", style: "dashed" }], output: "o.svg" },
      [curve],
    );
    expect(svg).toContain('stroke-dasharray="10 6"');
  });

  test("rejects empty figures", () => {
    const curve = parseAberCsv(`${CSV_HEADER}\n`);
    expect(() =>
      renderFigure({ inputs: [{ path: "x.csv", label: "SM" }], output: "o.svg" }, [curve]),
    ).toThrow(/nothing to plot/);
  });

  test("respects y limits", () => {
    const curve = parseAberCsv(singleCurveCsv());
    const svg = renderFigure(
      {
        inputs: [{ path: "x.csv", label: "SM" }],
        output: "o.svg",
        yLimits: [1e-3, 1e-1],
      },
      [curve],
    );
    expect(svg).toContain("1e-3");
    expect(svg).not.toContain("1e-5");
  });
});

describe("validateFigureSpec", () => {
  test("accepts a full spec", () => {
    const spec = validateFigureSpec({
      inputs: [{ path: "a.csv", label: "A", style: "dashed" }],
      output: "fig.svg",
      title: "t",
      yLimits: [1e-5, 0.5],
    });
    expect(spec.inputs[0].style).toBe("dashed");
  });

  test("rejects bad shapes", () => {
    expect(() => validateFigureSpec({})).toThrow(/inputs/);
    expect(() => validateFigureSpec({ inputs: [{ path: "a" }], output: "o" })).toThrow(/label/);
    expect(() =>
      validateFigureSpec({ inputs: [{ path: "a", label: "l" }], output: "" }),
    ).toThrow(/output/);
    expect(() =>
      validateFigureSpec({
        inputs: [{ path: "a", label: "l" }],
        output: "o",
        yLimits: [0, 1],
      }),
    ).toThrow(/yLimits/);
  });
});

describe("large-scale comparison figure", () => {
  const six = [
    ["sm_nt128_m2.csv", "SM Nt=128 M=2", "solid"],
    ["smx_nt8_m2.csv", "SMX Nt=8 M=2", "dashed"],
    ["sm_nt64_m4.csv", "SM Nt=64 M=4", "solid"],
    ["smx_nt4_m4.csv", "SMX Nt=4 M=4", "dashed"],
    ["sm_nt16_m16.csv", "SM Nt=16 M=16", "solid"],
    ["smx_nt2_m16.csv", "SMX Nt=2 M=16", "dashed"],
  ] as const;

  test("six CSVs produce one figure with six labeled curves", () => {
    const spec = {
      inputs: six.map(([file, label, style]) => ({
        path: join(FIXTURES, file),
        label,
        style,
      })),
      output: "unused.svg",
      title: "SM vs SMX, m=8, Nr=4",
    };
    const curves = spec.inputs.map((i) => parseAberCsv(readFileSync(i.path, "utf-8"), i.path));
    const svg = renderFigure(validateFigureSpec(spec), curves);
    expect(svg.match(/<polyline/g)).toHaveLength(6);
    for (const [, label] of six) {
      expect(svg).toContain(label);
    }
  });

  test("rendering is byte-deterministic across two runs", () => {
    const dir = mkdtempSync(join(tmpdir(), "smsim-plots-"));
    const specPath = join(dir, "fig.json");
    const outA = join(dir, "a.svg");
    const outB = join(dir, "b.svg");
    const inputs = six.map(([file, label, style]) => ({
      path: join(FIXTURES, file),
      label,
      style,
    }));
    writeFileSync(specPath, JSON.stringify({ inputs, output: outA, title: "large-scale comparison" }));
    expect(main(["render", "--spec", specPath])).toBe(0);
    writeFileSync(specPath, JSON.stringify({ inputs, output: outB, title: "large-scale comparison" }));
    expect(main(["render", "--spec", specPath])).toBe(0);
    expect(readFileSync(outA)).toEqual(readFileSync(outB));
  });
});

describe("cli", () => {
  test("positional form writes an svg", () => {
    const dir = mkdtempSync(join(tmpdir(), "smsim-plots-"));
    const csv = join(dir, "curve.csv");
    writeFileSync(csv, singleCurveCsv());
    const out = join(dir, "fig.svg");
    expect(main(["render", csv, "--out", out, "--title", "demo"])).toBe(0);
    const svg = readFileSync(out, "utf-8");
    expect(svg).toContain("<svg");
    expect(svg).toContain("demo");
  });

  test("fixture directory carries all six comparison curves", () => {
    const files = readdirSync(FIXTURES).filter((f) => f.endsWith(".csv"));
    expect(files.length).toBeGreaterThanOrEqual(6);
  });
});
