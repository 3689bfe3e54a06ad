import { describe, test, expect } from "vitest";
import { parseAberCsv, CSV_HEADER } from "../src/csv.js";

const SAMPLE = `# config_digest=cafe1234
${CSV_HEADER}
0.0,0.1484375,32768,4864,0.30748951
2.0,0.087585,32768,2870,0.13658
4.0,,,,0.050008
6.0,0.011887,65536,779,
`;

describe("parseAberCsv", () => {
  test("reads points, bound and digest", () => {
    const curve = parseAberCsv(SAMPLE);
    expect(curve.configDigest).toBe("cafe1234");
    expect(curve.points).toHaveLength(3);
    expect(curve.points[0]).toEqual({ snrDb: 0, aber: 0.1484375, bits: 32768, errors: 4864 });
    expect(curve.bound).toHaveLength(3);
    expect(curve.bound[2]).toEqual({ snrDb: 4, value: 0.050008 });
  });

  test("bound-only rows carry no simulation point", () => {
    const curve = parseAberCsv(SAMPLE);
    expect(curve.points.map((p) => p.snrDb)).toEqual([0, 2, 6]);
  });

  test("rejects a foreign header", () => {
    expect(() => parseAberCsv("snr,ber\n0,0.1\n")).toThrow(/unexpected header/);
  });

  test("rejects missing header", () => {
    expect(() => parseAberCsv("# only a comment\n")).toThrow(/no header/);
  });

  test("rejects malformed rows", () => {
    expect(() => parseAberCsv(`${CSV_HEADER}\n0.0,0.1\n`)).toThrow(/5 cells/);
    expect(() => parseAberCsv(`${CSV_HEADER}\nabc,0.1,10,1,\n`)).toThrow(/finite/);
  });

  test("empty curve parses to no points", () => {
    const curve = parseAberCsv(`# config_digest=x\n${CSV_HEADER}\n`);
    expect(curve.points).toHaveLength(0);
    expect(curve.bound).toHaveLength(0);
  });
});
