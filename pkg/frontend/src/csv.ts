// Reader for the simulator's curve CSV: one row per SNR point, with optional
// empty cells when a row carries only a bound value (or only a simulation value).

export const CSV_HEADER = "snr_db,aber,bits,errors,bound";

export interface AberPoint {
  snrDb: number;
  aber: number;
  bits: number;
  errors: number;
}

export interface BoundPoint {
  snrDb: number;
  value: number;
}

export interface AberCurve {
  points: AberPoint[];
  bound: BoundPoint[];
  configDigest: string;
}

function parseNumber(cell: string, source: string, line: number): number {
  const value = Number(cell);
  if (cell.trim() === "" || !Number.isFinite(value)) {
    throw new Error(`${source}:${line}: not a finite number: ${JSON.stringify(cell)}`);
  }
  return value;
}

export function parseAberCsv(text: string, source = "<csv>"): AberCurve {
  const curve: AberCurve = { points: [], bound: [], configDigest: "" };
  let headerSeen = false;
  const lines = text.split("\n");
  for (let i = 0; i < lines.length; i++) {
    const line = lines[i].trimEnd();
    if (line === "") continue;
    if (line.startsWith("#")) {
      const body = line.slice(1).trim();
      if (body.startsWith("config_digest=")) {
        curve.configDigest = body.slice("config_digest=".length);
      }
      continue;
    }
    if (!headerSeen) {
      if (line !== CSV_HEADER) {
        throw new Error(
          `${source}:${i + 1}: unexpected header ${JSON.stringify(line)}, ` +
            `want ${JSON.stringify(CSV_HEADER)}`,
        );
      }
      headerSeen = true;
      continue;
    }
    const cells = line.split(",");
    if (cells.length !== 5) {
      throw new Error(`${source}:${i + 1}: expected 5 cells, got ${cells.length}`);
    }
    const snrDb = parseNumber(cells[0], source, i + 1);
    if (cells[1] !== "") {
      curve.points.push({
        snrDb,
        aber: parseNumber(cells[1], source, i + 1),
        bits: parseNumber(cells[2], source, i + 1),
        errors: parseNumber(cells[3], source, i + 1),
      });
    }
    if (cells[4] !== "") {
      curve.bound.push({ snrDb, value: parseNumber(cells[4], source, i + 1) });
    }
  }
  if (!headerSeen) {
    throw new Error(`${source}: no header row found`);
  }
  return curve;
}
