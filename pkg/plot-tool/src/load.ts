import { readFileSync, readdirSync, statSync } from "node:fs";
import { basename, dirname, join } from "node:path";
import Papa from "papaparse";
import type { CurveSet, Metric, Series, SeriesPoint } from "./types.js";

const REQUIRED_COLUMNS = [
  "snr_db",
  "trials",
  "packet_errors",
  "per",
  "per_ci_lo",
  "per_ci_hi",
  "ber",
  "harq_mean_tx",
];

interface SidecarPoint {
  snr_db: number;
  per: number;
  ber: number;
  per_ci95: [number, number];
}

interface Sidecar {
  tool: string;
  spec: Record<string, unknown>;
  points: SidecarPoint[];
}

/** Expand simple `*` globs against the filesystem (no recursion). */
export function expandInputs(patterns: string[]): string[] {
  const out: string[] = [];
  for (const pattern of patterns) {
    if (!pattern.includes("*")) {
      out.push(pattern);
      continue;
    }
    const dir = dirname(pattern);
    const rx = new RegExp(
      "^" + basename(pattern).split("*").map(escapeRegExp).join(".*") + "$",
    );
    const matches = readdirSync(dir)
      .filter((name) => rx.test(name))
      .map((name) => join(dir, name))
      .filter((p) => statSync(p).isFile())
      .sort();
    out.push(...matches);
  }
  return [...new Set(out)];
}

function escapeRegExp(s: string): string {
  return s.replace(/[.*+?^${}()|[\]\\]/g, "\\$&");
}

function loadSidecar(csvPath: string): Sidecar {
  const jsonPath = csvPath.replace(/\.csv$/, ".json");
  let raw: string;
  try {
    raw = readFileSync(jsonPath, "utf8");
  } catch {
    throw new Error(`missing sidecar ${jsonPath} for ${csvPath}`);
  }
  const parsed = JSON.parse(raw) as Sidecar;
  if (!parsed.spec || !Array.isArray(parsed.points)) {
    throw new Error(`sidecar ${jsonPath} lacks 'spec' or 'points'`);
  }
  return parsed;
}

export function seriesLabel(spec: Record<string, unknown>): string {
  const parts: string[] = [];
  if (spec.mcs_index !== null && spec.mcs_index !== undefined) {
    parts.push(`MCS ${spec.mcs_index}`);
  } else if (typeof spec.format_name === "string") {
    parts.push(spec.format_name);
  }
  parts.push(String(spec.channel ?? "").toUpperCase());
  parts.push(`${spec.n_tx}x${spec.n_rx}`);
  const retx = spec.harq_max_retx;
  if (retx !== null && retx !== undefined) {
    parts.push(`${retx} retx`);
  }
  parts.push(String(spec.csi ?? ""));
  return parts.filter((p) => p.length > 0).join(", ");
}

export function loadSeries(csvPath: string, metric: Metric): Series {
  const text = readFileSync(csvPath, "utf8");
  const parsed = Papa.parse<Record<string, string>>(text.trim(), {
    header: true,
    skipEmptyLines: true,
  });
  const fields = parsed.meta.fields ?? [];
  for (const col of REQUIRED_COLUMNS) {
    if (!fields.includes(col)) {
      throw new Error(`${csvPath}: missing column '${col}'`);
    }
  }
  const sidecar = loadSidecar(csvPath);
  const spec = sidecar.spec;

  const points: SeriesPoint[] = parsed.data.map((row) => {
    const value = Number(metric === "per" ? row.per : row.ber);
    return {
      snrDb: Number(row.snr_db),
      value,
      ciLo: Number(row.per_ci_lo),
      ciHi: Number(row.per_ci_hi),
    };
  });
  for (let i = 1; i < points.length; i++) {
    if (!(points[i].snrDb > points[i - 1].snrDb)) {
      throw new Error(`${csvPath}: SNR values are not strictly increasing`);
    }
  }
  return {
    label: seriesLabel(spec),
    points,
    nTx: Number(spec.n_tx ?? 1),
    nRx: Number(spec.n_rx ?? 1),
    harqMaxRetx: Number(spec.harq_max_retx ?? 0),
    csi: String(spec.csi ?? ""),
    channel: String(spec.channel ?? ""),
    mcsIndex:
      spec.mcs_index === null || spec.mcs_index === undefined
        ? null
        : Number(spec.mcs_index),
  };
}

export function loadResults(paths: string[], metric: Metric): CurveSet {
  if (paths.length === 0) {
    throw new Error("no input files matched");
  }
  const series = paths.map((p) => loadSeries(p, metric));
  series.sort((a, b) => {
    if (a.mcsIndex !== null && b.mcsIndex !== null && a.mcsIndex !== b.mcsIndex) {
      return a.mcsIndex - b.mcsIndex;
    }
    return a.label.localeCompare(b.label);
  });
  return { metric, series };
}
