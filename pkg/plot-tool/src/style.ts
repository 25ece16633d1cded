import { readFileSync } from "node:fs";
import type { Style } from "./types.js";

export const DEFAULT_STYLE: Style = {
  width: 640,
  height: 480,
  margin: { top: 32, right: 24, bottom: 48, left: 64 },
  palette: [
    "#1f77b4", "#ff7f0e", "#2ca02c", "#d62728", "#9467bd",
    "#8c564b", "#e377c2", "#7f7f7f", "#bcbd22", "#17becf",
  ],
  markersByAntennas: { "1": "circle", "2": "square", "4": "triangle", "8": "diamond" },
  dashByHarq: { "0": "", "1": "6 3", "2": "2 3", "3": "6 3 2 3" },
  fontFamily: "Helvetica, Arial, sans-serif",
  fontSize: 12,
  background: "#ffffff",
  floor: 1e-8,
};

export function loadStyle(path?: string): Style {
  if (!path) {
    return DEFAULT_STYLE;
  }
  const raw = JSON.parse(readFileSync(path, "utf8")) as Partial<Style>;
  return { ...DEFAULT_STYLE, ...raw, margin: { ...DEFAULT_STYLE.margin, ...(raw.margin ?? {}) } };
}
