import type { CurveSet, Style } from "./types.js";

export interface Scales {
  x: (snrDb: number) => number;
  y: (value: number) => number;
  xDomain: [number, number];
  yDecades: [number, number]; // floor/ceil log10 of the value range
  plot: { x0: number; y0: number; x1: number; y1: number };
}

/** Fixed-point formatter so output bytes are stable across platforms. */
export function fmt(v: number): string {
  return v.toFixed(2).replace(/^-0\.00$/, "0.00");
}

export function buildScales(curves: CurveSet, style: Style, threshold?: number | null): Scales {
  const xs: number[] = [];
  const ys: number[] = [];
  for (const s of curves.series) {
    for (const p of s.points) {
      xs.push(p.snrDb);
      ys.push(Math.max(p.value, style.floor));
    }
  }
  if (threshold) {
    ys.push(threshold);
  }
  const xMin = Math.min(...xs);
  const xMax = Math.max(...xs);
  const xPad = xMax > xMin ? 0 : 1;
  const yLo = Math.floor(Math.log10(Math.min(...ys)));
  const yHi = Math.ceil(Math.log10(Math.max(1e-300, Math.max(...ys))));
  const decades: [number, number] = [yLo, Math.max(yHi, yLo + 1)];

  const plot = {
    x0: style.margin.left,
    y0: style.margin.top,
    x1: style.width - style.margin.right,
    y1: style.height - style.margin.bottom,
  };
  const x = (v: number) =>
    plot.x0 + ((v - xMin + xPad) / (xMax - xMin + 2 * xPad)) * (plot.x1 - plot.x0);
  const y = (v: number) => {
    const lv = Math.log10(Math.max(v, style.floor));
    return plot.y1 - ((lv - decades[0]) / (decades[1] - decades[0])) * (plot.y1 - plot.y0);
  };
  return { x, y, xDomain: [xMin - xPad, xMax + xPad], yDecades: decades, plot };
}

export function xTicks(domain: [number, number]): number[] {
  const span = domain[1] - domain[0];
  const step = span <= 12 ? 2 : span <= 30 ? 5 : 10;
  const start = Math.ceil(domain[0] / step) * step;
  const ticks: number[] = [];
  for (let v = start; v <= domain[1] + 1e-9; v += step) {
    ticks.push(v);
  }
  return ticks;
}
