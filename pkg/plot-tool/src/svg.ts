import type { CurveSet, MarkerShape, RenderOptions, Style } from "./types.js";
import { buildScales, fmt, xTicks } from "./scales.js";

function marker(shape: MarkerShape, cx: number, cy: number, r: number, color: string): string {
  const x = fmt(cx);
  const y = fmt(cy);
  switch (shape) {
    case "circle":
      return `<circle cx="${x}" cy="${y}" r="${fmt(r)}" fill="${color}"/>`;
    case "square":
      return `<rect x="${fmt(cx - r)}" y="${fmt(cy - r)}" width="${fmt(2 * r)}" height="${fmt(2 * r)}" fill="${color}"/>`;
    case "diamond":
      return `<path d="M ${x} ${fmt(cy - r)} L ${fmt(cx + r)} ${y} L ${x} ${fmt(cy + r)} L ${fmt(cx - r)} ${y} Z" fill="${color}"/>`;
    case "triangle":
      return `<path d="M ${x} ${fmt(cy - r)} L ${fmt(cx + r)} ${fmt(cy + r)} L ${fmt(cx - r)} ${fmt(cy + r)} Z" fill="${color}"/>`;
  }
}

/** Deterministic SVG figure: log-scale y, linear SNR x, legend, optional
 * threshold guide and confidence bands. */
export function renderSvg(curves: CurveSet, style: Style, options: RenderOptions = {}): string {
  const scales = buildScales(curves, style, options.threshold);
  const { plot } = scales;
  const out: string[] = [];
  out.push(
    `<svg xmlns="http://www.w3.org/2000/svg" width="${style.width}" height="${style.height}" viewBox="0 0 ${style.width} ${style.height}">`,
  );
  out.push(`<rect width="${style.width}" height="${style.height}" fill="${style.background}"/>`);

  // gridlines and axis labels
  const font = `font-family="${style.fontFamily}" font-size="${style.fontSize}"`;
  for (let d = scales.yDecades[0]; d <= scales.yDecades[1]; d++) {
    const y = fmt(scales.y(10 ** d));
    out.push(`<line x1="${plot.x0}" y1="${y}" x2="${plot.x1}" y2="${y}" stroke="#dddddd"/>`);
    out.push(
      `<text x="${plot.x0 - 8}" y="${y}" text-anchor="end" dominant-baseline="middle" ${font}>1e${d}</text>`,
    );
  }
  for (const t of xTicks(scales.xDomain)) {
    const x = fmt(scales.x(t));
    out.push(`<line x1="${x}" y1="${plot.y0}" x2="${x}" y2="${plot.y1}" stroke="#eeeeee"/>`);
    out.push(
      `<text x="${x}" y="${plot.y1 + 18}" text-anchor="middle" ${font}>${t}</text>`,
    );
  }
  out.push(
    `<rect x="${plot.x0}" y="${plot.y0}" width="${plot.x1 - plot.x0}" height="${plot.y1 - plot.y0}" fill="none" stroke="#000000"/>`,
  );
  out.push(
    `<text x="${fmt((plot.x0 + plot.x1) / 2)}" y="${style.height - 10}" text-anchor="middle" ${font}>SNR (dB)</text>`,
  );
  out.push(
    `<text x="16" y="${fmt((plot.y0 + plot.y1) / 2)}" text-anchor="middle" ${font} transform="rotate(-90 16 ${fmt((plot.y0 + plot.y1) / 2)})">${curves.metric.toUpperCase()}</text>`,
  );
  if (options.title) {
    out.push(
      `<text x="${fmt((plot.x0 + plot.x1) / 2)}" y="20" text-anchor="middle" ${font}>${options.title}</text>`,
    );
  }

  if (options.threshold) {
    const y = fmt(scales.y(options.threshold));
    out.push(
      `<line x1="${plot.x0}" y1="${y}" x2="${plot.x1}" y2="${y}" stroke="#d62728" stroke-dasharray="8 4"/>`,
    );
    out.push(
      `<text x="${plot.x1 - 4}" y="${y}" dy="-4" text-anchor="end" ${font} fill="#d62728">${options.threshold}</text>`,
    );
  }

  curves.series.forEach((series, idx) => {
    const color = style.palette[idx % style.palette.length];
    const shape = style.markersByAntennas[String(series.nRx)] ?? "circle";
    const dash = style.dashByHarq[String(series.harqMaxRetx)] ?? "";
    const pts = series.points.map((p) => [scales.x(p.snrDb), scales.y(Math.max(p.value, style.floor))]);

    if (options.ciBands && series.points.length > 1) {
      const upper = series.points.map((p) => [scales.x(p.snrDb), scales.y(Math.max(p.ciHi, style.floor))]);
      const lower = series.points
        .map((p) => [scales.x(p.snrDb), scales.y(Math.max(p.ciLo, style.floor))])
        .reverse();
      const d =
        "M " + upper.map(([x, y]) => `${fmt(x)} ${fmt(y)}`).join(" L ") +
        " L " + lower.map(([x, y]) => `${fmt(x)} ${fmt(y)}`).join(" L ") + " Z";
      out.push(`<path d="${d}" fill="${color}" fill-opacity="0.15" stroke="none"/>`);
    }

    if (pts.length > 1) {
      const d = "M " + pts.map(([x, y]) => `${fmt(x)} ${fmt(y)}`).join(" L ");
      const dashAttr = dash ? ` stroke-dasharray="${dash}"` : "";
      out.push(`<path d="${d}" fill="none" stroke="${color}" stroke-width="1.5"${dashAttr}/>`);
    }
    for (const [x, y] of pts) {
      out.push(marker(shape, x, y, 3.2, color));
    }
  });

  // legend
  const lx = plot.x0 + 10;
  let ly = plot.y0 + 14;
  curves.series.forEach((series, idx) => {
    const color = style.palette[idx % style.palette.length];
    out.push(`<line x1="${lx}" y1="${ly - 4}" x2="${lx + 22}" y2="${ly - 4}" stroke="${color}" stroke-width="1.5"/>`);
    out.push(marker(style.markersByAntennas[String(series.nRx)] ?? "circle", lx + 11, ly - 4, 3, color));
    out.push(`<text x="${lx + 28}" y="${ly}" ${font}>${escapeXml(series.label)}</text>`);
    ly += style.fontSize + 4;
  });

  out.push("</svg>");
  return out.join("\n") + "\n";
}

function escapeXml(s: string): string {
  return s
    .replaceAll("&", "&amp;")
    .replaceAll("<", "&lt;")
    .replaceAll(">", "&gt;")
    .replaceAll('"', "&quot;");
}
