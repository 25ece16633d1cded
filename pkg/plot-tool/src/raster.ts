import { deflateSync } from "node:zlib";
import type { CurveSet, MarkerShape, RenderOptions, Style } from "./types.js";
import { buildScales, xTicks } from "./scales.js";

/** Minimal software rasterizer + PNG writer for the raster output path.
 * Geometry mirrors the SVG renderer; text uses a compact 5x7 font. */

class Canvas {
  data: Uint8Array;
  constructor(readonly width: number, readonly height: number, background: [number, number, number]) {
    this.data = new Uint8Array(width * height * 3);
    for (let i = 0; i < width * height; i++) {
      this.data.set(background, i * 3);
    }
  }

  set(x: number, y: number, rgb: [number, number, number]) {
    const xi = Math.round(x);
    const yi = Math.round(y);
    if (xi < 0 || yi < 0 || xi >= this.width || yi >= this.height) return;
    this.data.set(rgb, (yi * this.width + xi) * 3);
  }

  line(x0: number, y0: number, x1: number, y1: number, rgb: [number, number, number], dash?: number[]) {
    const steps = Math.max(Math.abs(x1 - x0), Math.abs(y1 - y0), 1) * 2;
    const period = dash && dash.length ? dash.reduce((a, b) => a + b, 0) : 0;
    const len = Math.hypot(x1 - x0, y1 - y0);
    for (let i = 0; i <= steps; i++) {
      const t = i / steps;
      if (period > 0) {
        let pos = (t * len) % period;
        let on = true;
        for (const seg of dash!) {
          if (pos < seg) break;
          pos -= seg;
          on = !on;
        }
        if (!on) continue;
      }
      this.set(x0 + t * (x1 - x0), y0 + t * (y1 - y0), rgb);
    }
  }

  rect(x0: number, y0: number, x1: number, y1: number, rgb: [number, number, number]) {
    this.line(x0, y0, x1, y0, rgb);
    this.line(x1, y0, x1, y1, rgb);
    this.line(x1, y1, x0, y1, rgb);
    this.line(x0, y1, x0, y0, rgb);
  }

  fillRect(x0: number, y0: number, x1: number, y1: number, rgb: [number, number, number]) {
    for (let y = Math.round(y0); y <= Math.round(y1); y++) {
      for (let x = Math.round(x0); x <= Math.round(x1); x++) {
        this.set(x, y, rgb);
      }
    }
  }

  marker(shape: MarkerShape, cx: number, cy: number, r: number, rgb: [number, number, number]) {
    switch (shape) {
      case "circle":
        for (let dy = -r; dy <= r; dy++)
          for (let dx = -r; dx <= r; dx++)
            if (dx * dx + dy * dy <= r * r) this.set(cx + dx, cy + dy, rgb);
        break;
      case "square":
        this.fillRect(cx - r, cy - r, cx + r, cy + r, rgb);
        break;
      case "diamond":
        for (let dy = -r; dy <= r; dy++)
          for (let dx = -r; dx <= r; dx++)
            if (Math.abs(dx) + Math.abs(dy) <= r) this.set(cx + dx, cy + dy, rgb);
        break;
      case "triangle":
        for (let dy = -r; dy <= r; dy++) {
          const half = ((dy + r) / (2 * r)) * r;
          for (let dx = -half; dx <= half; dx++) this.set(cx + dx, cy + dy, rgb);
        }
        break;
    }
  }

  text(s: string, x: number, y: number, rgb: [number, number, number]) {
    let cx = Math.round(x);
    for (const ch of s) {
      const glyph = FONT[ch.toUpperCase()] ?? FONT["?"];
      for (let row = 0; row < 7; row++) {
        for (let col = 0; col < 5; col++) {
          if ((glyph[row] >> (4 - col)) & 1) this.set(cx + col, y - 6 + row, rgb);
        }
      }
      cx += 6;
    }
  }
}

//: 5x7 glyphs for the characters the figure labels use
const FONT: Record<string, number[]> = {
  "0": [0x0e, 0x11, 0x13, 0x15, 0x19, 0x11, 0x0e],
  "1": [0x04, 0x0c, 0x04, 0x04, 0x04, 0x04, 0x0e],
  "2": [0x0e, 0x11, 0x01, 0x02, 0x04, 0x08, 0x1f],
  "3": [0x1f, 0x02, 0x04, 0x02, 0x01, 0x11, 0x0e],
  "4": [0x02, 0x06, 0x0a, 0x12, 0x1f, 0x02, 0x02],
  "5": [0x1f, 0x10, 0x1e, 0x01, 0x01, 0x11, 0x0e],
  "6": [0x06, 0x08, 0x10, 0x1e, 0x11, 0x11, 0x0e],
  "7": [0x1f, 0x01, 0x02, 0x04, 0x08, 0x08, 0x08],
  "8": [0x0e, 0x11, 0x11, 0x0e, 0x11, 0x11, 0x0e],
  "9": [0x0e, 0x11, 0x11, 0x0f, 0x01, 0x02, 0x0c],
  A: [0x0e, 0x11, 0x11, 0x1f, 0x11, 0x11, 0x11],
  B: [0x1e, 0x11, 0x11, 0x1e, 0x11, 0x11, 0x1e],
  C: [0x0e, 0x11, 0x10, 0x10, 0x10, 0x11, 0x0e],
  D: [0x1c, 0x12, 0x11, 0x11, 0x11, 0x12, 0x1c],
  E: [0x1f, 0x10, 0x10, 0x1e, 0x10, 0x10, 0x1f],
  F: [0x1f, 0x10, 0x10, 0x1e, 0x10, 0x10, 0x10],
  G: [0x0e, 0x11, 0x10, 0x17, 0x11, 0x11, 0x0f],
  H: [0x11, 0x11, 0x11, 0x1f, 0x11, 0x11, 0x11],
  I: [0x0e, 0x04, 0x04, 0x04, 0x04, 0x04, 0x0e],
  J: [0x07, 0x02, 0x02, 0x02, 0x02, 0x12, 0x0c],
  K: [0x11, 0x12, 0x14, 0x18, 0x14, 0x12, 0x11],
  L: [0x10, 0x10, 0x10, 0x10, 0x10, 0x10, 0x1f],
  M: [0x11, 0x1b, 0x15, 0x15, 0x11, 0x11, 0x11],
  N: [0x11, 0x19, 0x15, 0x13, 0x11, 0x11, 0x11],
  O: [0x0e, 0x11, 0x11, 0x11, 0x11, 0x11, 0x0e],
  P: [0x1e, 0x11, 0x11, 0x1e, 0x10, 0x10, 0x10],
  Q: [0x0e, 0x11, 0x11, 0x11, 0x15, 0x12, 0x0d],
  R: [0x1e, 0x11, 0x11, 0x1e, 0x14, 0x12, 0x11],
  S: [0x0f, 0x10, 0x10, 0x0e, 0x01, 0x01, 0x1e],
  T: [0x1f, 0x04, 0x04, 0x04, 0x04, 0x04, 0x04],
  U: [0x11, 0x11, 0x11, 0x11, 0x11, 0x11, 0x0e],
  V: [0x11, 0x11, 0x11, 0x11, 0x11, 0x0a, 0x04],
  W: [0x11, 0x11, 0x11, 0x15, 0x15, 0x1b, 0x11],
  X: [0x11, 0x11, 0x0a, 0x04, 0x0a, 0x11, 0x11],
  Y: [0x11, 0x11, 0x0a, 0x04, 0x04, 0x04, 0x04],
  Z: [0x1f, 0x01, 0x02, 0x04, 0x08, 0x10, 0x1f],
  " ": [0, 0, 0, 0, 0, 0, 0],
  "-": [0, 0, 0, 0x0e, 0, 0, 0],
  ".": [0, 0, 0, 0, 0, 0x0c, 0x0c],
  ",": [0, 0, 0, 0, 0x0c, 0x04, 0x08],
  "(": [0x02, 0x04, 0x08, 0x08, 0x08, 0x04, 0x02],
  ")": [0x08, 0x04, 0x02, 0x02, 0x02, 0x04, 0x08],
  "[": [0x0e, 0x08, 0x08, 0x08, 0x08, 0x08, 0x0e],
  "]": [0x0e, 0x02, 0x02, 0x02, 0x02, 0x02, 0x0e],
  "/": [0x01, 0x01, 0x02, 0x04, 0x08, 0x10, 0x10],
  "=": [0, 0, 0x1f, 0, 0x1f, 0, 0],
  "+": [0, 0x04, 0x04, 0x1f, 0x04, 0x04, 0],
  "?": [0x0e, 0x11, 0x01, 0x02, 0x04, 0, 0x04],
  "%": [0x19, 0x1a, 0x02, 0x04, 0x08, 0x0b, 0x13],
};

function hexColor(c: string): [number, number, number] {
  const v = c.replace("#", "");
  return [
    parseInt(v.slice(0, 2), 16),
    parseInt(v.slice(2, 4), 16),
    parseInt(v.slice(4, 6), 16),
  ];
}

function parseDash(dash: string): number[] | undefined {
  if (!dash) return undefined;
  return dash.split(/\s+/).map(Number);
}

export function renderPng(curves: CurveSet, style: Style, options: RenderOptions = {}): Buffer {
  const scales = buildScales(curves, style, options.threshold);
  const { plot } = scales;
  const canvas = new Canvas(style.width, style.height, hexColor(style.background));
  const black: [number, number, number] = [0, 0, 0];
  const grey: [number, number, number] = [221, 221, 221];

  for (let d = scales.yDecades[0]; d <= scales.yDecades[1]; d++) {
    const y = scales.y(10 ** d);
    canvas.line(plot.x0, y, plot.x1, y, grey);
    canvas.text(`1E${d}`, plot.x0 - 38, y + 3, black);
  }
  for (const t of xTicks(scales.xDomain)) {
    const x = scales.x(t);
    canvas.line(x, plot.y0, x, plot.y1, [238, 238, 238]);
    canvas.text(String(t), x - 5, plot.y1 + 16, black);
  }
  canvas.rect(plot.x0, plot.y0, plot.x1, plot.y1, black);
  canvas.text("SNR (DB)", (plot.x0 + plot.x1) / 2 - 24, style.height - 10, black);
  canvas.text(curves.metric.toUpperCase(), 8, (plot.y0 + plot.y1) / 2, black);
  if (options.title) {
    canvas.text(options.title, (plot.x0 + plot.x1) / 2 - options.title.length * 3, 20, black);
  }
  if (options.threshold) {
    const y = scales.y(options.threshold);
    canvas.line(plot.x0, y, plot.x1, y, hexColor("#d62728"), [8, 4]);
  }

  curves.series.forEach((series, idx) => {
    const color = hexColor(style.palette[idx % style.palette.length]);
    const shape = style.markersByAntennas[String(series.nRx)] ?? "circle";
    const dash = parseDash(style.dashByHarq[String(series.harqMaxRetx)] ?? "");
    const pts = series.points.map((p) => [
      scales.x(p.snrDb),
      scales.y(Math.max(p.value, style.floor)),
    ]);
    for (let i = 1; i < pts.length; i++) {
      canvas.line(pts[i - 1][0], pts[i - 1][1], pts[i][0], pts[i][1], color, dash);
    }
    for (const [x, y] of pts) {
      canvas.marker(shape, Math.round(x), Math.round(y), 3, color);
    }
  });

  const lx = plot.x0 + 10;
  let ly = plot.y0 + 14;
  curves.series.forEach((series, idx) => {
    const color = hexColor(style.palette[idx % style.palette.length]);
    canvas.line(lx, ly - 3, lx + 22, ly - 3, color);
    canvas.marker(style.markersByAntennas[String(series.nRx)] ?? "circle", lx + 11, ly - 3, 3, color);
    canvas.text(series.label, lx + 28, ly, black);
    ly += style.fontSize + 4;
  });

  return encodePng(canvas);
}

// -- PNG container ----------------------------------------------------------

function crc32(buf: Uint8Array): number {
  let crc = ~0;
  for (let i = 0; i < buf.length; i++) {
    crc ^= buf[i];
    for (let k = 0; k < 8; k++) {
      crc = (crc >>> 1) ^ (0xedb88320 & -(crc & 1));
    }
  }
  return ~crc >>> 0;
}

function chunk(type: string, data: Uint8Array): Buffer {
  const head = Buffer.alloc(4);
  head.writeUInt32BE(data.length);
  const body = Buffer.concat([Buffer.from(type, "ascii"), Buffer.from(data)]);
  const crc = Buffer.alloc(4);
  crc.writeUInt32BE(crc32(body));
  return Buffer.concat([head, body, crc]);
}

function encodePng(canvas: Canvas): Buffer {
  const { width, height, data } = canvas;
  const raw = Buffer.alloc(height * (1 + width * 3));
  for (let y = 0; y < height; y++) {
    raw[y * (1 + width * 3)] = 0; // no per-row filtering
    data
      .subarray(y * width * 3, (y + 1) * width * 3)
      .forEach((v, i) => (raw[y * (1 + width * 3) + 1 + i] = v));
  }
  const ihdr = Buffer.alloc(13);
  ihdr.writeUInt32BE(width, 0);
  ihdr.writeUInt32BE(height, 4);
  ihdr[8] = 8; // bit depth
  ihdr[9] = 2; // truecolor
  return Buffer.concat([
    Buffer.from([0x89, 0x50, 0x4e, 0x47, 0x0d, 0x0a, 0x1a, 0x0a]),
    chunk("IHDR", ihdr),
    chunk("IDAT", deflateSync(raw, { level: 9 })),
    chunk("IEND", new Uint8Array(0)),
  ]);
}
