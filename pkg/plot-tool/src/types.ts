export type Metric = "per" | "ber";

export interface SeriesPoint {
  snrDb: number;
  value: number;
  ciLo: number;
  ciHi: number;
}

export interface Series {
  label: string;
  points: SeriesPoint[];
  /** spec fields the label was built from, for styling decisions */
  nTx: number;
  nRx: number;
  harqMaxRetx: number;
  csi: string;
  channel: string;
  mcsIndex: number | null;
}

export interface CurveSet {
  metric: Metric;
  series: Series[];
}

export interface Style {
  width: number;
  height: number;
  margin: { top: number; right: number; bottom: number; left: number };
  /** series colors, cycled in order */
  palette: string[];
  /** marker shape per receive-antenna count */
  markersByAntennas: Record<string, MarkerShape>;
  /** dash pattern per HARQ retransmission budget */
  dashByHarq: Record<string, string>;
  fontFamily: string;
  fontSize: number;
  background: string;
  /** values below this are clipped before taking logs */
  floor: number;
}

export type MarkerShape = "circle" | "square" | "diamond" | "triangle";

export interface RenderOptions {
  threshold?: number | null;
  ciBands?: boolean;
  title?: string;
}
