/** Minimal SVG line-chart builder (no DOM required). */

export interface Series {
  label: string;
  points: Array<{ x: number; y: number }>;
}

export interface FigureOptions {
  title: string;
  xLabel: string;
  yLabel: string;
  logY: boolean;
  annotation?: string;
}

const WIDTH = 840;
const HEIGHT = 560;
const MARGIN = { left: 86, right: 210, top: 48, bottom: 64 };

const PALETTE = [
  '#1f77b4', '#d62728', '#2ca02c', '#9467bd', '#ff7f0e', '#17becf',
  '#8c564b', '#e377c2',
];

const MARKERS = ['circle', 'square', 'diamond', 'triangle', 'cross', 'circle-open'];

function niceTicks(lo: number, hi: number, n = 6): number[] {
  if (!(hi > lo)) return [lo];
  const span = hi - lo;
  const step0 = span / Math.max(1, n - 1);
  const mag = Math.pow(10, Math.floor(Math.log10(step0)));
  const candidates = [1, 2, 2.5, 5, 10].map((m) => m * mag);
  const step = candidates.find((c) => span / c <= n) ?? candidates[candidates.length - 1];
  const start = Math.ceil(lo / step) * step;
  const ticks: number[] = [];
  for (let v = start; v <= hi + 1e-12; v += step) ticks.push(Number(v.toPrecision(12)));
  return ticks;
}

function fmt(v: number): string {
  if (v === 0) return '0';
  const a = Math.abs(v);
  if (a >= 0.01 && a < 10000) return String(Number(v.toPrecision(6)));
  return v.toExponential(0).replace('e', 'e');
}

function markerSvg(kind: string, cx: number, cy: number, color: string): string {
  const r = 4;
  switch (kind) {
    case 'square':
      return `<rect x="${cx - r}" y="${cy - r}" width="${2 * r}" height="${2 * r}" fill="${color}"/>`;
    case 'diamond':
      return `<path d="M${cx} ${cy - r + 1} L${cx + r - 1} ${cy} L${cx} ${cy + r - 1} L${cx - r + 1} ${cy} Z" fill="${color}"/>`;
    case 'triangle':
      return `<path d="M${cx} ${cy - r} L${cx + r} ${cy + r} L${cx - r} ${cy + r} Z" fill="${color}"/>`;
    case 'cross':
      return `<path d="M${cx - r} ${cy} H${cx + r} M${cx} ${cy - r} V${cx === cx ? cy + r : cy}" stroke="${color}" stroke-width="2" fill="none"/>`;
    case 'circle-open':
      return `<circle cx="${cx}" cy="${cy}" r="${r}" fill="white" stroke="${color}" stroke-width="2"/>`;
    default:
      return `<circle cx="${cx}" cy="${cy}" r="${r}" fill="${color}"/>`;
  }
}

/** Render series to a standalone SVG document. */
export function renderFigure(series: Series[], opts: FigureOptions): string {
  if (series.length === 0 || series.every((s) => s.points.length === 0)) {
    throw new Error('nothing to plot');
  }
  const xs = series.flatMap((s) => s.points.map((p) => p.x));
  const ys = series.flatMap((s) => s.points.map((p) => p.y));
  const xLo = Math.min(...xs);
  const xHi = Math.max(...xs);
  let yLo = Math.min(...ys);
  let yHi = Math.max(...ys);
  if (opts.logY) {
    if (yLo <= 0) throw new Error('log axis requires positive values');
    yLo = Math.pow(10, Math.floor(Math.log10(yLo)));
    yHi = Math.pow(10, Math.ceil(Math.log10(yHi)));
    if (yLo === yHi) yHi = yLo * 10;
  } else {
    if (yLo === yHi) {
      yLo -= 0.5;
      yHi += 0.5;
    } else {
      const pad = 0.05 * (yHi - yLo);
      yLo -= pad;
      yHi += pad;
    }
  }

  const plotW = WIDTH - MARGIN.left - MARGIN.right;
  const plotH = HEIGHT - MARGIN.top - MARGIN.bottom;
  const sx = (x: number) =>
    MARGIN.left + (xHi === xLo ? plotW / 2 : ((x - xLo) / (xHi - xLo)) * plotW);
  const sy = (y: number) => {
    const t = opts.logY
      ? (Math.log10(y) - Math.log10(yLo)) / (Math.log10(yHi) - Math.log10(yLo))
      : (y - yLo) / (yHi - yLo);
    return MARGIN.top + plotH * (1 - t);
  };

  const parts: string[] = [];
  parts.push(
    `<svg xmlns="http://www.w3.org/2000/svg" width="${WIDTH}" height="${HEIGHT}" ` +
    `viewBox="0 0 ${WIDTH} ${HEIGHT}" font-family="Helvetica, Arial, sans-serif">`);
  parts.push(`<rect width="${WIDTH}" height="${HEIGHT}" fill="white"/>`);
  parts.push(
    `<text x="${MARGIN.left + plotW / 2}" y="26" text-anchor="middle" font-size="17">` +
    `${opts.title}</text>`);

  // gridlines and ticks
  const xTicks = niceTicks(xLo, xHi);
  const yTicks = opts.logY
    ? Array.from(
        { length: Math.round(Math.log10(yHi) - Math.log10(yLo)) + 1 },
        (_, i) => Math.pow(10, Math.log10(yLo) + i))
    : niceTicks(yLo, yHi);
  for (const t of xTicks) {
    const x = sx(t);
    parts.push(
      `<line x1="${x}" y1="${MARGIN.top}" x2="${x}" y2="${MARGIN.top + plotH}" ` +
      `stroke="#dddddd"/>`);
    parts.push(
      `<text x="${x}" y="${MARGIN.top + plotH + 22}" text-anchor="middle" ` +
      `font-size="12">${fmt(t)}</text>`);
  }
  for (const t of yTicks) {
    const y = sy(t);
    parts.push(
      `<line x1="${MARGIN.left}" y1="${y}" x2="${MARGIN.left + plotW}" y2="${y}" ` +
      `stroke="#dddddd"/>`);
    parts.push(
      `<text x="${MARGIN.left - 8}" y="${y + 4}" text-anchor="end" font-size="12">` +
      `${opts.logY ? '1e' + Math.round(Math.log10(t)) : fmt(t)}</text>`);
  }
  parts.push(
    `<rect x="${MARGIN.left}" y="${MARGIN.top}" width="${plotW}" height="${plotH}" ` +
    `fill="none" stroke="#333333"/>`);
  parts.push(
    `<text x="${MARGIN.left + plotW / 2}" y="${HEIGHT - 18}" text-anchor="middle" ` +
    `font-size="14">${opts.xLabel}</text>`);
  parts.push(
    `<text x="24" y="${MARGIN.top + plotH / 2}" text-anchor="middle" font-size="14" ` +
    `transform="rotate(-90 24 ${MARGIN.top + plotH / 2})">${opts.yLabel}</text>`);

  series.forEach((s, i) => {
    const color = PALETTE[i % PALETTE.length];
    const marker = MARKERS[i % MARKERS.length];
    const path = s.points
      .map((p, j) => `${j === 0 ? 'M' : 'L'}${sx(p.x).toFixed(2)} ${sy(p.y).toFixed(2)}`)
      .join(' ');
    parts.push(
      `<path class="curve" d="${path}" fill="none" stroke="${color}" stroke-width="2"/>`);
    for (const p of s.points) {
      parts.push(markerSvg(marker, sx(p.x), sy(p.y), color));
    }
    const ly = MARGIN.top + 16 + i * 22;
    const lx = MARGIN.left + plotW + 18;
    parts.push(`<line x1="${lx}" y1="${ly}" x2="${lx + 26}" y2="${ly}" stroke="${color}" stroke-width="2"/>`);
    parts.push(markerSvg(marker, lx + 13, ly, color));
    parts.push(`<text x="${lx + 32}" y="${ly + 4}" font-size="13">${s.label}</text>`);
  });

  if (opts.annotation) {
    parts.push(
      `<text class="annotation" x="${MARGIN.left + 6}" y="${MARGIN.top + plotH - 8}" ` +
      `font-size="11" fill="#555555">${opts.annotation}</text>`);
  }
  parts.push('</svg>');
  return parts.join('\n');
}
