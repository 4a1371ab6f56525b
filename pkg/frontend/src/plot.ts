/** Build the BER / MSE comparison figures from a sweep CSV. */

import * as fs from 'fs';

import { SweepRow, readSweepCsv } from './csv.js';
import { Series, renderFigure } from './figure.js';

export type Metric = 'ber' | 'mse_empirical' | 'mse_analytic';

const METRIC_LABEL: Record<Metric, string> = {
  ber: 'bit error rate',
  mse_empirical: 'empirical MSE',
  mse_analytic: 'analytic MSE',
};

function metricValue(row: SweepRow, metric: Metric): number {
  switch (metric) {
    case 'ber':
      return row.ber;
    case 'mse_empirical':
      return row.mseEmpirical;
    case 'mse_analytic':
      return row.mseAnalytic;
  }
}

export interface CurveSet {
  series: Series[];
  clippedPoints: number;
  clipFloor: number | null;
}

/**
 * One curve per design, points sorted by Eb/N0.  For the BER metric a
 * zero count cannot sit on the log axis, so it is clipped to the
 * resolution floor 1/(2*n_bits) of that row and the figure is annotated.
 * Rows whose cells all failed (no surviving channels) are skipped.
 */
export function buildCurves(rows: SweepRow[], metric: Metric): CurveSet {
  const designs: string[] = [];
  for (const row of rows) {
    if (!designs.includes(row.design)) designs.push(row.design);
  }
  let clipped = 0;
  let clipFloor: number | null = null;
  const series: Series[] = designs.map((design) => {
    const points = rows
      .filter((r) => r.design === design && r.nChannels > 0 && Number.isFinite(metricValue(r, metric)))
      .map((r) => {
        let y = metricValue(r, metric);
        if (metric === 'ber' && y <= 0) {
          y = 1 / (2 * r.nBits);
          clipped += 1;
          clipFloor = clipFloor === null ? y : Math.min(clipFloor, y);
        }
        return { x: r.ebn0Db, y };
      })
      .sort((a, b) => a.x - b.x);
    return { label: design, points };
  });
  const nonEmpty = series.filter((s) => s.points.length > 0);
  if (nonEmpty.length === 0) {
    throw new Error('no plottable rows for metric ' + metric);
  }
  return { series: nonEmpty, clippedPoints: clipped, clipFloor };
}

export function plotResults(csvPath: string, metric: Metric, outPath: string): void {
  if (!['ber', 'mse_empirical', 'mse_analytic'].includes(metric)) {
    throw new Error(`unknown metric '${metric}'`);
  }
  const rows = readSweepCsv(csvPath);
  const { series, clippedPoints, clipFloor } = buildCurves(rows, metric);
  const annotation =
    clippedPoints > 0 && clipFloor !== null
      ? `${clippedPoints} zero-BER point(s) clipped to 1/(2*n_bits) = ${clipFloor.toExponential(1)}`
      : undefined;
  // BER always sits on a log axis; the MSE metrics do too when possible
  const positive = series.every((s) => s.points.every((p) => p.y > 0));
  const svg = renderFigure(series, {
    title: `${METRIC_LABEL[metric]} vs Eb/N0`,
    xLabel: 'Eb/N0 (dB)',
    yLabel: METRIC_LABEL[metric],
    logY: metric === 'ber' || positive,
    annotation,
  });
  fs.writeFileSync(outPath, svg);
}
