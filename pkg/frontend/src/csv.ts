/** Reader for the simulator's sweep CSV (comment lines prefixed with #). */

import * as fs from 'fs';

export const REQUIRED_COLUMNS = [
  'design', 'ebn0_db', 'ber', 'mse_analytic', 'mse_empirical',
  'n_bits', 'n_channels', 'seed',
] as const;

export interface SweepRow {
  design: string;
  ebn0Db: number;
  ber: number;
  mseAnalytic: number;
  mseEmpirical: number;
  nBits: number;
  nChannels: number;
  seed: number;
}

export function parseSweepCsv(text: string): SweepRow[] {
  const lines = text
    .split(/\r?\n/)
    .map((l) => l.trim())
    .filter((l) => l.length > 0 && !l.startsWith('#'));
  if (lines.length === 0) {
    throw new Error('empty results file');
  }
  const header = lines[0].split(',').map((c) => c.trim());
  for (const col of REQUIRED_COLUMNS) {
    if (!header.includes(col)) {
      throw new Error(`missing column '${col}' in results header`);
    }
  }
  const idx = (name: string) => header.indexOf(name);
  const rows: SweepRow[] = [];
  for (const line of lines.slice(1)) {
    const parts = line.split(',');
    if (parts.length < header.length) {
      throw new Error(`malformed row: ${line}`);
    }
    rows.push({
      design: parts[idx('design')],
      ebn0Db: Number(parts[idx('ebn0_db')]),
      ber: Number(parts[idx('ber')]),
      mseAnalytic: Number(parts[idx('mse_analytic')]),
      mseEmpirical: Number(parts[idx('mse_empirical')]),
      nBits: Number(parts[idx('n_bits')]),
      nChannels: Number(parts[idx('n_channels')]),
      seed: Number(parts[idx('seed')]),
    });
  }
  if (rows.length === 0) {
    throw new Error('results file has a header but no data rows');
  }
  return rows;
}

export function readSweepCsv(path: string): SweepRow[] {
  return parseSweepCsv(fs.readFileSync(path, 'utf8'));
}
