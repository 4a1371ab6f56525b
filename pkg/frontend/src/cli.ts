#!/usr/bin/env node
/** CLI: fbmclink-plot plot --csv PATH --metric ber|mse_empirical|mse_analytic --out PATH */

import * as fs from 'fs';
import { fileURLToPath } from 'url';

import { Metric, plotResults } from './plot.js';

function usage(): never {
  console.error(
    'usage: fbmclink-plot plot --csv PATH --metric ber|mse_empirical|mse_analytic --out PATH');
  process.exit(2);
}

export function main(argv: string[]): number {
  if (argv.length === 0 || argv[0] !== 'plot') usage();
  const flags = new Map<string, string>();
  for (let i = 1; i < argv.length; i += 2) {
    if (!argv[i].startsWith('--') || i + 1 >= argv.length) usage();
    flags.set(argv[i].slice(2), argv[i + 1]);
  }
  const csv = flags.get('csv');
  const metric = flags.get('metric') as Metric | undefined;
  const out = flags.get('out');
  if (!csv || !metric || !out) usage();
  if (!['ber', 'mse_empirical', 'mse_analytic'].includes(metric)) usage();
  plotResults(csv, metric, out);
  console.log(`wrote ${out}`);
  return 0;
}

function isEntrypoint(): boolean {
  if (!process.argv[1]) return false;
  try {
    return fs.realpathSync(process.argv[1]) === fileURLToPath(import.meta.url);
  } catch {
    return false;
  }
}

if (isEntrypoint()) {
  try {
    process.exit(main(process.argv.slice(2)));
  } catch (err) {
    console.error(String(err instanceof Error ? err.message : err));
    process.exit(1);
  }
}
