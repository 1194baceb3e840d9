#!/usr/bin/env node
/**
 * figures --metric M --out PATH runlog [runlog...] [--labels a,b]
 *
 * Reads one or more run logs (or preference-fit trajectories for the
 * bt_divergence metric), extracts the requested metric as one series per
 * input, and writes a single SVG chart. Any parse failure or missing field
 * exits nonzero with a diagnostic naming the file and field.
 */

import { writeFileSync } from 'fs';
import { basename } from 'path';

import { renderSvg } from './chart';
import { extractSeries, loadRunLog, Metric, METRICS, Series } from './runlog';

interface Args {
  metric: Metric;
  out: string;
  labels: string[];
  inputs: string[];
}

export function parseArgs(argv: string[]): Args {
  let metric: string | undefined;
  let out: string | undefined;
  let labels: string[] = [];
  const inputs: string[] = [];
  for (let i = 0; i < argv.length; i++) {
    const arg = argv[i];
    if (arg === '--metric') {
      metric = argv[++i];
    } else if (arg === '--out') {
      out = argv[++i];
    } else if (arg === '--labels') {
      labels = (argv[++i] ?? '').split(',').filter((l) => l.length > 0);
    } else if (arg === '--help' || arg === '-h') {
      throw new Error(
        `usage: figures --metric {${METRICS.join('|')}} --out PATH runlog [runlog...] [--labels a,b]`,
      );
    } else if (arg.startsWith('--')) {
      throw new Error(`unknown flag ${arg}`);
    } else {
      inputs.push(arg);
    }
  }
  if (!metric || !(METRICS as readonly string[]).includes(metric)) {
    throw new Error(`--metric must be one of ${METRICS.join(', ')}, got ${metric ?? '(none)'}`);
  }
  if (!out) {
    throw new Error('--out PATH is required');
  }
  if (inputs.length === 0) {
    throw new Error('at least one run log is required');
  }
  if (labels.length > 0 && labels.length !== inputs.length) {
    throw new Error(`got ${labels.length} labels for ${inputs.length} inputs`);
  }
  return { metric: metric as Metric, out, labels, inputs };
}

export function run(argv: string[]): number {
  let args: Args;
  try {
    args = parseArgs(argv);
  } catch (err) {
    process.stderr.write(`${(err as Error).message}\n`);
    return 2;
  }
  try {
    const series: Series[] = [];
    args.inputs.forEach((input, idx) => {
      const label = args.labels[idx] ?? basename(input).replace(/\.(runlog|jsonl)$/, '');
      series.push(...extractSeries(args.metric, loadRunLog(input), label));
    });
    writeFileSync(args.out, renderSvg(args.metric, series));
    process.stdout.write(`wrote ${args.out} (${series.length} series)\n`);
    return 0;
  } catch (err) {
    process.stderr.write(`${(err as Error).message}\n`);
    return 1;
  }
}

// direct-execution check; the typeof guards keep ESM test imports safe
if (typeof require !== 'undefined' && typeof module !== 'undefined' && require.main === module) {
  process.exit(run(process.argv.slice(2)));
}
