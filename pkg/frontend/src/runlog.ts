/**
 * Parsing for line-delimited run logs and trajectory files.
 *
 * A training run log starts with a header line carrying the resolved config;
 * every following line is one step record. Preference-fit trajectories are
 * header-less. Both are newline-delimited JSON objects.
 */

import { readFileSync } from 'fs';

export interface RunLogFile {
  path: string;
  header: Record<string, unknown> | null;
  rows: Record<string, unknown>[];
}

export const METRICS = [
  'effective_ratio',
  'dispersion',
  'accuracy',
  'mean_correct_length',
  'bt_divergence',
] as const;

export type Metric = (typeof METRICS)[number];

export interface Series {
  name: string;
  points: Array<[number, number]>;
}

export function loadRunLog(path: string): RunLogFile {
  let text: string;
  try {
    text = readFileSync(path, 'utf8');
  } catch (err) {
    throw new Error(`${path}: cannot read file (${(err as Error).message})`);
  }
  const lines = text.split('\n').filter((line) => line.trim().length > 0);
  if (lines.length === 0) {
    throw new Error(`${path}: file is empty`);
  }
  let header: Record<string, unknown> | null = null;
  const rows: Record<string, unknown>[] = [];
  lines.forEach((line, idx) => {
    let parsed: unknown;
    try {
      parsed = JSON.parse(line);
    } catch {
      throw new Error(`${path}: line ${idx + 1} is not valid JSON`);
    }
    if (typeof parsed !== 'object' || parsed === null || Array.isArray(parsed)) {
      throw new Error(`${path}: line ${idx + 1} is not an object record`);
    }
    const record = parsed as Record<string, unknown>;
    if (idx === 0 && 'config' in record) {
      header = record;
    } else {
      rows.push(record);
    }
  });
  return { path, header, rows };
}

function numberField(
  row: Record<string, unknown>,
  field: string,
  path: string,
): number {
  const value = row[field];
  if (typeof value !== 'number' || !Number.isFinite(value)) {
    throw new Error(`${path}: record missing numeric field '${field}'`);
  }
  return value;
}

function simpleSeries(log: RunLogFile, field: string, label: string): Series[] {
  const points = log.rows.map(
    (row): [number, number] => [
      numberField(row, 'step', log.path),
      numberField(row, field, log.path),
    ],
  );
  return [{ name: label, points }];
}

/**
 * Turn one run-log file into chart series for a metric. Dispersion yields a
 * shaped-range series and, when the log carries raw scalar-ranker score
 * stats, a raw-range series overlaid.
 */
export function extractSeries(metric: Metric, log: RunLogFile, label: string): Series[] {
  switch (metric) {
    case 'effective_ratio':
      return simpleSeries(log, 'effective_ratio', label);
    case 'accuracy':
      return simpleSeries(log, 'greedy_accuracy', label);
    case 'mean_correct_length':
      return simpleSeries(log, 'mean_correct_length', label);
    case 'bt_divergence':
      return simpleSeries(log, 'max_abs_score', label);
    case 'dispersion': {
      const shaped = simpleSeries(log, 'reward_range', `${label} shaped range`);
      const rawRows = log.rows.filter(
        (row) => typeof row.raw_score_min === 'number' && typeof row.raw_score_max === 'number',
      );
      if (rawRows.length === 0) {
        return shaped;
      }
      const raw: Series = {
        name: `${label} raw range`,
        points: rawRows.map((row): [number, number] => [
          numberField(row, 'step', log.path),
          (row.raw_score_max as number) - (row.raw_score_min as number),
        ]),
      };
      return [...shaped, raw];
    }
  }
}
