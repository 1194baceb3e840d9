import { mkdtempSync, writeFileSync } from 'fs';
import { tmpdir } from 'os';
import { join } from 'path';
import { describe, expect, it } from 'vitest';

import { parseArgs } from '../src/cli';
import { extractSeries, loadRunLog } from '../src/runlog';

function tempFile(name: string, lines: string[]): string {
  const dir = mkdtempSync(join(tmpdir(), 'runlog-test-'));
  const path = join(dir, name);
  writeFileSync(path, lines.join('\n') + '\n');
  return path;
}

const HEADER = JSON.stringify({ config: { shaping: { mode: 'PRR' } }, initial_accuracy: 0.2 });

function record(step: number, extra: Record<string, unknown> = {}): string {
  return JSON.stringify({
    step,
    effective_ratio: 1.0,
    reward_mean: 0.5,
    reward_std: 0.3,
    reward_min: 0,
    reward_max: 1,
    reward_range: 1,
    greedy_accuracy: 0.7,
    mean_correct_length: 900,
    popoviciu_ok: true,
    raw_score_min: null,
    raw_score_max: null,
    ...extra,
  });
}

describe('loadRunLog', () => {
  it('splits header from records', () => {
    const path = tempFile('a.runlog', [HEADER, record(1), record(2)]);
    const log = loadRunLog(path);
    expect(log.header).not.toBeNull();
    expect(log.rows).toHaveLength(2);
  });

  it('accepts header-less trajectory files', () => {
    const path = tempFile('t.jsonl', [
      JSON.stringify({ step: 0, max_abs_score: 0, loss: 0.69 }),
      JSON.stringify({ step: 10, max_abs_score: 1.5, loss: 0.3 }),
    ]);
    const log = loadRunLog(path);
    expect(log.header).toBeNull();
    expect(log.rows).toHaveLength(2);
  });

  it('names the file and line on parse errors', () => {
    const path = tempFile('bad.runlog', [HEADER, '{nope']);
    expect(() => loadRunLog(path)).toThrow(/bad\.runlog: line 2/);
  });

  it('rejects empty files', () => {
    const path = tempFile('empty.runlog', ['']);
    expect(() => loadRunLog(path)).toThrow(/empty/);
  });
});

describe('extractSeries', () => {
  it('extracts step-indexed points', () => {
    const path = tempFile('a.runlog', [HEADER, record(1), record(5)]);
    const series = extractSeries('effective_ratio', loadRunLog(path), 'run');
    expect(series).toHaveLength(1);
    expect(series[0].points).toEqual([
      [1, 1.0],
      [5, 1.0],
    ]);
  });

  it('names file and field when the metric is missing', () => {
    const path = tempFile('t.jsonl', [JSON.stringify({ step: 0, loss: 0.5 })]);
    expect(() => extractSeries('accuracy', loadRunLog(path), 'x')).toThrow(
      /t\.jsonl: record missing numeric field 'greedy_accuracy'/,
    );
  });

  it('overlays raw and shaped ranges when raw scores are present', () => {
    const path = tempFile('raw.runlog', [
      HEADER,
      record(1, { raw_score_min: -2.0, raw_score_max: 3.0 }),
      record(2, { raw_score_min: -1.0, raw_score_max: 9.0 }),
    ]);
    const series = extractSeries('dispersion', loadRunLog(path), 'run');
    expect(series.map((s) => s.name)).toEqual(['run shaped range', 'run raw range']);
    expect(series[1].points).toEqual([
      [1, 5.0],
      [2, 10.0],
    ]);
  });

  it('emits only the shaped range without raw scores', () => {
    const path = tempFile('a.runlog', [HEADER, record(1)]);
    const series = extractSeries('dispersion', loadRunLog(path), 'run');
    expect(series).toHaveLength(1);
  });
});

describe('parseArgs', () => {
  it('parses the documented flag set', () => {
    const args = parseArgs(['--metric', 'accuracy', '--out', 'x.svg', 'a.runlog', 'b.runlog', '--labels', 'a,b']);
    expect(args).toEqual({
      metric: 'accuracy',
      out: 'x.svg',
      labels: ['a', 'b'],
      inputs: ['a.runlog', 'b.runlog'],
    });
  });

  it('rejects unknown metrics and label mismatches', () => {
    expect(() => parseArgs(['--metric', 'vibes', '--out', 'x', 'a'])).toThrow(/--metric/);
    expect(() => parseArgs(['--metric', 'accuracy', '--out', 'x', 'a', '--labels', 'p,q'])).toThrow(
      /labels/,
    );
    expect(() => parseArgs(['--metric', 'accuracy', '--out', 'x'])).toThrow(/run log/);
  });
});
