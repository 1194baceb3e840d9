/**
 * Renders the acceptance training runs end to end through the compiled CLI:
 * effective-ratio, dispersion, accuracy, and preference-trajectory charts
 * must all come out as SVG, and the pure-rank run's effective ratio must
 * read 1.0 at every logged step.
 */

import { execFileSync } from 'child_process';
import { existsSync, mkdtempSync, readFileSync } from 'fs';
import { tmpdir } from 'os';
import { join } from 'path';
import { beforeAll, describe, expect, it } from 'vitest';

import { extractSeries, loadRunLog } from '../src/runlog';
import { ARTIFACTS, ensureAcceptanceArtifacts } from './helpers';

const CLI = join(process.cwd(), 'dist', 'cli.js');

function figures(args: string[]): string {
  return execFileSync('node', [CLI, ...args], { encoding: 'utf8' });
}

function expectSvg(path: string): void {
  expect(existsSync(path)).toBe(true);
  const text = readFileSync(path, 'utf8');
  expect(text.startsWith('<svg')).toBe(true);
  expect(text).toContain('</svg>');
}

describe('figure rendering from acceptance runs', () => {
  let out: string;

  beforeAll(() => {
    ensureAcceptanceArtifacts();
    out = mkdtempSync(join(tmpdir(), 'figures-acceptance-'));
  });

  it('renders the effective-ratio contrast', () => {
    const target = join(out, 'effective_ratio.svg');
    figures([
      '--metric', 'effective_ratio',
      '--out', target,
      join(ARTIFACTS, 'rule_only.runlog'),
      join(ARTIFACTS, 'prr.runlog'),
      join(ARTIFACTS, 'hrr.runlog'),
      '--labels', 'binary,pure-rank,hybrid-rank',
    ]);
    expectSvg(target);
  });

  it('renders dispersion, accuracy, and length charts', () => {
    for (const metric of ['dispersion', 'accuracy', 'mean_correct_length']) {
      const target = join(out, `${metric}.svg`);
      figures([
        '--metric', metric,
        '--out', target,
        join(ARTIFACTS, 'rule_only.runlog'),
        join(ARTIFACTS, 'hrr.runlog'),
      ]);
      expectSvg(target);
    }
  });

  it('renders the preference-fit trajectory', () => {
    const target = join(out, 'bt.svg');
    figures(['--metric', 'bt_divergence', '--out', target, join(ARTIFACTS, 'bt_separable.jsonl')]);
    expectSvg(target);
  });

  it('pure-rank effective ratio reads 1.0 at every logged step', () => {
    const log = loadRunLog(join(ARTIFACTS, 'prr.runlog'));
    const [series] = extractSeries('effective_ratio', log, 'prr');
    expect(series.points.length).toBeGreaterThanOrEqual(300);
    for (const [, ratio] of series.points) {
      expect(ratio).toBe(1.0);
    }
  });

  it('fails with a field diagnostic when the metric is absent', () => {
    expect(() =>
      figures([
        '--metric', 'accuracy',
        '--out', join(out, 'nope.svg'),
        join(ARTIFACTS, 'bt_separable.jsonl'),
      ]),
    ).toThrow(/greedy_accuracy/);
  });
});
