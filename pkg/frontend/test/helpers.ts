import { execSync } from 'child_process';
import { copyFileSync, existsSync, mkdirSync, mkdtempSync } from 'fs';
import { tmpdir } from 'os';
import { join, resolve } from 'path';

export const REPO_ROOT = resolve(process.cwd(), '..');
export const ARTIFACTS = join(REPO_ROOT, 'artifacts', 'acceptance');

const CONTRAST_FLAGS = [
  '--override task.difficulty=MEDIUM',
  '--override task.prompts=200',
  '--override task.K=16',
  '--override task.seed=1',
  '--override trainer.steps=300',
  '--override trainer.batch_size=200',
  '--override trainer.seed=7',
].join(' ');

function simulateInto(target: string, mode: string): void {
  const scratch = mkdtempSync(join(tmpdir(), 'figures-gen-'));
  execSync(
    `python3 -m relrank simulate ${CONTRAST_FLAGS} --override shaping.mode=${mode} --out ${scratch}`,
    { cwd: REPO_ROOT, stdio: 'pipe' },
  );
  copyFileSync(join(scratch, 'runlog'), target);
}

/**
 * The Python acceptance suite drops its run logs here; when they are absent
 * (fresh checkout, CI), regenerate them through the CLI with the same
 * settings.
 */
export function ensureAcceptanceArtifacts(): void {
  mkdirSync(ARTIFACTS, { recursive: true });
  const wanted: Array<[string, string]> = [
    ['rule_only.runlog', 'RULE_ONLY'],
    ['prr.runlog', 'PRR'],
    ['hrr.runlog', 'HRR'],
  ];
  for (const [name, mode] of wanted) {
    const target = join(ARTIFACTS, name);
    if (!existsSync(target)) {
      simulateInto(target, mode);
    }
  }
  const separable = join(ARTIFACTS, 'bt_separable.jsonl');
  if (!existsSync(separable)) {
    execSync(
      `python3 -m relrank bt-demo --items 3 --pairs "0>1,1>2" --steps 10000 --lr 0.5 ` +
        `--record-every 10 --out ${separable}`,
      { cwd: REPO_ROOT, stdio: 'pipe' },
    );
  }
}
