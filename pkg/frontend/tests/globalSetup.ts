/**
 * Spawns the annotation service on a fixture project for integration
 * tests. Unit tests never touch it; they just don't hit the base URL.
 */
import { ChildProcess, execFileSync, spawn } from 'node:child_process';
import { mkdtempSync, rmSync } from 'node:fs';
import { tmpdir } from 'node:os';
import { join } from 'node:path';

export const BASE_URL = 'http://127.0.0.1:8173';

let server: ChildProcess | null = null;
let fixtureDir: string | null = null;

async function waitForServer(url: string, timeoutMs: number): Promise<void> {
  const deadline = Date.now() + timeoutMs;
  while (Date.now() < deadline) {
    try {
      const res = await fetch(`${url}/project`);
      if (res.ok) return;
    } catch {
      // not up yet
    }
    await new Promise((r) => setTimeout(r, 200));
  }
  throw new Error(`service at ${url} did not come up within ${timeoutMs}ms`);
}

export default async function setup(): Promise<() => void> {
  fixtureDir = mkdtempSync(join(tmpdir(), 'rgbdlabel-ui-'));
  execFileSync('python3', ['scripts/make_fixture.py', fixtureDir], { stdio: 'inherit' });
  server = spawn(
    'python3',
    ['-m', 'rgbdlabel.cli', 'serve', '--project', fixtureDir, '--listen', '127.0.0.1:8173'],
    { stdio: ['ignore', 'inherit', 'inherit'] },
  );
  await waitForServer(BASE_URL, 60_000);
  return () => {
    server?.kill('SIGTERM');
    if (fixtureDir) rmSync(fixtureDir, { recursive: true, force: true });
  };
}
