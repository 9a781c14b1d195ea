/**
 * End-to-end tests against the real Python hub: layout persistence through
 * POST /layout, live 32x32 streaming at >= 30 fps without queue growth, and
 * replay speed halving wall-clock duration.
 *
 * Each suite spawns `tactilesim serve` (via python3 -m) with a recording
 * produced by `tactilesim simulate`; requires the Python package installed.
 */

import { spawn, spawnSync, ChildProcess } from 'node:child_process';
import { mkdtempSync, writeFileSync } from 'node:fs';
import { tmpdir } from 'node:os';
import { join } from 'node:path';
import WebSocket from 'ws';
import { afterAll, beforeAll, describe, expect, it } from 'vitest';

import { FrameQueue } from '../src/frameQueue.js';
import { HeatmapRenderer } from '../src/heatmap.js';
import { LayoutStore, defaultLayout } from '../src/layout.js';
import { DeviceInfo, FrameMessage, LayoutState, isFrameMessage } from '../src/types.js';

const PYTHON = process.env.PYTHON ?? 'python3';

function sleep(ms: number): Promise<void> {
  return new Promise((resolve) => setTimeout(resolve, ms));
}

function simulate(outDir: string, scenarioPath: string): void {
  const result = spawnSync(
    PYTHON,
    ['-m', 'tactilesim.cli', 'simulate', '--scenario', scenarioPath, '--out', outDir],
    { encoding: 'utf-8' },
  );
  if (result.status !== 0) {
    throw new Error(`simulate failed: ${result.stderr}`);
  }
}

interface Server {
  base: string;
  ws: string;
  proc: ChildProcess;
  stop: () => void;
}

async function startServer(configPath: string, recording: string, port: number): Promise<Server> {
  const proc = spawn(
    PYTHON,
    [
      '-m', 'tactilesim.cli', 'serve',
      '--config', configPath,
      '--port', String(port),
      '--replay', recording,
    ],
    { stdio: ['ignore', 'pipe', 'pipe'] },
  );
  const base = `http://127.0.0.1:${port}`;
  for (let attempt = 0; attempt < 100; attempt++) {
    try {
      const response = await fetch(`${base}/devices`);
      if (response.ok) {
        return {
          base,
          ws: `ws://127.0.0.1:${port}/stream`,
          proc,
          stop: () => proc.kill('SIGTERM'),
        };
      }
    } catch {
      // not up yet
    }
    await sleep(100);
  }
  proc.kill('SIGTERM');
  throw new Error('hub did not come up');
}

async function getDevicesFrom(base: string): Promise<DeviceInfo[]> {
  const response = await fetch(`${base}/devices`);
  expect(response.ok).toBe(true);
  return ((await response.json()) as { devices: DeviceInfo[] }).devices;
}

async function post(base: string, path: string, body: unknown): Promise<unknown> {
  const response = await fetch(`${base}${path}`, {
    method: 'POST',
    headers: { 'Content-Type': 'application/json' },
    body: JSON.stringify(body),
  });
  expect(response.ok).toBe(true);
  return response.json();
}

/** Collect paced frame arrival times for one full replay pass. */
function watchReplay(
  server: Server,
  speed: number,
  quietMs = 1200,
): Promise<number[]> {
  return new Promise((resolve, reject) => {
    const arrivals: number[] = [];
    const socket = new WebSocket(server.ws);
    let quietTimer: NodeJS.Timeout | null = null;
    const rearm = () => {
      if (quietTimer) clearTimeout(quietTimer);
      quietTimer = setTimeout(() => {
        socket.close();
        resolve(arrivals);
      }, quietMs);
    };
    socket.on('open', async () => {
      await post(server.base, '/replay/control', { action: 'play', speed });
      rearm();
    });
    socket.on('message', (data) => {
      const parsed = JSON.parse(String(data));
      if (isFrameMessage(parsed)) {
        arrivals.push(performance.now());
        rearm();
      }
    });
    socket.on('error', reject);
  });
}

describe('layout persistence through the hub', () => {
  const dir = mkdtempSync(join(tmpdir(), 'tactilesim-ui-'));
  const configPath = join(dir, 'config.json');
  let server: Server;

  beforeAll(async () => {
    const scenario = {
      name: 'ui-press',
      protocol: 'wifi',
      durationUs: 2_000_000,
      seed: 5,
      stimulus: 'repeated_press',
      devices: [
        { deviceId: 1, rows: 16, cols: 16, protocol: 'wifi', scanDelayUs: 50000, rPot: 1171.875 },
      ],
    };
    const scenarioPath = join(dir, 'scenario.json');
    writeFileSync(scenarioPath, JSON.stringify(scenario));
    simulate(dir, scenarioPath);
    writeFileSync(
      configPath,
      JSON.stringify({ devices: [{ deviceId: 1, rows: 16, cols: 16, protocol: 'wifi' }] }),
    );
    server = await startServer(configPath, join(dir, 'device_1.wrs'), 18731);
  }, 60_000);

  afterAll(() => server?.stop());

  it('drag and delete edits survive a page reload', { timeout: 60_000 }, async () => {
    const [device] = await getDevicesFrom(server.base);
    expect(device.deviceId).toBe(1);

    const store = new LayoutStore(device.rows, device.cols, device.layout);
    store.moveNode('0,0', 0.123, 0.456);
    store.selection.add('3,3');
    store.selection.add('3,4');
    store.deleteSelection();
    const edited = store.serialize();
    await post(server.base, '/layout', { deviceId: 1, layout: edited });

    // a reload is a fresh GET /devices from scratch
    const [reloaded] = await getDevicesFrom(server.base);
    expect(reloaded.layout).not.toBeNull();
    const restored = new LayoutStore(device.rows, device.cols, reloaded.layout);
    expect(restored.state.positions['0,0']).toEqual([0.123, 0.456]);
    expect(restored.state.deleted).toEqual(edited.deleted);
    expect(restored.serialize()).toEqual(edited);
  });

  it('replay at 2x halves the wall-clock duration within 10%', { timeout: 60_000 }, async () => {
    const at1x = await watchReplay(server, 1.0);
    const at2x = await watchReplay(server, 2.0);
    expect(at1x.length).toBeGreaterThan(20);
    expect(at2x.length).toBe(at1x.length); // same frames, different pacing
    const span1 = at1x[at1x.length - 1] - at1x[0];
    const span2 = at2x[at2x.length - 1] - at2x[0];
    expect(span1).toBeGreaterThan(1000); // ~2 s recording at 1x
    const ratio = span2 / span1;
    expect(ratio).toBeGreaterThan(0.45);
    expect(ratio).toBeLessThan(0.55);
  });
});

describe('live 32x32 streaming', () => {
  const dir = mkdtempSync(join(tmpdir(), 'tactilesim-ui-'));
  const configPath = join(dir, 'config.json');
  let server: Server;

  beforeAll(async () => {
    const scenario = {
      name: 'ui-stream',
      protocol: 'wifi',
      durationUs: 3_200_000,
      seed: 3,
      stimulus: 'idle',
      devices: [{ deviceId: 1, rows: 32, cols: 32, protocol: 'wifi', scanDelayUs: 15666 }],
    };
    const scenarioPath = join(dir, 'scenario.json');
    writeFileSync(scenarioPath, JSON.stringify(scenario));
    simulate(dir, scenarioPath);
    writeFileSync(
      configPath,
      JSON.stringify({ devices: [{ deviceId: 1, rows: 32, cols: 32, protocol: 'wifi' }] }),
    );
    server = await startServer(configPath, join(dir, 'device_1.wrs'), 18732);
  }, 60_000);

  afterAll(() => server?.stop());

  it('renders at >= 30 fps with a bounded frame queue', { timeout: 60_000 }, async () => {
    const queue = new FrameQueue();
    const store = new LayoutStore(32, 32);
    const drawCalls: Record<string, unknown> = {};
    const ctx = new Proxy(
      {},
      { get: (_, prop) => (prop === 'fillStyle' ? '' : () => void drawCalls) },
    ) as CanvasRenderingContext2D;
    const renderer = new HeatmapRenderer(ctx, store, 560, 560);

    let maxDepth = 0;
    let firstDraw = 0;
    let lastDraw = 0;
    const socket = new WebSocket(server.ws);
    const done = new Promise<void>((resolve, reject) => {
      socket.on('message', (data) => {
        const parsed = JSON.parse(String(data));
        if (isFrameMessage(parsed)) {
          queue.push(parsed as FrameMessage);
          maxDepth = Math.max(maxDepth, queue.depth());
        }
      });
      socket.on('error', reject);
      socket.on('open', async () => {
        // the recording holds ~190 frames at 60 fps cadence; stream it 2x
        await post(server.base, '/replay/control', { action: 'play', speed: 2.0 });
        const tick = setInterval(() => {
          for (const frame of queue.takeAll()) {
            renderer.render(frame);
            lastDraw = performance.now();
            if (firstDraw === 0) firstDraw = lastDraw;
          }
          if (firstDraw !== 0 && performance.now() - lastDraw > 1000) {
            clearInterval(tick);
            socket.close();
            resolve();
          }
        }, 16);
      });
    });
    await done;

    const elapsedS = (lastDraw - firstDraw) / 1000;
    const drawnFps = renderer.stats.framesDrawn / elapsedS;
    expect(renderer.stats.framesDrawn).toBeGreaterThan(50);
    expect(drawnFps).toBeGreaterThanOrEqual(30);
    // coalescing keeps at most one pending frame per device, no backlog
    expect(maxDepth).toBeLessThanOrEqual(1);
    expect(queue.stats.pushed).toBe(
      queue.stats.taken + queue.stats.coalesced + queue.depth(),
    );
  });
});
