/** App bootstrap: device tabs, live heatmaps, layout editing, replay bar. */

import { getDevices, postLayout, postReplayControl, wsUrl } from './api.js';
import { FrameQueue } from './frameQueue.js';
import { HeatmapRenderer } from './heatmap.js';
import { LayoutStore } from './layout.js';
import { DeviceInfo, FrameMessage } from './types.js';
import { StreamClient, StreamStatus } from './wsClient.js';

const CANVAS_SIZE = 560;
const BAR_WIDTH = 18;

interface DevicePanel {
  info: DeviceInfo;
  store: LayoutStore;
  renderer: HeatmapRenderer;
  canvas: HTMLCanvasElement;
  lastFrame: FrameMessage | null;
  fpsCounter: { frames: number; since: number; label: HTMLElement };
}

const panels = new Map<number, DevicePanel>();
const queue = new FrameQueue();

function el<K extends keyof HTMLElementTagNameMap>(
  tag: K,
  className?: string,
  text?: string,
): HTMLElementTagNameMap[K] {
  const node = document.createElement(tag);
  if (className) node.className = className;
  if (text) node.textContent = text;
  return node;
}

function setStatus(status: StreamStatus): void {
  const badge = document.getElementById('status');
  if (!badge) return;
  badge.textContent = status;
  badge.className = `status status-${status}`;
}

function canvasPoint(canvas: HTMLCanvasElement, event: MouseEvent): [number, number] {
  const rect = canvas.getBoundingClientRect();
  return [
    (event.clientX - rect.left) / rect.width,
    (event.clientY - rect.top) / rect.height,
  ];
}

function wireEditing(panel: DevicePanel): void {
  const { canvas, store } = panel;
  let dragging: string | null = null;
  let rectStart: [number, number] | null = null;

  canvas.addEventListener('mousedown', (event) => {
    const [x, y] = canvasPoint(canvas, event);
    const hit = store.hitTest(x, y, 1.2 * (panel.renderer.nodeRadius() / CANVAS_SIZE));
    if (event.shiftKey || hit === null) {
      rectStart = [x, y];
      return;
    }
    if (!store.selection.has(hit)) {
      store.selection.clear();
      store.selection.add(hit);
    }
    dragging = hit;
  });

  canvas.addEventListener('mousemove', (event) => {
    if (dragging === null) return;
    const [x, y] = canvasPoint(canvas, event);
    const pos = store.state.positions[dragging];
    if (!pos) return;
    const dx = x - pos[0];
    const dy = y - pos[1];
    store.moveSelection(dx, dy);
    panel.renderer.render(panel.lastFrame);
  });

  const finish = (event: MouseEvent) => {
    if (rectStart !== null) {
      const [x, y] = canvasPoint(canvas, event);
      store.selectRect(rectStart[0], rectStart[1], x, y);
      rectStart = null;
      panel.renderer.render(panel.lastFrame);
    }
    dragging = null;
  };
  canvas.addEventListener('mouseup', finish);
  canvas.addEventListener('mouseleave', () => {
    dragging = null;
    rectStart = null;
  });
}

function buildToolbar(panel: DevicePanel): HTMLElement {
  const bar = el('div', 'toolbar');

  const save = el('button', 'btn', 'Save layout');
  save.onclick = async () => {
    try {
      await postLayout(panel.info.deviceId, panel.store.serialize());
      panel.store.dirty = false;
      save.classList.remove('dirty');
    } catch (error) {
      console.error('layout save failed', error);
    }
  };

  const remove = el('button', 'btn', 'Remove nodes');
  remove.onclick = () => {
    panel.store.deleteSelection();
    panel.renderer.render(panel.lastFrame);
    save.classList.add('dirty');
  };

  const restore = el('button', 'btn', 'Restore all');
  restore.onclick = () => {
    panel.store.restoreAll();
    panel.renderer.render(panel.lastFrame);
    save.classList.add('dirty');
  };

  const image = el('input') as HTMLInputElement;
  image.type = 'file';
  image.accept = 'image/*';
  image.onchange = () => {
    const file = image.files?.[0];
    if (!file) return;
    const reader = new FileReader();
    reader.onload = () => {
      const url = String(reader.result);
      panel.store.setBackground(url);
      const img = new Image();
      img.onload = () => {
        panel.renderer.setBackgroundImage(img);
        panel.renderer.render(panel.lastFrame);
      };
      img.src = url;
      save.classList.add('dirty');
    };
    reader.readAsDataURL(file);
  };

  bar.append(save, remove, restore, image, panel.fpsCounter.label);
  return bar;
}

function buildPanel(info: DeviceInfo): DevicePanel {
  const container = el('section', 'device-panel');
  container.id = `device-${info.deviceId}`;
  container.append(el('h2', undefined, `Device ${info.deviceId} (${info.rows}x${info.cols})`));

  const fullScale = 2 ** info.adcBits - 1;
  const store = new LayoutStore(info.rows, info.cols, info.layout, fullScale);

  const wrap = el('div', 'canvas-wrap');
  const canvas = el('canvas') as HTMLCanvasElement;
  canvas.width = CANVAS_SIZE;
  canvas.height = CANVAS_SIZE;
  const bar = el('canvas') as HTMLCanvasElement;
  bar.width = BAR_WIDTH + 40;
  bar.height = CANVAS_SIZE;
  wrap.append(canvas, bar);

  const fpsLabel = el('span', 'fps', '0 fps');
  const panel: DevicePanel = {
    info,
    store,
    canvas,
    renderer: new HeatmapRenderer(
      canvas.getContext('2d') as CanvasRenderingContext2D,
      store,
      CANVAS_SIZE,
      CANVAS_SIZE,
    ),
    lastFrame: null,
    fpsCounter: { frames: 0, since: performance.now(), label: fpsLabel },
  };

  container.append(buildToolbar(panel), wrap);
  document.getElementById('devices')?.append(container);
  panel.renderer.render(null);
  panel.renderer.drawColorBar(bar.getContext('2d') as CanvasRenderingContext2D, BAR_WIDTH, CANVAS_SIZE);
  wireEditing(panel);
  if (info.layout?.backgroundImage) {
    const img = new Image();
    img.onload = () => {
      panel.renderer.setBackgroundImage(img);
      panel.renderer.render(panel.lastFrame);
    };
    img.src = info.layout.backgroundImage;
  }
  return panel;
}

function wireReplayControls(): void {
  const speedInput = document.getElementById('replay-speed') as HTMLInputElement | null;
  const startInput = document.getElementById('replay-start') as HTMLInputElement | null;
  const endInput = document.getElementById('replay-end') as HTMLInputElement | null;
  const playBtn = document.getElementById('replay-play');
  const pauseBtn = document.getElementById('replay-pause');
  if (!playBtn || !pauseBtn) return;

  const windowFields = () => {
    const control: { start?: number; end?: number; speed?: number } = {};
    const speed = Number(speedInput?.value);
    if (Number.isFinite(speed) && speed > 0) control.speed = speed;
    const start = Number(startInput?.value);
    if (startInput?.value && Number.isFinite(start) && start >= 0) control.start = start;
    const end = Number(endInput?.value);
    if (endInput?.value && Number.isFinite(end) && end >= 0) control.end = end;
    return control;
  };

  const reflect = (playing: boolean) => {
    playBtn.toggleAttribute('disabled', playing);
    pauseBtn.toggleAttribute('disabled', !playing);
  };
  playBtn.addEventListener('click', async () => {
    try {
      const status = await postReplayControl({ action: 'play', ...windowFields() });
      reflect(status.playing);
    } catch (error) {
      console.error('replay control failed', error);
    }
  });
  pauseBtn.addEventListener('click', async () => {
    const status = await postReplayControl({ action: 'pause' });
    reflect(status.playing);
  });
}

function renderLoop(): void {
  for (const frame of queue.takeAll()) {
    const panel = panels.get(frame.deviceId);
    if (!panel) continue;
    panel.lastFrame = frame;
    panel.renderer.render(frame);
    panel.fpsCounter.frames++;
    const now = performance.now();
    if (now - panel.fpsCounter.since >= 1000) {
      const fps = (1000 * panel.fpsCounter.frames) / (now - panel.fpsCounter.since);
      panel.fpsCounter.label.textContent = `${fps.toFixed(1)} fps`;
      panel.fpsCounter.frames = 0;
      panel.fpsCounter.since = now;
    }
  }
  requestAnimationFrame(renderLoop);
}

async function start(): Promise<void> {
  const devices = await getDevices();
  for (const info of devices) {
    panels.set(info.deviceId, buildPanel(info));
  }
  wireReplayControls();
  const client = new StreamClient(wsUrl(), {
    onFrame: (frame) => queue.push(frame),
    onStatus: setStatus,
  });
  client.connect();
  requestAnimationFrame(renderLoop);
}

start().catch((error) => {
  setStatus('closed');
  console.error('startup failed', error);
});
