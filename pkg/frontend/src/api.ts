/** Thin fetch wrappers over the hub's HTTP contract. */

import { DeviceInfo, LayoutState, ReplayControl } from './types.js';

async function checked(response: Response): Promise<unknown> {
  if (!response.ok) {
    const detail = await response.text().catch(() => '');
    throw new Error(`${response.status} ${response.statusText}: ${detail}`);
  }
  return response.json();
}

export async function getDevices(base = ''): Promise<DeviceInfo[]> {
  const body = (await checked(await fetch(`${base}/devices`))) as { devices: DeviceInfo[] };
  return body.devices;
}

export async function getMetrics(base = ''): Promise<Record<string, unknown>> {
  return (await checked(await fetch(`${base}/metrics`))) as Record<string, unknown>;
}

export async function postLayout(
  deviceId: number,
  layout: LayoutState,
  base = '',
): Promise<void> {
  await checked(
    await fetch(`${base}/layout`, {
      method: 'POST',
      headers: { 'Content-Type': 'application/json' },
      body: JSON.stringify({ deviceId, layout }),
    }),
  );
}

export async function postReplayControl(
  control: ReplayControl,
  base = '',
): Promise<{ playing: boolean; speed: number }> {
  return (await checked(
    await fetch(`${base}/replay/control`, {
      method: 'POST',
      headers: { 'Content-Type': 'application/json' },
      body: JSON.stringify(control),
    }),
  )) as { playing: boolean; speed: number };
}

export function wsUrl(base: string = window.location.host): string {
  const scheme = window.location.protocol === 'https:' ? 'wss' : 'ws';
  return `${scheme}://${base}/stream`;
}
