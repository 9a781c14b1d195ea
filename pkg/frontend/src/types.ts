/** Wire types of the hub API, plus runtime guards for untrusted messages. */

export interface FrameMessage {
  type: 'frame';
  deviceId: number;
  packetId: number;
  tsUs: number;
  rows: number;
  cols: number;
  values: number[];
  reconstructed: boolean;
}

export interface LayoutState {
  /** normalized [0,1]^2 canvas position per node, keyed "row,col" */
  positions: Record<string, [number, number]>;
  deleted: [number, number][];
  backgroundImage: string | null;
  colorScale: [number, number];
}

export interface DeviceInfo {
  deviceId: number;
  rows: number;
  cols: number;
  adcBits: number;
  protocol: string;
  layout: LayoutState | null;
}

export interface ReplayControl {
  action: 'play' | 'pause';
  start?: number;
  end?: number;
  speed?: number;
}

export function nodeKey(row: number, col: number): string {
  return `${row},${col}`;
}

export function parseNodeKey(key: string): [number, number] {
  const [row, col] = key.split(',').map(Number);
  return [row, col];
}

export function isFrameMessage(value: unknown): value is FrameMessage {
  if (typeof value !== 'object' || value === null) return false;
  const msg = value as Record<string, unknown>;
  return (
    msg.type === 'frame' &&
    typeof msg.deviceId === 'number' &&
    typeof msg.packetId === 'number' &&
    typeof msg.tsUs === 'number' &&
    typeof msg.rows === 'number' &&
    typeof msg.cols === 'number' &&
    Array.isArray(msg.values) &&
    msg.values.length === (msg.rows as number) * (msg.cols as number) &&
    typeof msg.reconstructed === 'boolean'
  );
}
