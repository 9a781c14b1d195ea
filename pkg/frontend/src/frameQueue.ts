/** Latest-frame coalescing between the WebSocket and the render loop.
 *
 * The stream can outpace the display; drawing stale frames is pointless,
 * so only the newest undrawn frame per device is kept and older ones are
 * counted as coalesced. Memory held is one frame per device no matter how
 * far the renderer falls behind, never an unbounded backlog.
 */

import { FrameMessage } from './types.js';

export interface QueueStats {
  pushed: number;
  taken: number;
  coalesced: number;
}

export class FrameQueue {
  private latest = new Map<number, FrameMessage>();
  readonly stats: QueueStats = { pushed: 0, taken: 0, coalesced: 0 };

  push(frame: FrameMessage): void {
    this.stats.pushed++;
    if (this.latest.has(frame.deviceId)) {
      this.stats.coalesced++;
    }
    this.latest.set(frame.deviceId, frame);
  }

  /** Newest undrawn frame for the device, or null when already drawn. */
  take(deviceId: number): FrameMessage | null {
    const frame = this.latest.get(deviceId);
    if (frame === undefined) return null;
    this.latest.delete(deviceId);
    this.stats.taken++;
    return frame;
  }

  takeAll(): FrameMessage[] {
    const frames = [...this.latest.values()];
    this.latest.clear();
    this.stats.taken += frames.length;
    return frames;
  }

  /** Upper bound on retained frames: one per device with a pending frame. */
  depth(): number {
    return this.latest.size;
  }
}
