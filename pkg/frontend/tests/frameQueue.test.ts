import { describe, expect, it } from 'vitest';

import { FrameQueue } from '../src/frameQueue.js';
import { FrameMessage } from '../src/types.js';

function frame(deviceId: number, packetId: number): FrameMessage {
  return {
    type: 'frame',
    deviceId,
    packetId,
    tsUs: packetId * 1000,
    rows: 1,
    cols: 2,
    values: [packetId, packetId + 1],
    reconstructed: false,
  };
}

describe('FrameQueue', () => {
  it('hands out the newest frame and coalesces older ones', () => {
    const queue = new FrameQueue();
    queue.push(frame(1, 0));
    queue.push(frame(1, 1));
    queue.push(frame(1, 2));
    const got = queue.take(1);
    expect(got?.packetId).toBe(2);
    expect(queue.take(1)).toBeNull();
    expect(queue.stats.coalesced).toBe(2);
  });

  it('keeps devices independent', () => {
    const queue = new FrameQueue();
    queue.push(frame(1, 5));
    queue.push(frame(2, 9));
    expect(queue.take(2)?.packetId).toBe(9);
    expect(queue.take(1)?.packetId).toBe(5);
  });

  it('depth stays bounded by the device count under a flood', () => {
    const queue = new FrameQueue();
    for (let i = 0; i < 10_000; i++) {
      queue.push(frame(i % 3, i));
      expect(queue.depth()).toBeLessThanOrEqual(3);
    }
    expect(queue.stats.pushed).toBe(10_000);
    expect(queue.stats.coalesced).toBe(10_000 - 3);
    const drained = queue.takeAll();
    expect(drained).toHaveLength(3);
    expect(queue.depth()).toBe(0);
  });

  it('accounts pushed = taken + coalesced + pending', () => {
    const queue = new FrameQueue();
    for (let i = 0; i < 50; i++) queue.push(frame(i % 5, i));
    queue.takeAll();
    for (let i = 0; i < 7; i++) queue.push(frame(i % 5, i));
    const s = queue.stats;
    expect(s.pushed).toBe(s.taken + s.coalesced + queue.depth());
  });
});
