/** Reconnecting WebSocket client for the frame stream. */

import { FrameMessage, isFrameMessage } from './types.js';

export type StreamStatus = 'connecting' | 'open' | 'reconnecting' | 'closed';

export interface StreamCallbacks {
  onFrame: (frame: FrameMessage) => void;
  onStatus?: (status: StreamStatus) => void;
}

export class StreamClient {
  private ws: WebSocket | null = null;
  private closedByUser = false;
  private retryMs = 500;

  constructor(
    private readonly url: string,
    private readonly callbacks: StreamCallbacks,
  ) {}

  connect(): void {
    this.closedByUser = false;
    this.callbacks.onStatus?.('connecting');
    this.open();
  }

  private open(): void {
    this.ws = new WebSocket(this.url);
    this.ws.onopen = () => {
      this.retryMs = 500;
      this.callbacks.onStatus?.('open');
    };
    this.ws.onmessage = (event: MessageEvent) => {
      let parsed: unknown;
      try {
        parsed = JSON.parse(String(event.data));
      } catch {
        return; // not ours
      }
      if (isFrameMessage(parsed)) this.callbacks.onFrame(parsed);
    };
    this.ws.onclose = () => {
      if (this.closedByUser) {
        this.callbacks.onStatus?.('closed');
        return;
      }
      this.callbacks.onStatus?.('reconnecting');
      setTimeout(() => this.open(), this.retryMs);
      this.retryMs = Math.min(this.retryMs * 2, 10_000);
    };
    this.ws.onerror = () => this.ws?.close();
  }

  close(): void {
    this.closedByUser = true;
    this.ws?.close();
  }
}
