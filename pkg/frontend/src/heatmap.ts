/** Canvas heatmap for one device.
 *
 * A pure view: frame values are mapped to colors and drawn at the layout's
 * node positions, never mutated. Reconstructed frames get a corner marker
 * so forecasted data is distinguishable from measured data.
 */

import { colorBarTicks, frameColors } from './colorScale.js';
import { LayoutStore } from './layout.js';
import { FrameMessage, nodeKey } from './types.js';

export interface RenderStats {
  framesDrawn: number;
  lastPacketId: number | null;
  lastReconstructed: boolean;
}

export class HeatmapRenderer {
  readonly stats: RenderStats = { framesDrawn: 0, lastPacketId: null, lastReconstructed: false };
  private background: HTMLImageElement | null = null;

  constructor(
    private readonly ctx: CanvasRenderingContext2D,
    readonly layout: LayoutStore,
    private readonly width: number,
    private readonly height: number,
  ) {}

  setBackgroundImage(image: HTMLImageElement | null): void {
    this.background = image;
  }

  render(frame: FrameMessage | null): void {
    const ctx = this.ctx;
    ctx.clearRect(0, 0, this.width, this.height);
    if (this.background !== null) {
      ctx.globalAlpha = 0.45;
      ctx.drawImage(this.background, 0, 0, this.width, this.height);
      ctx.globalAlpha = 1.0;
    }
    const radius = this.nodeRadius();
    const colors = frame ? frameColors(frame.values, this.layout.state.colorScale) : null;
    for (const node of this.layout.visibleNodes()) {
      let fill = 'rgb(60,60,68)'; // no data yet
      if (frame !== null && colors !== null) {
        const index = node.row * frame.cols + node.col;
        if (index >= 0 && index < frame.values.length) {
          fill = `rgb(${colors[index * 3]},${colors[index * 3 + 1]},${colors[index * 3 + 2]})`;
        }
      }
      ctx.beginPath();
      ctx.arc(node.x * this.width, node.y * this.height, radius, 0, 2 * Math.PI);
      ctx.fillStyle = fill;
      ctx.fill();
      if (this.layout.selection.has(node.key)) {
        ctx.lineWidth = 2;
        ctx.strokeStyle = '#ffffff';
        ctx.stroke();
      }
    }
    if (frame !== null) {
      this.stats.framesDrawn++;
      this.stats.lastPacketId = frame.packetId;
      this.stats.lastReconstructed = frame.reconstructed;
      if (frame.reconstructed) this.drawReconstructedMarker();
    }
  }

  nodeRadius(): number {
    const spacing = Math.min(
      this.width / Math.max(this.layout.cols, 1),
      this.height / Math.max(this.layout.rows, 1),
    );
    return Math.max(2, 0.36 * spacing);
  }

  private drawReconstructedMarker(): void {
    const ctx = this.ctx;
    ctx.fillStyle = '#e0c430';
    ctx.beginPath();
    ctx.arc(this.width - 12, 12, 6, 0, 2 * Math.PI);
    ctx.fill();
  }

  drawColorBar(barCtx: CanvasRenderingContext2D, barWidth: number, barHeight: number): void {
    const scale = this.layout.state.colorScale;
    const [lo, hi] = scale;
    for (let y = 0; y < barHeight; y++) {
      const pressure = 1 - y / (barHeight - 1);
      const value = hi - pressure * (hi - lo);
      const colors = frameColors([value], scale);
      barCtx.fillStyle = `rgb(${colors[0]},${colors[1]},${colors[2]})`;
      barCtx.fillRect(0, y, barWidth, 1);
    }
    barCtx.fillStyle = '#cfd3dc';
    barCtx.font = '10px sans-serif';
    for (const tick of colorBarTicks(scale)) {
      const y = Math.round((1 - tick.at) * (barHeight - 1));
      barCtx.fillText(String(tick.value), barWidth + 4, Math.min(Math.max(y, 8), barHeight - 2));
    }
  }
}

/** Index helper shared by renderer and tests. */
export function valueAt(frame: FrameMessage, row: number, col: number): number | null {
  const index = row * frame.cols + col;
  return index >= 0 && index < frame.values.length ? frame.values[index] : null;
}

export function keyOf(row: number, col: number): string {
  return nodeKey(row, col);
}
