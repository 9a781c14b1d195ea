/** Editable node layout for one device.
 *
 * Positions are normalized to [0,1]^2 so a saved layout is resolution
 * independent. Every non-deleted node always has a position; deleting a
 * node removes it from rendering but keeps its slot restorable. The store
 * never touches frame values, it only decides where (and whether) each
 * node is drawn.
 */

import { LayoutState, nodeKey, parseNodeKey } from './types.js';

export function defaultLayout(rows: number, cols: number, fullScale = 4095): LayoutState {
  const positions: Record<string, [number, number]> = {};
  // centered grid with a small margin; single row/col degenerates to center
  for (let r = 0; r < rows; r++) {
    for (let c = 0; c < cols; c++) {
      const x = cols > 1 ? 0.05 + 0.9 * (c / (cols - 1)) : 0.5;
      const y = rows > 1 ? 0.05 + 0.9 * (r / (rows - 1)) : 0.5;
      positions[nodeKey(r, c)] = [x, y];
    }
  }
  return { positions, deleted: [], backgroundImage: null, colorScale: [0, fullScale] };
}

const clamp01 = (v: number) => Math.min(Math.max(v, 0), 1);

export class LayoutStore {
  state: LayoutState;
  readonly selection = new Set<string>();
  dirty = false;

  constructor(
    readonly rows: number,
    readonly cols: number,
    initial: LayoutState | null = null,
    fullScale = 4095,
  ) {
    this.state = initial ?? defaultLayout(rows, cols, fullScale);
  }

  isDeleted(key: string): boolean {
    return this.state.deleted.some(([r, c]) => nodeKey(r, c) === key);
  }

  visibleNodes(): { key: string; row: number; col: number; x: number; y: number }[] {
    const deleted = new Set(this.state.deleted.map(([r, c]) => nodeKey(r, c)));
    const out = [];
    for (const [key, [x, y]] of Object.entries(this.state.positions)) {
      if (deleted.has(key)) continue;
      const [row, col] = parseNodeKey(key);
      out.push({ key, row, col, x, y });
    }
    return out;
  }

  moveNode(key: string, x: number, y: number): void {
    if (!(key in this.state.positions)) return;
    this.state.positions[key] = [clamp01(x), clamp01(y)];
    this.dirty = true;
  }

  /** Translate every selected node by (dx, dy), clamped to the canvas. */
  moveSelection(dx: number, dy: number): void {
    for (const key of this.selection) {
      const pos = this.state.positions[key];
      if (pos) this.moveNode(key, pos[0] + dx, pos[1] + dy);
    }
  }

  /** Rectangle select in normalized coordinates; corners in any order. */
  selectRect(x0: number, y0: number, x1: number, y1: number): string[] {
    const [xa, xb] = [Math.min(x0, x1), Math.max(x0, x1)];
    const [ya, yb] = [Math.min(y0, y1), Math.max(y0, y1)];
    this.selection.clear();
    for (const node of this.visibleNodes()) {
      if (node.x >= xa && node.x <= xb && node.y >= ya && node.y <= yb) {
        this.selection.add(node.key);
      }
    }
    return [...this.selection];
  }

  deleteSelection(): number {
    const count = this.selection.size;
    for (const key of this.selection) {
      if (!this.isDeleted(key)) {
        this.state.deleted.push(parseNodeKey(key));
      }
    }
    this.selection.clear();
    if (count > 0) this.dirty = true;
    return count;
  }

  restoreAll(): void {
    if (this.state.deleted.length > 0) this.dirty = true;
    this.state.deleted = [];
  }

  setBackground(ref: string | null): void {
    this.state.backgroundImage = ref;
    this.dirty = true;
  }

  setColorScale(lo: number, hi: number): void {
    if (hi <= lo) throw new Error('color scale needs hi > lo');
    this.state.colorScale = [lo, hi];
    this.dirty = true;
  }

  /** Node under the cursor, nearest first, within the hit radius. */
  hitTest(x: number, y: number, radius: number): string | null {
    let best: string | null = null;
    let bestDist = radius * radius;
    for (const node of this.visibleNodes()) {
      const d = (node.x - x) ** 2 + (node.y - y) ** 2;
      if (d <= bestDist) {
        best = node.key;
        bestDist = d;
      }
    }
    return best;
  }

  serialize(): LayoutState {
    return JSON.parse(JSON.stringify(this.state)) as LayoutState;
  }
}
