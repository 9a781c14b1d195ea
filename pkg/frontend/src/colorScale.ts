/** Pressure color mapping.
 *
 * ADC counts are inversely correlated with pressure (full scale = idle,
 * zero = hardest press), so the scale maps high counts to the cold end
 * and low counts to the hot end of a dark-blue -> yellow ramp.
 */

export type Rgb = [number, number, number];

const STOPS: { at: number; color: Rgb }[] = [
  { at: 0.0, color: [24, 32, 72] },    // idle: deep blue
  { at: 0.35, color: [32, 96, 168] },
  { at: 0.65, color: [64, 176, 136] },
  { at: 0.85, color: [224, 196, 48] },
  { at: 1.0, color: [248, 80, 32] },   // max pressure: hot
];

/** 0 = no pressure (counts at the high bound), 1 = full pressure. */
export function pressureOf(value: number, scale: [number, number]): number {
  const [lo, hi] = scale;
  if (hi <= lo) return 0;
  const clamped = Math.min(Math.max(value, lo), hi);
  return (hi - clamped) / (hi - lo);
}

export function rgbFor(pressure: number): Rgb {
  const x = Math.min(Math.max(pressure, 0), 1);
  for (let i = 1; i < STOPS.length; i++) {
    if (x <= STOPS[i].at) {
      const a = STOPS[i - 1];
      const b = STOPS[i];
      const t = (x - a.at) / (b.at - a.at);
      return [0, 1, 2].map((k) =>
        Math.round(a.color[k] + t * (b.color[k] - a.color[k])),
      ) as Rgb;
    }
  }
  return STOPS[STOPS.length - 1].color;
}

export function cssColorFor(value: number, scale: [number, number]): string {
  const [r, g, b] = rgbFor(pressureOf(value, scale));
  return `rgb(${r},${g},${b})`;
}

/** Per-node colors for a whole frame; this is the per-frame hot path. */
export function frameColors(values: number[], scale: [number, number]): Uint8ClampedArray {
  const out = new Uint8ClampedArray(values.length * 3);
  for (let i = 0; i < values.length; i++) {
    const [r, g, b] = rgbFor(pressureOf(values[i], scale));
    out[i * 3] = r;
    out[i * 3 + 1] = g;
    out[i * 3 + 2] = b;
  }
  return out;
}

export interface ColorBarTick {
  /** position along the bar, 0 = bottom (idle) to 1 = top (max pressure) */
  at: number;
  /** ADC counts this position represents */
  value: number;
}

export function colorBarTicks(scale: [number, number], count = 5): ColorBarTick[] {
  const [lo, hi] = scale;
  const ticks: ColorBarTick[] = [];
  for (let i = 0; i < count; i++) {
    const at = i / (count - 1);
    ticks.push({ at, value: Math.round(hi - at * (hi - lo)) });
  }
  return ticks;
}
