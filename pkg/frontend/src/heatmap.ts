// Color mapping for the baseline value heatmap (seconds-to-score, all <= 0).

export interface ColorScale {
  min: number;
  max: number;
  color(value: number): string;
  legendTicks(n: number): { value: number; color: string }[];
}

export function makeColorScale(values: number[][]): ColorScale {
  let min = Infinity;
  let max = -Infinity;
  for (const row of values) {
    for (const v of row) {
      if (v < min) min = v;
      if (v > max) max = v;
    }
  }
  if (!isFinite(min) || !isFinite(max)) {
    min = -1;
    max = 0;
  }
  if (max - min < 1e-9) max = min + 1;
  const color = (value: number): string => {
    const t = Math.min(Math.max((value - min) / (max - min), 0), 1);
    // cold (far from scoring) to warm (close): blue -> red
    const r = Math.round(40 + 215 * t);
    const g = Math.round(60 + 80 * t);
    const b = Math.round(220 - 180 * t);
    return `rgb(${r},${g},${b})`;
  };
  return {
    min,
    max,
    color,
    legendTicks(n: number) {
      const ticks = [];
      for (let i = 0; i < n; i++) {
        const value = min + ((max - min) * i) / (n - 1);
        ticks.push({ value, color: color(value) });
      }
      return ticks;
    },
  };
}
