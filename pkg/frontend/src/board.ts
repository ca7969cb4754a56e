// Canvas renderer for the playbook board. Takes any CanvasRenderingContext2D-
// compatible drawing surface and returns a small summary of what was drawn so
// tests can assert on the render without a DOM.

import { FieldTransform } from "./geometry.js";
import { makeColorScale } from "./heatmap.js";
import type { BoardState } from "./state.js";

export interface Draw2D {
  fillStyle: string | CanvasGradient | CanvasPattern;
  strokeStyle: string | CanvasGradient | CanvasPattern;
  lineWidth: number;
  globalAlpha: number;
  font: string;
  clearRect(x: number, y: number, w: number, h: number): void;
  fillRect(x: number, y: number, w: number, h: number): void;
  strokeRect(x: number, y: number, w: number, h: number): void;
  beginPath(): void;
  moveTo(x: number, y: number): void;
  lineTo(x: number, y: number): void;
  arc(x: number, y: number, r: number, a0: number, a1: number): void;
  closePath(): void;
  fill(): void;
  stroke(): void;
  fillText(text: string, x: number, y: number): void;
}

export interface RenderSummary {
  heatmapCells: number;
  arrows: number;
  sampleDots: number;
  robots: number;
  spinner: boolean;
  legendTicks: number;
}

function drawArrow(ctx: Draw2D, x0: number, y0: number, x1: number, y1: number): void {
  const angle = Math.atan2(y1 - y0, x1 - x0);
  const head = 9;
  ctx.beginPath();
  ctx.moveTo(x0, y0);
  ctx.lineTo(x1, y1);
  ctx.stroke();
  ctx.beginPath();
  ctx.moveTo(x1, y1);
  ctx.lineTo(x1 - head * Math.cos(angle - 0.5), y1 - head * Math.sin(angle - 0.5));
  ctx.lineTo(x1 - head * Math.cos(angle + 0.5), y1 - head * Math.sin(angle + 0.5));
  ctx.closePath();
  ctx.fill();
}

export function renderBoard(
  ctx: Draw2D,
  state: BoardState,
  tf: FieldTransform,
  canvasWidth: number,
  canvasHeight: number
): RenderSummary {
  const summary: RenderSummary = {
    heatmapCells: 0,
    arrows: 0,
    sampleDots: 0,
    robots: 0,
    spinner: false,
    legendTicks: 0,
  };
  ctx.clearRect(0, 0, canvasWidth, canvasHeight);
  ctx.globalAlpha = 1;
  ctx.fillStyle = "#1e4d2b";
  ctx.fillRect(0, 0, canvasWidth, canvasHeight);

  const field = state.field;
  const [left, top] = tf.toScreen(-field.length / 2, field.width / 2);
  const [right, bottom] = tf.toScreen(field.length / 2, -field.width / 2);

  // heatmap under the line markings
  if (state.overlays.heatmap && state.grid) {
    const geom = state.grid.geometry;
    const scale = makeColorScale(state.grid.values);
    const cell = tf.metersToPixels(geom.resolution);
    ctx.globalAlpha = 0.55;
    for (let iy = 0; iy < geom.ny; iy++) {
      for (let ix = 0; ix < geom.nx; ix++) {
        const cx = -geom.length / 2 + (ix + 0.5) * geom.resolution;
        const cy = -geom.width / 2 + (iy + 0.5) * geom.resolution;
        const [px, py] = tf.toScreen(cx, cy);
        ctx.fillStyle = scale.color(state.grid.values[iy][ix]);
        ctx.fillRect(px - cell / 2, py - cell / 2, cell, cell);
        summary.heatmapCells++;
      }
    }
    ctx.globalAlpha = 1;
    // legend strip
    const ticks = scale.legendTicks(6);
    ticks.forEach((tick, i) => {
      ctx.fillStyle = tick.color;
      ctx.fillRect(right + 10, top + i * 18, 14, 14);
      ctx.fillStyle = "#ffffff";
      ctx.font = "11px sans-serif";
      ctx.fillText(`${tick.value.toFixed(1)} s`, right + 28, top + i * 18 + 11);
      summary.legendTicks++;
    });
  }

  // field frame and goals
  ctx.strokeStyle = "#ffffff";
  ctx.lineWidth = 2;
  ctx.strokeRect(left, top, right - left, bottom - top);
  ctx.beginPath();
  const [mx0, my0] = tf.toScreen(0, field.width / 2);
  const [mx1, my1] = tf.toScreen(0, -field.width / 2);
  ctx.moveTo(mx0, my0);
  ctx.lineTo(mx1, my1);
  ctx.stroke();
  for (const sign of [-1, 1]) {
    const gx = (sign * field.length) / 2;
    const depth = 0.35 * sign;
    const [g0x, g0y] = tf.toScreen(gx, field.goal_width / 2);
    const [g1x, g1y] = tf.toScreen(gx + depth, field.goal_width / 2);
    const [, g2y] = tf.toScreen(gx + depth, -field.goal_width / 2);
    ctx.strokeRect(Math.min(g0x, g1x), g0y, Math.abs(g1x - g0x), g2y - g1y);
  }

  // kick arrow and sampled outcomes from the latest evaluation
  if (state.evaluation) {
    const selected = state.evaluation.selected;
    if (state.overlays.samples) {
      ctx.fillStyle = "#ffd34d";
      ctx.globalAlpha = 0.8;
      for (const [sx, sy] of selected.samples) {
        const [px, py] = tf.toScreen(sx, sy);
        ctx.beginPath();
        ctx.arc(px, py, 3, 0, 2 * Math.PI);
        ctx.fill();
        summary.sampleDots++;
      }
      ctx.globalAlpha = 1;
    }
    const src = state.evaluationScenario ?? state.scenario;
    const [bx, by] = tf.toScreen(src.ball[0], src.ball[1]);
    const reach = 1.0;
    const [axp, ayp] = tf.toScreen(
      src.ball[0] + reach * Math.cos(selected.yaw),
      src.ball[1] + reach * Math.sin(selected.yaw)
    );
    ctx.strokeStyle = "#ffd34d";
    ctx.fillStyle = "#ffd34d";
    ctx.lineWidth = 3;
    drawArrow(ctx, bx, by, axp, ayp);
    summary.arrows++;
  }

  // entities
  const r = tf.metersToPixels(0.11);
  state.scenario.allies.forEach(([x, y, theta], i) => {
    const [px, py] = tf.toScreen(x, y);
    ctx.fillStyle = i === state.scenario.robot ? "#7fd4ff" : "#4aa3d8";
    ctx.beginPath();
    ctx.arc(px, py, r, 0, 2 * Math.PI);
    ctx.fill();
    ctx.strokeStyle = "#ffffff";
    ctx.lineWidth = 2;
    ctx.beginPath();
    ctx.moveTo(px, py);
    ctx.lineTo(px + r * Math.cos(-theta), py + r * Math.sin(-theta));
    ctx.stroke();
    summary.robots++;
  });
  state.scenario.opponents.forEach(([x, y]) => {
    const [px, py] = tf.toScreen(x, y);
    ctx.fillStyle = "#e05555";
    ctx.beginPath();
    ctx.arc(px, py, r, 0, 2 * Math.PI);
    ctx.fill();
    summary.robots++;
  });
  const [bx, by] = tf.toScreen(state.scenario.ball[0], state.scenario.ball[1]);
  ctx.fillStyle = "#ffffff";
  ctx.beginPath();
  ctx.arc(bx, by, tf.metersToPixels(0.07), 0, 2 * Math.PI);
  ctx.fill();

  // pending indicator
  if (state.pendingEvaluation) {
    ctx.fillStyle = "#ffffff";
    ctx.font = "13px sans-serif";
    ctx.fillText("evaluating…", left + 6, top - 8);
    summary.spinner = true;
  }
  return summary;
}
