// Board state: the scenario being edited, the latest server evaluation, and
// display toggles. All strategy numbers shown on the board come from the API
// response; nothing is recomputed locally.

import type { EvaluateResponse, FieldConfig, Scenario, ValueGridResponse } from "./types.js";
import { cloneScenario, emptyScenario } from "./types.js";

export type EntityRef =
  | { kind: "ball" }
  | { kind: "ally"; index: number }
  | { kind: "opponent"; index: number };

export interface Overlays {
  heatmap: boolean;
  samples: boolean;
  footsteps: boolean;
}

export class BoardState {
  scenario: Scenario = emptyScenario();
  field: FieldConfig;
  evaluation: EvaluateResponse | null = null;
  evaluationScenario: Scenario | null = null; // what the evaluation was computed for
  grid: ValueGridResponse | null = null;
  overlays: Overlays = { heatmap: true, samples: true, footsteps: false };
  selected: EntityRef | null = null;
  pendingEvaluation = false;
  playbook: string[] = [];

  constructor(field: FieldConfig) {
    this.field = field;
  }

  private clamp(x: number, y: number): [number, number] {
    const hx = this.field.length / 2;
    const hy = this.field.width / 2;
    return [Math.min(Math.max(x, -hx), hx), Math.min(Math.max(y, -hy), hy)];
  }

  /** Move an entity to field coordinates, clamped to the field bounds. */
  moveEntity(ref: EntityRef, x: number, y: number): Scenario {
    const [cx, cy] = this.clamp(x, y);
    if (ref.kind === "ball") {
      this.scenario.ball = [cx, cy];
    } else if (ref.kind === "ally") {
      const theta = this.scenario.allies[ref.index][2];
      this.scenario.allies[ref.index] = [cx, cy, theta];
    } else {
      this.scenario.opponents[ref.index] = [cx, cy];
    }
    return this.scenario;
  }

  entityAt(x: number, y: number, radius: number): EntityRef | null {
    const near = (px: number, py: number) => Math.hypot(px - x, py - y) <= radius;
    if (near(this.scenario.ball[0], this.scenario.ball[1])) return { kind: "ball" };
    for (let i = 0; i < this.scenario.allies.length; i++) {
      if (near(this.scenario.allies[i][0], this.scenario.allies[i][1])) {
        return { kind: "ally", index: i };
      }
    }
    for (let i = 0; i < this.scenario.opponents.length; i++) {
      if (near(this.scenario.opponents[i][0], this.scenario.opponents[i][1])) {
        return { kind: "opponent", index: i };
      }
    }
    return null;
  }

  addAlly(x: number, y: number): void {
    const [cx, cy] = this.clamp(x, y);
    this.scenario.allies.push([cx, cy, 0]);
  }

  addOpponent(x: number, y: number): void {
    const [cx, cy] = this.clamp(x, y);
    this.scenario.opponents.push([cx, cy]);
  }

  removeSelected(): void {
    const sel = this.selected;
    if (!sel || sel.kind === "ball") return;
    if (sel.kind === "ally") {
      if (this.scenario.allies.length <= 1) return; // keep the acting robot
      this.scenario.allies.splice(sel.index, 1);
      if (this.scenario.robot >= this.scenario.allies.length) this.scenario.robot = 0;
    } else {
      this.scenario.opponents.splice(sel.index, 1);
    }
    this.selected = null;
  }

  /** Scenario invariants hold before any submission: ball inside the field. */
  validForSubmission(): boolean {
    const [x, y] = this.scenario.ball;
    return Math.abs(x) <= this.field.length / 2 && Math.abs(y) <= this.field.width / 2;
  }

  applyEvaluation(response: EvaluateResponse, scenario: Scenario): void {
    this.evaluation = response;
    this.evaluationScenario = cloneScenario(scenario);
    this.pendingEvaluation = false;
  }

  loadScenario(s: Scenario): void {
    this.scenario = cloneScenario(s);
    this.evaluation = null;
    this.evaluationScenario = null;
  }
}
