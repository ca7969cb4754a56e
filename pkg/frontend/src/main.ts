// Playbook board wiring: canvas, drag handlers, strategy panel, playbook list.

import { ApiClient, ApiError } from "./api.js";
import { renderBoard } from "./board.js";
import { FieldTransform } from "./geometry.js";
import { EvaluationScheduler } from "./scheduler.js";
import { BoardState } from "./state.js";
import type { EntityRef } from "./state.js";
import { scenariosEqual } from "./types.js";

const params = new URLSearchParams(window.location.search);
const api = new ApiClient(params.get("api") ?? "");

const canvas = document.getElementById("board") as HTMLCanvasElement;
const ctx = canvas.getContext("2d")!;
const statusEl = document.getElementById("status") as HTMLDivElement;
const toastEl = document.getElementById("toast") as HTMLDivElement;
const rankingEl = document.getElementById("ranking") as HTMLDivElement;
const playbookList = document.getElementById("playbook") as HTMLSelectElement;
const nameInput = document.getElementById("scenario-name") as HTMLInputElement;
const indirectInput = document.getElementById("indirect") as HTMLInputElement;
const heatmapInput = document.getElementById("show-heatmap") as HTMLInputElement;
const samplesInput = document.getElementById("show-samples") as HTMLInputElement;
const panelEl = document.getElementById("penalties") as HTMLDivElement;

const TUNABLE = [
  "collision_probability",
  "indirect_penalty",
  "opponent_closer_penalty",
  "own_goal_obstruction_penalty",
  "top_fraction",
];

let state: BoardState;
let tf: FieldTransform;
let scheduler: EvaluationScheduler;

function toast(message: string): void {
  toastEl.textContent = message;
  toastEl.classList.add("visible");
  setTimeout(() => toastEl.classList.remove("visible"), 3000);
}

function redraw(): void {
  renderBoard(ctx, state, tf, canvas.width, canvas.height);
  const ev = state.evaluation;
  if (ev) {
    const rows = ev.top
      .map((a) => {
        const mark = a.index === ev.selected.index ? "▶" : " ";
        const steps = a.steps !== undefined ? ` · ${a.steps} steps` : "";
        return `${mark} ${a.template} @ ${((a.yaw * 180) / Math.PI).toFixed(0)}° = ${a.value.toFixed(2)} s${steps}`;
      })
      .join("\n");
    rankingEl.textContent = rows;
  }
}

function requestEvaluation(immediate = false): void {
  if (!state.validForSubmission()) return;
  state.pendingEvaluation = true;
  redraw();
  if (immediate) scheduler.requestNow(state.scenario);
  else scheduler.request(state.scenario);
}

function wireDrag(): void {
  let dragging: EntityRef | null = null;
  canvas.addEventListener("pointerdown", (ev) => {
    const rect = canvas.getBoundingClientRect();
    const [fx, fy] = tf.toField(ev.clientX - rect.left, ev.clientY - rect.top);
    dragging = state.entityAt(fx, fy, 0.18);
    state.selected = dragging;
    if (dragging) canvas.setPointerCapture(ev.pointerId);
  });
  canvas.addEventListener("pointermove", (ev) => {
    if (!dragging) return;
    const rect = canvas.getBoundingClientRect();
    const [fx, fy] = tf.toField(ev.clientX - rect.left, ev.clientY - rect.top);
    state.moveEntity(dragging, fx, fy);
    redraw();
    requestEvaluation(); // debounced; at most one in flight
  });
  canvas.addEventListener("pointerup", (ev) => {
    if (!dragging) return;
    dragging = null;
    canvas.releasePointerCapture(ev.pointerId);
    requestEvaluation();
  });
  canvas.addEventListener("dblclick", (ev) => {
    const rect = canvas.getBoundingClientRect();
    const [fx, fy] = tf.toField(ev.clientX - rect.left, ev.clientY - rect.top);
    if (ev.shiftKey) state.addOpponent(fx, fy);
    else state.addAlly(fx, fy);
    redraw();
    requestEvaluation();
  });
  window.addEventListener("keydown", (ev) => {
    if (ev.key === "Delete" || ev.key === "Backspace") {
      state.removeSelected();
      redraw();
      requestEvaluation();
    }
  });
}

function buildPanel(strategy: Record<string, number | boolean>): void {
  panelEl.innerHTML = "";
  for (const key of TUNABLE) {
    const row = document.createElement("label");
    row.className = "penalty-row";
    const span = document.createElement("span");
    span.textContent = key.replaceAll("_", " ");
    const input = document.createElement("input");
    input.type = "number";
    input.step = "0.1";
    input.value = String(strategy[key]);
    input.addEventListener("change", async () => {
      try {
        await api.updateConfig({ [key]: Number(input.value) });
        requestEvaluation(true);
      } catch (err) {
        toast(err instanceof ApiError ? `${err.code}: ${err.message}` : String(err));
      }
    });
    row.append(span, input);
    panelEl.append(row);
  }
}

async function refreshPlaybook(): Promise<void> {
  state.playbook = await api.listScenarios();
  playbookList.innerHTML = "";
  for (const name of state.playbook) {
    const opt = document.createElement("option");
    opt.value = name;
    opt.textContent = name;
    playbookList.append(opt);
  }
}

function wirePlaybook(): void {
  (document.getElementById("save") as HTMLButtonElement).addEventListener("click", async () => {
    const name = nameInput.value.trim();
    if (!name) {
      toast("enter a scenario name first");
      return;
    }
    if (!state.validForSubmission()) {
      toast("ball outside the field");
      return;
    }
    try {
      await api.saveScenario(name, state.scenario, false);
    } catch (err) {
      if (err instanceof ApiError && err.code === "scenario_exists") {
        if (!window.confirm(`overwrite scenario '${name}'?`)) return;
        await api.saveScenario(name, state.scenario, true);
      } else {
        toast(String(err));
        return;
      }
    }
    await refreshPlaybook();
    toast(`saved '${name}'`);
  });
  (document.getElementById("load") as HTMLButtonElement).addEventListener("click", async () => {
    const name = playbookList.value;
    if (!name) return;
    try {
      const scenario = await api.loadScenario(name);
      state.loadScenario(scenario);
      indirectInput.checked = scenario.indirect;
      nameInput.value = name;
      redraw();
      requestEvaluation(true);
    } catch (err) {
      toast(String(err));
    }
  });
}

async function boot(): Promise<void> {
  const config = await api.config();
  state = new BoardState(config.field);
  tf = new FieldTransform(
    { length: config.field.length, width: config.field.width },
    canvas.width,
    canvas.height
  );
  scheduler = new EvaluationScheduler(
    (s) => api.evaluate(s),
    (response, scenario) => {
      state.applyEvaluation(response, scenario);
      statusEl.textContent = scenariosEqual(scenario, state.scenario)
        ? "up to date"
        : "evaluating…";
      redraw();
    },
    (err) => {
      state.pendingEvaluation = false;
      toast(err instanceof ApiError ? `${err.code}: ${err.message}` : String(err));
      redraw();
    }
  );
  buildPanel(config.strategy);
  indirectInput.addEventListener("change", () => {
    state.scenario.indirect = indirectInput.checked;
    requestEvaluation(true);
  });
  heatmapInput.addEventListener("change", () => {
    state.overlays.heatmap = heatmapInput.checked;
    redraw();
  });
  samplesInput.addEventListener("change", () => {
    state.overlays.samples = samplesInput.checked;
    redraw();
  });
  wireDrag();
  wirePlaybook();
  await refreshPlaybook();
  redraw();
  requestEvaluation(true); // first evaluation also builds the grid server-side
  try {
    state.grid = await api.valueGrid();
  } catch {
    // grid not baked yet; fetch it after the first evaluation lands
    setTimeout(async () => {
      try {
        state.grid = await api.valueGrid();
        redraw();
      } catch {
        /* heatmap stays off */
      }
    }, 1500);
  }
  redraw();
}

boot().catch((err) => toast(`failed to reach the server: ${err}`));
