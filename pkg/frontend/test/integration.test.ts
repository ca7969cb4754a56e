// End-to-end round trip against a live soccerwalk server: fixture playbook
// scenario, a 1 m ball drag, re-evaluation latency, staleness and save/load.

import { spawn, spawnSync, type ChildProcess } from "node:child_process";
import { mkdtempSync, readFileSync, writeFileSync } from "node:fs";
import { tmpdir } from "node:os";
import { join, resolve } from "node:path";
import { afterAll, beforeAll, describe, expect, it } from "vitest";

import { ApiClient } from "../src/api.js";
import { EvaluationScheduler } from "../src/scheduler.js";
import { BoardState } from "../src/state.js";
import type { EvaluateResponse, Scenario } from "../src/types.js";
import { scenariosEqual } from "../src/types.js";

const PORT = 8641;
const BASE = `http://127.0.0.1:${PORT}`;
const REPO = resolve(__dirname, "..", "..");

let server: ChildProcess | null = null;
let workdir: string;

async function waitForServer(timeoutMs: number): Promise<void> {
  const deadline = Date.now() + timeoutMs;
  let lastErr: unknown = null;
  while (Date.now() < deadline) {
    try {
      const res = await fetch(`${BASE}/api/config`);
      if (res.ok) return;
    } catch (err) {
      lastErr = err;
    }
    await new Promise((r) => setTimeout(r, 200));
  }
  throw new Error(`server did not come up: ${lastErr}`);
}

beforeAll(async () => {
  workdir = mkdtempSync(join(tmpdir(), "board-it-"));
  const config = readFileSync(join(REPO, "configs", "desk.toml"), "utf-8")
    .replace("grid_resolution = 0.1", "grid_resolution = 0.5")
    .replace("n_samples = 16", "n_samples = 6");
  const cfgPath = join(workdir, "cfg.toml");
  writeFileSync(cfgPath, config);
  const gridPath = join(workdir, "grid.json");
  const bake = spawnSync(
    "python3",
    ["-m", "soccerwalk.cli", "value-grid", "--config", cfgPath, "--out", gridPath],
    { cwd: REPO, encoding: "utf-8" }
  );
  if (bake.status !== 0) throw new Error(`value-grid failed: ${bake.stderr}`);
  server = spawn(
    "python3",
    [
      "-m", "soccerwalk.cli", "serve",
      "--config", cfgPath,
      "--port", String(PORT),
      "--grid", gridPath,
      "--scenarios-dir", join(workdir, "scenarios"),
    ],
    { cwd: REPO, stdio: ["ignore", "pipe", "pipe"] }
  );
  await waitForServer(30_000);
}, 60_000);

afterAll(() => {
  server?.kill();
});

const FIXTURE: Scenario = {
  ball: [2.8, 0.4],
  allies: [[2.2, 0.3, 0.1]],
  opponents: [[3.6, 0.5]],
  indirect: false,
  robot: 0,
};

describe("playbook board against a live server", () => {
  it("loads a fixture scenario, drags the ball 1 m, re-evaluates in < 1 s", async () => {
    const api = new ApiClient(BASE);
    await api.saveScenario("fixture-drag", FIXTURE, true);
    const config = await api.config();
    const state = new BoardState(config.field);
    state.loadScenario(await api.loadScenario("fixture-drag"));
    expect(scenariosEqual(state.scenario, FIXTURE)).toBe(true);

    const applied: { response: EvaluateResponse; scenario: Scenario; at: number }[] = [];
    const scheduler = new EvaluationScheduler(
      (s) => api.evaluate(s),
      (response, scenario) => applied.push({ response, scenario, at: Date.now() }),
      (err) => {
        throw err;
      },
      50
    );

    scheduler.requestNow(state.scenario);
    await new Promise<void>((resolve) => {
      const poll = setInterval(() => {
        if (applied.length >= 1) {
          clearInterval(poll);
          resolve();
        }
      }, 10);
    });
    const first = applied[0].response.selected;

    // drag the ball one meter toward the goal
    state.moveEntity({ kind: "ball" }, FIXTURE.ball[0] + 1.0, FIXTURE.ball[1]);
    const t0 = Date.now();
    scheduler.request(state.scenario);
    await new Promise<void>((resolve, reject) => {
      const timer = setTimeout(() => reject(new Error("re-evaluation took > 1 s")), 1000);
      const poll = setInterval(() => {
        if (applied.length >= 2) {
          clearTimeout(timer);
          clearInterval(poll);
          resolve();
        }
      }, 5);
    });
    const elapsed = Date.now() - t0;
    expect(elapsed).toBeLessThan(1000);
    const second = applied[1];
    expect(second.scenario.ball[0]).toBeCloseTo(FIXTURE.ball[0] + 1.0, 9);
    expect(second.response.selected).toBeDefined();
    expect(second.response.ranked.length).toBeGreaterThan(0);
    // with the ball a meter closer to the goal the value cannot get worse
    expect(second.response.selected.value).toBeGreaterThanOrEqual(first.value - 1e-9);
  }, 20_000);

  it("discards stale responses during a drag burst (last position wins)", async () => {
    const api = new ApiClient(BASE);
    const config = await api.config();
    const state = new BoardState(config.field);
    state.loadScenario(FIXTURE);

    const applied: Scenario[] = [];
    const scheduler = new EvaluationScheduler(
      (s) => api.evaluate(s),
      (_r, scenario) => applied.push(scenario),
      (err) => {
        throw err;
      },
      30
    );
    // five rapid positions; only coalesced evaluations may land, and the final
    // applied one must be the final position
    for (let i = 1; i <= 5; i++) {
      state.moveEntity({ kind: "ball" }, 1.0 + 0.2 * i, 0.4);
      scheduler.request(state.scenario);
      await new Promise((r) => setTimeout(r, 10));
    }
    await new Promise<void>((resolve, reject) => {
      const timer = setTimeout(() => reject(new Error("no evaluation landed")), 5000);
      const poll = setInterval(() => {
        if (applied.length > 0 && !scheduler.busy) {
          clearTimeout(timer);
          clearInterval(poll);
          resolve();
        }
      }, 10);
    });
    expect(scheduler.sent).toBeLessThanOrEqual(2); // burst coalesced
    expect(applied[applied.length - 1].ball[0]).toBeCloseTo(2.0, 9);
  }, 20_000);

  it("save/load over the wire is deep-equal", async () => {
    const api = new ApiClient(BASE);
    const fancy: Scenario = {
      ball: [-1.25, 2.5],
      allies: [
        [-2.0, 2.0, 0.7],
        [0.5, -1.5, -2.1],
      ],
      opponents: [
        [1.0, 1.0],
        [3.25, -0.75],
      ],
      indirect: true,
      robot: 1,
    };
    await api.saveScenario("deep-equal-check", fancy, true);
    const names = await api.listScenarios();
    expect(names).toContain("deep-equal-check");
    const loaded = await api.loadScenario("deep-equal-check");
    expect(loaded).toEqual(fancy);
  }, 20_000);
});
