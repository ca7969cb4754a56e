// Debounced, single-in-flight evaluation requests with stale-response discard.
//
// Drags fire request() on every position change; only the trailing edge of the
// debounce window reaches the network, at most one request is in flight at a
// time, and a response is applied only if no newer response has been applied
// (request ids are monotonic).

import type { EvaluateResponse, Scenario } from "./types.js";
import { cloneScenario } from "./types.js";

export class EvaluationScheduler {
  private timer: ReturnType<typeof setTimeout> | null = null;
  private nextId = 0;
  private lastApplied = 0;
  private inFlightId: number | null = null;
  private pending: Scenario | null = null;
  sent = 0; // total requests that reached the transport (for tests/diagnostics)

  constructor(
    private readonly transport: (s: Scenario) => Promise<EvaluateResponse>,
    private readonly apply: (r: EvaluateResponse, scenario: Scenario) => void,
    private readonly onError: (err: unknown) => void = () => undefined,
    readonly debounceMs = 150
  ) {}

  get busy(): boolean {
    return this.inFlightId !== null;
  }

  /** Schedule an evaluation for `scenario`; newer calls supersede older ones. */
  request(scenario: Scenario): void {
    const snapshot = cloneScenario(scenario);
    if (this.timer !== null) clearTimeout(this.timer);
    this.timer = setTimeout(() => {
      this.timer = null;
      this.dispatch(snapshot);
    }, this.debounceMs);
  }

  /** Bypass the debounce window (initial load, explicit button). */
  requestNow(scenario: Scenario): void {
    if (this.timer !== null) {
      clearTimeout(this.timer);
      this.timer = null;
    }
    this.dispatch(cloneScenario(scenario));
  }

  private dispatch(scenario: Scenario): void {
    if (this.inFlightId !== null) {
      this.pending = scenario; // last position wins once the flight returns
      return;
    }
    const id = ++this.nextId;
    this.inFlightId = id;
    this.sent += 1;
    this.transport(scenario).then(
      (response) => this.finish(id, () => {
        if (id > this.lastApplied) {
          this.lastApplied = id;
          this.apply(response, scenario);
        }
      }),
      (err) => this.finish(id, () => this.onError(err))
    );
  }

  private finish(id: number, action: () => void): void {
    if (this.inFlightId === id) this.inFlightId = null;
    action();
    if (this.pending !== null && this.inFlightId === null) {
      const next = this.pending;
      this.pending = null;
      this.dispatch(next);
    }
  }
}
