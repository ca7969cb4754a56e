import type { ConfigResponse, EvaluateResponse, Scenario, ValueGridResponse } from "./types.js";

export class ApiError extends Error {
  constructor(readonly status: number, readonly code: string, message: string) {
    super(message);
  }
}

async function parseError(res: Response): Promise<ApiError> {
  let code = "http_error";
  let message = `${res.status}`;
  try {
    const body = (await res.json()) as { code?: string; message?: string };
    code = body.code ?? code;
    message = body.message ?? message;
  } catch {
    // non-JSON error body; keep the defaults
  }
  return new ApiError(res.status, code, message);
}

export class ApiClient {
  constructor(readonly baseUrl: string = "") {}

  private async get<T>(path: string): Promise<T> {
    const res = await fetch(this.baseUrl + path);
    if (!res.ok) throw await parseError(res);
    return (await res.json()) as T;
  }

  private async send<T>(method: string, path: string, body: unknown): Promise<T> {
    const res = await fetch(this.baseUrl + path, {
      method,
      headers: { "Content-Type": "application/json" },
      body: JSON.stringify(body),
    });
    if (!res.ok) throw await parseError(res);
    return (await res.json()) as T;
  }

  config(): Promise<ConfigResponse> {
    return this.get("/api/config");
  }

  updateConfig(updates: Record<string, number | boolean>): Promise<unknown> {
    return this.send("PUT", "/api/config", updates);
  }

  evaluate(scenario: Scenario): Promise<EvaluateResponse> {
    return this.send("POST", "/api/evaluate", scenario);
  }

  valueGrid(): Promise<ValueGridResponse> {
    return this.get("/api/value-grid");
  }

  listScenarios(): Promise<string[]> {
    return this.get<{ scenarios: string[] }>("/api/scenarios").then((r) => r.scenarios);
  }

  loadScenario(name: string): Promise<Scenario> {
    return this.get(`/api/scenarios/${encodeURIComponent(name)}`);
  }

  saveScenario(name: string, scenario: Scenario, overwrite = false): Promise<unknown> {
    return this.send("POST", "/api/scenarios", { name, scenario, overwrite });
  }

  planWalk(start: [number, number, number], target: [number, number, number]): Promise<{
    footsteps: { x: number; y: number; theta: number; side: string }[];
    com: [number, number][];
    converged: boolean;
  }> {
    return this.send("POST", "/api/plan-walk", { start, target });
  }
}
