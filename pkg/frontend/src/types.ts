// Wire types mirroring the server's JSON schemas.

export interface Scenario {
  ball: [number, number];
  allies: [number, number, number][];
  opponents: [number, number][];
  indirect: boolean;
  robot: number;
}

export interface ActionEvaluation {
  template: string;
  yaw: number;
  value: number;
  placement: [number, number, number];
  index: number;
  samples: [number, number][];
  steps?: number;
}

export interface EvaluateResponse {
  ranked: ActionEvaluation[];
  top: ActionEvaluation[];
  selected: ActionEvaluation;
  grid_iterations?: number;
}

export interface ValueGridResponse {
  geometry: {
    length: number;
    width: number;
    goal_width: number;
    resolution: number;
    nx: number;
    ny: number;
  };
  iterations: number;
  converged: boolean;
  seed?: number;
  values: number[][];
}

export interface FieldConfig {
  length: number;
  width: number;
  goal_width: number;
  grid_resolution: number;
  goal_area_length: number;
  goal_area_width: number;
}

export interface ConfigResponse {
  strategy: Record<string, number | boolean>;
  field: FieldConfig;
  templates: { name: string }[];
  grid_ready: boolean;
}

export function cloneScenario(s: Scenario): Scenario {
  return JSON.parse(JSON.stringify(s)) as Scenario;
}

export function scenariosEqual(a: Scenario, b: Scenario): boolean {
  const canon = (s: Scenario) =>
    JSON.stringify([s.ball, s.allies, s.opponents, s.indirect, s.robot]);
  return canon(a) === canon(b);
}

export function emptyScenario(): Scenario {
  return { ball: [0, 0], allies: [[-0.5, 0, 0]], opponents: [], indirect: false, robot: 0 };
}
