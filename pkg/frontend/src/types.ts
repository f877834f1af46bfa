// Payload shapes mirroring the session service JSON. The client renders
// these numbers verbatim and never derives probabilities on its own.

export interface ScenarioPreset {
  name: string;
  activities: string[];
  scopes: string[];
}

export interface Catalogue {
  scenarios: ScenarioPreset[];
  rules: Record<string, number[]>;
  defaults: {
    rule: string;
    horizon: number;
    deploymentThreshold: number;
    seed: number;
  };
}

export interface ScenarioRef {
  name: string;
  rule?: string;
  horizon?: number;
  scope?: string | null;
  deploymentThreshold?: number;
}

export interface SearchConfig {
  nIt?: number;
  convergenceLength?: number;
  maxIterations?: number;
  replicas?: number;
  ladder?: number[];
}

export interface HistoryEvent {
  event: "result" | "stopped";
  activity?: string;
  result?: boolean;
  override?: boolean;
  time: number;
  cost?: number;
  posterior?: number;
  rework?: boolean;
  reworkCost?: number;
  posteriorAfterRework?: number;
}

export type SessionStatus = "active" | "deployed" | "stopped" | "horizon_end";

export interface Recommendation {
  status: "ready" | "computing";
  action?: string | null;
  fvtExpectedValue?: number;
  posterior?: number;
  terminal?: SessionStatus;
}

export interface SessionView {
  id: string;
  scenario: {
    name: string;
    rule: string;
    horizon: number;
    scope: string | null;
    deploymentThreshold: number;
    activities: string[];
    lowerThresholds: number[];
    target: string;
  };
  status: SessionStatus;
  time: number;
  horizon: number;
  posterior: number;
  results: Record<string, number>;
  spent: number;
  history: HistoryEvent[];
  recommendation: Recommendation;
  seed: number;
  config: SearchConfig;
}

export interface TreeBranch {
  result: boolean;
  probability: number;
  posterior: number;
  rework: boolean;
  reworkCost: number | null;
  child: TreeNode;
}

export type TreeNode =
  | { action: string; posterior: number; branch: TreeBranch[] }
  | { stop: string; posterior: number };

export interface TreePayload {
  status: "ready" | "computing";
  terminal?: SessionStatus;
  tree: {
    origin: { results: number[]; time: number };
    expectedValue: number;
    root: TreeNode;
  } | null;
}

export function isStopNode(node: TreeNode): node is { stop: string; posterior: number } {
  return "stop" in node;
}
