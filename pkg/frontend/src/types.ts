// Payload shapes of the session service API.

export interface ConditionRow {
  id: number;
  predicate: string;
  item: string;
  premises: number[];
  theorem: string;
}

export interface Goal {
  kind: string;
  payload: string;
  status: "solved" | "unsolved";
  answer: string | null;
  premises: number[];
}

export interface Hyperedge {
  theorem: string;
  premises: number[];
  conclusions: number[];
}

export interface Hypertree {
  nodes: { id: number; predicate: string; item: string }[];
  edges: Hyperedge[];
  goal?: Goal | null;
}

export interface SessionState {
  session_id: string;
  problem_id: number;
  conditions: ConditionRow[];
  goal: Goal;
  applicable_theorems: string[];
  theorem_log: string[];
  hypertree: Hypertree;
}

export interface StepReport {
  theorem: string;
  new_conditions: ConditionRow[];
  goal: Goal;
  hypertree_delta: Hypertree;
}

export interface SearchReport {
  outcome: string;
  theorem_seqs: string[];
  steps: number;
  elapsed: number;
  answer: string | null;
}

export interface ProblemSummary {
  problem_id: number;
  description: string;
  goal_cdl: string;
  theorems: number;
}

export interface ProblemInput {
  problem_id?: number;
  description?: string;
  construction_cdl: string[];
  text_cdl: string[];
  goal_cdl: string;
  theorem_seqs?: string[];
}
