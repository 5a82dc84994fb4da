// Session view state and the actions that drive it.
//
// Every mutation re-fetches the authoritative snapshot afterwards: the view
// renders service state, never an optimistic guess. At most one mutation is
// in flight; extra clicks while pending are dropped.

import { ApiClient, ApiError } from "./api.js";
import type {
  ConditionRow,
  Goal,
  Hypertree,
  ProblemInput,
  SearchReport,
} from "./types.js";

export interface ViewState {
  sessionId: string | null;
  problemId: number | null;
  conditions: ConditionRow[];
  hypertree: Hypertree;
  applicableTheorems: string[];
  theoremLog: string[];
  goal: Goal | null;
  pending: boolean;
  notice: string | null;
  highlights: number[];
  suggestions: string[];
}

export function emptyState(): ViewState {
  return {
    sessionId: null,
    problemId: null,
    conditions: [],
    hypertree: { nodes: [], edges: [] },
    applicableTheorems: [],
    theoremLog: [],
    goal: null,
    pending: false,
    notice: null,
    highlights: [],
    suggestions: [],
  };
}

type Listener = (state: ViewState) => void;

export class SessionStore {
  state: ViewState = emptyState();
  private listeners: Listener[] = [];

  constructor(private api: ApiClient) {}

  subscribe(listener: Listener): void {
    this.listeners.push(listener);
  }

  private emit(): void {
    for (const listener of this.listeners) listener(this.state);
  }

  private set(patch: Partial<ViewState>): void {
    this.state = { ...this.state, ...patch };
    this.emit();
  }

  private applySnapshot(snapshot: {
    session_id: string; problem_id: number; conditions: ConditionRow[];
    goal: Goal; applicable_theorems: string[]; theorem_log: string[];
    hypertree: Hypertree;
  }, extra: Partial<ViewState> = {}): void {
    this.set({
      sessionId: snapshot.session_id,
      problemId: snapshot.problem_id,
      conditions: snapshot.conditions,
      goal: snapshot.goal,
      applicableTheorems: snapshot.applicable_theorems,
      theoremLog: snapshot.theorem_log,
      hypertree: snapshot.hypertree,
      pending: false,
      notice: null,
      highlights: [],
      suggestions: this.state.suggestions,
      ...extra,
    });
  }

  async load(selection: { problem?: ProblemInput; problem_id?: number }):
    Promise<void> {
    this.set({ pending: true, notice: null });
    try {
      const snapshot = await this.api.createSession(selection);
      this.applySnapshot(snapshot, { suggestions: [] });
    } catch (error) {
      // no session is created on failure; the old view stays up
      this.set({ pending: false, notice: describe(error) });
    }
  }

  async applyTheorem(theorem: string, binding?: string): Promise<void> {
    if (this.state.pending || this.state.sessionId === null) return;
    this.set({ pending: true, notice: null });
    const sessionId = this.state.sessionId;
    try {
      const report = await this.api.applyStep(sessionId, theorem, binding);
      const snapshot = await this.api.snapshot(sessionId);
      const fresh = report.new_conditions.map((c) => c.id);
      this.applySnapshot(snapshot, {
        highlights: fresh,
        notice: fresh.length === 0 ? `no matches for ${theorem}` : null,
      });
    } catch (error) {
      this.set({ pending: false, notice: describe(error) });
    }
  }

  async undo(): Promise<void> {
    if (this.state.pending || this.state.sessionId === null) return;
    this.set({ pending: true, notice: null });
    try {
      const snapshot = await this.api.undo(this.state.sessionId);
      this.applySnapshot(snapshot);
    } catch (error) {
      this.set({ pending: false, notice: describe(error) });
    }
  }

  async requestSuggestion(budget: number, method = "forward",
                          strategy = "bfs"): Promise<SearchReport | null> {
    if (this.state.sessionId === null) return null;
    this.set({ notice: null });
    try {
      const report = await this.api.suggest(this.state.sessionId, budget,
                                            method, strategy);
      const suggestions = report.outcome === "solved" ? report.theorem_seqs : [];
      this.set({
        suggestions,
        notice: suggestions.length === 0 ? "no suggestion within budget" : null,
      });
      return report;
    } catch (error) {
      this.set({ notice: describe(error) });
      return null;
    }
  }
}

function describe(error: unknown): string {
  if (error instanceof ApiError) return `${error.status}: ${error.message}`;
  return String(error);
}

// Rendered ids must match the snapshot exactly; anything else is a bug in
// the store, so the renderer can assert with this helper.
export function stateMatchesHypertree(state: ViewState): boolean {
  const conditionIds = state.conditions.map((c) => c.id).sort((a, b) => a - b);
  const nodeIds = state.hypertree.nodes.map((n) => n.id).sort((a, b) => a - b);
  if (conditionIds.length !== nodeIds.length) return false;
  return conditionIds.every((id, i) => id === nodeIds[i]);
}
