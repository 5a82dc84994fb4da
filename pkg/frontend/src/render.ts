// DOM rendering: condition table, goal banner, theorem controls, and the
// hypertree as a layered DAG (conditions as boxes, one diamond per
// hyperedge fanning in from premises and out to conclusions).

import type { ViewState } from "./state.js";
import { stateMatchesHypertree } from "./state.js";
import type { Hyperedge, Hypertree } from "./types.js";

const SVG = "http://www.w3.org/2000/svg";

export interface Handlers {
  onApply: (theorem: string, binding?: string) => void;
  onUndo: () => void;
  onSuggest: (budget: number) => void;
  onPick: (problemId: number) => void;
}

export function render(root: HTMLElement, state: ViewState,
                       handlers: Handlers): void {
  if (state.sessionId !== null && !stateMatchesHypertree(state)) {
    throw new Error("view out of sync with snapshot");
  }
  root.replaceChildren(
    banner(state),
    controls(state, handlers),
    conditionTable(state),
    hypertreeSvg(state.hypertree, new Set(state.highlights)),
  );
}

function el<K extends keyof HTMLElementTagNameMap>(
  tag: K, attrs: Record<string, string> = {}, text?: string,
): HTMLElementTagNameMap[K] {
  const node = document.createElement(tag);
  for (const [key, value] of Object.entries(attrs)) node.setAttribute(key, value);
  if (text !== undefined) node.textContent = text;
  return node;
}

function banner(state: ViewState): HTMLElement {
  const wrap = el("div", { class: "banner" });
  if (state.goal === null) {
    wrap.append(el("span", { class: "goal unsolved" }, "no session"));
    return wrap;
  }
  const status = state.goal.status;
  const label = status === "solved"
    ? `solved: ${state.goal.payload} = ${state.goal.answer ?? "true"}`
    : `unsolved: ${state.goal.payload}`;
  wrap.append(el("span", { class: `goal ${status}`, id: "goal-banner" }, label));
  if (state.notice) {
    wrap.append(el("span", { class: "notice", id: "notice" }, state.notice));
  }
  if (state.pending) {
    wrap.append(el("span", { class: "pending" }, "working..."));
  }
  return wrap;
}

function controls(state: ViewState, handlers: Handlers): HTMLElement {
  const wrap = el("div", { class: "controls" });

  const theoremBox = el("div", { class: "theorems" });
  theoremBox.append(el("h3", {}, "applicable theorems"));
  for (const name of state.applicableTheorems) {
    const button = el("button", { "data-theorem": name }, name);
    button.disabled = state.pending;
    button.addEventListener("click", () => handlers.onApply(name));
    theoremBox.append(button);
  }
  wrap.append(theoremBox);

  const actions = el("div", { class: "actions" });
  const undoButton = el("button", { id: "undo" }, "undo");
  undoButton.disabled = state.pending || state.theoremLog.length === 0;
  undoButton.addEventListener("click", () => handlers.onUndo());
  actions.append(undoButton);

  const suggestButton = el("button", { id: "suggest" }, "suggest (10s)");
  suggestButton.disabled = state.pending || state.sessionId === null;
  suggestButton.addEventListener("click", () => handlers.onSuggest(10));
  actions.append(suggestButton);
  wrap.append(actions);

  if (state.suggestions.length > 0) {
    const panel = el("div", { class: "suggestions", id: "suggestions" });
    panel.append(el("h3", {}, "suggested sequence"));
    for (const name of state.suggestions) {
      const button = el("button", { "data-suggestion": name }, name);
      button.disabled = state.pending;
      button.addEventListener("click", () => handlers.onApply(name));
      panel.append(button);
    }
    wrap.append(panel);
  }

  if (state.theoremLog.length > 0) {
    wrap.append(el("div", { class: "log" },
                   `applied: ${state.theoremLog.join(" , ")}`));
  }
  return wrap;
}

function conditionTable(state: ViewState): HTMLElement {
  const highlights = new Set(state.highlights);
  const table = el("table", { class: "conditions", id: "conditions" });
  const head = el("tr");
  for (const title of ["id", "fact", "by", "premises"]) {
    head.append(el("th", {}, title));
  }
  table.append(head);
  for (const row of state.conditions) {
    const tr = el("tr", {
      "data-id": String(row.id),
      class: highlights.has(row.id) ? "new" : "",
    });
    tr.append(el("td", {}, String(row.id)));
    tr.append(el("td", {}, row.item));
    tr.append(el("td", {}, row.theorem));
    tr.append(el("td", {}, row.premises.join(",")));
    table.append(tr);
  }
  return table;
}

// --- hypertree layout --------------------------------------------------------

interface Layout {
  depth: Map<number, number>;
  row: Map<number, number>;
}

export function layeredLayout(tree: Hypertree): Layout {
  const byConclusion = new Map<number, Hyperedge>();
  for (const edge of tree.edges) {
    for (const id of edge.conclusions) byConclusion.set(id, edge);
  }
  const depth = new Map<number, number>();
  const nodeDepth = (id: number): number => {
    const known = depth.get(id);
    if (known !== undefined) return known;
    const edge = byConclusion.get(id);
    const d = edge && edge.premises.length > 0
      ? 1 + Math.max(...edge.premises.map(nodeDepth))
      : 0;
    depth.set(id, d);
    return d;
  };
  const row = new Map<number, number>();
  const counts = new Map<number, number>();
  for (const node of [...tree.nodes].sort((a, b) => a.id - b.id)) {
    const d = nodeDepth(node.id);
    const r = counts.get(d) ?? 0;
    counts.set(d, r + 1);
    row.set(node.id, r);
  }
  return { depth, row };
}

const X_STEP = 170;
const Y_STEP = 34;

function hypertreeSvg(tree: Hypertree, highlights: Set<number>): SVGSVGElement {
  const layout = layeredLayout(tree);
  const svg = document.createElementNS(SVG, "svg");
  svg.setAttribute("id", "hypertree");
  const maxDepth = Math.max(0, ...layout.depth.values());
  const maxRow = Math.max(0, ...layout.row.values());
  svg.setAttribute("width", String((maxDepth + 2) * X_STEP));
  svg.setAttribute("height", String((maxRow + 2) * Y_STEP));

  const pos = (id: number): [number, number] => [
    20 + (layout.depth.get(id) ?? 0) * X_STEP,
    20 + (layout.row.get(id) ?? 0) * Y_STEP,
  ];

  for (const edge of tree.edges) {
    if (edge.theorem === "prerequisite") continue;
    const targets = edge.conclusions.map(pos);
    const sources = edge.premises.map(pos);
    const cx = targets.reduce((a, [x]) => a + x, 0) / targets.length - X_STEP / 2;
    const cy = targets.reduce((a, [, y]) => a + y, 0) / targets.length;
    for (const [x, y] of sources) {
      svg.append(line(x + 60, y, cx, cy));
    }
    for (const [x, y] of targets) {
      svg.append(line(cx, cy, x, y));
    }
    const marker = document.createElementNS(SVG, "rect");
    marker.setAttribute("x", String(cx - 5));
    marker.setAttribute("y", String(cy - 5));
    marker.setAttribute("width", "10");
    marker.setAttribute("height", "10");
    marker.setAttribute("transform", `rotate(45 ${cx} ${cy})`);
    marker.setAttribute("class", `edge ${edge.theorem === "extended" ? "extended" : "theorem"}`);
    marker.setAttribute("data-theorem", edge.theorem);
    svg.append(marker);
    const label = document.createElementNS(SVG, "text");
    label.setAttribute("x", String(cx + 8));
    label.setAttribute("y", String(cy - 8));
    label.setAttribute("class", "edge-label");
    label.textContent = edge.theorem;
    svg.append(label);
  }

  for (const node of tree.nodes) {
    const [x, y] = pos(node.id);
    const group = document.createElementNS(SVG, "g");
    group.setAttribute("data-node", String(node.id));
    const box = document.createElementNS(SVG, "rect");
    box.setAttribute("x", String(x - 4));
    box.setAttribute("y", String(y - 12));
    box.setAttribute("width", "120");
    box.setAttribute("height", "18");
    box.setAttribute("class", highlights.has(node.id) ? "node new" : "node");
    group.append(box);
    const text = document.createElementNS(SVG, "text");
    text.setAttribute("x", String(x));
    text.setAttribute("y", String(y));
    text.textContent = `${node.id}: ${node.item}`;
    group.append(text);
    svg.append(group);
  }
  return svg;
}

function line(x1: number, y1: number, x2: number, y2: number): SVGLineElement {
  const node = document.createElementNS(SVG, "line");
  node.setAttribute("x1", String(x1));
  node.setAttribute("y1", String(y1));
  node.setAttribute("x2", String(x2));
  node.setAttribute("y2", String(y2));
  node.setAttribute("class", "wire");
  return node;
}

export function problemPicker(root: HTMLElement,
                              problems: { problem_id: number;
                                          description: string }[],
                              handlers: Handlers): void {
  const select = el("select", { id: "problem-picker" });
  select.append(el("option", { value: "" }, "pick a problem..."));
  for (const p of problems) {
    select.append(el("option", { value: String(p.problem_id) },
                     `#${p.problem_id} ${p.description.slice(0, 70)}`));
  }
  select.addEventListener("change", () => {
    if (select.value) handlers.onPick(Number(select.value));
  });
  root.append(select);
}
