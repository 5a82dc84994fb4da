import { ApiClient } from "./api.js";
import { problemPicker, render } from "./render.js";
import { SessionStore } from "./state.js";

const api = new ApiClient("");
const store = new SessionStore(api);

const pickerRoot = document.getElementById("picker")!;
const viewRoot = document.getElementById("view")!;

const handlers = {
  onApply: (theorem: string, binding?: string) =>
    void store.applyTheorem(theorem, binding),
  onUndo: () => void store.undo(),
  onSuggest: (budget: number) => void store.requestSuggestion(budget),
  onPick: (problemId: number) => void store.load({ problem_id: problemId }),
};

store.subscribe((state) => render(viewRoot as HTMLElement, state, handlers));

api.listProblems()
  .then((problems) => problemPicker(pickerRoot as HTMLElement, problems, handlers))
  .catch((error) => {
    pickerRoot.textContent = `service unreachable: ${error}`;
  });
