/** Browser entry point: wires the API client and view state to the page. */

import { ApiClient, ApiError, type GraphResponse, type Label } from "./api.js";
import {
  applyQuery,
  applyRejection,
  applySubmitSuccess,
  canSubmit,
  initialState,
  isComplete,
  pendingLabels,
  setChoice,
  type ViewState,
} from "./state.js";
import {
  buildScene,
  cameraForBatch,
  depthRange,
  drawScene,
  probabilityColor,
  type Camera,
  type Slice,
} from "./render.js";

function el<T extends HTMLElement>(id: string): T {
  const node = document.getElementById(id);
  if (node === null) throw new Error(`missing element #${id}`);
  return node as T;
}

const params = new URLSearchParams(window.location.search);
const api = new ApiClient(params.get("api") ?? "http://127.0.0.1:8000");

const canvas = el<HTMLCanvasElement>("view");
const ctx = canvas.getContext("2d");
if (ctx === null) throw new Error("canvas 2d context unavailable");

const startBtn = el<HTMLButtonElement>("start");
const strategySel = el<HTMLSelectElement>("strategy");
const kInput = el<HTMLInputElement>("k");
const budgetInput = el<HTMLInputElement>("budget");
const iterationEl = el<HTMLSpanElement>("iteration");
const progressEl = el<HTMLSpanElement>("progress");
const batchList = el<HTMLDivElement>("batch");
const submitBtn = el<HTMLButtonElement>("submit");
const errorBox = el<HTMLDivElement>("error");
const doneBanner = el<HTMLDivElement>("done");
const sliceRow = el<HTMLDivElement>("slice-row");
const sliceInput = el<HTMLInputElement>("slice");

let state: ViewState | null = null;
let graph: GraphResponse | null = null;
let camera: Camera = { cx: 0, cy: 0, scale: 1 };
let slice: Slice | null = null;
let budget = 0;

function currentSlice(): Slice | null {
  if (graph === null || graph.positions === null) return null;
  const range = depthRange(graph.positions);
  if (range === null) return null;
  const [lo, hi] = range;
  const center = lo + ((hi - lo) * Number(sliceInput.value)) / 100;
  return { center, halfWidth: Math.max((hi - lo) * 0.15, 1e-9) };
}

function redraw(): void {
  if (state === null || graph === null || graph.positions === null) return;
  const scene = buildScene({
    positions: graph.positions,
    adjacency: graph.adjacency,
    polylines: graph.polylines,
    probabilities: state.probabilities,
    batch: state.batch,
    slice,
  });
  drawScene(ctx!, scene, camera, canvas.width, canvas.height);
}

function renderSidebar(): void {
  if (state === null) return;
  iterationEl.textContent = String(state.iteration);
  progressEl.textContent = `${state.nLabeled} / ${budget}`;
  errorBox.textContent = state.error ?? "";
  errorBox.style.display = state.error === null ? "none" : "block";
  doneBanner.style.display = isComplete(state) ? "block" : "none";

  batchList.replaceChildren();
  for (const index of state.batch) {
    const row = document.createElement("div");
    row.className = "member";
    const swatch = document.createElement("span");
    swatch.className = "swatch";
    const p = state.probabilities[index];
    swatch.style.background = p === undefined ? "#94a3b8" : probabilityColor(p);
    const label = document.createElement("span");
    label.textContent = `#${index}`;
    row.append(swatch, label);
    for (const value of [0, 1] as Label[]) {
      const btn = document.createElement("button");
      btn.textContent = value === 1 ? "structure" : "background";
      btn.className = state.choices.get(index) === value ? "choice picked" : "choice";
      btn.addEventListener("click", () => {
        if (state === null) return;
        state = setChoice(state, index, value);
        renderSidebar();
      });
      row.append(btn);
    }
    batchList.append(row);
  }
  submitBtn.disabled = state === null || !canSubmit(state);
}

async function refreshQuery(jumpCamera: boolean): Promise<void> {
  if (state === null) return;
  const query = await api.getQuery(state.sessionId);
  state = applyQuery(state, query);
  if (jumpCamera && graph !== null && graph.positions !== null && state.batch.length > 0) {
    camera = cameraForBatch(graph.positions, state.batch, canvas.width, canvas.height);
  }
  renderSidebar();
  redraw();
}

startBtn.addEventListener("click", () => {
  void (async () => {
    startBtn.disabled = true;
    try {
      const created = await api.createSession({
        strategy: strategySel.value,
        k: Number(kInput.value),
        budget: Number(budgetInput.value),
      });
      state = initialState(created.session_id);
      graph = await api.getGraph(created.session_id);
      const status = await api.getStatus(created.session_id);
      budget = status.budget;
      const range = graph.positions === null ? null : depthRange(graph.positions);
      sliceRow.style.display = range === null ? "none" : "flex";
      slice = currentSlice();
      await refreshQuery(true);
    } catch (err) {
      errorBox.textContent = err instanceof Error ? err.message : String(err);
      errorBox.style.display = "block";
      startBtn.disabled = false;
    }
  })();
});

submitBtn.addEventListener("click", () => {
  void (async () => {
    if (state === null || !canSubmit(state)) return;
    submitBtn.disabled = true;
    try {
      const resp = await api.submitLabels(state.sessionId, pendingLabels(state));
      state = applySubmitSuccess(state, resp);
      if (!isComplete(state)) await refreshQuery(true);
      else {
        renderSidebar();
        redraw();
      }
    } catch (err) {
      // Keep the pending choices so the annotator can adjust and retry.
      if (state !== null) {
        state = applyRejection(state, err instanceof ApiError ? err.detail : String(err));
      }
      renderSidebar();
    }
  })();
});

sliceInput.addEventListener("input", () => {
  slice = currentSlice();
  redraw();
});
