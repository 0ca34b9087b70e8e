// DOM wiring for the query-by-example page. All state transitions go
// through the pure helpers in state.ts; this module only reads controls,
// fires API calls, and repaints the three regions (banner, status, grid).

import {
  ApiError,
  fetchConfig,
  postQuery,
  type ConfigResponse,
  type QuerySource,
} from "./api.js";
import {
  applyError,
  applyResponse,
  beginRequest,
  createState,
  dismissError,
  selectSource,
  sourceForResult,
  validatePanel,
  type RawPanel,
  type UiState,
} from "./state.js";
import { renderBanner, renderGrid, renderStatus } from "./render.js";

function must<T extends HTMLElement>(id: string): T {
  const element = document.getElementById(id);
  if (element === null) {
    throw new Error(`missing element #${id}`);
  }
  return element as T;
}

const form = must<HTMLFormElement>("panel");
const sourceIndexed = must<HTMLInputElement>("source-indexed");
const sourceUpload = must<HTMLInputElement>("source-upload");
const imageSelect = must<HTMLSelectElement>("image-id");
const fileInput = must<HTMLInputElement>("file");
const measureSelect = must<HTMLSelectElement>("measure");
const epsilonInput = must<HTMLInputElement>("epsilon");
const epsilonPrimeInput = must<HTMLInputElement>("epsilon-prime");
const spreadInput = must<HTMLInputElement>("spread");
const kInput = must<HTMLInputElement>("k");
const searchButton = must<HTMLButtonElement>("search");
const validationArea = must<HTMLElement>("validation");
const bannerArea = must<HTMLElement>("banner");
const statusArea = must<HTMLElement>("status");
const gridArea = must<HTMLElement>("grid");
const datasetLine = must<HTMLElement>("dataset-line");

let state: UiState = createState();

function repaint(): void {
  bannerArea.innerHTML = renderBanner(state.error);
  bannerArea.hidden = state.error === null;
  statusArea.innerHTML = renderStatus(state.lastResponse);
  gridArea.innerHTML = renderGrid(state.lastResponse);
  searchButton.disabled = state.pending;
}

function showValidation(errors: string[]): void {
  validationArea.textContent = errors.join("; ");
  epsilonPrimeInput.setAttribute(
    "aria-invalid",
    errors.some((e) => e.includes("ε′")) ? "true" : "false",
  );
}

function readPanel(): RawPanel {
  return {
    measure: measureSelect.value,
    epsilon: epsilonInput.value,
    epsilonPrime: epsilonPrimeInput.value,
    spread: spreadInput.value,
    k: kInput.value,
  };
}

function readSource(): QuerySource | null {
  if (sourceIndexed.checked) {
    if (imageSelect.value === "") {
      showValidation(["pick an indexed image id"]);
      return null;
    }
    return { kind: "indexed", imageId: imageSelect.value };
  }
  const file = fileInput.files?.[0];
  if (file === undefined) {
    showValidation(["choose an image file to upload"]);
    return null;
  }
  return { kind: "upload", file };
}

async function runQuery(source: QuerySource): Promise<void> {
  const validation = validatePanel(readPanel());
  if (!validation.ok) {
    showValidation(validation.errors);
    return;
  }
  showValidation([]);
  state = selectSource(state, source);
  state = beginRequest(state);
  const sequence = state.sequence;
  repaint();
  try {
    const response = await postQuery(source, validation.params);
    state = applyResponse(state, sequence, response);
  } catch (error) {
    const message = error instanceof ApiError
      ? error.message
      : `network error: ${String(error)}`;
    state = applyError(state, sequence, message);
  }
  repaint();
}

form.addEventListener("submit", (event) => {
  event.preventDefault();
  const source = readSource();
  if (source !== null) {
    void runQuery(source);
  }
});

// Clicking (or keyboard-activating) a result thumbnail queries from it.
gridArea.addEventListener("click", (event) => {
  const target = event.target as HTMLElement | null;
  const thumb = target?.closest<HTMLButtonElement>("button.thumb");
  const imageId = thumb?.dataset.imageId;
  if (imageId === undefined) {
    return;
  }
  sourceIndexed.checked = true;
  if ([...imageSelect.options].some((option) => option.value === imageId)) {
    imageSelect.value = imageId;
  }
  void runQuery(sourceForResult(imageId));
});

bannerArea.addEventListener("click", (event) => {
  const target = event.target as HTMLElement | null;
  if (target?.closest("button.dismiss")) {
    state = dismissError(state);
    repaint();
  }
});

fileInput.addEventListener("change", () => {
  if (fileInput.files && fileInput.files.length > 0) {
    sourceUpload.checked = true;
  }
});

async function initialize(): Promise<void> {
  repaint();
  try {
    const config: ConfigResponse = await fetchConfig();
    measureSelect.innerHTML = config.measures
      .map((m) => `<option value="${m}">${m}</option>`)
      .join("");
    measureSelect.value = config.defaults.measure;
    epsilonInput.value = String(config.defaults.epsilon);
    epsilonPrimeInput.value = String(config.defaults.epsilon_prime);
    kInput.value = String(config.defaults.k);
    spreadInput.placeholder = config.defaults.spread === null
      ? "index default (none)"
      : `index default (${config.defaults.spread})`;
    imageSelect.innerHTML = config.dataset.image_ids
      .map((id) => `<option value="${id}">${id}</option>`)
      .join("");
    const categories = Object.keys(config.dataset.categories).length;
    datasetLine.textContent =
      `${config.dataset.images} images, ${config.dataset.blocks} blocks, `
      + `${categories} categories`;
  } catch (error) {
    const message = error instanceof ApiError
      ? error.message
      : `could not load /api/config: ${String(error)}`;
    state = { ...state, error: message };
    repaint();
  }
}

void initialize();
