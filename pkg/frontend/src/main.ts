/**
 * SoS tuner: pick a dataset/frame/method, drag the speed-of-sound
 * slider, and watch the reconstruction and its data residual norm
 * update live. Slider moves are debounced; stale responses from slower
 * reconstructions are dropped by sequence number.
 */

import {
  fetchDatasets,
  fetchFrameMeta,
  fetchSosGrid,
  postRecon,
  ApiError,
  DatasetInfo,
  SosGridInfo,
} from "./api.js";
import {
  Debouncer,
  SequenceGate,
  formatElapsed,
  formatResidual,
  makeSessionId,
  snapToGrid,
} from "./state.js";

const DEBOUNCE_MS = 150;

function byId<T extends HTMLElement>(id: string): T {
  const el = document.getElementById(id);
  if (!el) {
    throw new Error(`missing element #${id}`);
  }
  return el as T;
}

const datasetSel = byId<HTMLSelectElement>("dataset");
const frameSel = byId<HTMLSelectElement>("frame");
const methodSel = byId<HTMLSelectElement>("method");
const sosSlider = byId<HTMLInputElement>("sos");
const sosLabel = byId<HTMLSpanElement>("sos-label");
const residualEl = byId<HTMLSpanElement>("residual");
const elapsedEl = byId<HTMLSpanElement>("elapsed");
const statusEl = byId<HTMLSpanElement>("status");
const imageEl = byId<HTMLImageElement>("recon-image");
const metaEl = byId<HTMLDivElement>("frame-meta");
const toastEl = byId<HTMLDivElement>("toast");

const gate = new SequenceGate();
const debouncer = new Debouncer(DEBOUNCE_MS);
const sessionId = makeSessionId();

let grid: SosGridInfo | null = null;
let datasets: DatasetInfo[] = [];
let toastTimer: ReturnType<typeof setTimeout> | null = null;

function showToast(message: string): void {
  toastEl.textContent = message;
  toastEl.classList.add("visible");
  if (toastTimer !== null) {
    clearTimeout(toastTimer);
  }
  toastTimer = setTimeout(() => toastEl.classList.remove("visible"), 4000);
}

function currentSos(): number {
  const raw = Number(sosSlider.value);
  return grid ? snapToGrid(raw, grid) : raw;
}

async function refreshMeta(): Promise<void> {
  if (!datasetSel.value) {
    return;
  }
  try {
    const meta = await fetchFrameMeta(datasetSel.value, Number(frameSel.value));
    metaEl.textContent =
      `${meta.file}: ${meta.n_time} samples x ${meta.n_detectors} detectors, ` +
      `${(meta.sampling_rate_hz / 1e6).toFixed(0)} MHz, t0 ${meta.t0_offset_samples}`;
  } catch (err) {
    metaEl.textContent = "";
    showToast(err instanceof Error ? err.message : String(err));
  }
}

async function requestRecon(): Promise<void> {
  if (!datasetSel.value || !grid) {
    return;
  }
  const seq = gate.issue();
  const sos = currentSos();
  statusEl.textContent = "reconstructing…";
  try {
    const res = await postRecon({
      dataset_id: datasetSel.value,
      frame_index: Number(frameSel.value),
      method: methodSel.value,
      sos_mps: sos,
      session_id: sessionId,
      seq,
    });
    if (!gate.accept(seq)) {
      return; // a newer response already rendered
    }
    imageEl.src = `data:image/png;base64,${res.png_b64}`;
    residualEl.textContent = formatResidual(res.residual_norm);
    elapsedEl.textContent = formatElapsed(res.elapsed_ms);
    statusEl.textContent = `${res.method} @ ${res.sos_used.toFixed(0)} m/s`;
  } catch (err) {
    if (gate.accept(seq)) {
      statusEl.textContent = "error";
      if (err instanceof ApiError && err.status === 409) {
        showToast("solver queue is full - try again in a moment");
      } else {
        showToast(err instanceof Error ? err.message : String(err));
      }
    }
  }
}

function scheduleRecon(): void {
  sosLabel.textContent = `${currentSos().toFixed(0)} m/s`;
  debouncer.schedule(() => void requestRecon());
}

function fillFrames(ds: DatasetInfo): void {
  frameSel.innerHTML = "";
  for (let i = 0; i < ds.n_frames; i++) {
    const opt = document.createElement("option");
    opt.value = String(i);
    opt.textContent = `frame ${i}`;
    frameSel.appendChild(opt);
  }
}

async function init(): Promise<void> {
  try {
    [grid, datasets] = await Promise.all([fetchSosGrid(), fetchDatasets()]);
  } catch (err) {
    showToast(err instanceof Error ? err.message : String(err));
    return;
  }
  sosSlider.min = String(grid.min_mps);
  sosSlider.max = String(grid.max_mps);
  sosSlider.step = String(grid.step_mps);
  sosSlider.value = String(snapToGrid((grid.min_mps + grid.max_mps) / 2, grid));
  sosLabel.textContent = `${currentSos().toFixed(0)} m/s`;

  if (datasets.length === 0) {
    showToast("no datasets found under the service's dataset root");
    return;
  }
  for (const ds of datasets) {
    const opt = document.createElement("option");
    opt.value = ds.id;
    opt.textContent = `${ds.id} (${ds.n_frames} frames)`;
    datasetSel.appendChild(opt);
  }
  fillFrames(datasets[0]);

  datasetSel.addEventListener("change", () => {
    const ds = datasets.find((d) => d.id === datasetSel.value);
    if (ds) {
      fillFrames(ds);
    }
    void refreshMeta();
    scheduleRecon();
  });
  frameSel.addEventListener("change", () => {
    void refreshMeta();
    scheduleRecon();
  });
  methodSel.addEventListener("change", scheduleRecon);
  sosSlider.addEventListener("input", scheduleRecon);

  await refreshMeta();
  await requestRecon();
}

void init();
