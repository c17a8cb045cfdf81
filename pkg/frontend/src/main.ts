import { Client, repoIdFromUrl } from "./api.js";
import { filterBySkills, availableSkills } from "./filter.js";
import { DEFAULT_FORM, FormState, validateForm } from "./form.js";
import { pollJob } from "./poll.js";
import { ApiError, Algorithm, IssuePrediction } from "./types.js";
import { progressText, renderCards, renderEmptyState, toCardViewModel } from "./view.js";

const client = new Client("");

interface UiState {
  form: FormState;
  activeJobId: string | null;
  results: IssuePrediction[];
  selectedSkills: Set<string>;
}

const state: UiState = {
  form: { ...DEFAULT_FORM },
  activeJobId: null,
  results: [],
  selectedSkills: new Set(),
};

function el<T extends HTMLElement>(id: string): T {
  const node = document.getElementById(id);
  if (!node) throw new Error(`missing element #${id}`);
  return node as T;
}

function readForm(): FormState {
  return {
    repoUrl: el<HTMLInputElement>("repo-url").value,
    maxIssues: Number(el<HTMLInputElement>("max-issues").value),
    maxSkills: Number(el<HTMLInputElement>("max-skills").value),
    algorithm: el<HTMLSelectElement>("algorithm").value as Algorithm,
  };
}

function refreshSubmitState(): void {
  state.form = readForm();
  const result = validateForm(state.form);
  el<HTMLButtonElement>("submit-btn").disabled = !result.ok;
  el("form-problems").textContent = result.problems.join("; ");
}

function setStatus(text: string): void {
  el("status").textContent = text;
}

function redraw(): void {
  const visible = filterBySkills(state.results, state.selectedSkills);
  const cards = visible.map((issue) => toCardViewModel(issue, state.form.maxSkills));
  const container = el("cards");
  if (cards.length === 0) {
    renderEmptyState(container, "No issues match the selected skills.");
  } else {
    renderCards(container, cards);
  }
  el("count").textContent = `${visible.length} of ${state.results.length} issues`;
  drawFilters();
}

function drawFilters(): void {
  const container = el("filters");
  container.replaceChildren();
  for (const skill of availableSkills(state.results)) {
    const label = document.createElement("label");
    const box = document.createElement("input");
    box.type = "checkbox";
    box.value = skill.label;
    box.checked = state.selectedSkills.has(skill.label);
    box.addEventListener("change", () => {
      if (box.checked) state.selectedSkills.add(skill.label);
      else state.selectedSkills.delete(skill.label);
      redraw();
    });
    label.appendChild(box);
    label.appendChild(document.createTextNode(` ${skill.path}`));
    container.appendChild(label);
  }
  const clear = document.createElement("button");
  clear.type = "button";
  clear.textContent = "clear filters";
  clear.addEventListener("click", () => {
    state.selectedSkills.clear();
    redraw();
  });
  container.appendChild(clear);
}

async function fetchResults(): Promise<void> {
  const repoId = repoIdFromUrl(state.form.repoUrl);
  if (!repoId) return;
  const results = await client.getIssues(repoId, {
    limit: state.form.maxIssues,
    skills: state.form.maxSkills,
    algorithm: state.form.algorithm,
  });
  state.results = results;
  state.selectedSkills.clear();
  setStatus(`showing ${results.length} open issues`);
  redraw();
}

async function onSubmit(event: Event): Promise<void> {
  event.preventDefault();
  refreshSubmitState();
  const validation = validateForm(state.form);
  if (!validation.ok) return;
  setStatus("submitting…");
  try {
    const created = await client.submitRepo(state.form.repoUrl);
    state.activeJobId = created.job_id;
    const final = await pollJob(client, created.job_id, {
      isCurrent: (id) => state.activeJobId === id,
      onProgress: (job) => setStatus(progressText(job)),
    });
    if (final === null) return; // superseded by a newer submission
    if (final.status === "failed") {
      setStatus(`job failed: ${final.error?.message ?? "unknown error"}`);
      return;
    }
    await fetchResults();
  } catch (error) {
    if (error instanceof ApiError && error.status === 503) {
      setStatus(`${error.message} — try the rf algorithm instead`);
    } else if (error instanceof ApiError) {
      setStatus(`error: ${error.message} (retry when ready)`);
    } else {
      setStatus(`error: ${String(error)}`);
    }
  }
}

export function boot(): void {
  el<HTMLFormElement>("repo-form").addEventListener("submit", onSubmit);
  for (const id of ["repo-url", "max-issues", "max-skills", "algorithm"]) {
    el(id).addEventListener("input", refreshSubmitState);
  }
  refreshSubmitState();
}

if (typeof document !== "undefined" && document.getElementById("repo-form")) {
  boot();
}
