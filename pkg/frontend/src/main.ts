/** DOM glue: symptom picker, question loop, live turn list, report card.
 * One active session per tab; every turn waits for the server. */

import { Catalog, ConsultationApi } from "./api.js";
import { answerQuestion, FlowState, initialFlow, resumeSession, startSession } from "./state.js";
import { errorBanner, escapeHtml, questionCard, reportCard, turnList } from "./render.js";

const api = new ConsultationApi("");
let catalog: Catalog = { diseases: [], symptoms: [] };
let flow: FlowState = initialFlow();
let busy = false;

const $ = (id: string) => document.getElementById(id) as HTMLElement;

function renderPicker(): void {
  const rows = catalog.symptoms.map((name) => `
    <label class="pick-row">
      <span>${escapeHtml(name)}</span>
      <select data-symptom="${escapeHtml(name)}">
        <option value="">not mentioned</option>
        <option value="yes">have it</option>
        <option value="no">don't have it</option>
      </select>
    </label>`).join("");
  $("picker").innerHTML = `
    <h2>What brings you in?</h2>
    <div class="pick-list">${rows}</div>
    <button id="start">start consultation</button>`;
  $("start").addEventListener("click", onStart);
}

function pickedSymptoms(): Record<string, boolean> {
  const out: Record<string, boolean> = {};
  document.querySelectorAll<HTMLSelectElement>("select[data-symptom]").forEach((sel) => {
    if (sel.value === "yes") out[sel.dataset.symptom as string] = true;
    if (sel.value === "no") out[sel.dataset.symptom as string] = false;
  });
  return out;
}

function render(): void {
  const snapshot = flow.snapshot;
  $("picker").style.display = flow.phase === "picking" ? "block" : "none";
  $("turns").innerHTML = snapshot ? turnList(snapshot.trace_history, catalog.diseases) : "";
  if (flow.phase === "asking" && snapshot?.question) {
    $("interaction").innerHTML = questionCard(snapshot.question.symptom, snapshot.question.turn) +
      `<div class="answer-buttons">
         <button id="yes">Yes</button>
         <button id="no">No</button>
       </div>`;
    $("yes").addEventListener("click", () => onAnswer(true));
    $("no").addEventListener("click", () => onAnswer(false));
  } else if (flow.phase === "done" && snapshot?.report) {
    $("interaction").innerHTML = reportCard(snapshot.report) +
      `<button id="again">new consultation</button>`;
    $("again").addEventListener("click", () => {
      flow = initialFlow();
      render();
    });
  } else if (flow.phase === "error") {
    $("interaction").innerHTML = errorBanner(flow.error ?? "unknown error");
    $("retry").addEventListener("click", onRetry);
  } else {
    $("interaction").innerHTML = "";
  }
}

async function onStart(): Promise<void> {
  const symptoms = pickedSymptoms();
  if (Object.keys(symptoms).length === 0 || busy) return;
  busy = true;
  flow = await startSession(api, symptoms);
  busy = false;
  render();
}

async function onAnswer(answer: boolean): Promise<void> {
  if (busy) return;
  busy = true;
  flow = await answerQuestion(api, flow, answer);
  busy = false;
  render();
}

async function onRetry(): Promise<void> {
  if (busy) return;
  busy = true;
  flow = await resumeSession(api, flow);
  busy = false;
  render();
}

async function boot(): Promise<void> {
  try {
    catalog = await api.getCatalog();
    renderPicker();
    render();
  } catch (err) {
    $("interaction").innerHTML = errorBanner(`cannot reach the service: ${String(err)}`);
    $("retry").addEventListener("click", boot);
  }
}

boot();
