/** Pure HTML-string renderers; the DOM glue in main.ts only assigns innerHTML.
 *
 * Everything shown derives from service responses. The report card carries the
 * exact confidence in a data attribute so tests (and the explain view) can
 * compare against the service value without parsing display rounding.
 */

import { Report, TurnExplanation } from "./api.js";

export function escapeHtml(text: string): string {
  return text.replace(/[&<>"']/g, (c) => (
    { "&": "&amp;", "<": "&lt;", ">": "&gt;", '"': "&quot;", "'": "&#39;" }[c] as string
  ));
}

/** One probability row: label, proportional bar, percentage. */
export function probabilityBar(label: string, probability: number): string {
  const pct = probability * 100;
  const width = Math.max(0.5, pct);
  return `
    <div class="bar-row" data-prob="${probability}">
      <span class="bar-label">${escapeHtml(label)}</span>
      <div class="bar-track"><div class="bar-fill" style="width:${width.toFixed(1)}%"></div></div>
      <span class="bar-value">${pct.toFixed(1)}%</span>
    </div>`;
}

/** Full posterior as sorted bars; percentages sum to 100 within rounding. */
export function posteriorBars(diseases: string[], posterior: number[]): string {
  const rows = posterior
    .map((p, d) => ({ disease: diseases[d] ?? `disease ${d}`, probability: p }))
    .sort((a, b) => b.probability - a.probability)
    .map((s) => probabilityBar(s.disease, s.probability))
    .join("");
  return `<div class="posterior" data-kind="posterior">${rows}</div>`;
}

/** Blend-weight gauge: 1 is pure ensure logic, 0 pure distinguish logic. */
export function muGauge(mu: number): string {
  const pct = (mu * 100).toFixed(1);
  return `
    <div class="mu-gauge" data-mu="${mu}">
      <span class="mu-caption">logic blend</span>
      <div class="mu-track"><div class="mu-marker" style="left:${pct}%"></div></div>
      <span class="mu-value">${mu.toFixed(2)}</span>
    </div>`;
}

/** Renders the server's dominant-logic label; falls back to the mu > 0.5 rule
 * only when the field is absent (the server owns the tie rule). */
export function logicBadge(dominant: string | null, mu: number | null): string {
  const logic = dominant ?? (mu !== null && mu > 0.5 ? "ensure" : "distinguish");
  const css = logic === "ensure" ? "badge-ensure" : "badge-distinguish";
  return `<span class="badge ${css}" data-logic="${logic}">${logic === "ensure" ? "Ensure" : "Distinguish"}</span>`;
}

export function turnCard(turn: TurnExplanation, diseases: string[]): string {
  const heading = turn.action.kind === "query"
    ? `asked about <b>${escapeHtml(turn.action.name)}</b>`
    : `diagnosed <b>${escapeHtml(turn.action.name)}</b>`;
  const inquiry = turn.action.kind === "query" && turn.mu !== null
    ? muGauge(turn.mu) + logicBadge(turn.dominant_logic, turn.mu)
    : "";
  const stop = turn.stop_reason
    ? `<span class="stop-reason">stop: ${escapeHtml(turn.stop_reason)}</span>` : "";
  return `
    <section class="turn-card" data-turn="${turn.turn}">
      <header>Turn ${turn.turn}: ${heading} ${stop}</header>
      ${posteriorBars(diseases, turn.posterior)}
      ${inquiry}
    </section>`;
}

export function turnList(turns: TurnExplanation[], diseases: string[]): string {
  return turns.map((t) => turnCard(t, diseases)).join("\n");
}

export function reportCard(report: Report): string {
  const confidencePct = (report.confidence * 100).toFixed(1);
  const supporting = report.supporting_symptoms.length
    ? report.supporting_symptoms.map((s) => `<li>${escapeHtml(s)}</li>`).join("")
    : "<li class=\"muted\">none connected</li>";
  return `
    <section class="report-card" data-confidence="${report.confidence}">
      <header>Diagnosis report</header>
      <p class="diagnosis">${escapeHtml(report.disease)}</p>
      <p class="confidence">confidence <b>${confidencePct}%</b></p>
      <p>supporting symptoms:</p>
      <ul class="supporting">${supporting}</ul>
    </section>`;
}

export function questionCard(symptom: string, turn: number): string {
  return `
    <section class="question-card" data-turn="${turn}">
      <p>Do you have <b>${escapeHtml(symptom)}</b>?</p>
    </section>`;
}

export function errorBanner(message: string): string {
  return `<div class="error-banner">${escapeHtml(message)} <button id="retry">retry</button></div>`;
}

/** Test helper mirrored by the acceptance check: percentages as displayed. */
export function renderedPercentages(html: string): number[] {
  const out: number[] = [];
  const pattern = /class="bar-value">([0-9.]+)%/g;
  let match: RegExpExecArray | null;
  while ((match = pattern.exec(html)) !== null) {
    out.push(parseFloat(match[1]));
  }
  return out;
}
