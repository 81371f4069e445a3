import { describe, expect, it } from "vitest";

import { Report, TurnExplanation } from "../src/api.js";
import { escapeHtml, logicBadge, muGauge, posteriorBars, renderedPercentages,
         reportCard, turnCard, turnList } from "../src/render.js";

const DISEASES = ["flu", "cold", "angina", "measles"];

function turn(kind: "query" | "diagnose", posterior: number[], mu: number | null): TurnExplanation {
  return {
    turn: 2,
    suspected_diseases: posterior.map((p, d) => ({ disease: DISEASES[d], probability: p })),
    posterior,
    mu,
    dominant_logic: mu === null ? null : mu > 0.5 ? "ensure" : "distinguish",
    action: kind === "query"
      ? { kind, name: "fever" }
      : { kind, name: "flu" },
    stop_reason: kind === "diagnose" ? "confidence" : null,
  };
}

describe("posterior bars", () => {
  it("renders every disease and sums to 100% within rounding", () => {
    const posterior = [0.612, 0.251, 0.089, 0.048];
    const html = posteriorBars(DISEASES, posterior);
    for (const name of DISEASES) expect(html).toContain(name);
    const pcts = renderedPercentages(html);
    expect(pcts).toHaveLength(4);
    const sum = pcts.reduce((a, b) => a + b, 0);
    expect(Math.abs(sum - 100)).toBeLessThanOrEqual(0.2);  // one-decimal rounding
  });

  it("sorts bars by probability", () => {
    const html = posteriorBars(DISEASES, [0.1, 0.6, 0.05, 0.25]);
    const order = [...html.matchAll(/bar-label">([a-z]+)</g)].map((m) => m[1]);
    expect(order).toEqual(["cold", "measles", "flu", "angina"]);
  });
});

describe("logic badge", () => {
  it("renders the server label verbatim", () => {
    expect(logicBadge("ensure", 0.3)).toContain("Ensure");
    expect(logicBadge("distinguish", 0.9)).toContain("Distinguish");
  });

  it("falls back to the mu rule only when the server label is missing", () => {
    expect(logicBadge(null, 0.7)).toContain("Ensure");
    expect(logicBadge(null, 0.5)).toContain("Distinguish");
    expect(logicBadge(null, 0.3)).toContain("Distinguish");
  });
});

describe("mu gauge", () => {
  it("marks the blend position and prints the value", () => {
    const html = muGauge(0.44);
    expect(html).toContain('data-mu="0.44"');
    expect(html).toContain("left:44.0%");
    expect(html).toContain("0.44");
  });
});

describe("turn cards", () => {
  it("query turns carry gauge and badge, diagnose turns do not", () => {
    const q = turnCard(turn("query", [0.4, 0.3, 0.2, 0.1], 0.7), DISEASES);
    expect(q).toContain("mu-gauge");
    expect(q).toContain("badge-ensure");
    expect(q).toContain("asked about <b>fever</b>");
    const d = turnCard(turn("diagnose", [0.9, 0.05, 0.03, 0.02], null), DISEASES);
    expect(d).not.toContain("mu-gauge");
    expect(d).toContain("diagnosed <b>flu</b>");
    expect(d).toContain("stop: confidence");
  });

  it("turn list renders one card per explanation record", () => {
    const turns = [turn("query", [0.4, 0.3, 0.2, 0.1], 0.2),
                   turn("diagnose", [0.9, 0.05, 0.03, 0.02], null)];
    const html = turnList(turns, DISEASES);
    expect(html.match(/turn-card/g)).toHaveLength(2);
  });
});

describe("report card", () => {
  it("exposes the exact confidence and the rounded percentage", () => {
    const report: Report = {
      disease: "flu", confidence: 0.9784286461987474,
      supporting_symptoms: ["fever", "cough"], stop_reason: "confidence",
    };
    const html = reportCard(report);
    expect(html).toContain('data-confidence="0.9784286461987474"');
    expect(html).toContain("97.8%");
    expect(html).toContain("<li>fever</li>");
    expect(html).toContain("<li>cough</li>");
  });

  it("handles an empty supporting set", () => {
    const html = reportCard({ disease: "flu", confidence: 0.5,
                              supporting_symptoms: [], stop_reason: null });
    expect(html).toContain("none connected");
  });
});

describe("escaping", () => {
  it("escapes markup in names", () => {
    expect(escapeHtml("<img src=x>")).toBe("&lt;img src=x&gt;");
    const html = posteriorBars(["<b>bad</b>", "ok"], [0.5, 0.5]);
    expect(html).not.toContain("<b>bad</b>");
  });
});
