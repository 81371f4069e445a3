"""The dialogue manager: per-turn state, the two-stage decide, explanations.

Each turn first infers the disease posterior from the observed symptoms.
If the top disease clears the confidence threshold, the turn budget is
spent, or nothing is left to ask, the manager diagnoses; otherwise it picks
the next symptom from the blended inquiry distribution. Stochastic mode
samples (and builds a tape for training); greedy mode is deterministic and
runs on the fast float path unless a tape is requested.
"""

from __future__ import annotations

import math
import random
from dataclasses import dataclass

import numpy as np

from .autodiff import LeafBank, Tape
from .bayesnet import BayesParams, DiseaseSymptomGraph, Evidence, infer, posterior_values
from .data import Catalog
from .inquiry import SwitcherMLP, score_values, switch, symptom_scores

POSITIVE = 1
NEGATIVE = -1
UNKNOWN = 0

GREEDY = "greedy"
STOCHASTIC = "stochastic"


@dataclass
class SymptomState:
    """Turn-level evidence vector: +1 positive, -1 negative, 0 unknown."""

    values: list[int]
    turn: int = 1

    def known(self) -> set[int]:
        return {j for j, v in enumerate(self.values) if v != UNKNOWN}

    def unknown(self) -> list[int]:
        return [j for j, v in enumerate(self.values) if v == UNKNOWN]

    def evidence(self) -> Evidence:
        return Evidence(
            positive=frozenset(j for j, v in enumerate(self.values) if v == POSITIVE),
            negative=frozenset(j for j, v in enumerate(self.values) if v == NEGATIVE),
        )

    def as_floats(self) -> list[float]:
        return [float(v) for v in self.values]


@dataclass(frozen=True)
class Action:
    kind: str  # "query" | "diagnose"
    index: int

    @classmethod
    def query(cls, symptom: int) -> "Action":
        return cls("query", symptom)

    @classmethod
    def diagnose(cls, disease: int) -> "Action":
        return cls("diagnose", disease)


@dataclass(frozen=True)
class DialogueConfig:
    epsilon_d: float = 0.85
    t_max: int = 10

    def __post_init__(self):
        if not 0.0 < self.epsilon_d <= 1.0:
            raise ValueError("epsilon_d must lie in (0, 1]")
        if self.t_max < 1:
            raise ValueError("t_max must be >= 1")


@dataclass
class TurnTrace:
    """Everything needed to explain one decision."""

    turn: int
    posterior: list[float]
    action: Action
    log_prob: float
    stop_reason: str | None = None  # diagnose turns: confidence | max_turns | exhausted
    mu: float | None = None
    dominant_logic: str | None = None  # ensure | distinguish, ensure on ties
    scores: list[float] | None = None
    ensure_share: float | None = None
    distinguish_share: float | None = None


@dataclass
class Model:
    """Immutable-at-inference bundle consumed by step()."""

    catalog: Catalog
    graph: DiseaseSymptomGraph
    params: BayesParams
    m_cond: np.ndarray
    m_mutual: np.ndarray
    switcher: SwitcherMLP

    def copy(self) -> "Model":
        return Model(self.catalog, self.graph, self.params.copy(),
                     self.m_cond, self.m_mutual, self.switcher.copy())


@dataclass
class StepResult:
    action: Action
    trace: TurnTrace
    log_prob: float
    entropy: float
    tape: Tape | None = None
    log_prob_id: int | None = None
    entropy_id: int | None = None
    bank: LeafBank | None = None


def step(state: SymptomState, model: Model, config: DialogueConfig,
         mode: str = GREEDY, rng: random.Random | None = None,
         build_tape: bool | None = None) -> StepResult:
    """Run the two-stage decide for one turn.

    Positive/negative entries become evidence, the posterior is inferred,
    and the manager either diagnoses (threshold reached, turn budget spent,
    or no symptom left) or queries the best unknown symptom. The executed
    action's log-probability comes from the distribution it was drawn from:
    the posterior on diagnose turns, the masked query scores otherwise.
    """
    if mode not in (GREEDY, STOCHASTIC):
        raise ValueError(f"unknown mode {mode!r}")
    if mode == STOCHASTIC and rng is None:
        raise ValueError("stochastic mode needs an rng")
    if build_tape is None:
        build_tape = mode == STOCHASTIC
    if build_tape:
        return _step_tape(state, model, config, mode, rng)
    return _step_plain(state, model, config, mode, rng)


def _stop_reason(state: SymptomState, config: DialogueConfig, top: float) -> str | None:
    if top >= config.epsilon_d:
        return "confidence"
    if state.turn >= config.t_max:
        return "max_turns"
    if not state.unknown():
        return "exhausted"  # nothing left to ask, forced diagnosis
    return None


def _choose(weights: list[float], mode: str, rng: random.Random | None) -> int:
    if mode == GREEDY:
        best = 0
        for i in range(1, len(weights)):
            if weights[i] > weights[best]:
                best = i
        return best
    total = sum(weights)
    u = rng.random() * total
    acc = 0.0
    last_positive = 0
    for i, w in enumerate(weights):
        if w > 0.0:
            last_positive = i
            acc += w
            if u <= acc:
                return i
    return last_positive


def _step_plain(state, model, config, mode, rng):
    posterior = posterior_values(model.params, model.graph, state.evidence())
    reason = _stop_reason(state, config, max(posterior))
    if reason is not None:
        choice = _choose(posterior, mode, rng)
        lp = math.log(posterior[choice])
        ent = -sum(p * math.log(p) for p in posterior if p > 0.0)
        trace = TurnTrace(turn=state.turn, posterior=posterior,
                          action=Action.diagnose(choice), log_prob=lp, stop_reason=reason)
        return StepResult(trace.action, trace, lp, ent)
    mu = model.switcher.forward_value(state.as_floats() + posterior)
    scores = score_values(posterior, model.m_cond, model.m_mutual, mu, state.known())
    choice = _choose(scores, mode, rng)
    lp = math.log(scores[choice])
    ent = -sum(p * math.log(p) for p in scores if p > 0.0)
    trace = _query_trace(state, posterior, mu, scores, choice, lp, model)
    return StepResult(trace.action, trace, lp, ent)


def _step_tape(state, model, config, mode, rng):
    tape = Tape()
    bank = LeafBank(tape)
    res = infer(model.params, model.graph, state.evidence(), tape, bank)
    posterior = res.posterior()
    reason = _stop_reason(state, config, max(posterior))
    if reason is not None:
        choice = _choose(posterior, mode, rng)
        lp_id = res.log_probs[choice]
        ent_id = _entropy_node(tape, list(zip(res.probs, res.log_probs)))
        trace = TurnTrace(turn=state.turn, posterior=posterior,
                          action=Action.diagnose(choice),
                          log_prob=tape.values[lp_id], stop_reason=reason)
        return StepResult(trace.action, trace, tape.values[lp_id], tape.values[ent_id],
                          tape=tape, log_prob_id=lp_id, entropy_id=ent_id, bank=bank)
    mu_id = switch(model.switcher, state.as_floats(), res.probs, tape, bank)
    mu = tape.values[mu_id]
    score_res = symptom_scores(res.probs, model.m_cond, model.m_mutual,
                               mu_id, state.known(), tape)
    scores = score_res.values()
    choice = _choose(scores, mode, rng)
    chosen_id = score_res.prob_ids[choice]
    lp_id = tape.log(chosen_id)
    pairs = [(pid, tape.log(pid)) for pid in score_res.prob_ids
             if pid is not None and tape.values[pid] > 0.0]
    ent_id = _entropy_node(tape, pairs)
    trace = _query_trace(state, posterior, mu, scores, choice, tape.values[lp_id], model)
    return StepResult(trace.action, trace, tape.values[lp_id], tape.values[ent_id],
                      tape=tape, log_prob_id=lp_id, entropy_id=ent_id, bank=bank)


def _entropy_node(tape: Tape, pairs: list[tuple[int, int]]) -> int:
    """H = -sum p * log p over (prob, log-prob) node pairs; zero-probability
    entries contribute nothing and are skipped upstream."""
    s = None
    for p, lp in pairs:
        t = tape.mul(p, lp)
        s = t if s is None else tape.add(s, t)
    return tape.neg(s)


def _query_trace(state, posterior, mu, scores, choice, lp, model) -> TurnTrace:
    p = np.asarray(posterior)
    ensure = float(mu * (p @ model.m_cond[:, choice]))
    distinguish = float((1.0 - mu) * (p @ model.m_mutual[:, choice]))
    return TurnTrace(
        turn=state.turn,
        posterior=list(posterior),
        action=Action.query(choice),
        log_prob=lp,
        mu=mu,
        dominant_logic="ensure" if mu >= 0.5 else "distinguish",
        scores=list(scores),
        ensure_share=ensure,
        distinguish_share=distinguish,
    )


def apply_answer(state: SymptomState, symptom: int, positive: bool) -> SymptomState:
    """New state with the answered symptom written and the turn advanced."""
    if state.values[symptom] != UNKNOWN:
        raise ValueError(f"symptom {symptom} is already known")
    values = list(state.values)
    values[symptom] = POSITIVE if positive else NEGATIVE
    return SymptomState(values=values, turn=state.turn + 1)


def explain(trace: TurnTrace, catalog: Catalog, graph: DiseaseSymptomGraph,
            top_k: int = 3) -> dict:
    """Human-readable record of one decision."""
    order = sorted(range(len(trace.posterior)), key=lambda d: -trace.posterior[d])
    suspects = [{"disease": catalog.diseases[d], "probability": trace.posterior[d]}
                for d in order[:top_k]]
    out = {
        "turn": trace.turn,
        "suspected_diseases": suspects,
        "posterior": list(trace.posterior),
        "mu": trace.mu,
        "dominant_logic": trace.dominant_logic,
        "action": {"kind": trace.action.kind,
                   "name": (catalog.symptoms[trace.action.index]
                            if trace.action.kind == "query"
                            else catalog.diseases[trace.action.index])},
        "stop_reason": trace.stop_reason,
    }
    if trace.action.kind == "query":
        out["score_breakdown"] = {
            "ensure_share": trace.ensure_share,
            "distinguish_share": trace.distinguish_share,
        }
        out["related_diseases"] = [catalog.diseases[d]
                                   for d in graph.parents[trace.action.index]]
    return out
