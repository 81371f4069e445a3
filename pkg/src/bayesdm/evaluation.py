"""Metrics over greedy episodes, plus the interpretable diagnosis report."""

from __future__ import annotations

from dataclasses import dataclass

from .data import PatientRecord
from .dialogue import GREEDY, DialogueConfig, Model, SymptomState, TurnTrace, step
from .bayesnet import DiseaseSymptomGraph
from .simulator import RewardConfig, reset, respond


@dataclass
class EvalSummary:
    accuracy: float
    recall: float
    mean_turns: float
    mean_mu: float            # averaged over inquiry turns
    mean_mu_dialogue: float   # per-dialogue means, then averaged
    per_disease_accuracy: list[float]
    episodes: int
    recall_episodes: int          # episodes with >= 1 implicit positive
    zero_implicit_episodes: int   # excluded from the recall average
    recall_including_explicit: float | None = None

    def lines(self) -> list[str]:
        out = [
            f"diagnosis accuracy: {self.accuracy:.4f}",
            f"symptom recall:     {self.recall:.4f}",
            f"mean turns:         {self.mean_turns:.2f}",
            f"mean mu (turns):    {self.mean_mu:.4f}",
            f"mean mu (dialogs):  {self.mean_mu_dialogue:.4f}",
            f"episodes:           {self.episodes} "
            f"(recall over {self.recall_episodes}, "
            f"{self.zero_implicit_episodes} with no implicit positives)",
        ]
        if self.recall_including_explicit is not None:
            out.append(f"recall incl. explicit: {self.recall_including_explicit:.4f}")
        return out


@dataclass
class DiagnosisReport:
    disease: int
    confidence: float
    supporting_symptoms: list[int]


@dataclass
class EpisodeResult:
    record: PatientRecord
    traces: list[TurnTrace]
    final_state: SymptomState
    correct: bool
    queried_positive: set[int]
    reward: float


def run_greedy_episode(model: Model, record: PatientRecord,
                       config: DialogueConfig,
                       rewards: RewardConfig | None = None) -> EpisodeResult:
    """Deterministic episode on the fast float path."""
    rewards = rewards or RewardConfig()
    env = reset(record, model.catalog)
    traces = []
    queried_positive: set[int] = set()
    total = 0.0
    while not env.done:
        res = step(env.state, model, config, mode=GREEDY)
        traces.append(res.trace)
        env, r, done = respond(env, res.action, rewards)
        total += r
        if res.action.kind == "query" and record.answer(res.action.index):
            queried_positive.add(res.action.index)
    correct = traces[-1].action.index == record.disease
    return EpisodeResult(record=record, traces=traces, final_state=env.state,
                         correct=correct, queried_positive=queried_positive,
                         reward=total)


def evaluate(model: Model, records: list[PatientRecord], config: DialogueConfig,
             include_explicit_variant: bool = False) -> EvalSummary:
    """One greedy episode per record, aggregated.

    Recall counts the implicit positives the agent revealed by querying;
    episodes with no implicit positives are excluded from the recall average
    and tallied separately. The variant that also counts explicit positives
    in both numerator and denominator is reported when the flag is set.
    """
    if not records:
        raise ValueError("no records to evaluate")
    m = model.catalog.m
    correct_by_disease = [0] * m
    count_by_disease = [0] * m
    recall_sum = 0.0
    recall_eps = 0
    zero_implicit = 0
    alt_recall_sum = 0.0
    alt_eps = 0
    turns = 0
    mus: list[float] = []
    dialog_mu_means: list[float] = []
    n_correct = 0
    for record in records:
        ep = run_greedy_episode(model, record, config)
        count_by_disease[record.disease] += 1
        if ep.correct:
            n_correct += 1
            correct_by_disease[record.disease] += 1
        implicit_pos = {j for j, v in record.implicit.items() if v}
        if implicit_pos:
            recall_sum += len(ep.queried_positive & implicit_pos) / len(implicit_pos)
            recall_eps += 1
        else:
            zero_implicit += 1
        if include_explicit_variant:
            all_pos = record.positives()
            if all_pos:
                explicit_pos = {j for j, v in record.explicit.items() if v}
                revealed = (ep.queried_positive & all_pos) | explicit_pos
                alt_recall_sum += len(revealed) / len(all_pos)
                alt_eps += 1
        turns += len(ep.traces)
        ep_mus = [t.mu for t in ep.traces if t.mu is not None]
        mus.extend(ep_mus)
        if ep_mus:
            dialog_mu_means.append(sum(ep_mus) / len(ep_mus))
    episodes = len(records)
    return EvalSummary(
        accuracy=n_correct / episodes,
        recall=recall_sum / recall_eps if recall_eps else 0.0,
        mean_turns=turns / episodes,
        mean_mu=sum(mus) / len(mus) if mus else 0.0,
        mean_mu_dialogue=(sum(dialog_mu_means) / len(dialog_mu_means)
                          if dialog_mu_means else 0.0),
        per_disease_accuracy=[
            correct_by_disease[i] / count_by_disease[i] if count_by_disease[i] else 0.0
            for i in range(m)],
        episodes=episodes,
        recall_episodes=recall_eps,
        zero_implicit_episodes=zero_implicit,
        recall_including_explicit=(alt_recall_sum / alt_eps
                                   if include_explicit_variant and alt_eps else None),
    )


def report(final_trace: TurnTrace, final_state: SymptomState,
           graph: DiseaseSymptomGraph) -> DiagnosisReport:
    """Diagnosis report: confidence is the final-turn posterior of the chosen
    disease; supporting symptoms are the positives on the table (explicit or
    revealed by querying) that connect to the diagnosed disease."""
    if final_trace.action.kind != "diagnose":
        raise ValueError("report needs the final diagnose turn")
    d = final_trace.action.index
    positives = [j for j, v in enumerate(final_state.values) if v == 1]
    supporting = [j for j in positives if d in graph.parents[j]]
    return DiagnosisReport(disease=d,
                           confidence=final_trace.posterior[d],
                           supporting_symptoms=supporting)
