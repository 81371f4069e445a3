"""Disease inference over a bipartite disease-symptom network.

The graph comes from thresholded co-occurrence counts. Parameters live as
logits (priors per disease, one conditional table per symptom indexed by a
parent-configuration bitmask) so gradient updates can never push a
probability out of (0, 1). Inference scores the M mutually exclusive
one-positive-disease hypotheses in log space and normalizes; unobserved
symptoms marginalize to 1 and drop out. ``brute_force_posterior`` is the
independent oracle: it enumerates every assignment of the unobserved
symptoms with no marginalization shortcut.
"""

from __future__ import annotations

import math
from dataclasses import dataclass

import numpy as np

from .autodiff import LeafBank, Tape, log_sigmoid, logsumexp
from .data import CooccurrenceCounts

PROB_CLAMP = 1e-4


class InitializationError(ValueError):
    """Counts are inconsistent with the graph they were meant to build."""


class InferenceError(ValueError):
    """Inference could not produce a valid posterior."""


@dataclass(frozen=True)
class DiseaseSymptomGraph:
    """Per-symptom ordered parent sets plus the edge threshold that built them."""

    parents: tuple[tuple[int, ...], ...]
    edge_threshold: int

    @property
    def n_symptoms(self) -> int:
        return len(self.parents)

    def orphan_symptoms(self) -> list[int]:
        """Symptoms with no parent disease; they carry no diagnostic signal."""
        return [j for j, p in enumerate(self.parents) if not p]


def build_graph(counts: CooccurrenceCounts, edge_threshold: int = 0) -> DiseaseSymptomGraph:
    """Edge i -> j present iff the co-occurrence count strictly exceeds the threshold."""
    if edge_threshold < 0:
        raise ValueError("edge_threshold must be >= 0")
    m, n = counts.n_ds.shape
    parents = tuple(
        tuple(i for i in range(m) if counts.n_ds[i, j] > edge_threshold)
        for j in range(n)
    )
    return DiseaseSymptomGraph(parents=parents, edge_threshold=edge_threshold)


@dataclass
class BayesParams:
    """Prior logits per disease and one CPT logit table per symptom.

    ``cpt_logits[j][mask]`` parameterizes P(symptom j positive | parent
    configuration ``mask``), where bit k of the mask marks graph.parents[j][k]
    as present.
    """

    prior_logits: list[float]
    cpt_logits: list[list[float]]

    def copy(self) -> "BayesParams":
        return BayesParams(list(self.prior_logits), [list(t) for t in self.cpt_logits])

    def keys(self):
        for i in range(len(self.prior_logits)):
            yield ("prior", i)
        for j, table in enumerate(self.cpt_logits):
            for mask in range(len(table)):
                yield ("cpt", j, mask)

    def get(self, key: tuple) -> float:
        if key[0] == "prior":
            return self.prior_logits[key[1]]
        return self.cpt_logits[key[1]][key[2]]

    def add(self, key: tuple, delta: float) -> None:
        if key[0] == "prior":
            self.prior_logits[key[1]] += delta
        else:
            self.cpt_logits[key[1]][key[2]] += delta


@dataclass(frozen=True)
class Evidence:
    """Observed positive and negative symptom index sets; the rest is unobserved."""

    positive: frozenset[int]
    negative: frozenset[int]

    def __post_init__(self):
        overlap = self.positive & self.negative
        if overlap:
            raise ValueError(f"symptoms {sorted(overlap)} observed both positive and negative")


def clamp_prob(p: float) -> float:
    return min(max(p, PROB_CLAMP), 1.0 - PROB_CLAMP)


def prob_to_logit(p: float) -> float:
    p = clamp_prob(p)
    return math.log(p / (1.0 - p))


def sigmoid(x: float) -> float:
    if x >= 0.0:
        return 1.0 / (1.0 + math.exp(-x))
    e = math.exp(x)
    return e / (1.0 + e)


def log_sigmoid_value(x: float) -> float:
    if x >= 0.0:
        return -math.log1p(math.exp(-x))
    return x - math.log1p(math.exp(x))


def init_params(counts: CooccurrenceCounts, graph: DiseaseSymptomGraph) -> BayesParams:
    """Count-based initialization.

    Priors start at each disease's prevalence. A CPT entry whose parent
    configuration has exactly one present disease d starts at the ratio
    n(d, j) / n(d); every other configuration (including all-absent) starts
    at 0.5. Everything is clamped before the logit transform.
    """
    m, n = counts.n_ds.shape
    if graph.n_symptoms != n:
        raise InitializationError("graph and counts disagree on symptom count")
    total = counts.total
    prior_logits = [prob_to_logit(counts.n_d[i] / total) for i in range(m)]
    cpt_logits: list[list[float]] = []
    for j in range(n):
        parents = graph.parents[j]
        table = []
        for mask in range(1 << len(parents)):
            if mask and mask & (mask - 1) == 0:  # exactly one parent present
                d = parents[mask.bit_length() - 1]
                if counts.n_d[d] == 0:
                    raise InitializationError(
                        f"disease {d} has an edge to symptom {j} but zero patients")
                p = counts.n_ds[d, j] / counts.n_d[d]
            else:
                p = 0.5
            table.append(prob_to_logit(p))
        cpt_logits.append(table)
    return BayesParams(prior_logits=prior_logits, cpt_logits=cpt_logits)


def one_hot_mask(parents: tuple[int, ...], disease: int) -> int:
    """Bitmask for the configuration where only ``disease`` is present."""
    try:
        return 1 << parents.index(disease)
    except ValueError:
        return 0  # not a parent: the all-absent configuration applies


@dataclass
class InferenceResult:
    """Posterior built on a tape: node ids plus the parameter leaf bank."""

    probs: list[int]
    log_probs: list[int]
    bank: LeafBank
    tape: Tape

    def posterior(self) -> list[float]:
        return [self.tape.values[i] for i in self.probs]


def infer(params: BayesParams, graph: DiseaseSymptomGraph, evidence: Evidence,
          tape: Tape, bank: LeafBank | None = None) -> InferenceResult:
    """Posterior over the mutually exclusive disease hypotheses, on the tape.

    score(d) = sigmoid(prior_d) * prod_{j in S+} p_j(d) * prod_{j in S-} (1 - p_j(d))
    with p_j(d) the CPT entry for the one-hot configuration of d (all-absent
    when d is not a parent). Computed in log space, normalized with
    max-subtraction, so gradients flow to every logit that was touched.
    """
    m = len(params.prior_logits)
    n = graph.n_symptoms
    for j in evidence.positive | evidence.negative:
        if not 0 <= j < n:
            raise InferenceError(f"evidence symptom {j} outside [0, {n})")
    if bank is None:
        bank = LeafBank(tape)
    pos = sorted(evidence.positive)
    neg = sorted(evidence.negative)
    log_scores = []
    for d in range(m):
        t = log_sigmoid(tape, bank.leaf(("bn", "prior", d), params.prior_logits[d]))
        for j in pos:
            mask = one_hot_mask(graph.parents[j], d)
            leaf = bank.leaf(("bn", "cpt", j, mask), params.cpt_logits[j][mask])
            t = tape.add(t, log_sigmoid(tape, leaf))
        for j in neg:
            mask = one_hot_mask(graph.parents[j], d)
            leaf = bank.leaf(("bn", "cpt", j, mask), params.cpt_logits[j][mask])
            # P(symptom absent) = 1 - sigmoid(l) = sigmoid(-l)
            t = tape.add(t, log_sigmoid(tape, tape.neg(leaf)))
        log_scores.append(t)
    lse = logsumexp(tape, log_scores)
    log_probs = [tape.sub(t, lse) for t in log_scores]
    probs = [tape.exp(lp) for lp in log_probs]
    return InferenceResult(probs=probs, log_probs=log_probs, bank=bank, tape=tape)


def posterior_values(params: BayesParams, graph: DiseaseSymptomGraph,
                     evidence: Evidence) -> list[float]:
    """Tape-free float path for the same posterior; used by greedy evaluation."""
    m = len(params.prior_logits)
    pos = sorted(evidence.positive)
    neg = sorted(evidence.negative)
    log_scores = []
    for d in range(m):
        t = log_sigmoid_value(params.prior_logits[d])
        for j in pos:
            t += log_sigmoid_value(params.cpt_logits[j][one_hot_mask(graph.parents[j], d)])
        for j in neg:
            t += log_sigmoid_value(-params.cpt_logits[j][one_hot_mask(graph.parents[j], d)])
        log_scores.append(t)
    mx = max(log_scores)
    weights = [math.exp(t - mx) for t in log_scores]
    z = sum(weights)
    return [w / z for w in weights]


def brute_force_posterior(params: BayesParams, graph: DiseaseSymptomGraph,
                          evidence: Evidence) -> list[float]:
    """Oracle posterior by explicit enumeration, no marginalization shortcut.

    For every disease hypothesis the joint probability is summed over all
    2^K assignments of the K unobserved symptoms; each assignment multiplies
    a full chain of per-symptom factors. Refuses combinatorially hostile
    inputs rather than approximating.
    """
    m = len(params.prior_logits)
    n = graph.n_symptoms
    if m > 20:
        raise InferenceError("brute force refused for M > 20")
    observed = evidence.positive | evidence.negative
    unobserved = [j for j in range(n) if j not in observed]
    k = len(unobserved)
    if k > 22:
        raise InferenceError("brute force refused for more than 22 unobserved symptoms")
    assignments = ((np.arange(1 << k)[:, None] >> np.arange(k)[None, :]) & 1) if k else None
    scores = []
    for d in range(m):
        p = np.array([sigmoid(params.cpt_logits[j][one_hot_mask(graph.parents[j], d)])
                      for j in range(n)])
        s = sigmoid(params.prior_logits[d])
        for j in sorted(evidence.positive):
            s *= p[j]
        for j in sorted(evidence.negative):
            s *= 1.0 - p[j]
        if k:
            pu = p[unobserved]
            per_assignment = np.where(assignments == 1, pu[None, :], 1.0 - pu[None, :])
            s *= float(per_assignment.prod(axis=1).sum())
        scores.append(s)
    z = sum(scores)
    if z <= 0.0 or not math.isfinite(z):
        raise InferenceError("scores underflowed; posterior undefined")
    return [float(s / z) for s in scores]


def posterior_gradients(tape: Tape, result: InferenceResult, loss: int) -> dict[tuple, float]:
    """d(loss)/d(logit) for every parameter leaf placed during inference."""
    grads = tape.backward(loss)
    return {key: grads[i] for key, i in result.bank.items() if key[0] == "bn"}
