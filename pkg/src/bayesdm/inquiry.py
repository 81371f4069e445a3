"""Symptom selection: two inquiry logics blended by a learned switch.

The conditional-probability matrix favors symptoms that frequently co-occur
with the suspected disease (confirm a suspicion); the mutual-information
matrix favors symptoms that separate similar diseases. Both are closed-form
dataset statistics, row-normalized, and stay fixed during training. A small
MLP looks at the current state and posterior and emits the blend weight.
"""

from __future__ import annotations

import math
import random

import numpy as np

from .autodiff import LeafBank, Tape
from .data import CooccurrenceCounts


class ExhaustionError(RuntimeError):
    """Every symptom is already known; there is nothing left to query."""


def row_normalize(mat: np.ndarray) -> np.ndarray:
    """Rows rescaled to sum 1; rows that are all zero become uniform."""
    mat = np.asarray(mat, dtype=float)
    out = np.empty_like(mat)
    for i, row in enumerate(mat):
        s = row.sum()
        out[i] = row / s if s > 0 else np.full(len(row), 1.0 / len(row))
    return out


def conditional_matrix(counts: CooccurrenceCounts) -> np.ndarray:
    """Row-normalized co-occurrence ratios, the confirm-a-suspicion logic."""
    return row_normalize(counts.n_ds.astype(float))


def mutual_information_raw(counts: CooccurrenceCounts) -> np.ndarray:
    """Mutual information of each (disease, symptom) pair, natural log.

    Computed from the 2x2 contingency tables; 0 * log(0 / x) terms are 0.
    Tiny negative rounding residue is clipped so entries stay nonnegative.
    """
    m, n = counts.n_ds.shape
    total = float(counts.total)
    out = np.zeros((m, n))
    for i in range(m):
        for j in range(n):
            table = counts.joint[i, j] / total
            pd = table.sum(axis=1)
            ps = table.sum(axis=0)
            acc = 0.0
            for k1 in (0, 1):
                for k2 in (0, 1):
                    p = table[k1, k2]
                    if p > 0.0:
                        acc += p * math.log(p / (pd[k1] * ps[k2]))
            out[i, j] = max(acc, 0.0)
    return out


def mutual_information_matrix(counts: CooccurrenceCounts) -> np.ndarray:
    return row_normalize(mutual_information_raw(counts))


class SwitcherMLP:
    """One-hidden-layer net producing the blend weight.

    Input is the state vector concatenated with the disease posterior; the
    sigmoid of the scalar output is the weight on the conditional matrix.
    """

    def __init__(self, input_dim: int, hidden: int = 32, seed: int = 0, scale: float | None = None):
        self.input_dim = input_dim
        self.hidden = hidden
        rng = random.Random(seed)
        lim1 = scale if scale is not None else 1.0 / math.sqrt(input_dim)
        lim2 = scale if scale is not None else 1.0 / math.sqrt(hidden)
        self.w1 = [[rng.uniform(-lim1, lim1) for _ in range(input_dim)] for _ in range(hidden)]
        self.b1 = [0.0] * hidden
        self.w2 = [rng.uniform(-lim2, lim2) for _ in range(hidden)]
        self.b2 = 0.0

    @classmethod
    def zeros(cls, input_dim: int, hidden: int = 32) -> "SwitcherMLP":
        mlp = cls(input_dim, hidden, seed=0, scale=0.0)
        return mlp

    def copy(self) -> "SwitcherMLP":
        out = SwitcherMLP.zeros(self.input_dim, self.hidden)
        out.w1 = [list(row) for row in self.w1]
        out.b1 = list(self.b1)
        out.w2 = list(self.w2)
        out.b2 = self.b2
        return out

    def keys(self):
        for h in range(self.hidden):
            for j in range(self.input_dim):
                yield ("w1", h, j)
            yield ("b1", h)
        for h in range(self.hidden):
            yield ("w2", h)
        yield ("b2",)

    def get(self, key: tuple) -> float:
        if key[0] == "w1":
            return self.w1[key[1]][key[2]]
        if key[0] == "b1":
            return self.b1[key[1]]
        if key[0] == "w2":
            return self.w2[key[1]]
        return self.b2

    def add(self, key: tuple, delta: float) -> None:
        if key[0] == "w1":
            self.w1[key[1]][key[2]] += delta
        elif key[0] == "b1":
            self.b1[key[1]] += delta
        elif key[0] == "w2":
            self.w2[key[1]] += delta
        else:
            self.b2 += delta

    def forward_value(self, inputs: list[float]) -> float:
        """Tape-free blend weight for greedy evaluation."""
        z = 0.0
        for h in range(self.hidden):
            wh = self.w1[h]
            a = self.b1[h]
            for j, x in enumerate(inputs):
                if x != 0.0:
                    a += wh[j] * x
            z += self.w2[h] * math.tanh(a)
        z += self.b2
        if z >= 0.0:
            return 1.0 / (1.0 + math.exp(-z))
        e = math.exp(z)
        return e / (1.0 + e)


def switch(mlp: SwitcherMLP, state_values: list[float], posterior_ids: list[int],
           tape: Tape, bank: LeafBank) -> int:
    """Blend weight as a tape node; gradients reach the weights and the posterior.

    ``state_values`` enter as constants, the posterior entries as live nodes.
    """
    n_state = len(state_values)
    if n_state + len(posterior_ids) != mlp.input_dim:
        raise ValueError("switcher input dimension mismatch")
    hidden_out = []
    for h in range(mlp.hidden):
        acc = bank.leaf(("sw", "b1", h), mlp.b1[h])
        wh = mlp.w1[h]
        for j, x in enumerate(state_values):
            if x != 0.0:
                acc = tape.add(acc, tape.cmul(bank.leaf(("sw", "w1", h, j), wh[j]), x))
        for k, pid in enumerate(posterior_ids):
            j = n_state + k
            w = bank.leaf(("sw", "w1", h, j), wh[j])
            acc = tape.add(acc, tape.mul(w, pid))
        hidden_out.append(tape.tanh(acc))
    out = bank.leaf(("sw", "b2"), mlp.b2)
    for h, a in enumerate(hidden_out):
        out = tape.add(out, tape.mul(bank.leaf(("sw", "w2", h), mlp.w2[h]), a))
    return tape.sigmoid(out)


class SymptomScores:
    """Masked, renormalized query distribution on a tape.

    ``prob_ids[j]`` is None for masked or structurally zero symptoms, whose
    score is exactly 0.
    """

    def __init__(self, tape: Tape, prob_ids: list[int | None]):
        self.tape = tape
        self.prob_ids = prob_ids

    def values(self) -> list[float]:
        return [0.0 if i is None else self.tape.values[i] for i in self.prob_ids]


def symptom_scores(posterior_ids: list[int], m_cond: np.ndarray, m_mutual: np.ndarray,
                   mu: int, mask: set[int], tape: Tape) -> SymptomScores:
    """mu-blend of the two matrix projections, masked and renormalized.

    raw_j = mu * (P_D . M_c)_j + (1 - mu) * (P_D . M_m)_j for unmasked j,
    then divided by the unmasked total so the live entries sum to 1.
    """
    m, n = m_cond.shape
    if len(posterior_ids) != m:
        raise ValueError("posterior length does not match matrix rows")
    unmasked = [j for j in range(n) if j not in mask]
    if not unmasked:
        raise ExhaustionError("all symptoms already known; caller must diagnose")
    one_minus_mu = tape.cadd(tape.neg(mu), 1.0)
    raw: list[int | None] = [None] * n
    for j in unmasked:
        c_dot = _dot_const(tape, posterior_ids, m_cond[:, j])
        m_dot = _dot_const(tape, posterior_ids, m_mutual[:, j])
        terms = []
        if c_dot is not None:
            terms.append(tape.mul(mu, c_dot))
        if m_dot is not None:
            terms.append(tape.mul(one_minus_mu, m_dot))
        if not terms:
            continue  # structurally zero column stays at score 0
        t = terms[0]
        for extra in terms[1:]:
            t = tape.add(t, extra)
        raw[j] = t
    live = [i for i in raw if i is not None]
    if not live:
        raise ExhaustionError("no queryable symptom has positive score")
    z = live[0]
    for i in live[1:]:
        z = tape.add(z, i)
    probs: list[int | None] = [None if i is None else tape.div(i, z) for i in raw]
    return SymptomScores(tape, probs)


def _dot_const(tape: Tape, ids: list[int], coeffs: np.ndarray) -> int | None:
    """Dot product of tape nodes with constants, skipping zero coefficients."""
    acc = None
    for nid, c in zip(ids, coeffs):
        if c == 0.0:
            continue
        term = tape.cmul(nid, float(c))
        acc = term if acc is None else tape.add(acc, term)
    return acc


def score_values(posterior: list[float], m_cond: np.ndarray, m_mutual: np.ndarray,
                 mu: float, mask: set[int]) -> list[float]:
    """Tape-free query distribution for greedy evaluation."""
    p = np.asarray(posterior)
    raw = mu * (p @ m_cond) + (1.0 - mu) * (p @ m_mutual)
    n = len(raw)
    unmasked = [j for j in range(n) if j not in mask]
    if not unmasked:
        raise ExhaustionError("all symptoms already known; caller must diagnose")
    out = np.zeros(n)
    z = raw[unmasked].sum()
    if z <= 0.0:
        raise ExhaustionError("no queryable symptom has positive score")
    for j in unmasked:
        out[j] = raw[j] / z
    return out.tolist()
