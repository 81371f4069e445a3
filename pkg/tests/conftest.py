"""Shared builders for randomized instances and the synthetic benchmark spec."""

from __future__ import annotations

import random

import numpy as np
import pytest

from bayesdm.bayesnet import BayesParams, DiseaseSymptomGraph, build_graph, init_params
from bayesdm.data import Catalog, CooccurrenceCounts, SyntheticSpec


def random_counts(rng: random.Random, m: int, n: int) -> CooccurrenceCounts:
    """Internally consistent counts for a population with one disease each."""
    n_d = np.array([rng.randint(5, 60) for _ in range(m)], dtype=np.int64)
    total = int(n_d.sum())
    n_ds = np.array([[rng.randint(0, int(n_d[i])) for _ in range(n)] for i in range(m)],
                    dtype=np.int64)
    s = n_ds.sum(axis=0)
    joint = np.zeros((m, n, 2, 2), dtype=np.int64)
    joint[:, :, 1, 1] = n_ds
    joint[:, :, 1, 0] = n_d[:, None] - n_ds
    joint[:, :, 0, 1] = s[None, :] - n_ds
    joint[:, :, 0, 0] = total - n_d[:, None] - s[None, :] + n_ds
    counts = CooccurrenceCounts(n_ds=n_ds, n_d=n_d, joint=joint, total=total)
    counts.validate()
    return counts


def random_instance(rng: random.Random, m: int, n: int,
                    perturb: float = 2.0) -> tuple[CooccurrenceCounts, DiseaseSymptomGraph, BayesParams]:
    """Counts, graph and parameters pushed off the initialization manifold."""
    counts = random_counts(rng, m, n)
    graph = build_graph(counts, 0)
    params = init_params(counts, graph)
    if perturb:
        for key in params.keys():
            params.add(key, rng.uniform(-perturb, perturb))
    return counts, graph, params


def random_evidence(rng: random.Random, n: int, p_pos: float = 0.3, p_neg: float = 0.3):
    from bayesdm.bayesnet import Evidence
    pos, neg = set(), set()
    for j in range(n):
        u = rng.random()
        if u < p_pos:
            pos.add(j)
        elif u < p_pos + p_neg:
            neg.add(j)
    return Evidence(frozenset(pos), frozenset(neg))


def signature_spec(n_diseases: int = 4, per_disease: int = 3,
                   p_signature: float = 0.9, p_background: float = 0.05) -> SyntheticSpec:
    """Well-separated benchmark network: disjoint signature symptom blocks."""
    n_symptoms = n_diseases * per_disease
    cond = np.full((n_diseases, n_symptoms), p_background)
    for i in range(n_diseases):
        for j in range(per_disease * i, per_disease * (i + 1)):
            cond[i, j] = p_signature
    return SyntheticSpec(
        diseases=tuple(f"disease_{i}" for i in range(n_diseases)),
        symptoms=tuple(f"symptom_{j}" for j in range(n_symptoms)),
        priors=(1.0 / n_diseases,) * n_diseases,
        cond_probs=cond,
    )


@pytest.fixture
def tiny_catalog() -> Catalog:
    return Catalog(("flu", "cold"), ("fever", "cough", "sneezing"))
