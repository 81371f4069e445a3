"""Dataset loading, counting, and the synthetic generator."""

import json
import math
import random

import numpy as np
import pytest

from bayesdm.data import (Catalog, GenerationError, PatientRecord, SchemaError,
                          SyntheticSpec, ValidationError, count, load_dataset,
                          save_dataset, split_records, synth_generate)
from tests.conftest import signature_spec


def _write_dataset(tmp_path, doc):
    path = tmp_path / "data.json"
    path.write_text(json.dumps(doc))
    return str(path)


BASIC_DOC = {
    "diseases": ["flu", "cold"],
    "symptoms": ["fever", "cough", "sneezing"],
    "records": [
        {"disease_tag": "flu",
         "explicit_symptoms": {"fever": True},
         "implicit_symptoms": {"cough": True, "sneezing": False}},
    ],
}


def test_load_basic_dataset(tmp_path):
    catalog, records = load_dataset(_write_dataset(tmp_path, BASIC_DOC))
    assert catalog.m == 2 and catalog.n == 3
    assert len(records) == 1
    r = records[0]
    assert r.disease == 0
    assert r.explicit == {0: True}
    assert r.implicit == {1: True, 2: False}


def test_unknown_symptom_is_schema_error(tmp_path):
    doc = json.loads(json.dumps(BASIC_DOC))
    doc["records"][0]["implicit_symptoms"] = {"headache": True}
    with pytest.raises(SchemaError, match="record 0"):
        load_dataset(_write_dataset(tmp_path, doc))


def test_empty_explicit_is_validation_error(tmp_path):
    doc = json.loads(json.dumps(BASIC_DOC))
    doc["records"][0]["explicit_symptoms"] = {}
    with pytest.raises(ValidationError, match="record 0"):
        load_dataset(_write_dataset(tmp_path, doc))


def test_muzhi_shaped_file_parses(tmp_path):
    # same shape as the larger public corpus: 710 records, 4 diseases, 66 symptoms
    rng = random.Random(5)
    diseases = [f"d{i}" for i in range(4)]
    symptoms = [f"s{j}" for j in range(66)]
    records = []
    for _ in range(710):
        d = rng.randrange(4)
        ex = rng.randrange(66)
        implicit = {symptoms[j]: True for j in rng.sample(range(66), 4) if j != ex}
        records.append({"disease_tag": diseases[d],
                        "explicit_symptoms": {symptoms[ex]: True},
                        "implicit_symptoms": implicit})
    doc = {"diseases": diseases, "symptoms": symptoms, "records": records}
    catalog, parsed = load_dataset(_write_dataset(tmp_path, doc))
    assert (catalog.m, catalog.n) == (4, 66)
    assert len(parsed) == 710


def test_save_load_round_trip(tmp_path):
    catalog = Catalog(("a", "b"), ("x", "y", "z"))
    records = [
        PatientRecord(0, {0: True}, {1: True, 2: False}),
        PatientRecord(1, {2: True, 0: False}, {}),
    ]
    path = tmp_path / "round.json"
    save_dataset(str(path), catalog, records)
    catalog2, records2 = load_dataset(str(path))
    assert catalog2 == catalog
    assert [(r.disease, r.explicit, r.implicit) for r in records2] == \
        [(r.disease, r.explicit, r.implicit) for r in records]


def test_record_invariants():
    with pytest.raises(ValidationError):
        PatientRecord(0, {})
    with pytest.raises(ValidationError):
        PatientRecord(0, {1: True}, {1: False})


def test_count_direct(tiny_catalog):
    records = []
    for k in range(10):
        implicit = {1: True} if k < 8 else {}
        records.append(PatientRecord(0, {0: True}, implicit))
    counts = count(records, tiny_catalog)
    assert counts.n_ds[0, 1] == 8
    assert counts.n_d[0] == 10
    assert counts.n_ds[1, 1] == 0  # never co-occurs


def test_count_contingency_enumeration(tiny_catalog):
    # four records: (D0,S0+), (D0,S0-), (D1,S0+), (D1,S0-)
    records = [
        PatientRecord(0, {0: True}),
        PatientRecord(0, {1: True}, {0: False}),
        PatientRecord(1, {0: True}),
        PatientRecord(1, {1: True}, {0: False}),
    ]
    counts = count(records, tiny_catalog)
    for d in (0, 1):
        table = counts.joint[d, 0]
        assert table[1, 1] == 1 and table[1, 0] == 1
        assert table[0, 1] == 1 and table[0, 0] == 1
        assert table.sum() == counts.total == 4


def test_count_treats_absent_as_not_positive(tiny_catalog):
    records = [PatientRecord(0, {0: True}), PatientRecord(1, {1: True})]
    counts = count(records, tiny_catalog)
    assert counts.n_ds[0, 2] == 0 and counts.n_ds[1, 2] == 0


def test_synth_probability_one(tmp_path):
    spec = SyntheticSpec(("a", "b"), ("x", "y"), (1.0, 0.0),
                         np.array([[1.0, 0.2], [0.3, 0.3]]))
    records = synth_generate(spec, 5, seed=3)
    assert all(r.disease == 0 for r in records)
    assert all(0 in r.positives() for r in records)


def test_synth_determinism():
    spec = signature_spec()
    a = synth_generate(spec, 50, seed=9)
    b = synth_generate(spec, 50, seed=9)
    assert [(r.disease, r.explicit, r.implicit) for r in a] == \
        [(r.disease, r.explicit, r.implicit) for r in b]
    c = synth_generate(spec, 50, seed=10)
    assert [(r.disease, r.explicit, r.implicit) for r in a] != \
        [(r.disease, r.explicit, r.implicit) for r in c]


def test_synth_all_zero_row_rejected():
    spec = SyntheticSpec(("a", "b"), ("x", "y"), (0.5, 0.5),
                         np.array([[0.5, 0.5], [0.0, 0.0]]))
    with pytest.raises(GenerationError):
        synth_generate(spec, 10, seed=1)


def test_synth_prior_concentration():
    spec = SyntheticSpec(("a", "b"), ("x", "y"), (0.5, 0.5),
                         np.array([[0.7, 0.2], [0.2, 0.7]]))
    records = synth_generate(spec, 10000, seed=4)
    frac = sum(1 for r in records if r.disease == 0) / len(records)
    assert abs(frac - 0.5) < 0.02


def test_counts_recover_spec_probabilities():
    # n_ds / n_d tracks the generating probability within 3 binomial errors
    spec = signature_spec()
    catalog = spec.catalog()
    records = synth_generate(spec, 10000, seed=21)
    counts = count(records, catalog)
    for i in range(catalog.m):
        nd = counts.n_d[i]
        for j in range(catalog.n):
            p = spec.cond_probs[i, j]
            est = counts.n_ds[i, j] / nd
            sigma = math.sqrt(max(p * (1 - p), 1e-9) / nd)
            assert abs(est - p) <= 3 * sigma + 1e-12, (i, j, est, p)


def test_each_synth_record_has_one_explicit():
    spec = signature_spec()
    for r in synth_generate(spec, 200, seed=2):
        assert len(r.explicit) == 1
        assert list(r.explicit.values()) == [True]
        assert set(r.explicit) | {j for j, v in r.implicit.items() if v} == r.positives()


def test_split_records_deterministic():
    spec = signature_spec()
    records = synth_generate(spec, 100, seed=1)
    a = split_records(records, seed=5)
    b = split_records(records, seed=5)
    assert [r.disease for r in a[0]] == [r.disease for r in b[0]]
    assert len(a[0]) + len(a[1]) + len(a[2]) == 100
