"""Dataset schema, co-occurrence statistics, and a synthetic patient generator.

On-disk format is JSON. A dataset file carries ``diseases``, ``symptoms`` and
``records``; each record has a ``disease_tag``, an ``explicit_symptoms`` map
(known at the first turn) and an ``implicit_symptoms`` map (revealable only by
querying). A synthetic spec file carries the same name lists plus ``priors``
and a ``cond_probs`` matrix describing a ground-truth network.
"""

from __future__ import annotations

import json
import random
from dataclasses import dataclass, field

import numpy as np


class SchemaError(ValueError):
    """Dataset file violates the on-disk schema."""


class ValidationError(ValueError):
    """Record content is inconsistent with the catalog or record invariants."""


class GenerationError(ValueError):
    """Synthetic spec cannot produce valid records."""


@dataclass(frozen=True)
class Catalog:
    """Stable name-to-index mapping for diseases and symptoms."""

    diseases: tuple[str, ...]
    symptoms: tuple[str, ...]
    _disease_idx: dict = field(init=False, repr=False, compare=False, default=None)
    _symptom_idx: dict = field(init=False, repr=False, compare=False, default=None)

    def __post_init__(self):
        if len(self.diseases) < 2:
            raise ValidationError("catalog needs at least 2 diseases")
        if len(self.symptoms) < 2:
            raise ValidationError("catalog needs at least 2 symptoms")
        if len(set(self.diseases)) != len(self.diseases):
            raise ValidationError("duplicate disease names")
        if len(set(self.symptoms)) != len(self.symptoms):
            raise ValidationError("duplicate symptom names")
        object.__setattr__(self, "_disease_idx", {n: i for i, n in enumerate(self.diseases)})
        object.__setattr__(self, "_symptom_idx", {n: j for j, n in enumerate(self.symptoms)})

    @property
    def m(self) -> int:
        return len(self.diseases)

    @property
    def n(self) -> int:
        return len(self.symptoms)

    def disease_id(self, name: str) -> int:
        try:
            return self._disease_idx[name]
        except KeyError:
            raise SchemaError(f"unknown disease {name!r}") from None

    def symptom_id(self, name: str) -> int:
        try:
            return self._symptom_idx[name]
        except KeyError:
            raise SchemaError(f"unknown symptom {name!r}") from None


@dataclass
class PatientRecord:
    """Ground truth for one consultation: disease tag plus symptom assignments.

    Explicit symptoms seed the first turn; implicit ones are only revealed by
    querying. A symptom absent from both maps counts as not-positive.
    """

    disease: int
    explicit: dict[int, bool]
    implicit: dict[int, bool] = field(default_factory=dict)

    def __post_init__(self):
        if not self.explicit:
            raise ValidationError("record needs at least one explicit symptom")
        overlap = set(self.explicit) & set(self.implicit)
        if overlap:
            raise ValidationError(f"symptoms {sorted(overlap)} are both explicit and implicit")

    def positives(self) -> set[int]:
        pos = {j for j, v in self.explicit.items() if v}
        pos |= {j for j, v in self.implicit.items() if v}
        return pos

    def answer(self, j: int) -> bool:
        """Would this patient answer yes to a query about symptom j?"""
        if j in self.explicit:
            return self.explicit[j]
        return self.implicit.get(j, False)


@dataclass
class CooccurrenceCounts:
    """Counting statistics over a record set.

    ``joint[i, j]`` is the 2x2 contingency table over (disease i present?,
    symptom j positive?), with axis order (disease value, symptom value).
    """

    n_ds: np.ndarray  # (M, N) patients with disease i and symptom j positive
    n_d: np.ndarray   # (M,) patients with disease i
    joint: np.ndarray  # (M, N, 2, 2)
    total: int

    def validate(self) -> None:
        if np.any(self.n_ds > self.n_d[:, None]):
            raise ValidationError("n_ds exceeds n_d")
        if np.any(self.n_d > self.total):
            raise ValidationError("n_d exceeds total")
        if np.any(self.joint.sum(axis=(2, 3)) != self.total):
            raise ValidationError("contingency tables must sum to total")


def count(records: list[PatientRecord], catalog: Catalog) -> CooccurrenceCounts:
    """Co-occurrence counts; a symptom is positive when true in either map."""
    if not records:
        raise ValidationError("need at least one record")
    m, n = catalog.m, catalog.n
    n_ds = np.zeros((m, n), dtype=np.int64)
    n_d = np.zeros(m, dtype=np.int64)
    for r in records:
        n_d[r.disease] += 1
        for j in r.positives():
            n_ds[r.disease, j] += 1
    total = len(records)
    # each record carries exactly one disease, so column sums are the
    # per-symptom positive totals and the 2x2 tables follow directly
    s = n_ds.sum(axis=0)
    joint = np.zeros((m, n, 2, 2), dtype=np.int64)
    joint[:, :, 1, 1] = n_ds
    joint[:, :, 1, 0] = n_d[:, None] - n_ds
    joint[:, :, 0, 1] = s[None, :] - n_ds
    joint[:, :, 0, 0] = total - n_d[:, None] - s[None, :] + n_ds
    counts = CooccurrenceCounts(n_ds=n_ds, n_d=n_d, joint=joint, total=total)
    counts.validate()
    return counts


def load_dataset(path: str) -> tuple[Catalog, list[PatientRecord]]:
    """Parse a dataset file, mapping every name to a stable index."""
    try:
        with open(path, "r", encoding="utf-8") as fh:
            doc = json.load(fh)
    except json.JSONDecodeError as err:
        raise SchemaError(f"{path}: not valid JSON ({err})") from None
    for key in ("diseases", "symptoms", "records"):
        if key not in doc or not isinstance(doc[key], list):
            raise SchemaError(f"{path}: missing or malformed field {key!r}")
    catalog = Catalog(tuple(doc["diseases"]), tuple(doc["symptoms"]))
    records = []
    for rid, raw in enumerate(doc["records"]):
        try:
            disease = catalog.disease_id(raw["disease_tag"])
            explicit = {catalog.symptom_id(name): bool(v)
                        for name, v in raw.get("explicit_symptoms", {}).items()}
            implicit = {catalog.symptom_id(name): bool(v)
                        for name, v in raw.get("implicit_symptoms", {}).items()}
        except SchemaError as err:
            raise SchemaError(f"record {rid}: {err}") from None
        except (KeyError, TypeError, AttributeError) as err:
            raise SchemaError(f"record {rid}: malformed ({err})") from None
        try:
            records.append(PatientRecord(disease, explicit, implicit))
        except ValidationError as err:
            raise ValidationError(f"record {rid}: {err}") from None
    return catalog, records


def save_dataset(path: str, catalog: Catalog, records: list[PatientRecord]) -> None:
    doc = {
        "diseases": list(catalog.diseases),
        "symptoms": list(catalog.symptoms),
        "records": [
            {
                "disease_tag": catalog.diseases[r.disease],
                "explicit_symptoms": {catalog.symptoms[j]: v for j, v in sorted(r.explicit.items())},
                "implicit_symptoms": {catalog.symptoms[j]: v for j, v in sorted(r.implicit.items())},
            }
            for r in records
        ],
    }
    with open(path, "w", encoding="utf-8") as fh:
        json.dump(doc, fh, indent=1, sort_keys=True)
        fh.write("\n")


@dataclass
class SyntheticSpec:
    """Ground-truth network for generating synthetic patients."""

    diseases: tuple[str, ...]
    symptoms: tuple[str, ...]
    priors: tuple[float, ...]
    cond_probs: np.ndarray  # (M, N) of P(symptom j | disease i)

    def __post_init__(self):
        self.cond_probs = np.asarray(self.cond_probs, dtype=float)
        if len(self.priors) != len(self.diseases):
            raise ValidationError("priors length must match diseases")
        if self.cond_probs.shape != (len(self.diseases), len(self.symptoms)):
            raise ValidationError("cond_probs shape must be (M, N)")
        if abs(sum(self.priors) - 1.0) > 1e-9:
            raise ValidationError("priors must sum to 1")
        if np.any(self.cond_probs < 0) or np.any(self.cond_probs > 1):
            raise ValidationError("cond_probs must lie in [0, 1]")

    def catalog(self) -> Catalog:
        return Catalog(self.diseases, self.symptoms)


def load_synth_spec(path: str) -> SyntheticSpec:
    try:
        with open(path, "r", encoding="utf-8") as fh:
            doc = json.load(fh)
    except json.JSONDecodeError as err:
        raise SchemaError(f"{path}: not valid JSON ({err})") from None
    try:
        return SyntheticSpec(
            diseases=tuple(doc["diseases"]),
            symptoms=tuple(doc["symptoms"]),
            priors=tuple(float(p) for p in doc["priors"]),
            cond_probs=np.asarray(doc["cond_probs"], dtype=float),
        )
    except (KeyError, TypeError) as err:
        raise SchemaError(f"{path}: malformed synthetic spec ({err})") from None


def save_synth_spec(path: str, spec: SyntheticSpec) -> None:
    doc = {
        "diseases": list(spec.diseases),
        "symptoms": list(spec.symptoms),
        "priors": list(spec.priors),
        "cond_probs": spec.cond_probs.tolist(),
    }
    with open(path, "w", encoding="utf-8") as fh:
        json.dump(doc, fh, indent=1, sort_keys=True)
        fh.write("\n")


def synth_generate(spec: SyntheticSpec, n_records: int, seed: int) -> list[PatientRecord]:
    """Sample patients from the ground-truth network, deterministically.

    One disease per patient from the priors, each symptom independently from
    its per-disease probability. Exactly one positive symptom (uniform among
    positives) is marked explicit; the rest stay implicit. Symptom vectors
    with no positives are resampled, since every record must carry a
    self-report.
    """
    if n_records < 1:
        raise GenerationError("count must be >= 1")
    probs = spec.cond_probs
    for i in range(len(spec.diseases)):
        if not np.any(probs[i] > 0):
            raise GenerationError(
                f"disease {spec.diseases[i]!r} has all-zero symptom probabilities; "
                "no explicit symptom is possible")
    rng = random.Random(seed)
    cum = []
    acc = 0.0
    for p in spec.priors:
        acc += p
        cum.append(acc)
    n = len(spec.symptoms)
    records = []
    for _ in range(n_records):
        u = rng.random()
        d = 0
        while d < len(cum) - 1 and u > cum[d]:
            d += 1
        row = probs[d]
        while True:
            pos = [j for j in range(n) if rng.random() < row[j]]
            if pos:
                break
        ex = pos[rng.randrange(len(pos))]
        records.append(PatientRecord(d, {ex: True}, {j: True for j in pos if j != ex}))
    return records


def split_records(records: list[PatientRecord], seed: int,
                  fractions: tuple[float, float] = (0.8, 0.1)) -> tuple[list, list, list]:
    """Deterministic shuffled train/dev/test split."""
    order = list(records)
    random.Random(seed).shuffle(order)
    n = len(order)
    a = int(n * fractions[0])
    b = a + max(1, int(n * fractions[1])) if n > 1 else a
    return order[:a], order[a:b], order[b:]
