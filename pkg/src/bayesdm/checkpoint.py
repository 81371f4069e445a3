"""Versioned JSON checkpoints for the full model, critic, and run configs.

Serialization is deterministic (sorted keys, repr-roundtrip floats) so two
runs with identical seeds produce byte-identical files.
"""

from __future__ import annotations

import hashlib
import json
from dataclasses import dataclass

import numpy as np

from .bayesnet import BayesParams, DiseaseSymptomGraph
from .data import Catalog
from .dialogue import DialogueConfig, Model
from .inquiry import SwitcherMLP
from .training import Critic, TrainConfig

FORMAT_VERSION = 1


class CheckpointError(ValueError):
    """Checkpoint file is missing fields or carries an unknown version."""


def catalog_hash(catalog: Catalog) -> str:
    payload = json.dumps({"diseases": list(catalog.diseases),
                          "symptoms": list(catalog.symptoms)}, sort_keys=True)
    return hashlib.sha256(payload.encode("utf-8")).hexdigest()


@dataclass
class Checkpoint:
    model: Model
    critic: Critic
    dialogue_config: DialogueConfig
    train_config: TrainConfig
    seed: int = 0


def save_checkpoint(path: str, model: Model, critic: Critic,
                    dialogue_config: DialogueConfig, train_config: TrainConfig) -> None:
    doc = {
        "version": FORMAT_VERSION,
        "catalog": {
            "diseases": list(model.catalog.diseases),
            "symptoms": list(model.catalog.symptoms),
            "hash": catalog_hash(model.catalog),
        },
        "graph": {
            "parents": [list(p) for p in model.graph.parents],
            "edge_threshold": model.graph.edge_threshold,
        },
        "bayes": {
            "prior_logits": list(model.params.prior_logits),
            "cpt_logits": [list(t) for t in model.params.cpt_logits],
        },
        "switcher": {
            "input_dim": model.switcher.input_dim,
            "hidden": model.switcher.hidden,
            "w1": [list(r) for r in model.switcher.w1],
            "b1": list(model.switcher.b1),
            "w2": list(model.switcher.w2),
            "b2": model.switcher.b2,
        },
        "critic": {
            "input_dim": critic.input_dim,
            "hidden": critic.hidden,
            "w1": critic.w1.tolist(),
            "b1": critic.b1.tolist(),
            "w2": critic.w2.tolist(),
            "b2": critic.b2,
        },
        "matrices": {
            "conditional": model.m_cond.tolist(),
            "mutual": model.m_mutual.tolist(),
        },
        "dialogue": {"epsilon_d": dialogue_config.epsilon_d, "t_max": dialogue_config.t_max},
        "train": {
            "gamma": train_config.gamma, "alpha": train_config.alpha,
            "beta1": train_config.beta1, "beta2": train_config.beta2,
            "episodes": train_config.episodes, "eval_every": train_config.eval_every,
            "switcher_hidden": train_config.switcher_hidden,
            "critic_hidden": train_config.critic_hidden,
        },
        "seed": train_config.seed,
    }
    with open(path, "w", encoding="utf-8") as fh:
        json.dump(doc, fh, sort_keys=True, indent=1)
        fh.write("\n")


def load_checkpoint(path: str) -> Checkpoint:
    with open(path, "r", encoding="utf-8") as fh:
        try:
            doc = json.load(fh)
        except json.JSONDecodeError as err:
            raise CheckpointError(f"{path}: not valid JSON ({err})") from None
    if doc.get("version") != FORMAT_VERSION:
        raise CheckpointError(f"{path}: unsupported checkpoint version {doc.get('version')!r}")
    try:
        catalog = Catalog(tuple(doc["catalog"]["diseases"]),
                          tuple(doc["catalog"]["symptoms"]))
        if doc["catalog"].get("hash") not in (None, catalog_hash(catalog)):
            raise CheckpointError(f"{path}: catalog hash mismatch")
        graph = DiseaseSymptomGraph(
            parents=tuple(tuple(p) for p in doc["graph"]["parents"]),
            edge_threshold=int(doc["graph"]["edge_threshold"]))
        params = BayesParams(
            prior_logits=[float(x) for x in doc["bayes"]["prior_logits"]],
            cpt_logits=[[float(x) for x in t] for t in doc["bayes"]["cpt_logits"]])
        sw = doc["switcher"]
        switcher = SwitcherMLP.zeros(int(sw["input_dim"]), int(sw["hidden"]))
        switcher.w1 = [[float(x) for x in r] for r in sw["w1"]]
        switcher.b1 = [float(x) for x in sw["b1"]]
        switcher.w2 = [float(x) for x in sw["w2"]]
        switcher.b2 = float(sw["b2"])
        cr = doc["critic"]
        critic = Critic(int(cr["input_dim"]), int(cr["hidden"]))
        critic.w1 = np.asarray(cr["w1"], dtype=float)
        critic.b1 = np.asarray(cr["b1"], dtype=float)
        critic.w2 = np.asarray(cr["w2"], dtype=float)
        critic.b2 = float(cr["b2"])
        model = Model(
            catalog=catalog, graph=graph, params=params,
            m_cond=np.asarray(doc["matrices"]["conditional"], dtype=float),
            m_mutual=np.asarray(doc["matrices"]["mutual"], dtype=float),
            switcher=switcher)
        dialogue_config = DialogueConfig(
            epsilon_d=float(doc["dialogue"]["epsilon_d"]),
            t_max=int(doc["dialogue"]["t_max"]))
        tr = doc["train"]
        train_config = TrainConfig(
            gamma=float(tr["gamma"]), alpha=float(tr["alpha"]),
            beta1=float(tr["beta1"]), beta2=float(tr["beta2"]),
            episodes=int(tr["episodes"]), seed=int(doc["seed"]),
            eval_every=int(tr["eval_every"]),
            switcher_hidden=int(tr["switcher_hidden"]),
            critic_hidden=int(tr["critic_hidden"]))
    except (KeyError, TypeError, ValueError) as err:
        if isinstance(err, CheckpointError):
            raise
        raise CheckpointError(f"{path}: malformed checkpoint ({err})") from None
    return Checkpoint(model=model, critic=critic, dialogue_config=dialogue_config,
                      train_config=train_config, seed=int(doc["seed"]))
