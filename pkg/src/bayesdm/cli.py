"""Operator command line: train, eval, synth, consult, serve, explain.

Configuration precedence is flags over config file over defaults, and the
effective configuration is printed verbatim at startup. All randomness flows
from the single --seed value. Exit codes: 2 for a missing checkpoint, 3 for
a malformed dataset or synthetic spec.
"""

from __future__ import annotations

import argparse
import json
import os
import sys

from .checkpoint import CheckpointError, load_checkpoint, save_checkpoint
from .data import (SchemaError, ValidationError, load_dataset, load_synth_spec,
                   save_dataset, split_records, synth_generate)
from .dialogue import GREEDY, DialogueConfig, explain, step
from .evaluation import evaluate, report, run_greedy_episode
from .simulator import RewardConfig
from .training import TrainConfig, train

DEFAULTS = {
    "data": None,
    "spec": None,
    "checkpoint": None,
    "out": None,
    "log": None,
    "count": 1000,
    "episodes": 1000,
    "seed": 7,
    "epsilon_d": 0.85,
    "t_max": 10,
    "gamma": 0.9,
    "alpha": 1e-3,
    "beta1": 1e-3,
    "beta2": 1e-2,
    "epsilon_e": 0,
    "eval_every": 250,
    "port": 8000,
    "record": 0,
    "static_dir": None,
    "include_explicit_recall": False,
    "reward_correct": 2.0,
    "reward_wrong": -2.0,
    "reward_negative_query": -0.2,
    "reward_positive_query": 0.1,
}

EXIT_MISSING_CHECKPOINT = 2
EXIT_BAD_DATASET = 3


def _add_common(p: argparse.ArgumentParser) -> None:
    p.add_argument("--config", help="JSON config file mirroring flag names")
    p.add_argument("--data", help="dataset file")
    p.add_argument("--spec", help="synthetic spec file")
    p.add_argument("--checkpoint", help="checkpoint file")
    p.add_argument("--out", help="output path")
    p.add_argument("--log", help="training log path (JSON lines)")
    p.add_argument("--count", type=int, help="synthetic records to generate")
    p.add_argument("--episodes", type=int)
    p.add_argument("--seed", type=int)
    p.add_argument("--epsilon-d", dest="epsilon_d", type=float)
    p.add_argument("--t-max", dest="t_max", type=int)
    p.add_argument("--gamma", type=float)
    p.add_argument("--alpha", type=float)
    p.add_argument("--beta1", type=float)
    p.add_argument("--beta2", type=float)
    p.add_argument("--epsilon-e", dest="epsilon_e", type=int)
    p.add_argument("--eval-every", dest="eval_every", type=int)
    p.add_argument("--port", type=int)
    p.add_argument("--record", type=int, help="record index for explain")
    p.add_argument("--static-dir", dest="static_dir", help="console bundle directory")
    p.add_argument("--include-explicit-recall", dest="include_explicit_recall",
                   action="store_const", const=True, default=None)


def merge_config(args: argparse.Namespace) -> dict:
    """flags > config file > defaults; unknown config keys are rejected."""
    merged = dict(DEFAULTS)
    if args.config:
        with open(args.config, "r", encoding="utf-8") as fh:
            file_cfg = json.load(fh)
        unknown = set(file_cfg) - set(DEFAULTS)
        if unknown:
            raise SystemExit(f"config file has unknown keys: {sorted(unknown)}")
        merged.update(file_cfg)
    for key in DEFAULTS:
        v = getattr(args, key, None)
        if v is not None:
            merged[key] = v
    return merged


def _print_config(cmd: str, cfg: dict) -> None:
    print(f"bayesdm {cmd} effective config: " + json.dumps(cfg, sort_keys=True))


def _load_dataset_or_exit(path: str | None):
    if not path:
        print("error: --data is required", file=sys.stderr)
        raise SystemExit(EXIT_BAD_DATASET)
    try:
        return load_dataset(path)
    except (SchemaError, ValidationError, OSError) as err:
        print(f"error: malformed dataset: {err}", file=sys.stderr)
        raise SystemExit(EXIT_BAD_DATASET) from None


def _load_checkpoint_or_exit(path: str | None):
    if not path or not os.path.exists(path):
        print(f"error: checkpoint not found: {path}", file=sys.stderr)
        raise SystemExit(EXIT_MISSING_CHECKPOINT)
    try:
        return load_checkpoint(path)
    except CheckpointError as err:
        print(f"error: {err}", file=sys.stderr)
        raise SystemExit(EXIT_MISSING_CHECKPOINT) from None


def _rewards(cfg: dict) -> RewardConfig:
    return RewardConfig(
        correct_diagnosis=cfg["reward_correct"],
        wrong_diagnosis=cfg["reward_wrong"],
        negative_answer_query=cfg["reward_negative_query"],
        positive_answer_query=cfg["reward_positive_query"],
    )


def cmd_synth(cfg: dict) -> int:
    if not cfg["spec"]:
        print("error: --spec is required", file=sys.stderr)
        return EXIT_BAD_DATASET
    try:
        spec = load_synth_spec(cfg["spec"])
    except (SchemaError, ValidationError, OSError) as err:
        print(f"error: malformed synthetic spec: {err}", file=sys.stderr)
        return EXIT_BAD_DATASET
    records = synth_generate(spec, cfg["count"], cfg["seed"])
    out = cfg["out"] or "synthetic_dataset.json"
    save_dataset(out, spec.catalog(), records)
    print(f"wrote {len(records)} records to {out}")
    return 0


def cmd_train(cfg: dict) -> int:
    catalog, records = _load_dataset_or_exit(cfg["data"])
    train_recs, dev_recs, _ = split_records(records, cfg["seed"])
    if not dev_recs:
        dev_recs = train_recs
    tconf = TrainConfig(gamma=cfg["gamma"], alpha=cfg["alpha"], beta1=cfg["beta1"],
                        beta2=cfg["beta2"], episodes=cfg["episodes"], seed=cfg["seed"],
                        eval_every=cfg["eval_every"])
    dconf = DialogueConfig(epsilon_d=cfg["epsilon_d"], t_max=cfg["t_max"])
    result = train(catalog, train_recs, dev_recs, tconf, dconf, _rewards(cfg),
                   edge_threshold=cfg["epsilon_e"], log_path=cfg["log"], progress=True)
    out = cfg["out"] or cfg["checkpoint"] or "checkpoint.json"
    save_checkpoint(out, result.model, result.critic, dconf, tconf)
    print(f"best dev accuracy {result.best_accuracy:.4f}, recall {result.best_recall:.4f} "
          f"after {result.episodes_run} episodes")
    print(f"wrote checkpoint to {out}")
    return 0


def cmd_eval(cfg: dict) -> int:
    ckpt = _load_checkpoint_or_exit(cfg["checkpoint"])
    catalog, records = _load_dataset_or_exit(cfg["data"])
    if catalog.diseases != ckpt.model.catalog.diseases or \
            catalog.symptoms != ckpt.model.catalog.symptoms:
        print("error: dataset catalog does not match the checkpoint", file=sys.stderr)
        return EXIT_BAD_DATASET
    summary = evaluate(ckpt.model, records, ckpt.dialogue_config,
                       include_explicit_variant=cfg["include_explicit_recall"])
    for line in summary.lines():
        print(line)
    if cfg["out"]:
        with open(cfg["out"], "w", encoding="utf-8") as fh:
            json.dump(summary.__dict__, fh, sort_keys=True, indent=1)
            fh.write("\n")
        print(f"wrote report to {cfg['out']}")
    return 0


def cmd_explain(cfg: dict) -> int:
    ckpt = _load_checkpoint_or_exit(cfg["checkpoint"])
    catalog, records = _load_dataset_or_exit(cfg["data"])
    idx = cfg["record"]
    if not 0 <= idx < len(records):
        print(f"error: record index {idx} out of range", file=sys.stderr)
        return EXIT_BAD_DATASET
    ep = run_greedy_episode(ckpt.model, records[idx], ckpt.dialogue_config)
    for trace in ep.traces:
        print(json.dumps(explain(trace, ckpt.model.catalog, ckpt.model.graph),
                         sort_keys=True))
    rep = report(ep.traces[-1], ep.final_state, ckpt.model.graph)
    print(json.dumps({
        "diagnosis": ckpt.model.catalog.diseases[rep.disease],
        "truth": ckpt.model.catalog.diseases[records[idx].disease],
        "confidence": rep.confidence,
        "supporting_symptoms": [ckpt.model.catalog.symptoms[j]
                                for j in rep.supporting_symptoms],
    }, sort_keys=True))
    return 0


def cmd_consult(cfg: dict) -> int:
    ckpt = _load_checkpoint_or_exit(cfg["checkpoint"])
    model = ckpt.model
    print("known symptoms: " + ", ".join(model.catalog.symptoms))
    raw = input("initial symptoms (comma separated, prefix '-' if absent): ").strip()
    from .dialogue import NEGATIVE, POSITIVE, SymptomState, UNKNOWN, apply_answer
    values = [UNKNOWN] * model.catalog.n
    for token in filter(None, (t.strip() for t in raw.split(","))):
        negative = token.startswith("-")
        name = token.lstrip("-").strip()
        j = model.catalog.symptom_id(name)
        values[j] = NEGATIVE if negative else POSITIVE
    state = SymptomState(values=values, turn=1)
    while True:
        res = step(state, model, ckpt.dialogue_config, mode=GREEDY)
        top = max(range(model.catalog.m), key=lambda d: res.trace.posterior[d])
        print(f"[turn {state.turn}] top suspicion: {model.catalog.diseases[top]} "
              f"({res.trace.posterior[top]:.2f})")
        if res.action.kind == "diagnose":
            rep = report(res.trace, state, model.graph)
            print(f"diagnosis: {model.catalog.diseases[rep.disease]} "
                  f"(confidence {rep.confidence:.2f})")
            print("supporting symptoms: " +
                  (", ".join(model.catalog.symptoms[j] for j in rep.supporting_symptoms) or "none"))
            return 0
        ans = ""
        while ans not in ("y", "n"):
            ans = input(f"do you have {model.catalog.symptoms[res.action.index]!r}? [y/n] ").strip().lower()
        state = apply_answer(state, res.action.index, ans == "y")


def cmd_serve(cfg: dict) -> int:
    import uvicorn

    from .service import create_app

    ckpt = _load_checkpoint_or_exit(cfg["checkpoint"])
    static = cfg["static_dir"] if cfg["static_dir"] and os.path.isdir(cfg["static_dir"]) else None
    app = create_app(ckpt, static_dir=static)
    uvicorn.run(app, host="127.0.0.1", port=cfg["port"], log_level="warning")
    return 0


def main(argv: list[str] | None = None) -> int:
    parser = argparse.ArgumentParser(prog="bayesdm")
    sub = parser.add_subparsers(dest="command", required=True)
    for name in ("train", "eval", "synth", "consult", "serve", "explain"):
        _add_common(sub.add_parser(name))
    args = parser.parse_args(argv)
    cfg = merge_config(args)
    _print_config(args.command, cfg)
    handlers = {
        "train": cmd_train, "eval": cmd_eval, "synth": cmd_synth,
        "consult": cmd_consult, "serve": cmd_serve, "explain": cmd_explain,
    }
    return handlers[args.command](cfg)


if __name__ == "__main__":
    sys.exit(main())
