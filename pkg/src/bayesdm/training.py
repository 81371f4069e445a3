"""Advantage actor-critic training of the full dialogue manager.

Per transition the advantage is the TD error r + gamma * v(s') - v(s) with
v(terminal) = 0. The actor (BayesNet logits plus switcher weights) ascends
beta1 * delta * grad(ln pi) + beta2 * grad(H); the critic ascends
alpha * delta * grad(v). Updates are batched per episode, deltas are
computed against the pre-update critic, and plain constant-rate gradient
ascent is used throughout.
"""

from __future__ import annotations

import json
import math
import random
from dataclasses import dataclass, field

import numpy as np

from .data import Catalog, PatientRecord, count
from .dialogue import (STOCHASTIC, Action, DialogueConfig, Model, SymptomState, step)
from .simulator import RewardConfig, reset, respond


class UpdateError(RuntimeError):
    """A gradient went non-finite; the update was aborted."""


class Critic:
    """State-value MLP v(s): one tanh hidden layer, scalar output.

    Forward and gradients are closed-form (it sits outside the actor's
    tape; no gradient flows through it into the policy).
    """

    def __init__(self, input_dim: int, hidden: int = 64, seed: int = 0):
        self.input_dim = input_dim
        self.hidden = hidden
        rng = random.Random(seed)
        lim1 = 1.0 / math.sqrt(input_dim)
        lim2 = 1.0 / math.sqrt(hidden)
        self.w1 = np.array([[rng.uniform(-lim1, lim1) for _ in range(input_dim)]
                            for _ in range(hidden)])
        self.b1 = np.zeros(hidden)
        self.w2 = np.array([rng.uniform(-lim2, lim2) for _ in range(hidden)])
        self.b2 = 0.0

    def copy(self) -> "Critic":
        out = Critic(self.input_dim, self.hidden)
        out.w1 = self.w1.copy()
        out.b1 = self.b1.copy()
        out.w2 = self.w2.copy()
        out.b2 = self.b2
        return out

    def value(self, x: list[float]) -> float:
        a = np.tanh(self.w1 @ np.asarray(x, dtype=float) + self.b1)
        return float(self.w2 @ a + self.b2)

    def value_and_grads(self, x: list[float]):
        xv = np.asarray(x, dtype=float)
        a = np.tanh(self.w1 @ xv + self.b1)
        v = float(self.w2 @ a + self.b2)
        dz = (1.0 - a * a) * self.w2  # dv/d(pre-activation)
        grads = {"w1": np.outer(dz, xv), "b1": dz, "w2": a, "b2": 1.0}
        return v, grads

    def apply(self, coeff: float, grads: dict) -> None:
        self.w1 += coeff * grads["w1"]
        self.b1 += coeff * grads["b1"]
        self.w2 += coeff * grads["w2"]
        self.b2 += coeff * grads["b2"]

    # flat views support finite-difference checks and serialization
    def get_flat(self) -> np.ndarray:
        return np.concatenate([self.w1.ravel(), self.b1, self.w2, [self.b2]])

    def set_flat(self, flat: np.ndarray) -> None:
        h, d = self.hidden, self.input_dim
        self.w1 = flat[:h * d].reshape(h, d).copy()
        self.b1 = flat[h * d:h * d + h].copy()
        self.w2 = flat[h * d + h:h * d + 2 * h].copy()
        self.b2 = float(flat[-1])


@dataclass(frozen=True)
class TrainConfig:
    gamma: float = 0.9
    alpha: float = 1e-3
    beta1: float = 1e-3
    beta2: float = 1e-2
    episodes: int = 1000
    seed: int = 7
    eval_every: int = 250
    checkpoint_every: int = 0  # 0: only the best snapshot is kept
    switcher_hidden: int = 32
    critic_hidden: int = 64
    target_accuracy: float | None = None  # optional early stop once both
    target_recall: float | None = None    # dev targets are met

    def __post_init__(self):
        if not 0.0 <= self.gamma < 1.0:
            raise ValueError("gamma must lie in [0, 1)")
        if self.alpha < 0 or self.beta1 < 0 or self.beta2 < 0:
            raise ValueError("learning rates must be >= 0")


@dataclass
class Transition:
    state: SymptomState
    action: Action
    log_prob: float
    entropy: float
    reward: float
    next_state: SymptomState | None  # None marks the terminal transition
    tape: object = None
    log_prob_id: int | None = None
    entropy_id: int | None = None
    bank: object = None


def run_episode(model: Model, critic: Critic, record: PatientRecord,
                config: DialogueConfig, rewards: RewardConfig,
                rng: random.Random, build_tape: bool = True) -> list[Transition]:
    """One stochastic rollout against the simulator."""
    env = reset(record, model.catalog)
    trajectory = []
    while not env.done:
        res = step(env.state, model, config, mode=STOCHASTIC, rng=rng,
                   build_tape=build_tape)
        env2, reward, done = respond(env, res.action, rewards)
        trajectory.append(Transition(
            state=env.state, action=res.action, log_prob=res.log_prob,
            entropy=res.entropy, reward=reward,
            next_state=None if done else env2.state,
            tape=res.tape, log_prob_id=res.log_prob_id,
            entropy_id=res.entropy_id, bank=res.bank))
        env = env2
    return trajectory


def td_error(transition: Transition, critic: Critic, gamma: float) -> float:
    """delta = r + gamma * v(next) - v(current); v(terminal) is 0."""
    v_next = 0.0 if transition.next_state is None else critic.value(transition.next_state.as_floats())
    return transition.reward + gamma * v_next - critic.value(transition.state.as_floats())


def entropy_of(probs: list[float]) -> float:
    return -sum(p * math.log(p) for p in probs if p > 0.0)


@dataclass
class UpdateStats:
    mean_delta: float
    actor_grad_norm: float


def update(trajectory: list[Transition], model: Model, critic: Critic,
           config: TrainConfig) -> UpdateStats:
    """Apply one batched A2C update for the episode.

    Deltas are all computed first (against the frozen critic) and treated as
    constants in the actor objective, so no gradient flows through the
    critic into the policy.
    """
    if not trajectory:
        raise ValueError("empty trajectory")
    deltas = [td_error(tr, critic, config.gamma) for tr in trajectory]

    actor_acc: dict[tuple, float] = {}
    if config.beta1 != 0.0 or config.beta2 != 0.0:
        for tr, delta in zip(trajectory, deltas):
            if tr.tape is None:
                raise ValueError("trajectory was rolled out without tapes")
            coeff = config.beta1 * delta
            obj = None
            if coeff != 0.0:
                obj = tr.tape.cmul(tr.log_prob_id, coeff)
            if config.beta2 != 0.0:
                ent = tr.tape.cmul(tr.entropy_id, config.beta2)
                obj = ent if obj is None else tr.tape.add(obj, ent)
            if obj is None:
                continue
            grads = tr.tape.backward(obj)
            for key, nid in tr.bank.items():
                g = grads[nid]
                if g != 0.0:
                    actor_acc[key] = actor_acc.get(key, 0.0) + g

    critic_grads = None
    if config.alpha != 0.0:
        for tr, delta in zip(trajectory, deltas):
            _, grads = critic.value_and_grads(tr.state.as_floats())
            coeff = config.alpha * delta
            if critic_grads is None:
                critic_grads = {k: coeff * np.asarray(v, dtype=float) for k, v in grads.items()}
            else:
                for k, v in grads.items():
                    critic_grads[k] = critic_grads[k] + coeff * np.asarray(v, dtype=float)

    norm_sq = 0.0
    for key, g in actor_acc.items():
        if not math.isfinite(g):
            raise UpdateError(f"non-finite actor gradient at {key}")
        norm_sq += g * g
    if critic_grads is not None:
        for k, v in critic_grads.items():
            if not np.all(np.isfinite(v)):
                raise UpdateError(f"non-finite critic gradient at {k}")

    for key, g in actor_acc.items():
        if key[0] == "bn":
            model.params.add(key[1:], g)
        elif key[0] == "sw":
            model.switcher.add(key[1:], g)
    if critic_grads is not None:
        critic.apply(1.0, critic_grads)
    return UpdateStats(mean_delta=sum(deltas) / len(deltas),
                       actor_grad_norm=math.sqrt(norm_sq))


@dataclass
class TrainResult:
    model: Model          # best-dev snapshot (accuracy, ties by recall)
    critic: Critic
    final_model: Model    # state at the last episode
    final_critic: Critic
    history: list[dict] = field(default_factory=list)
    episodes_run: int = 0
    best_accuracy: float = 0.0
    best_recall: float = 0.0
    targets_met: bool = False


def build_model(catalog: Catalog, records: list[PatientRecord],
                edge_threshold: int = 0, switcher_hidden: int = 32,
                seed: int = 0) -> Model:
    """Counts, graph, initialized parameters and matrices from a record set."""
    from .bayesnet import build_graph, init_params
    from .inquiry import SwitcherMLP, conditional_matrix, mutual_information_matrix

    counts = count(records, catalog)
    graph = build_graph(counts, edge_threshold)
    params = init_params(counts, graph)
    return Model(
        catalog=catalog,
        graph=graph,
        params=params,
        m_cond=conditional_matrix(counts),
        m_mutual=mutual_information_matrix(counts),
        switcher=SwitcherMLP(catalog.n + catalog.m, hidden=switcher_hidden,
                             seed=seed + 1),
    )


def train(catalog: Catalog, train_records: list[PatientRecord],
          dev_records: list[PatientRecord], config: TrainConfig,
          dialogue_config: DialogueConfig | None = None,
          rewards: RewardConfig | None = None, edge_threshold: int = 0,
          log_path: str | None = None, progress: bool = False) -> TrainResult:
    """Full training run: rollouts, per-episode updates, periodic dev eval.

    Keeps the snapshot with the best dev accuracy (ties broken by recall).
    With episodes == 0 the returned checkpoint equals the initialization.
    """
    from .evaluation import evaluate

    if not train_records:
        raise ValueError("no training records")
    dialogue_config = dialogue_config or DialogueConfig()
    rewards = rewards or RewardConfig()
    rng = random.Random(config.seed)
    model = build_model(catalog, train_records, edge_threshold,
                        config.switcher_hidden, seed=config.seed)
    critic = Critic(catalog.n, hidden=config.critic_hidden, seed=config.seed + 2)

    history: list[dict] = []
    log_fh = open(log_path, "a", encoding="utf-8") if log_path else None

    def dev_eval(episode: int, cumulative: float):
        summary = evaluate(model, dev_records, dialogue_config)
        entry = {
            "episode": episode,
            "cumulative_reward": round(cumulative, 6),
            "dev_accuracy": summary.accuracy,
            "dev_recall": summary.recall,
            "mean_mu": summary.mean_mu,
        }
        history.append(entry)
        if log_fh:
            log_fh.write(json.dumps(entry, sort_keys=True) + "\n")
            log_fh.flush()
        if progress:
            print(f"episode {episode}: reward {cumulative:.1f} "
                  f"acc {summary.accuracy:.3f} recall {summary.recall:.3f} "
                  f"mu {summary.mean_mu:.3f}")
        return summary

    best_model = model.copy()
    best_critic = critic.copy()
    summary = dev_eval(0, 0.0)
    best_key = (summary.accuracy, summary.recall)

    def targets_met(s) -> bool:
        if config.target_accuracy is None or config.target_recall is None:
            return False
        return s.accuracy >= config.target_accuracy and s.recall >= config.target_recall

    cumulative = 0.0
    episodes_run = 0
    met = targets_met(summary)
    if not met:
        for ep in range(1, config.episodes + 1):
            record = train_records[rng.randrange(len(train_records))]
            trajectory = run_episode(model, critic, record, dialogue_config, rewards, rng)
            update(trajectory, model, critic, config)
            cumulative += sum(tr.reward for tr in trajectory)
            episodes_run = ep
            if ep % config.eval_every == 0 or ep == config.episodes:
                summary = dev_eval(ep, cumulative)
                key = (summary.accuracy, summary.recall)
                if key > best_key:
                    best_key = key
                    best_model = model.copy()
                    best_critic = critic.copy()
                if targets_met(summary):
                    met = True
                    break
    if log_fh:
        log_fh.close()
    return TrainResult(model=best_model, critic=best_critic,
                       final_model=model, final_critic=critic,
                       history=history, episodes_run=episodes_run,
                       best_accuracy=best_key[0], best_recall=best_key[1],
                       targets_met=met)


def trajectory_log_prob(model: Model, record: PatientRecord, actions: list[Action],
                        config: DialogueConfig) -> float:
    """ln pi of a forced action sequence under the current parameters.

    The turn type is taken from each recorded action (diagnose turns score
    against the posterior, query turns against the masked query scores), so
    the result is a smooth function of the parameters even when a
    perturbation would have flipped the stop rule. Tape-free on purpose:
    finite-difference checks of the tape gradients recompute through here.
    """
    from .bayesnet import posterior_values
    from .inquiry import score_values
    from .simulator import reset, respond
    from .simulator import RewardConfig as _RC

    env = reset(record, model.catalog)
    rewards = _RC()
    total = 0.0
    for action in actions:
        posterior = posterior_values(model.params, model.graph, env.state.evidence())
        if action.kind == "diagnose":
            total += math.log(posterior[action.index])
        else:
            mu = model.switcher.forward_value(env.state.as_floats() + posterior)
            scores = score_values(posterior, model.m_cond, model.m_mutual, mu,
                                  env.state.known())
            total += math.log(scores[action.index])
        env, _, done = respond(env, action, rewards)
        if done:
            break
    return total


def read_training_log(path: str) -> list[dict]:
    """Replay a line-delimited training log."""
    entries = []
    with open(path, "r", encoding="utf-8") as fh:
        for line in fh:
            line = line.strip()
            if line:
                entries.append(json.loads(line))
    return entries
