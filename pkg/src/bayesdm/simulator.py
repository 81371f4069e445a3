"""User simulator: answers queries from a patient record and scores diagnoses."""

from __future__ import annotations

from dataclasses import dataclass

from .data import Catalog, PatientRecord
from .dialogue import NEGATIVE, POSITIVE, UNKNOWN, Action, SymptomState, apply_answer


@dataclass(frozen=True)
class RewardConfig:
    correct_diagnosis: float = 2.0
    wrong_diagnosis: float = -2.0
    negative_answer_query: float = -0.2
    positive_answer_query: float = 0.1
    step_cost: float = 0.0

    def __post_init__(self):
        if not self.correct_diagnosis > 0 > self.wrong_diagnosis:
            raise ValueError("need correct_diagnosis > 0 > wrong_diagnosis")


@dataclass
class EnvState:
    record: PatientRecord
    state: SymptomState
    done: bool = False


def reset(record: PatientRecord, catalog: Catalog) -> EnvState:
    """First-turn state with every explicit symptom written in."""
    values = [UNKNOWN] * catalog.n
    for j, v in record.explicit.items():
        values[j] = POSITIVE if v else NEGATIVE
    return EnvState(record=record, state=SymptomState(values=values, turn=1))


def respond(env: EnvState, action: Action, rewards: RewardConfig) -> tuple[EnvState, float, bool]:
    """Answer a query or judge a diagnosis; returns (new env, reward, done).

    A queried symptom answers positive only when the record marks it true;
    symptoms absent from the record answer negative.
    """
    if env.done:
        raise RuntimeError("episode already finished")
    if action.kind == "query":
        positive = env.record.answer(action.index)
        reward = (rewards.positive_answer_query if positive
                  else rewards.negative_answer_query) + rewards.step_cost
        new_state = apply_answer(env.state, action.index, positive)
        return EnvState(env.record, new_state, False), reward, False
    correct = action.index == env.record.disease
    reward = rewards.correct_diagnosis if correct else rewards.wrong_diagnosis
    return EnvState(env.record, env.state, True), reward, True
