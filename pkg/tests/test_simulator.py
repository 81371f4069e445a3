"""Simulator seeding, answers, rewards, and the best-policy bound."""

import itertools

import pytest

from bayesdm.data import Catalog, PatientRecord
from bayesdm.dialogue import Action
from bayesdm.simulator import RewardConfig, reset, respond


@pytest.fixture
def catalog():
    return Catalog(("a", "b"), tuple(f"s{j}" for j in range(6)))


def test_reset_seeds_explicit(catalog):
    env = reset(PatientRecord(0, {2: True}), catalog)
    assert env.state.values == [0, 0, 1, 0, 0, 0]
    assert env.state.turn == 1 and not env.done


def test_reset_seeds_explicit_negative(catalog):
    env = reset(PatientRecord(0, {2: True, 5: False}), catalog)
    assert env.state.values[2] == 1 and env.state.values[5] == -1


def test_reset_idempotent(catalog):
    record = PatientRecord(1, {0: True}, {3: True})
    a, b = reset(record, catalog), reset(record, catalog)
    assert a.state.values == b.state.values and a.state.turn == b.state.turn


def test_respond_query_rewards(catalog):
    rewards = RewardConfig()
    record = PatientRecord(0, {0: True}, {3: True, 4: False})
    env = reset(record, catalog)
    env, r, done = respond(env, Action.query(3), rewards)
    assert (r, done) == (0.1, False)
    assert env.state.values[3] == 1
    env, r, done = respond(env, Action.query(4), rewards)  # explicitly negative
    assert r == -0.2 and env.state.values[4] == -1
    env, r, done = respond(env, Action.query(5), rewards)  # absent answers negative
    assert r == -0.2 and env.state.values[5] == -1


def test_respond_diagnosis_rewards(catalog):
    rewards = RewardConfig()
    record = PatientRecord(1, {0: True})
    env, r, done = respond(reset(record, catalog), Action.diagnose(1), rewards)
    assert (r, done, env.done) == (2.0, True, True)
    env2, r2, _ = respond(reset(record, catalog), Action.diagnose(0), rewards)
    assert r2 == -2.0


def test_respond_after_done_is_error(catalog):
    env, _, _ = respond(reset(PatientRecord(0, {0: True}), catalog),
                        Action.diagnose(0), RewardConfig())
    with pytest.raises(RuntimeError):
        respond(env, Action.query(1), RewardConfig())


def test_step_cost_added_to_queries(catalog):
    rewards = RewardConfig(step_cost=-0.05)
    env = reset(PatientRecord(0, {0: True}, {3: True}), catalog)
    _, r, _ = respond(env, Action.query(3), rewards)
    assert r == pytest.approx(0.05)


def test_reward_config_invariant():
    with pytest.raises(ValueError):
        RewardConfig(correct_diagnosis=-1.0)
    with pytest.raises(ValueError):
        RewardConfig(wrong_diagnosis=0.5)


def test_episode_reward_bound(catalog):
    rewards = RewardConfig()
    record = PatientRecord(0, {0: True}, {1: True, 2: True})
    t_max = 5
    bound = t_max * max(abs(rewards.positive_answer_query),
                        abs(rewards.negative_answer_query)) + \
        max(abs(rewards.correct_diagnosis), abs(rewards.wrong_diagnosis))
    env = reset(record, catalog)
    total = 0.0
    for j in (1, 2, 3):
        env, r, _ = respond(env, Action.query(j), rewards)
        total += r
    _, r, _ = respond(env, Action.diagnose(0), rewards)
    total += r
    assert abs(total) <= bound


def test_query_all_positives_then_correct_is_optimal(catalog):
    # exhaustive enumeration over action sequences on a small record
    rewards = RewardConfig()
    record = PatientRecord(0, {0: True}, {1: True, 2: True, 4: False})
    unknown = [1, 2, 3, 4, 5]

    best = None
    for k in range(0, len(unknown) + 1):
        for queries in itertools.permutations(unknown, k):
            for diagnosis in (0, 1):
                env = reset(record, catalog)
                total = 0.0
                for j in queries:
                    env, r, _ = respond(env, Action.query(j), rewards)
                    total += r
                _, r, _ = respond(env, Action.diagnose(diagnosis), rewards)
                total += r
                if best is None or total > best[0]:
                    best = (total, queries, diagnosis)

    implicit_positives = {1, 2}
    reference = len(implicit_positives) * rewards.positive_answer_query \
        + rewards.correct_diagnosis
    assert best[0] == pytest.approx(reference)
    assert set(best[1]) == implicit_positives and best[2] == 0
