"""Session API: happy path, error envelope, state machine, concurrency."""

import random
import threading

import pytest
from fastapi.testclient import TestClient

from bayesdm.checkpoint import Checkpoint, catalog_hash
from bayesdm.data import synth_generate
from bayesdm.dialogue import DialogueConfig
from bayesdm.service import create_app
from bayesdm.training import Critic, TrainConfig, build_model
from tests.conftest import signature_spec


@pytest.fixture(scope="module")
def checkpoint():
    spec = signature_spec()
    catalog = spec.catalog()
    records = synth_generate(spec, 600, seed=301)
    model = build_model(catalog, records, seed=3)
    return Checkpoint(model=model, critic=Critic(catalog.n, hidden=8, seed=3),
                      dialogue_config=DialogueConfig(epsilon_d=0.92, t_max=6),
                      train_config=TrainConfig(episodes=0, seed=3))


@pytest.fixture
def client(checkpoint):
    return TestClient(create_app(checkpoint))


def test_create_session_happy_path(client):
    r = client.post("/api/sessions", json={"symptoms": {"symptom_0": True}})
    assert r.status_code == 201
    body = r.json()
    assert body["status"] in ("awaiting_answer", "diagnosed")
    if body["status"] == "awaiting_answer":
        assert body["question"]["symptom"] in body["trace_history"][-1]["action"]["name"]
    assert len(body["trace_history"]) >= 1


def test_create_session_empty_symptoms_422(client):
    r = client.post("/api/sessions", json={"symptoms": {}})
    assert r.status_code == 422
    body = r.json()
    assert body["code"] == "empty_symptoms"
    assert set(body) == {"code", "message", "details"}


def test_create_session_unknown_symptom_fuzzy_candidates(client):
    r = client.post("/api/sessions", json={"symptoms": {"symptom00": True}})
    assert r.status_code == 422
    body = r.json()
    assert body["code"] == "unknown_symptom"
    assert any(c.startswith("symptom_") for c in body["details"]["candidates"])


def test_immediate_diagnosis_when_confident(checkpoint):
    app = create_app(Checkpoint(model=checkpoint.model, critic=checkpoint.critic,
                                dialogue_config=DialogueConfig(epsilon_d=0.5, t_max=6),
                                train_config=checkpoint.train_config))
    client = TestClient(app)
    r = client.post("/api/sessions", json={"symptoms": {"symptom_0": True}})
    body = r.json()
    assert body["status"] == "diagnosed"
    assert body["report"] is not None
    assert 0.0 <= body["report"]["confidence"] <= 1.0


def test_answer_flow_until_diagnosis(client):
    r = client.post("/api/sessions", json={"symptoms": {"symptom_11": True}})
    body = r.json()
    sid = body["id"]
    answers = 0
    while body["status"] == "awaiting_answer":
        r = client.post(f"/api/sessions/{sid}/answer",
                        json={"answer": False, "turn": body["question"]["turn"]})
        assert r.status_code == 200
        body = r.json()
        answers += 1
        assert answers <= 6
        assert len(body["trace_history"]) == answers + 1  # full history echoed
    assert body["status"] == "diagnosed"
    assert body["report"]["disease"] in [f"disease_{i}" for i in range(4)]


def test_answer_after_diagnosis_409(checkpoint):
    app = create_app(Checkpoint(model=checkpoint.model, critic=checkpoint.critic,
                                dialogue_config=DialogueConfig(epsilon_d=0.5, t_max=6),
                                train_config=checkpoint.train_config))
    client = TestClient(app)
    body = client.post("/api/sessions", json={"symptoms": {"symptom_0": True}}).json()
    assert body["status"] == "diagnosed"
    r = client.post(f"/api/sessions/{body['id']}/answer", json={"answer": True})
    assert r.status_code == 409
    assert r.json()["code"] == "already_diagnosed"


def test_unknown_session_404(client):
    assert client.get("/api/sessions/nope").status_code == 404
    assert client.post("/api/sessions/nope/answer", json={"answer": True}).status_code == 404
    assert client.get("/api/sessions/nope/explain").status_code == 404


def test_explain_endpoint_matches_history(client):
    body = client.post("/api/sessions", json={"symptoms": {"symptom_11": True}}).json()
    sid = body["id"]
    while body["status"] == "awaiting_answer":
        body = client.post(f"/api/sessions/{sid}/answer",
                           json={"answer": False, "turn": body["question"]["turn"]}).json()
    explained = client.get(f"/api/sessions/{sid}/explain").json()
    assert len(explained["turns"]) == len(body["trace_history"])
    for turn in explained["turns"]:
        assert "mu" in turn and "dominant_logic" in turn
        assert sum(turn["posterior"]) == pytest.approx(1.0, abs=1e-6)


def test_catalog_and_meta(client, checkpoint):
    cat = client.get("/api/catalog").json()
    assert cat["diseases"] == list(checkpoint.model.catalog.diseases)
    meta = client.get("/api/model/meta").json()
    assert meta["catalog_hash"] == catalog_hash(checkpoint.model.catalog)
    assert meta["epsilon_d"] == 0.92
    assert meta["t_max"] == 6


def test_no_model_503():
    client = TestClient(create_app(None))
    r = client.post("/api/sessions", json={"symptoms": {"x": True}})
    assert r.status_code == 503
    assert r.json()["code"] == "no_model"


def test_stale_answer_409(client):
    body = client.post("/api/sessions", json={"symptoms": {"symptom_11": True}}).json()
    if body["status"] != "awaiting_answer":
        pytest.skip("dialogue ended immediately")
    sid = body["id"]
    wrong_turn = body["question"]["turn"] + 1
    r = client.post(f"/api/sessions/{sid}/answer",
                    json={"answer": True, "turn": wrong_turn})
    assert r.status_code == 409
    assert r.json()["code"] == "stale_answer"


def test_concurrent_answers_serialize(client):
    body = client.post("/api/sessions", json={"symptoms": {"symptom_11": True}}).json()
    if body["status"] != "awaiting_answer":
        pytest.skip("dialogue ended immediately")
    sid = body["id"]
    turn = body["question"]["turn"]
    results = []

    def hit():
        r = client.post(f"/api/sessions/{sid}/answer",
                        json={"answer": False, "turn": turn})
        results.append(r.status_code)

    threads = [threading.Thread(target=hit) for _ in range(4)]
    for t in threads:
        t.start()
    for t in threads:
        t.join()
    assert sorted(results) == [200, 409, 409, 409]


def test_session_ttl_expiry(checkpoint):
    import time

    app = create_app(checkpoint, ttl_seconds=0.05)
    client = TestClient(app)
    body = client.post("/api/sessions", json={"symptoms": {"symptom_11": True}}).json()
    assert body["status"] == "awaiting_answer"
    time.sleep(0.1)
    snap = client.get(f"/api/sessions/{body['id']}").json()
    assert snap["status"] == "expired"
    r = client.post(f"/api/sessions/{body['id']}/answer", json={"answer": True})
    assert r.status_code == 409
    assert r.json()["code"] == "expired"


def test_state_machine_random_call_sequences(client):
    # admissible transitions only: awaiting -> awaiting | diagnosed; diagnosed absorbs
    rng = random.Random(13)
    for trial in range(10):
        body = client.post("/api/sessions",
                           json={"symptoms": {f"symptom_{rng.randrange(12)}": True}}).json()
        sid = body["id"]
        seen = [body["status"]]
        for _ in range(12):
            op = rng.choice(["answer", "get", "explain"])
            if op == "answer":
                turn = body["question"]["turn"] if body.get("question") else 0
                r = client.post(f"/api/sessions/{sid}/answer",
                                json={"answer": rng.random() < 0.5, "turn": turn})
                if body["status"] == "diagnosed":
                    assert r.status_code == 409
                elif r.status_code == 200:
                    body = r.json()
            elif op == "get":
                body = client.get(f"/api/sessions/{sid}").json()
            else:
                assert client.get(f"/api/sessions/{sid}/explain").status_code == 200
            seen.append(body["status"])
        for a, b in zip(seen, seen[1:]):
            assert (a, b) in {("awaiting_answer", "awaiting_answer"),
                              ("awaiting_answer", "diagnosed"),
                              ("diagnosed", "diagnosed")}, (a, b)
