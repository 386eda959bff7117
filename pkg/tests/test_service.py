import json

import pytest
from fastapi.testclient import TestClient

from claimarena.game import GameConfig, GameEngine
from claimarena.events import EventLog
from claimarena.retrieval import PassageRetriever, SparseIndex, build_sparse_index
from claimarena.service import ServiceConfig, build_engine, create_app, replay

from conftest import FakeClock, GAME_RECORDS, make_corpus, write_jsonl


@pytest.fixture
def service_env(tmp_path):
    """Corpus dir + sparse index + config on disk, the way `serve` finds them."""
    store = make_corpus(tmp_path, GAME_RECORDS)
    index_path = tmp_path / "sparse.idx"
    build_sparse_index(store).save(index_path)
    config = ServiceConfig(
        corpus_dir=str(tmp_path / "corpus"),
        sparse_index_path=str(index_path),
        event_log_path=str(tmp_path / "events.jsonl"),
        seed=7,
    )
    return config


@pytest.fixture
def service(service_env):
    clock = FakeClock()
    engine = build_engine(service_env, clock=clock)
    client = TestClient(create_app(engine))
    return client, engine, clock, service_env


def _author_claim_api(client, player, label, text, span_hint, category=None):
    for _ in range(40):
        started = client.post(
            "/author/start", json={"category": category}, headers={"X-Player-Id": player}
        )
        assert started.status_code == 200, started.text
        page = started.json()["page"]
        if any(span_hint in p["text"] for p in page["passages"]):
            response = client.post(
                "/author/submit",
                json={
                    "session_id": started.json()["session_id"],
                    "text": text,
                    "label": label,
                    "spans": [span_hint],
                },
            )
            assert response.status_code == 200, response.text
            return response.json()
    raise AssertionError(f"no page carries {span_hint!r}")


def test_health_reports_version_and_corpus_stats(service):
    client, _, _, _ = service
    body = client.get("/health").json()
    assert body["status"] == "ok"
    assert body["passage_count"] == 6
    assert body["page_count"] == 3
    assert "version" in body


def test_categories_listed(service):
    client, _, _, _ = service
    assert client.get("/categories").json()["categories"] == ["History", "Nature"]


def test_author_retrieve_includes_highlights_and_gold_rank(service):
    client, engine, _, _ = service
    started = client.post("/author/start", json={"category": "Nature"},
                          headers={"X-Player-Id": "alice"}).json()
    gold = started["page"]["passages"][0]
    response = client.post(
        "/author/retrieve",
        json={
            "session_id": started["session_id"],
            "draft": gold["text"],
            "gold_passage_id": gold["id"],
        },
    ).json()
    assert response["gold_rank"] == 1
    assert response["hits"][0]["highlights"]


def test_full_flow_matches_direct_engine_calls(service_env, tmp_path):
    """The same scripted session produces identical ledgers over HTTP and direct calls."""

    def run(execute, clock):
        execute("author", player="alice", label="entailed",
                text="the aster moth has silver bands",
                span="silver bands on its wings")
        clock.advance(3)
        execute("author", player="bob", label="refuted",
                text="the granite bridge took one year to build",
                span="after seven years of work")
        clock.advance(2)
        round_info = execute("vote_start", player="carol")
        clock.advance(12)
        execute("hint", round_id=round_info["round_id"])
        clock.advance(5)
        execute("answer", round_id=round_info["round_id"],
                claim_id=round_info["refuted_claim_id"])
        execute("like", round_id=round_info["round_id"],
                claim_id=round_info["entailed_claim_id"])

    # Direct engine path.
    clock_a = FakeClock()
    store = make_corpus(tmp_path, GAME_RECORDS, name="direct_corpus")
    retriever = PassageRetriever(store, build_sparse_index(store))
    engine_a = GameEngine(store, retriever, GameConfig(seed=7),
                          event_log=EventLog(), clock=clock_a)

    def execute_direct(action, **kw):
        if action == "author":
            for _ in range(40):
                session = engine_a.start_authoring(kw["player"], None)
                passages = [engine_a.corpus.get_passage(p) for p in session.page.passage_ids]
                if any(kw["span"] in p.text for p in passages):
                    engine_a.submit_claim(session.session_id, kw["text"], kw["label"], [kw["span"]])
                    return None
            raise AssertionError("page not found")
        if action == "vote_start":
            round_ = engine_a.start_vote(kw["player"])
            return {
                "round_id": round_.round_id,
                "refuted_claim_id": round_.refuted_claim_id,
                "entailed_claim_id": round_.entailed_claim_id,
            }
        if action == "hint":
            engine_a.request_hint(kw["round_id"])
            return None
        if action == "answer":
            engine_a.score_vote(kw["round_id"], kw["claim_id"])
            return None
        if action == "like":
            engine_a.record_like(kw["round_id"], kw["claim_id"])
            return None
        raise AssertionError(action)

    run(execute_direct, clock_a)

    # HTTP path over an identically seeded engine.
    clock_b = FakeClock()
    engine_b = build_engine(service_env, clock=clock_b)
    client = TestClient(create_app(engine_b))

    def execute_api(action, **kw):
        if action == "author":
            _author_claim_api(client, kw["player"], kw["label"], kw["text"], kw["span"])
            return None
        if action == "vote_start":
            body = client.post("/vote/start", json={},
                               headers={"X-Player-Id": kw["player"]}).json()
            round_ = engine_b.rounds[body["round_id"]]
            return {
                "round_id": body["round_id"],
                "refuted_claim_id": round_.refuted_claim_id,
                "entailed_claim_id": round_.entailed_claim_id,
            }
        if action == "hint":
            assert client.post("/vote/hint", json={"round_id": kw["round_id"]}).status_code == 200
            return None
        if action == "answer":
            response = client.post("/vote/answer", json=kw).json()
            assert response["correct"] is True
            return None
        if action == "like":
            assert client.post("/vote/like", json=kw).status_code == 200
            return None
        raise AssertionError(action)

    run(execute_api, clock_b)

    assert engine_a.score_events == engine_b.score_events
    assert engine_a.ledger == engine_b.ledger
    assert engine_a.state_digest() == engine_b.state_digest()
    # Ledger sanity: hint+elapsed left 120-17-30=73 to the voter, 47 to authors.
    assert engine_b.ledger["carol"] == 73
    assert engine_b.ledger["alice"] == 24 + 10  # odd point + like bonus
    assert engine_b.ledger["bob"] == 23


def test_timer_is_server_side(service):
    client, engine, clock, _ = service
    _author_claim_api(client, "alice", "entailed", "moth claim",
                      "silver bands on its wings")
    _author_claim_api(client, "bob", "refuted", "bridge claim",
                      "after seven years of work")
    body = client.post("/vote/start", json={}, headers={"X-Player-Id": "carol"}).json()
    round_ = engine.rounds[body["round_id"]]
    clock.advance(30)
    response = client.post(
        "/vote/answer",
        json={"round_id": body["round_id"], "claim_id": round_.refuted_claim_id},
    ).json()
    assert response["score"]["voter_points"] == 90


def test_hint_endpoint_deducts_thirty(service):
    client, engine, clock, _ = service
    _author_claim_api(client, "alice", "entailed", "moth claim",
                      "silver bands on its wings")
    _author_claim_api(client, "bob", "refuted", "bridge claim",
                      "after seven years of work")
    body = client.post("/vote/start", json={}, headers={"X-Player-Id": "carol"}).json()
    assert body["remaining"] == 120
    clock.advance(10)
    hinted = client.post("/vote/hint", json={"round_id": body["round_id"]}).json()
    assert hinted["remaining"] == 80
    assert hinted["passage"]["text"]


def test_expired_round_resolves_to_authors(service):
    client, engine, clock, _ = service
    _author_claim_api(client, "alice", "entailed", "moth claim",
                      "silver bands on its wings")
    _author_claim_api(client, "bob", "refuted", "bridge claim",
                      "after seven years of work")
    body = client.post("/vote/start", json={}, headers={"X-Player-Id": "carol"}).json()
    clock.advance(130)
    response = client.post("/vote/answer", json={"round_id": body["round_id"]}).json()
    assert response["unanswered"] is True
    score = response["score"]
    assert score["voter_points"] == 0
    assert sum(score["author_points"].values()) == 120


def test_game_errors_map_to_409(service):
    client, _, _, _ = service
    response = client.post("/vote/start", json={}, headers={"X-Player-Id": "carol"})
    assert response.status_code == 409
    assert "entailed" in response.json()["error"]


def test_unknown_category_maps_to_404(service):
    client, _, _, _ = service
    response = client.post("/author/start", json={"category": "Astrology"},
                           headers={"X-Player-Id": "alice"})
    assert response.status_code == 404


def test_leaderboard_and_stats(service):
    client, engine, clock, _ = service
    _author_claim_api(client, "alice", "entailed", "moth claim",
                      "silver bands on its wings")
    _author_claim_api(client, "bob", "refuted", "bridge claim",
                      "after seven years of work")
    body = client.post("/vote/start", json={}, headers={"X-Player-Id": "carol"}).json()
    round_ = engine.rounds[body["round_id"]]
    client.post("/vote/answer", json={"round_id": body["round_id"],
                                      "claim_id": round_.refuted_claim_id})
    players = client.get("/leaderboard").json()["players"]
    assert players[0] == {"player_id": "carol", "points": 120}
    stats = client.get("/stats").json()
    assert stats["claims"] == 2
    assert stats["rounds_resolved"] == 1


def test_restart_restores_open_round_from_log(service_env):
    clock = FakeClock()
    engine = build_engine(service_env, clock=clock)
    client = TestClient(create_app(engine))
    _author_claim_api(client, "alice", "entailed", "moth claim",
                      "silver bands on its wings")
    _author_claim_api(client, "bob", "refuted", "bridge claim",
                      "after seven years of work")
    body = client.post("/vote/start", json={}, headers={"X-Player-Id": "carol"}).json()
    clock.advance(25)
    pre_crash_digest = engine.state_digest()

    revived = build_engine(service_env, clock=clock)  # simulated restart
    assert revived.state_digest() == pre_crash_digest
    round_ = revived.rounds[body["round_id"]]
    assert round_.outcome is None
    event = revived.score_vote(body["round_id"], round_.refuted_claim_id)
    assert event.voter_points == 95  # started_at survived the restart


def test_replay_prefix_equals_live_state_at_each_step(service):
    client, engine, clock, config = service
    _author_claim_api(client, "alice", "entailed", "moth claim",
                      "silver bands on its wings")
    _author_claim_api(client, "bob", "refuted", "bridge claim",
                      "after seven years of work")
    records = engine.event_log.records()
    for cut in range(len(records) + 1):
        twin = replay(records[:cut], engine.corpus, engine.retriever, engine.config)
        assert isinstance(twin.state_digest(), str)
    full = replay(records, engine.corpus, engine.retriever, engine.config)
    assert full.state_digest() == engine.state_digest()


def test_api_session_views_for_both_roles(service):
    from claimarena.service import api_session

    client, engine, clock, _ = service
    started = client.post("/author/start", json={},
                          headers={"X-Player-Id": "alice"}).json()
    view = api_session(engine, started["session_id"])
    assert view.role == "author"
    assert view.player_id == "alice"
    assert view.expiry == clock.now + engine.config.session_ttl_seconds

    _author_claim_api(client, "alice", "entailed", "moth claim",
                      "silver bands on its wings")
    _author_claim_api(client, "bob", "refuted", "bridge claim",
                      "after seven years of work")
    round_body = client.post("/vote/start", json={},
                             headers={"X-Player-Id": "carol"}).json()
    voter_view = api_session(engine, round_body["round_id"])
    assert voter_view.role == "voter"
    assert voter_view.player_id == "carol"
    with pytest.raises(KeyError):
        api_session(engine, "nope")


def test_service_config_file_and_env_overrides(tmp_path, monkeypatch):
    config_path = tmp_path / "config.json"
    config_path.write_text(json.dumps({"port": 9100, "pot": 100, "corpus_dir": "c"}))
    monkeypatch.setenv("CLAIMARENA_POT", "200")
    monkeypatch.setenv("CLAIMARENA_AUTHOR_SPLIT", "refuted_only")
    config = ServiceConfig.from_file(config_path)
    assert config.port == 9100
    assert config.pot == 200
    assert config.author_split == "refuted_only"
    assert config.corpus_dir == "c"
    game_config = config.game_config()
    assert game_config.pot == 200


def test_service_config_rejects_unknown_keys(tmp_path):
    config_path = tmp_path / "config.json"
    config_path.write_text(json.dumps({"no_such_option": 1}))
    with pytest.raises(ValueError, match="no_such_option"):
        ServiceConfig.from_file(config_path)
