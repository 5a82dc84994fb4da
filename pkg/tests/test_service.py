"""Session service: create, step, undo, snapshot, search suggestions."""

import threading

import pytest
from fastapi.testclient import TestClient

from geosolver.service.app import create_app

MIDPOINT = {
    "problem_id": 900,
    "construction_cdl": ["Collinear(AMB)"],
    "text_cdl": ["Equal(LengthOfLine(AM),LengthOfLine(MB))"],
    "goal_cdl": "Relation(IsMidpointOfLine(M,AB))",
    "theorem_seqs": ["midpoint_of_line_judgment"],
}

TRIANGLE = {
    "problem_id": 901,
    "construction_cdl": ["Shape(AB,BC,CA)"],
    "text_cdl": ["Equal(MeasureOfAngle(ABC),60)", "Equal(MeasureOfAngle(BCA),70)"],
    "goal_cdl": "Value(MeasureOfAngle(CAB))",
    "theorem_seqs": ["triangle_angle_sum"],
}


@pytest.fixture(scope="module")
def client():
    return TestClient(create_app())


def create_session(client, problem=MIDPOINT):
    response = client.post("/sessions", json={"problem": problem})
    assert response.status_code == 201, response.text
    return response.json()


class TestCreateSession:
    def test_valid_problem_created_with_conditions(self, client):
        state = create_session(client)
        assert state["conditions"]
        assert state["goal"]["status"] == "unsolved"
        assert "midpoint_of_line_judgment" in state["applicable_theorems"]

    def test_malformed_goal_rejected_with_statement(self, client):
        bad = dict(MIDPOINT, goal_cdl="Value(LengthOfLine(XY))")
        response = client.post("/sessions", json={"problem": bad})
        assert response.status_code == 422
        assert "XY" in response.json()["detail"]

    def test_two_creates_distinct_ids(self, client):
        a = create_session(client)
        b = create_session(client)
        assert a["session_id"] != b["session_id"]

    def test_bundled_problem_by_id(self, client):
        response = client.post("/sessions", json={"problem_id": 1})
        assert response.status_code == 201
        assert response.json()["problem_id"] == 1

    def test_unknown_bundled_id_404(self, client):
        response = client.post("/sessions", json={"problem_id": 999999})
        assert response.status_code == 404


class TestApplyStep:
    def test_valid_step_solves_goal(self, client):
        state = create_session(client)
        sid = state["session_id"]
        response = client.post(f"/sessions/{sid}/steps",
                               json={"theorem": "midpoint_of_line_judgment"})
        assert response.status_code == 200
        report = response.json()
        assert len(report["new_conditions"]) >= 1
        assert report["goal"]["status"] == "solved"
        edges = report["hypertree_delta"]["edges"]
        assert [e for e in edges if e["theorem"] == "midpoint_of_line_judgment"]

    def test_unknown_theorem_422(self, client):
        sid = create_session(client)["session_id"]
        response = client.post(f"/sessions/{sid}/steps",
                               json={"theorem": "nope"})
        assert response.status_code == 422

    def test_unknown_session_404(self, client):
        response = client.post("/sessions/does-not-exist/steps",
                               json={"theorem": "midpoint_of_line_judgment"})
        assert response.status_code == 404

    def test_no_match_step_is_empty_success(self, client):
        sid = create_session(client, TRIANGLE)["session_id"]
        response = client.post(f"/sessions/{sid}/steps",
                               json={"theorem": "vertical_angle"})
        assert response.status_code == 200
        assert response.json()["new_conditions"] == []

    def test_concurrent_mutations_one_wins(self, client, monkeypatch):
        import geosolver.service.app as service_app

        sid = create_session(client, TRIANGLE)["session_id"]
        entered = threading.Event()
        release = threading.Event()
        original = service_app.interactive_apply

        def slow_apply(*args, **kwargs):
            entered.set()  # first mutation is now inside the lock
            assert release.wait(timeout=5)
            return original(*args, **kwargs)

        monkeypatch.setattr(service_app, "interactive_apply", slow_apply)
        statuses = []

        def hit():
            r = client.post(f"/sessions/{sid}/steps",
                            json={"theorem": "triangle_angle_sum"})
            statuses.append(r.status_code)

        first = threading.Thread(target=hit)
        first.start()
        assert entered.wait(timeout=5)
        second = threading.Thread(target=hit)
        second.start()
        second.join(timeout=5)  # rejected while the first still holds the lock
        assert statuses == [409]
        release.set()
        first.join(timeout=5)
        assert sorted(statuses) == [200, 409]


class TestUndo:
    def test_apply_then_undo_round_trip(self, client):
        state = create_session(client)
        sid = state["session_id"]
        before = client.get(f"/sessions/{sid}").json()
        client.post(f"/sessions/{sid}/steps",
                    json={"theorem": "midpoint_of_line_judgment"})
        response = client.post(f"/sessions/{sid}/undo")
        assert response.status_code == 200
        after = response.json()
        assert after["conditions"] == before["conditions"]
        assert after["goal"] == before["goal"]
        assert after["hypertree"] == before["hypertree"]

    def test_undo_without_checkpoint_409(self, client):
        sid = create_session(client)["session_id"]
        assert client.post(f"/sessions/{sid}/undo").status_code == 409

    def test_undo_twice_after_one_apply_409(self, client):
        sid = create_session(client)["session_id"]
        client.post(f"/sessions/{sid}/steps",
                    json={"theorem": "midpoint_of_line_judgment"})
        assert client.post(f"/sessions/{sid}/undo").status_code == 200
        assert client.post(f"/sessions/{sid}/undo").status_code == 409

    def test_reapply_after_undo_reproduces_state(self, client):
        sid = create_session(client)["session_id"]
        client.post(f"/sessions/{sid}/steps",
                    json={"theorem": "midpoint_of_line_judgment"})
        first = client.get(f"/sessions/{sid}").json()
        client.post(f"/sessions/{sid}/undo")
        client.post(f"/sessions/{sid}/steps",
                    json={"theorem": "midpoint_of_line_judgment"})
        second = client.get(f"/sessions/{sid}").json()
        assert first["conditions"] == second["conditions"]
        assert first["goal"] == second["goal"]


class TestSnapshot:
    def test_snapshot_is_side_effect_free(self, client):
        sid = create_session(client)["session_id"]
        a = client.get(f"/sessions/{sid}").json()
        b = client.get(f"/sessions/{sid}").json()
        assert a == b

    def test_fresh_session_edges_only_setup(self, client):
        state = create_session(client)
        for edge in state["hypertree"]["edges"]:
            assert edge["theorem"] in ("prerequisite", "extended")
        assert state["theorem_log"] == []

    def test_solved_session_shows_answer(self, client):
        sid = create_session(client, TRIANGLE)["session_id"]
        client.post(f"/sessions/{sid}/steps",
                    json={"theorem": "triangle_angle_sum"})
        state = client.get(f"/sessions/{sid}").json()
        assert state["goal"]["status"] == "solved"
        assert state["goal"]["answer"] == "50"


class TestSearchSuggestion:
    def test_one_step_problem_suggests_solving_theorem(self, client):
        sid = create_session(client)["session_id"]
        response = client.post(f"/sessions/{sid}/search",
                               json={"method": "forward", "strategy": "bfs",
                                     "budget": 15})
        assert response.status_code == 200
        report = response.json()
        assert report["outcome"] == "solved"
        assert "midpoint_of_line_judgment" in report["theorem_seqs"]

    def test_suggestion_does_not_mutate_session(self, client):
        sid = create_session(client)["session_id"]
        before = client.get(f"/sessions/{sid}").json()
        client.post(f"/sessions/{sid}/search",
                    json={"method": "backward", "strategy": "bfs", "budget": 15})
        after = client.get(f"/sessions/{sid}").json()
        assert before == after

    def test_zero_budget_no_suggestion(self, client):
        sid = create_session(client)["session_id"]
        report = client.post(f"/sessions/{sid}/search",
                             json={"budget": 0}).json()
        assert report["theorem_seqs"] == []

    def test_bad_strategy_422(self, client):
        sid = create_session(client)["session_id"]
        assert client.post(f"/sessions/{sid}/search",
                           json={"strategy": "zigzag"}).status_code == 422


class TestSnapshotWriteThrough:
    def test_mutations_write_snapshot_files(self, tmp_path):
        app = create_app(snapshot_dir=tmp_path)
        local = TestClient(app)
        state = local.post("/sessions", json={"problem": MIDPOINT}).json()
        sid = state["session_id"]
        local.post(f"/sessions/{sid}/steps",
                   json={"theorem": "midpoint_of_line_judgment"})
        written = list(tmp_path.glob("*.json"))
        assert [p.stem for p in written] == [sid]
        import json as json_mod
        doc = json_mod.loads(written[0].read_text())
        assert {e["theorem"] for e in doc["edges"]} >= {"midpoint_of_line_judgment"}
