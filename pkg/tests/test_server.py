import json
import socket
import threading
import time

import numpy as np
import pytest
from fastapi.testclient import TestClient

from taxoforge.link_pruning import LogisticLinkScorer
from taxoforge.recommender import Listing, save_listings
from taxoforge.server import create_app
from taxoforge.taxonomy import ROOT_ID, NodeKind, Taxonomy
from taxoforge.workspace import Workspace, save_scorer


def build_workspace(tmp_path) -> Workspace:
    t = Taxonomy()
    interior = t.add_node("interior", ROOT_ID, NodeKind.CATEGORY)
    exterior = t.add_node("exterior", ROOT_ID, NodeKind.CATEGORY)
    t.add_node("gym", interior, NodeKind.KEYPHRASE)
    t.add_node("loft", interior, NodeKind.KEYPHRASE)
    t.add_node("patio", exterior, NodeKind.KEYPHRASE)
    t.save(tmp_path / "taxonomy.json")

    scorer = LogisticLinkScorer(epochs=5, lr=0.5, seed=0)
    X = np.array([[0.9, 0, 0, 0, 0, 0], [0.1, 0, 0, 0, 0, 0]] * 5)
    y = np.array([1.0, 0.0] * 5)
    save_scorer(scorer.fit(X, y), tmp_path / "scorer.json")

    save_listings(
        [
            Listing("L1", ("gym",)),
            Listing("L2", ("gym", "patio")),
            Listing("L3", ("loft",)),
            Listing("L4", ("patio",)),
        ],
        tmp_path / "listings.jsonl",
    )
    return Workspace.open(tmp_path)


@pytest.fixture()
def api(tmp_path):
    workspace = build_workspace(tmp_path)
    client = TestClient(create_app(workspace))
    return {"client": client, "workspace": workspace, "root": tmp_path}


class TestReads:
    def test_stats(self, api):
        body = api["client"].get("/stats").json()
        assert body == {
            "num_nodes": 6,
            "num_edges": 5,
            "num_parents": 2,
            "num_leaves": 3,
            "max_depth": 2,
            "pending_suggestions": 0,
        }

    def test_node_lookup(self, api):
        t = api["workspace"].taxonomy
        gym = t.find_label("gym")
        body = api["client"].get(f"/node/{gym}").json()
        assert body["label"] == "gym"
        assert [p["label"] for p in body["path_to_root"]] == ["gym", "interior", "root"]
        assert body["children"] == []
        interior = t.find_label("interior")
        body = api["client"].get(f"/node/{interior}").json()
        assert {c["label"] for c in body["children"]} == {"gym", "loft"}

    def test_node_404(self, api):
        assert api["client"].get("/node/999").status_code == 404

    def test_recommend_baseline(self, api):
        body = api["client"].get("/recommend", params={"q": "gym", "method": "baseline"}).json()
        assert sorted(body["candidates"]) == ["L1", "L2"]

    def test_recommend_taxonomy_resolutions(self, api):
        r1 = api["client"].get("/recommend", params={"q": "gym", "method": "taxonomy", "r": 1}).json()
        r2 = api["client"].get("/recommend", params={"q": "gym", "method": "taxonomy", "r": 2}).json()
        assert set(r1["candidates"]) == {"L1", "L2", "L3"}  # interior listings
        assert set(r1["candidates"]) <= set(r2["candidates"])

    def test_recommend_validation(self, api):
        assert api["client"].get("/recommend", params={"q": "gym", "method": "bogus"}).status_code == 422
        assert api["client"].get("/recommend", params={"q": "gym", "r": 0}).status_code == 422
        assert api["client"].get("/recommend", params={"q": "!!!"}).status_code == 422

    def test_503_during_reload(self, api):
        api["workspace"].reloading = True
        assert api["client"].get("/stats").status_code == 503
        api["workspace"].reloading = False
        assert api["client"].get("/stats").status_code == 200


class TestSuggestionLifecycle:
    def test_batch_then_approve_read_your_writes(self, api):
        client = api["client"]
        created = client.post("/suggestions/batch", json={"phrases": ["wine cellar"]}).json()
        assert len(created["created"]) == 1
        sid = created["created"][0]["id"]

        pending = client.get("/suggestions", params={"status": "pending"}).json()
        assert [s["id"] for s in pending] == [sid]

        approved = client.post(f"/suggestions/{sid}/approve", json={"reviewer_note": "good"})
        assert approved.status_code == 200
        assert approved.json()["status"] == "approved"

        parent = approved.json()["proposed_parent"]
        node = api["client"].get(f"/node/{parent}").json()
        assert "wine cellar" in {c["label"] for c in node["children"]}

        stats = client.get("/stats").json()
        assert stats["num_nodes"] == 7
        assert stats["pending_suggestions"] == 0

    def test_double_decision_conflict(self, api):
        client = api["client"]
        sid = client.post("/suggestions/batch", json={"phrases": ["koi pond"]}).json()["created"][0]["id"]
        assert client.post(f"/suggestions/{sid}/reject").status_code == 200
        assert client.post(f"/suggestions/{sid}/approve").status_code == 409
        assert client.post(f"/suggestions/{sid}/reject").status_code == 409

    def test_unknown_suggestion_404(self, api):
        assert api["client"].post("/suggestions/55/approve").status_code == 404

    def test_malformed_batch_422(self, api):
        client = api["client"]
        assert client.post("/suggestions/batch", json={}).status_code == 422
        assert client.post("/suggestions/batch", json={"phrases": []}).status_code == 422
        assert client.post("/suggestions/batch", json={"phrases": ["x"], "nope": 1}).status_code == 422

    def test_existing_phrase_skipped(self, api):
        body = api["client"].post("/suggestions/batch", json={"phrases": ["gym"]}).json()
        assert body["created"] == []
        assert body["skipped_existing"] == ["gym"]

    def test_status_filter_validation(self, api):
        assert api["client"].get("/suggestions", params={"status": "weird"}).status_code == 422


class TestDurability:
    def test_restart_replays_journal_identically(self, api, tmp_path):
        client = api["client"]
        ids = [
            s["id"]
            for s in client.post(
                "/suggestions/batch", json={"phrases": ["wine cellar", "koi pond", "solar roof"]}
            ).json()["created"]
        ]
        client.post(f"/suggestions/{ids[0]}/approve")
        client.post(f"/suggestions/{ids[1]}/reject")
        stats_before = client.get("/stats").json()
        taxonomy_before = api["workspace"].taxonomy.to_json()

        reopened = Workspace.open(tmp_path)
        client2 = TestClient(create_app(reopened))
        assert client2.get("/stats").json() == stats_before
        assert reopened.taxonomy.to_json() == taxonomy_before


def _free_port() -> int:
    with socket.socket() as sock:
        sock.bind(("127.0.0.1", 0))
        return sock.getsockname()[1]


class TestConcurrentDecisions:
    def test_exactly_one_200_one_409_over_real_http(self, tmp_path):
        """Two simultaneous approvals race through a live uvicorn server."""
        import httpx
        import uvicorn

        workspace = build_workspace(tmp_path)
        port = _free_port()
        config = uvicorn.Config(
            create_app(workspace), host="127.0.0.1", port=port, log_level="error"
        )
        server = uvicorn.Server(config)
        thread = threading.Thread(target=server.run, daemon=True)
        thread.start()
        try:
            deadline = time.time() + 10
            while not server.started:
                if time.time() > deadline:
                    raise RuntimeError("server did not start")
                time.sleep(0.02)
            base = f"http://127.0.0.1:{port}"
            with httpx.Client(base_url=base, timeout=10) as client:
                sid = client.post("/suggestions/batch", json={"phrases": ["wine cellar"]}).json()[
                    "created"
                ][0]["id"]
                statuses = []
                barrier = threading.Barrier(2)

                def approve():
                    barrier.wait()
                    with httpx.Client(base_url=base, timeout=10) as c:
                        statuses.append(c.post(f"/suggestions/{sid}/approve").status_code)

                threads = [threading.Thread(target=approve) for _ in range(2)]
                for t in threads:
                    t.start()
                for t in threads:
                    t.join()
                assert sorted(statuses) == [200, 409]
                # the taxonomy took the change exactly once
                stats = client.get("/stats").json()
                assert stats["num_nodes"] == 7
        finally:
            server.should_exit = True
            thread.join(timeout=10)
