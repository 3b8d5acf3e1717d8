import json
import threading

import numpy as np
import pytest

from taxoforge.errors import (
    DataFormatError,
    SuggestionStateError,
    TaxoforgeError,
)
from taxoforge.link_pruning import LogisticLinkScorer, SuggestionStatus
from taxoforge.taxonomy import ROOT_ID, NodeKind, Taxonomy
from taxoforge.workspace import (
    Workspace,
    WorkspaceConfig,
    atomic_write_text,
    load_scorer,
    save_scorer,
)


def make_scorer() -> LogisticLinkScorer:
    scorer = LogisticLinkScorer(epochs=5, lr=0.5, seed=0)
    X = np.array([[0.9, 0, 0, 0, 0, 0], [0.1, 0, 0, 0, 0, 0]] * 5)
    y = np.array([1.0, 0.0] * 5)
    return scorer.fit(X, y)


@pytest.fixture()
def workspace(tmp_path):
    t = Taxonomy()
    interior = t.add_node("interior", ROOT_ID, NodeKind.CATEGORY)
    exterior = t.add_node("exterior", ROOT_ID, NodeKind.CATEGORY)
    t.add_node("gym", interior, NodeKind.KEYPHRASE)
    t.add_node("patio", exterior, NodeKind.KEYPHRASE)
    t.save(tmp_path / "taxonomy.json")
    save_scorer(make_scorer(), tmp_path / "scorer.json")
    ticks = iter(range(10_000))
    ws = Workspace.open(tmp_path, clock=lambda: f"t{next(ticks):04d}")
    return ws


class TestConfig:
    def test_defaults(self, tmp_path):
        cfg = WorkspaceConfig.from_dir(tmp_path)
        assert cfg.taxonomy_path == tmp_path / "taxonomy.json"
        assert cfg.alpha == 0.80
        assert cfg.prune_threshold == 0.5

    def test_overrides(self, tmp_path):
        (tmp_path / "workspace.json").write_text(
            json.dumps({"taxonomy": "tree.json", "alpha": 0.7, "port": 9000})
        )
        cfg = WorkspaceConfig.from_dir(tmp_path)
        assert cfg.taxonomy_path == tmp_path / "tree.json"
        assert cfg.alpha == 0.7
        assert cfg.port == 9000

    def test_unknown_fields_rejected(self, tmp_path):
        (tmp_path / "workspace.json").write_text('{"nope": 1}')
        with pytest.raises(DataFormatError):
            WorkspaceConfig.from_dir(tmp_path)


class TestAtomicWrite:
    def test_writes_and_replaces(self, tmp_path):
        path = tmp_path / "out.txt"
        atomic_write_text(path, "one")
        atomic_write_text(path, "two")
        assert path.read_text() == "two"
        leftovers = [p for p in tmp_path.iterdir() if p.name != "out.txt"]
        assert not leftovers  # no temp files left behind


class TestScorerFile:
    def test_round_trip(self, tmp_path):
        scorer = make_scorer()
        save_scorer(scorer, tmp_path / "scorer.json")
        loaded = load_scorer(tmp_path / "scorer.json")
        np.testing.assert_array_equal(loaded.weights_, scorer.weights_)
        assert loaded.bias_ == scorer.bias_

    def test_rejects_garbage(self, tmp_path):
        (tmp_path / "scorer.json").write_text("{}")
        with pytest.raises(DataFormatError):
            load_scorer(tmp_path / "scorer.json")


class TestSuggestionWorkflow:
    def test_batch_journals_before_ack(self, workspace):
        created = workspace.suggest_batch(["wine cellar"], top_k=1)
        assert len(created) == 1
        journal = workspace.config.journal_path.read_text().splitlines()
        assert len(journal) == 1
        record = json.loads(journal[0])
        assert record["event"] == "suggested"
        assert record["phrase"] == "wine cellar"

    def test_approve_mutates_and_journals(self, workspace):
        (created,) = workspace.suggest_batch(["wine cellar"], top_k=1)
        workspace.decide(created.id, "approve", note="ok")
        assert workspace.taxonomy.find_label("wine cellar") is not None
        events = [json.loads(l)["event"] for l in workspace.config.journal_path.read_text().splitlines()]
        assert events == ["suggested", "approved"]

    def test_double_decision_raises(self, workspace):
        (created,) = workspace.suggest_batch(["wine cellar"], top_k=1)
        workspace.decide(created.id, "approve")
        with pytest.raises(SuggestionStateError):
            workspace.decide(created.id, "reject")

    def test_unknown_suggestion(self, workspace):
        with pytest.raises(KeyError):
            workspace.decide(404, "approve")

    def test_replay_reconstructs_identical_taxonomy(self, workspace):
        created = workspace.suggest_batch(["wine cellar", "koi pond", "solar roof"], top_k=1)
        workspace.decide(created[0].id, "approve")
        workspace.decide(created[1].id, "reject")
        live_json = workspace.taxonomy.to_json()
        pending_before = {s.id for s in workspace.pending()}

        reopened = Workspace.open(workspace.config.root)
        assert reopened.taxonomy.to_json() == live_json
        assert {s.id for s in reopened.pending()} == pending_before
        by_id = {s.id: s for s in reopened.by_status(None)}
        assert by_id[created[0].id].status == SuggestionStatus.APPROVED
        assert by_id[created[1].id].status == SuggestionStatus.REJECTED
        # timestamps come back verbatim from the journal
        assert by_id[created[0].id].decided_at == created[0].decided_at

    def test_new_suggestions_after_replay_get_fresh_ids(self, workspace):
        created = workspace.suggest_batch(["wine cellar"], top_k=1)
        reopened = Workspace.open(workspace.config.root)
        more = reopened.suggest_batch(["koi pond"], top_k=1)
        assert more[0].id == created[0].id + 1

    def test_concurrent_decisions_exactly_one_wins(self, workspace):
        (created,) = workspace.suggest_batch(["wine cellar"], top_k=1)
        outcomes = []
        barrier = threading.Barrier(2)

        def attempt():
            barrier.wait()
            try:
                workspace.decide(created.id, "approve")
                outcomes.append("ok")
            except SuggestionStateError:
                outcomes.append("conflict")

        threads = [threading.Thread(target=attempt) for _ in range(2)]
        for t in threads:
            t.start()
        for t in threads:
            t.join()
        assert sorted(outcomes) == ["conflict", "ok"]

    def test_corrupt_journal_rejected(self, workspace):
        workspace.suggest_batch(["wine cellar"], top_k=1)
        with open(workspace.config.journal_path, "a") as fh:
            fh.write("not json\n")
        with pytest.raises(DataFormatError):
            Workspace.open(workspace.config.root)

    def test_save_taxonomy_archives_journal(self, workspace):
        workspace.suggest_batch(["wine cellar"], top_k=1)
        assert workspace.config.journal_path.exists()
        workspace.save_taxonomy()
        assert not workspace.config.journal_path.exists()
        assert not workspace.pending()
        archived = list(workspace.config.root.glob("journal.*.bak"))
        assert len(archived) == 1

    def test_missing_taxonomy_reported(self, tmp_path):
        ws = Workspace.open(tmp_path)
        with pytest.raises(TaxoforgeError, match="bootstrap"):
            ws.require_taxonomy()
