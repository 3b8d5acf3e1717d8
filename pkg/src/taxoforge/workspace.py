"""Workspace: one directory holding every artifact file, plus the
journaled suggestion/review state shared by the CLI and the HTTP service.

Durability model: the taxonomy file is a snapshot; the journal is an
append-only log of suggestion events since that snapshot. Loading replays
the journal, so replay from genesis reconstructs the live taxonomy
exactly. Commands that rewrite the snapshot (bootstrap, expand, prune)
archive the current journal, because its events are relative to the
snapshot they were recorded against.

Concurrency: one writer lock serializes all mutations; journal lines are
flushed before a mutation is acknowledged.
"""

from __future__ import annotations

import json
import os
import tempfile
import threading
from dataclasses import dataclass
from datetime import datetime, timezone
from pathlib import Path
from typing import Callable

from taxoforge.embedding import EmbeddingModel
from taxoforge.errors import DataFormatError, TaxoforgeError
from taxoforge.evaluation import ReferenceOntology
from taxoforge.link_pruning import (
    EdgeSuggestion,
    LinkScorer,
    LogisticLinkScorer,
    SuggestionStatus,
    apply_decision,
    suggest_edges,
)
from taxoforge.recommender import Listing, load_listings
from taxoforge.taxonomy import Taxonomy
from taxoforge.validation import require_open_unit_interval, require_unit_interval

__all__ = ["WorkspaceConfig", "Workspace", "atomic_write_text", "ENV_WORKSPACE"]

ENV_WORKSPACE = "TAXOFORGE_WORKSPACE"
CONFIG_FILENAME = "workspace.json"


def atomic_write_text(path: Path, content: str) -> None:
    """Write-to-temp then rename, so readers never see a partial file."""
    path = Path(path)
    path.parent.mkdir(parents=True, exist_ok=True)
    fd, tmp = tempfile.mkstemp(dir=path.parent, prefix=f".{path.name}.", suffix=".tmp")
    try:
        with os.fdopen(fd, "w", encoding="utf-8") as handle:
            handle.write(content)
        os.replace(tmp, path)
    except BaseException:
        if os.path.exists(tmp):
            os.unlink(tmp)
        raise


@dataclass
class WorkspaceConfig:
    """Paths and defaults for one workspace directory."""

    root: Path
    taxonomy_path: Path
    model_path: Path
    listings_path: Path
    reference_path: Path
    journal_path: Path
    scorer_path: Path
    alpha: float = 0.80
    prune_threshold: float = 0.5
    port: int = 8077

    _PATH_KEYS = {
        "taxonomy": "taxonomy.json",
        "model": "embeddings.txt",
        "listings": "listings.jsonl",
        "reference": "reference.tsv",
        "journal": "journal.log",
        "scorer": "scorer.json",
    }

    @classmethod
    def from_dir(cls, root: str | Path) -> "WorkspaceConfig":
        """Defaults, overridden by an optional workspace.json in the directory."""
        root = Path(root)
        overrides: dict = {}
        config_path = root / CONFIG_FILENAME
        if config_path.exists():
            try:
                overrides = json.loads(config_path.read_text(encoding="utf-8"))
            except json.JSONDecodeError as exc:
                raise DataFormatError(f"invalid workspace.json: {exc}") from exc
            allowed = set(cls._PATH_KEYS) | {"alpha", "prune_threshold", "port"}
            unknown = set(overrides) - allowed
            if unknown:
                raise DataFormatError(f"unknown workspace.json fields: {sorted(unknown)}")

        def path_for(key: str) -> Path:
            return root / overrides.get(key, cls._PATH_KEYS[key])

        cfg = cls(
            root=root,
            taxonomy_path=path_for("taxonomy"),
            model_path=path_for("model"),
            listings_path=path_for("listings"),
            reference_path=path_for("reference"),
            journal_path=path_for("journal"),
            scorer_path=path_for("scorer"),
            alpha=float(overrides.get("alpha", 0.80)),
            prune_threshold=float(overrides.get("prune_threshold", 0.5)),
            port=int(overrides.get("port", 8077)),
        )
        require_unit_interval("alpha", cfg.alpha)
        require_open_unit_interval("prune_threshold", cfg.prune_threshold)
        return cfg


def _utc_now() -> str:
    return datetime.now(timezone.utc).isoformat(timespec="seconds")


class Workspace:
    """Live state over a workspace directory.

    Mutations run under the writer lock and are journaled before they are
    acknowledged; readers see the in-memory snapshot.
    """

    def __init__(self, config: WorkspaceConfig, clock: Callable[[], str] = _utc_now):
        self.config = config
        self.clock = clock
        self.lock = threading.RLock()
        self.reloading = False
        self.taxonomy: Taxonomy | None = None
        self.suggestions: dict[int, EdgeSuggestion] = {}
        self._next_suggestion_id = 1
        self._model: EmbeddingModel | None = None
        self._listings: list[Listing] | None = None
        self._scorer: LinkScorer | None = None

    @classmethod
    def open(cls, root: str | Path, clock: Callable[[], str] = _utc_now) -> "Workspace":
        ws = cls(WorkspaceConfig.from_dir(root), clock=clock)
        ws.load()
        return ws

    # -- loading ---------------------------------------------------------

    def load(self) -> None:
        """Read the taxonomy snapshot and replay the journal over it."""
        with self.lock:
            if self.config.taxonomy_path.exists():
                self.taxonomy = Taxonomy.load(self.config.taxonomy_path)
            else:
                self.taxonomy = None
            self.suggestions = {}
            self._next_suggestion_id = 1
            if self.taxonomy is not None and self.config.journal_path.exists():
                self._replay_journal()

    def require_taxonomy(self) -> Taxonomy:
        if self.taxonomy is None:
            raise TaxoforgeError(
                f"no taxonomy at {self.config.taxonomy_path}; run bootstrap first"
            )
        return self.taxonomy

    @property
    def model(self) -> EmbeddingModel:
        if self._model is None:
            if not self.config.model_path.exists():
                raise TaxoforgeError(
                    f"no embedding model at {self.config.model_path}; run train-embeddings first"
                )
            self._model = EmbeddingModel.load(self.config.model_path)
        return self._model

    @property
    def model_if_present(self) -> EmbeddingModel | None:
        if self._model is None and not self.config.model_path.exists():
            return None
        return self.model

    @property
    def listings(self) -> list[Listing]:
        if self._listings is None:
            if not self.config.listings_path.exists():
                raise TaxoforgeError(f"no listing store at {self.config.listings_path}")
            self._listings = load_listings(self.config.listings_path)
        return self._listings

    @property
    def reference(self) -> ReferenceOntology:
        if not self.config.reference_path.exists():
            raise TaxoforgeError(f"no reference ontology at {self.config.reference_path}")
        return ReferenceOntology.load(self.config.reference_path)

    @property
    def scorer(self) -> LinkScorer:
        if self._scorer is None:
            if not self.config.scorer_path.exists():
                raise TaxoforgeError(
                    f"no trained scorer at {self.config.scorer_path}; run train-scorer first"
                )
            self._scorer = load_scorer(self.config.scorer_path)
        return self._scorer

    # -- snapshot writes ---------------------------------------------------

    def save_taxonomy(self, archive_journal: bool = True) -> None:
        """Write the taxonomy snapshot; the journal is folded in and archived."""
        with self.lock:
            self.require_taxonomy().save(self.config.taxonomy_path)
            if archive_journal and self.config.journal_path.exists():
                stamp = self.clock().replace(":", "").replace("+", "p")
                archived = self.config.journal_path.with_suffix(f".{stamp}.bak")
                os.replace(self.config.journal_path, archived)
            # suggestions recorded against the old snapshot are gone with it
            self.suggestions = {}
            self._next_suggestion_id = 1

    # -- journal ----------------------------------------------------------

    def _journal_append(self, record: dict) -> None:
        path = self.config.journal_path
        path.parent.mkdir(parents=True, exist_ok=True)
        with open(path, "a", encoding="utf-8") as handle:
            handle.write(json.dumps(record, ensure_ascii=False, separators=(",", ":")) + "\n")
            handle.flush()
            os.fsync(handle.fileno())

    def _replay_journal(self) -> None:
        for lineno, line in enumerate(
            self.config.journal_path.read_text(encoding="utf-8").splitlines(), 1
        ):
            if not line.strip():
                continue
            try:
                record = json.loads(line)
            except json.JSONDecodeError as exc:
                raise DataFormatError(f"corrupt journal line ({exc.msg})", line=lineno) from exc
            event = record.get("event")
            if event == "suggested":
                suggestion = EdgeSuggestion(
                    id=record["id"],
                    child_label=record["phrase"],
                    proposed_parent=record["parent_id"],
                    score=record["score"],
                    created_at=record.get("ts", ""),
                    low_confidence=record.get("low_confidence", False),
                )
                self.suggestions[suggestion.id] = suggestion
                self._next_suggestion_id = max(self._next_suggestion_id, suggestion.id + 1)
            elif event in ("approved", "rejected"):
                suggestion = self.suggestions.get(record["id"])
                if suggestion is None:
                    raise DataFormatError(f"decision for unknown suggestion {record['id']}", line=lineno)
                apply_decision(
                    self.taxonomy,
                    suggestion,
                    "approve" if event == "approved" else "reject",
                    decided_at=record.get("ts", ""),
                    reviewer_note=record.get("note"),
                )
            else:
                raise DataFormatError(f"unknown journal event {event!r}", line=lineno)

    # -- suggestion workflow ----------------------------------------------

    def suggest_batch(
        self, phrases: list[str], top_k: int = 1, scorer: LinkScorer | None = None
    ) -> list[EdgeSuggestion]:
        """Score new phrases against candidate parents; journal and queue them."""
        with self.lock:
            taxonomy = self.require_taxonomy()
            scorer = scorer if scorer is not None else self.scorer
            created = suggest_edges(
                taxonomy,
                scorer,
                self.model_if_present,
                phrases,
                top_k=top_k,
                start_id=self._next_suggestion_id,
                created_at=self.clock(),
            )
            for suggestion in created:
                suggestion.low_confidence = suggestion.score < self.config.prune_threshold
                self._journal_append(
                    {
                        "event": "suggested",
                        "id": suggestion.id,
                        "phrase": suggestion.child_label,
                        "parent_id": suggestion.proposed_parent,
                        "score": suggestion.score,
                        "low_confidence": suggestion.low_confidence,
                        "ts": suggestion.created_at,
                    }
                )
                self.suggestions[suggestion.id] = suggestion
                self._next_suggestion_id = suggestion.id + 1
            return created

    def decide(self, suggestion_id: int, decision: str, note: str | None = None) -> EdgeSuggestion:
        """Approve or reject one pending suggestion.

        Applied then journaled before the call returns, so an
        acknowledged decision always survives a restart; a failed apply
        journals nothing.
        """
        with self.lock:
            suggestion = self.suggestions.get(suggestion_id)
            if suggestion is None:
                raise KeyError(f"no suggestion with id {suggestion_id}")
            taxonomy = self.require_taxonomy()
            decided_at = self.clock()
            apply_decision(taxonomy, suggestion, decision, decided_at=decided_at, reviewer_note=note)
            self._journal_append(
                {
                    "event": "approved" if decision == "approve" else "rejected",
                    "id": suggestion_id,
                    "phrase": suggestion.child_label,
                    "parent_id": suggestion.proposed_parent,
                    "score": suggestion.score,
                    "ts": decided_at,
                    "note": note,
                }
            )
            return suggestion

    def pending(self) -> list[EdgeSuggestion]:
        with self.lock:
            return [s for s in self.suggestions.values() if s.status == SuggestionStatus.PENDING]

    def by_status(self, status: str | None) -> list[EdgeSuggestion]:
        with self.lock:
            values = sorted(self.suggestions.values(), key=lambda s: s.id)
            if status is None:
                return values
            wanted = SuggestionStatus(status)
            return [s for s in values if s.status == wanted]


# -- scorer persistence --------------------------------------------------------


def save_scorer(scorer: LogisticLinkScorer, path: str | Path) -> None:
    doc = {
        "format": "taxoforge-scorer v1",
        "epochs": scorer.epochs,
        "lr": scorer.lr,
        "seed": scorer.seed,
        "weights": [float(w) for w in scorer.weights_],
        "bias": float(scorer.bias_),
    }
    atomic_write_text(Path(path), json.dumps(doc, indent=2) + "\n")


def load_scorer(path: str | Path) -> LogisticLinkScorer:
    import numpy as np

    try:
        doc = json.loads(Path(path).read_text(encoding="utf-8"))
    except json.JSONDecodeError as exc:
        raise DataFormatError(f"invalid scorer file: {exc}") from exc
    if not isinstance(doc, dict) or doc.get("format") != "taxoforge-scorer v1":
        raise DataFormatError("not a taxoforge-scorer v1 file")
    scorer = LogisticLinkScorer(
        epochs=int(doc["epochs"]), lr=float(doc["lr"]), seed=int(doc["seed"])
    )
    scorer.weights_ = np.asarray(doc["weights"], dtype=np.float64)
    scorer.bias_ = float(doc["bias"])
    return scorer
