"""HTTP service over a workspace: stats, node lookup, recommendations and
the suggestion review API consumed by the browser UI.

Reads run against the in-memory snapshot; every mutation goes through the
workspace writer lock and is journaled before the response is sent.
Responses during a snapshot reload get 503.
"""

from __future__ import annotations

from fastapi import FastAPI, HTTPException, Request
from fastapi.middleware.cors import CORSMiddleware
from pydantic import BaseModel, Field

from taxoforge.errors import (
    DataFormatError,
    SuggestionExpiredError,
    SuggestionStateError,
    TaxoforgeError,
)
from taxoforge.link_pruning import EdgeSuggestion
from taxoforge.recommender import baseline_candidates, taxonomy_candidates
from taxoforge.text import normalize_phrase
from taxoforge.workspace import Workspace


class DecisionBody(BaseModel):
    model_config = {"extra": "forbid"}
    reviewer_note: str | None = None


class BatchBody(BaseModel):
    model_config = {"extra": "forbid"}
    phrases: list[str] = Field(min_length=1)
    top_k: int = Field(default=1, ge=1)


def _suggestion_json(s: EdgeSuggestion) -> dict:
    return {
        "id": s.id,
        "child_label": s.child_label,
        "proposed_parent": s.proposed_parent,
        "score": s.score,
        "status": s.status.value,
        "created_at": s.created_at,
        "decided_at": s.decided_at,
        "reviewer_note": s.reviewer_note,
        "low_confidence": s.low_confidence,
    }


def create_app(workspace: Workspace) -> FastAPI:
    app = FastAPI(title="taxoforge", version="0.1.0")
    app.add_middleware(
        CORSMiddleware,
        allow_origins=["*"],
        allow_methods=["*"],
        allow_headers=["*"],
    )

    @app.middleware("http")
    async def reject_during_reload(request: Request, call_next):
        if workspace.reloading:
            from fastapi.responses import JSONResponse

            return JSONResponse({"detail": "snapshot reload in progress"}, status_code=503)
        return await call_next(request)

    @app.get("/stats")
    def stats():
        taxonomy = workspace.require_taxonomy()
        s = taxonomy.stats()
        return {
            "num_nodes": s.num_nodes,
            "num_edges": s.num_edges,
            "num_parents": s.num_parents,
            "num_leaves": s.num_leaves,
            "max_depth": s.max_depth,
            "pending_suggestions": len(workspace.pending()),
        }

    @app.get("/node/{node_id}")
    def node(node_id: int):
        taxonomy = workspace.require_taxonomy()
        if node_id not in taxonomy:
            raise HTTPException(404, f"no node with id {node_id}")
        n = taxonomy.node(node_id)
        path = [
            {"id": pid, "label": taxonomy.node(pid).label}
            for pid in taxonomy.path_to_root(node_id)
        ]
        children = [
            {"id": cid, "label": taxonomy.node(cid).label, "kind": taxonomy.node(cid).kind.value}
            for cid in taxonomy.children(node_id)
        ]
        return {
            "id": n.id,
            "label": n.label,
            "kind": n.kind.value,
            "parent": n.parent,
            "depth": taxonomy.depth(node_id),
            "path_to_root": path,
            "children": children,
        }

    @app.get("/recommend")
    def recommend(q: str, method: str = "taxonomy", r: int = 1):
        if method not in ("baseline", "taxonomy"):
            raise HTTPException(422, "method must be 'baseline' or 'taxonomy'")
        if r < 1:
            raise HTTPException(422, "r must be >= 1")
        try:
            if method == "baseline":
                result = baseline_candidates(workspace.listings, q)
            else:
                result = taxonomy_candidates(
                    workspace.listings,
                    workspace.require_taxonomy(),
                    workspace.model_if_present,
                    q,
                    r=r,
                    alpha=workspace.config.alpha,
                )
        except DataFormatError as exc:
            raise HTTPException(422, str(exc)) from exc
        except TaxoforgeError as exc:
            raise HTTPException(409, str(exc)) from exc
        return result.to_record()

    @app.get("/suggestions")
    def suggestions(status: str | None = None):
        if status is not None and status not in ("pending", "approved", "rejected"):
            raise HTTPException(422, "status must be pending, approved or rejected")
        return [_suggestion_json(s) for s in workspace.by_status(status)]

    def _decide(suggestion_id: int, decision: str, body: DecisionBody | None) -> dict:
        note = body.reviewer_note if body else None
        try:
            suggestion = workspace.decide(suggestion_id, decision, note=note)
        except KeyError:
            raise HTTPException(404, f"no suggestion with id {suggestion_id}") from None
        except (SuggestionStateError, SuggestionExpiredError) as exc:
            raise HTTPException(409, str(exc)) from exc
        return _suggestion_json(suggestion)

    @app.post("/suggestions/{suggestion_id}/approve")
    def approve(suggestion_id: int, body: DecisionBody | None = None):
        return _decide(suggestion_id, "approve", body)

    @app.post("/suggestions/{suggestion_id}/reject")
    def reject(suggestion_id: int, body: DecisionBody | None = None):
        return _decide(suggestion_id, "reject", body)

    @app.post("/suggestions/batch")
    def batch(body: BatchBody):
        try:
            created = workspace.suggest_batch(body.phrases, top_k=body.top_k)
        except TaxoforgeError as exc:
            raise HTTPException(409, str(exc)) from exc
        taxonomy = workspace.require_taxonomy()
        known = [p for p in body.phrases if taxonomy.find_label(normalize_phrase(p)) is not None]
        return {
            "created": [_suggestion_json(s) for s in created],
            "skipped_existing": known,
        }

    @app.get("/")
    def index():
        return {
            "service": "taxoforge",
            "endpoints": [
                "GET /stats",
                "GET /node/{id}",
                "GET /recommend?q=&method=&r=",
                "GET /suggestions?status=",
                "POST /suggestions/{id}/approve",
                "POST /suggestions/{id}/reject",
                "POST /suggestions/batch",
            ],
        }

    return app
