"""HTTP facade: scoring, the triage queue, and reviewer verdicts.

Persistence is an append-only JSONL verdict log plus in-memory state
rebuilt by replay at startup. A verdict is written and fsync'd before it
is applied or acknowledged, so every acknowledged verdict survives a
crash. All mutations are serialised through one lock; reads copy under
the lock and are snapshot-consistent.
"""

from __future__ import annotations

import json
import logging
import os
import threading
import time
from pathlib import Path
from typing import Any, Callable

from fastapi import Body, Depends, FastAPI, HTTPException, Query, Request

from .domain import post_from_json
from .featurize import BaselineFeaturizer, SidecarFeaturizer, make_featurizer
from .fusion import FusionConfig, FusionParams, load_model, predict
from .image_features import ImageDecodeError, TooSmall
from .sidecar import DimensionError, MissingEmbedding
from .triage import QueueEntry, ReviewStatus, TriageQueue, read_queue

logger = logging.getLogger(__name__)

VERDICT_LOG = "verdicts.jsonl"
_VALID_VERDICTS = {ReviewStatus.CONFIRMED_EVASION.value, ReviewStatus.REJECTED.value}


class ReviewService:
    """State container behind the HTTP endpoints."""

    def __init__(
        self,
        queue: TriageQueue,
        data_dir: Path | str,
        model: tuple[FusionParams, FusionConfig] | None = None,
        featurizer: BaselineFeaturizer | SidecarFeaturizer | None = None,
        token: str | None = None,
        clock: Callable[[], int] = lambda: int(time.time()),
    ):
        self.queue = queue
        self.data_dir = Path(data_dir)
        self.data_dir.mkdir(parents=True, exist_ok=True)
        self.log_path = self.data_dir / VERDICT_LOG
        self._model = model
        self.featurizer = featurizer or BaselineFeaturizer()
        self.token = token
        self.clock = clock
        self._lock = threading.Lock()
        self._replay_log()

    # -- persistence -------------------------------------------------------

    def _replay_log(self) -> None:
        if not self.log_path.exists():
            return
        applied = 0
        with open(self.log_path, "r", encoding="utf-8") as fh:
            for line in fh:
                line = line.strip()
                if not line:
                    continue
                record = json.loads(line)
                post_id = record["post_id"]
                if self.queue.index_of(post_id) is None:
                    logger.warning("verdict log references unknown post %s; skipped", post_id)
                    continue
                self.queue.apply_verdict(
                    post_id,
                    ReviewStatus(record["verdict"]),
                    record.get("reviewer"),
                    record.get("timestamp"),
                )
                applied += 1
        logger.info("replayed %d verdicts from %s", applied, self.log_path)

    def _append_record(self, record: dict[str, Any]) -> None:
        """Durable append: the write is fsync'd before returning."""
        with open(self.log_path, "a", encoding="utf-8") as fh:
            fh.write(json.dumps(record, sort_keys=True, ensure_ascii=False) + "\n")
            fh.flush()
            os.fsync(fh.fileno())

    # -- operations --------------------------------------------------------

    @property
    def model_loaded(self) -> bool:
        return self._model is not None

    def swap_model(self, model: tuple[FusionParams, FusionConfig]) -> None:
        self._model = model  # single reference assignment: atomic for readers

    def score(self, payload: dict[str, Any]) -> dict[str, Any]:
        model = self._model
        if model is None:
            raise HTTPException(status_code=503, detail="no model loaded")
        try:
            post = post_from_json(payload, base_dir=self.data_dir)
        except DimensionError as exc:
            raise HTTPException(status_code=422, detail=f"featurization failed: {exc}") from exc
        except OSError as exc:
            # well-formed payload referencing media the server cannot read
            # (image_path resolves against the service data dir)
            raise HTTPException(status_code=422, detail=f"cannot load referenced media: {exc}") from exc
        except (KeyError, TypeError, ValueError) as exc:
            raise HTTPException(status_code=400, detail=f"malformed post payload: {exc}") from exc
        try:
            bundle = self.featurizer.bundle(post)
            params, config = model
            score, flag = predict(params, bundle, config)
        except (DimensionError, MissingEmbedding, ImageDecodeError, TooSmall) as exc:
            raise HTTPException(status_code=422, detail=f"featurization failed: {exc}") from exc
        return {"score": score, "flag": flag}

    def queue_page(self, page: int, size: int) -> dict[str, Any]:
        if page < 0 or size < 1:
            raise HTTPException(status_code=400, detail="page must be >= 0 and size >= 1")
        with self._lock:
            entries = list(self.queue.entries)
        total = len(entries)
        start = page * size
        if start >= total and not (page == 0 and total == 0):
            raise HTTPException(status_code=404, detail=f"page {page} out of range")
        page_entries = entries[start : start + size]
        return {
            "page": page,
            "size": size,
            "total": total,
            "entries": [self._entry_view(e) for e in page_entries],
        }

    @staticmethod
    def _entry_view(entry: QueueEntry) -> dict[str, Any]:
        snippet = entry.snippet or {}
        return {
            "post_id": entry.post_id,
            "score": entry.score,
            "status": entry.status.value,
            "reviewer": entry.reviewer,
            "reviewed_at": entry.reviewed_at,
            "hashtags": snippet.get("hashtags", []),
            "comment": snippet.get("comment", ""),
            "media_kind": snippet.get("media_kind"),
            "media_ref": snippet.get("media_ref"),
            "contact_channels": snippet.get("contact_channels", []),
        }

    def apply_verdict(self, payload: dict[str, Any]) -> dict[str, Any]:
        try:
            post_id = str(payload["post_id"])
            verdict = str(payload["verdict"])
            reviewer = str(payload.get("reviewer", ""))
            force = bool(payload.get("force", False))
        except (KeyError, TypeError) as exc:
            raise HTTPException(status_code=400, detail=f"malformed verdict payload: {exc}") from exc
        if verdict not in _VALID_VERDICTS:
            raise HTTPException(
                status_code=400,
                detail=f"verdict must be one of {sorted(_VALID_VERDICTS)}",
            )
        with self._lock:
            index = self.queue.index_of(post_id)
            if index is None:
                raise HTTPException(status_code=404, detail=f"unknown post_id {post_id!r}")
            current = self.queue.entries[index]
            if current.status is not ReviewStatus.PENDING and not force:
                raise HTTPException(
                    status_code=409,
                    detail=f"post {post_id} already {current.status.value}; pass force to override",
                )
            now = self.clock()
            record = {
                "post_id": post_id,
                "verdict": verdict,
                "reviewer": reviewer,
                "timestamp": now,
                "force": force,
            }
            # durable before visible: log first, then mutate, then ack
            self._append_record(record)
            entry = self.queue.apply_verdict(post_id, ReviewStatus(verdict), reviewer, now)
        return {"ok": True, "post_id": post_id, "status": entry.status.value, "reviewed_at": now}

    def export_labels(self) -> list[dict[str, Any]]:
        """Reviewed posts as retraining ground truth (hidden_economy flag)."""
        with self._lock:
            entries = list(self.queue.entries)
        return [
            {
                "post_id": e.post_id,
                "hidden_economy": e.status is ReviewStatus.CONFIRMED_EVASION,
                "verdict": e.status.value,
                "reviewer": e.reviewer,
                "reviewed_at": e.reviewed_at,
            }
            for e in entries
            if e.status is not ReviewStatus.PENDING
        ]


def create_app(service: ReviewService) -> FastAPI:
    app = FastAPI(title="taxledger review service", version="0.1.0")

    def require_token(request: Request) -> None:
        if service.token is None:
            return
        header = request.headers.get("authorization", "")
        if header != f"Bearer {service.token}":
            raise HTTPException(status_code=401, detail="missing or invalid bearer token")

    @app.get("/api/health")
    def health() -> dict[str, Any]:
        return {
            "status": "ok",
            "model_loaded": service.model_loaded,
            "queue_size": len(service.queue),
        }

    @app.post("/api/score", dependencies=[Depends(require_token)])
    def score(payload: dict[str, Any] = Body(...)) -> dict[str, Any]:
        return service.score(payload)

    @app.get("/api/queue", dependencies=[Depends(require_token)])
    def queue(page: int = Query(0), size: int = Query(20)) -> dict[str, Any]:
        return service.queue_page(page, size)

    @app.post("/api/verdict", dependencies=[Depends(require_token)])
    def verdict(payload: dict[str, Any] = Body(...)) -> dict[str, Any]:
        return service.apply_verdict(payload)

    @app.get("/api/export/labels", dependencies=[Depends(require_token)])
    def export_labels() -> list[dict[str, Any]]:
        return service.export_labels()

    return app


def build_service(
    queue_path: Path | str,
    data_dir: Path | str,
    model_path: Path | str | None = None,
    token: str | None = None,
    featurizer_kind: str = "baseline",
    sidecar_dir: Path | str | None = None,
    video_policy: str = "noise",
) -> ReviewService:
    """Assemble a service from files, applying LEDGER_* env defaults."""
    queue = read_queue(queue_path)
    model = None
    if model_path is not None:
        params, config = load_model(model_path)
        model = (params, config)
    token = token if token is not None else os.environ.get("LEDGER_TOKEN")
    featurizer = make_featurizer(featurizer_kind, sidecar_dir, video_policy)
    return ReviewService(
        queue=queue,
        data_dir=data_dir,
        model=model,
        featurizer=featurizer,
        token=token,
    )
