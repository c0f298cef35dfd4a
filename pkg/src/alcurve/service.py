"""HTTP annotation service: the AL loop driven by a human labeler.

Each session owns a label set, an rng, and a query batch.  Until both
classes are present and the seed quota is met there is no classifier, so
batches are drawn at random; afterwards every submission triggers a
synchronous retrain and a strategy-driven selection.

Sessions persist as append-only JSONL event logs and are replayed on
restart, which also serves as a determinism check: the recorded batches
must reappear identically or the log is rejected as corrupt.
"""

from __future__ import annotations

import json
import logging
import os
import threading
import uuid
from dataclasses import asdict, dataclass, field
from pathlib import Path

import numpy as np
from fastapi import Body, FastAPI, HTTPException

from .classifier import BoostConfig, predict_probabilities, train_boosted
from .graph import EmptyGraphError, LabelSet, SampleGraph, SpatialGraph
from .harness import _candidates_with_fallback, select_batch
from .io import FormatError, load_graph_with_source, model_to_dict
from .propagation import (
    PropagationConfig,
    PropagationSolver,
    build_affinity,
    normalize_symmetric,
)
from .strategies import QueryBatch, StrategyConfig, select_rs

log = logging.getLogger(__name__)

EXPORT_FORMAT = "session-export"
EXPORT_VERSION = 1


@dataclass(frozen=True)
class SessionConfig:
    """Everything a session needs beyond the graph itself."""

    strategy: StrategyConfig = field(default_factory=StrategyConfig)
    budget: int = 100
    seed_per_class: int = 4
    committee_size: int = 25
    boost: BoostConfig = field(default_factory=BoostConfig)

    def __post_init__(self) -> None:
        if self.budget <= 2 * self.seed_per_class:
            raise ValueError("budget must exceed the seed quota")
        if self.seed_per_class < 1:
            raise ValueError("seed_per_class must be >= 1")
        if self.committee_size < 2:
            raise ValueError("committee_size must be >= 2")


def session_config_from_payload(payload: dict, defaults: dict | None = None) -> SessionConfig:
    merged = dict(defaults or {})
    merged.update({k: v for k, v in payload.items() if v is not None})
    strategy = StrategyConfig(
        kind=merged.get("strategy", "dps"),
        k=int(merged.get("k", 2)),
        propagation=PropagationConfig(
            alpha=float(merged.get("alpha", 0.9)),
            sigma=float(merged.get("sigma", 1.0)),
        ),
        density_sigma=merged.get("density_sigma"),
        seed=int(merged.get("seed", 0)),
    )
    return SessionConfig(
        strategy=strategy,
        budget=int(merged.get("budget", 100)),
        seed_per_class=int(merged.get("seed_per_class", 4)),
        committee_size=int(merged.get("committee_size", 25)),
    )


class SubmissionError(ValueError):
    """Labels don't cover the pending batch exactly; session state unchanged."""


class ActiveSession:
    """One annotator-facing AL loop with an append-only event log."""

    def __init__(
        self,
        session_id: str,
        sg: SampleGraph,
        cfg: SessionConfig,
        log_path: Path | None,
        graph_path: str | None = None,
        source: SpatialGraph | None = None,
        replay: bool = False,
    ):
        self.id = session_id
        self.sg = sg
        self.cfg = cfg
        self.source = source
        self.graph_path = graph_path
        self.labels = LabelSet(len(sg))
        self.rng = np.random.default_rng(cfg.strategy.seed)
        self.iteration = 0
        self.status = "training"
        self.model = None
        self.batch: QueryBatch | None = None
        self.query_log: list[dict] = []
        self.lock = threading.Lock()
        self._log_path = log_path

        kind = cfg.strategy.kind
        sigma = cfg.strategy.propagation.sigma
        if kind in ("pps", "dps"):
            W = build_affinity(sg, sigma, support="neighbors")
            self.solver = PropagationSolver(normalize_symmetric(W), cfg.strategy.propagation.alpha)
        else:
            self.solver = None
        if kind == "dps":
            self.W_global = build_affinity(sg, cfg.strategy.density_sigma or sigma, support="global")
        else:
            self.W_global = None

        if not replay and log_path is not None:
            self._append_event(
                {
                    "event": "create",
                    "session_id": session_id,
                    "graph_path": graph_path,
                    "config": asdict(cfg),
                }
            )
        self._advance()

    # -- event log ---------------------------------------------------------

    def _append_event(self, event: dict) -> None:
        if self._log_path is None:
            return
        with self._log_path.open("a") as fh:
            fh.write(json.dumps(event, sort_keys=True) + "\n")
            fh.flush()
            os.fsync(fh.fileno())

    # -- state machine ------------------------------------------------------

    def _seed_phase(self) -> bool:
        quota = 2 * self.cfg.seed_per_class
        return len(self.labels) < quota or len(set(self.labels.labels)) < 2

    def _trainable(self) -> bool:
        return len(set(self.labels.labels)) == 2

    def _advance(self) -> None:
        """Retrain if possible, then select the next batch or finish."""
        self.status = "training"
        idx = list(self.labels.indices)
        if self._trainable():
            self.model = train_boosted(
                self.sg.features[idx], self.labels.labels, self.cfg.boost,
                seed=int(self.rng.integers(2**31)),
            )
        if len(self.labels) >= self.cfg.budget:
            self.batch = None
            self.status = "complete"
            return
        k_eff = min(self.cfg.strategy.k, self.cfg.budget - len(self.labels))
        cands, _ = _candidates_with_fallback(self.sg, k_eff, set(self.labels.indices))
        if not cands:
            self.batch = None
            self.status = "complete"
            return
        if self._seed_phase():
            batch = select_rs(cands, self.rng)
        else:
            batch = select_batch(
                self.cfg.strategy.kind, cands, self.sg, self.labels, self.rng,
                model=self.model, solver=self.solver, W_global=self.W_global,
                committee_size=self.cfg.committee_size,
            )
        self.batch = batch
        self.query_log.append(
            {
                "iteration": self.iteration,
                "indices": list(batch.indices),
                "score": batch.score,
                "components": None if batch.components is None else asdict(batch.components),
            }
        )
        self.status = "awaiting_labels"

    def _parse_submission(self, payload) -> dict[int, int]:
        if isinstance(payload, dict):
            items = payload.items()
        else:
            try:
                items = [(k, v) for k, v in payload]
            except (TypeError, ValueError) as exc:
                raise SubmissionError("labels must map sample index to 0/1") from exc
        parsed: dict[int, int] = {}
        for k, v in items:
            try:
                i, y = int(k), int(v)
            except (TypeError, ValueError) as exc:
                raise SubmissionError("labels must map sample index to 0/1") from exc
            if y not in (0, 1):
                raise SubmissionError(f"label for sample {i} must be 0 or 1")
            if i in parsed:
                raise SubmissionError(f"sample {i} appears twice in the submission")
            parsed[i] = y
        return parsed

    def submit(self, payload, replay: bool = False) -> None:
        """Apply labels for exactly the pending batch, then advance."""
        if self.status == "complete" or self.batch is None:
            raise SubmissionError("session is complete; no batch is pending")
        parsed = self._parse_submission(payload)
        pending = set(self.batch.indices)
        got = set(parsed)
        if got != pending:
            if got & set(self.labels.indices):
                raise SubmissionError("submission repeats already-labelled samples")
            missing = sorted(pending - got)
            extra = sorted(got - pending)
            raise SubmissionError(
                f"labels must cover the pending batch exactly (missing {missing}, unexpected {extra})"
            )
        for i in self.batch.indices:
            self.labels.add(i, parsed[i])
        self.iteration += 1
        if not replay:
            self._append_event(
                {
                    "event": "labels",
                    "iteration": self.iteration,
                    "labels": [[i, parsed[i]] for i in self.batch.indices],
                }
            )
        self._advance()

    # -- payloads ------------------------------------------------------------

    def probabilities(self) -> list[float]:
        if self.model is None:
            return [0.5] * len(self.sg)
        return predict_probabilities(self.model, self.sg.features).tolist()

    def query_payload(self) -> dict:
        indices = [] if self.batch is None else list(self.batch.indices)
        positions = None
        polylines = None
        if indices:
            if self.sg.positions is not None:
                positions = [self.sg.positions[i].tolist() for i in indices]
            if self.source is not None:
                polylines = [self.source.edges[i].polyline.tolist() for i in indices]
        last = self.query_log[-1] if self.query_log and indices else None
        return {
            "session_id": self.id,
            "status": self.status,
            "iteration": self.iteration,
            "indices": indices,
            "positions": positions,
            "polylines": polylines,
            "probabilities": self.probabilities(),
            "components": None if last is None else last["components"],
        }

    def status_payload(self) -> dict:
        return {
            "session_id": self.id,
            "status": self.status,
            "iteration": self.iteration,
            "n_labeled": len(self.labels),
            "budget": self.cfg.budget,
            "strategy": self.cfg.strategy.kind,
            "k": self.cfg.strategy.k,
        }

    def graph_payload(self) -> dict:
        positions = self.sg.positions
        return {
            "session_id": self.id,
            "n_samples": len(self.sg),
            "positions": None if positions is None else positions.tolist(),
            "adjacency": [list(e) for e in self.sg.edges],
            "polylines": (
                None
                if self.source is None
                else [e.polyline.tolist() for e in self.source.edges]
            ),
        }

    def export_payload(self) -> dict:
        return {
            "format": EXPORT_FORMAT,
            "version": EXPORT_VERSION,
            "session_id": self.id,
            "graph_path": self.graph_path,
            "config": asdict(self.cfg),
            "iteration": self.iteration,
            "status": self.status,
            "labels": [[i, y] for i, y in self.labels],
            "model": None if self.model is None else model_to_dict(self.model),
            "query_log": self.query_log,
        }


def replay_session(log_path: Path, graph_cache: dict | None = None) -> ActiveSession:
    """Rebuild a session from its event log.

    Replay re-runs the deterministic loop; every recorded batch must match
    the recomputed one, otherwise the log is rejected.
    """
    events = [json.loads(line) for line in log_path.read_text().splitlines() if line.strip()]
    if not events or events[0].get("event") != "create":
        raise FormatError(f"session log {log_path} does not start with a create event")
    head = events[0]
    cfg_doc = head["config"]
    strategy_doc = cfg_doc["strategy"]
    cfg = SessionConfig(
        strategy=StrategyConfig(
            kind=strategy_doc["kind"],
            k=strategy_doc["k"],
            propagation=PropagationConfig(**strategy_doc["propagation"]),
            density_sigma=strategy_doc["density_sigma"],
            seed=strategy_doc["seed"],
        ),
        budget=cfg_doc["budget"],
        seed_per_class=cfg_doc["seed_per_class"],
        committee_size=cfg_doc["committee_size"],
        boost=BoostConfig(**cfg_doc["boost"]),
    )
    graph_path = head["graph_path"]
    if graph_cache is not None and graph_path in graph_cache:
        sg, source = graph_cache[graph_path]
    else:
        sg, source = load_graph_with_source(graph_path)
        if graph_cache is not None:
            graph_cache[graph_path] = (sg, source)
    session = ActiveSession(
        head["session_id"], sg, cfg, log_path,
        graph_path=graph_path, source=source, replay=True,
    )
    for event in events[1:]:
        if event.get("event") != "labels":
            raise FormatError(f"unexpected event {event.get('event')!r} in {log_path}")
        recorded = [int(i) for i, _ in event["labels"]]
        pending = list(session.batch.indices) if session.batch else []
        if sorted(recorded) != sorted(pending):
            raise FormatError(
                f"session log {log_path} diverges from deterministic replay "
                f"(recorded batch {sorted(recorded)}, recomputed {sorted(pending)})"
            )
        session.submit(event["labels"], replay=True)
    return session


class ServiceState:
    """All sessions plus the default graph the server was started with."""

    def __init__(self, graph_path: str | None, sessions_dir: str | Path, defaults: dict | None = None):
        self.default_graph_path = graph_path
        self.sessions_dir = Path(sessions_dir)
        self.sessions_dir.mkdir(parents=True, exist_ok=True)
        self.defaults = dict(defaults or {})
        self.sessions: dict[str, ActiveSession] = {}
        self.graph_cache: dict[str, tuple[SampleGraph, SpatialGraph | None]] = {}
        self.lock = threading.Lock()

    def restore_existing(self) -> None:
        for log_path in sorted(self.sessions_dir.glob("*.jsonl")):
            try:
                session = replay_session(log_path, self.graph_cache)
            except (OSError, FormatError, ValueError) as exc:
                log.error("could not restore session %s: %s", log_path.stem, exc)
                continue
            self.sessions[session.id] = session
            log.info("restored session %s at iteration %d", session.id, session.iteration)

    def load_graph(self, path: str) -> tuple[SampleGraph, SpatialGraph | None]:
        if path not in self.graph_cache:
            self.graph_cache[path] = load_graph_with_source(path)
        return self.graph_cache[path]

    def create_session(self, payload: dict) -> ActiveSession:
        graph_path = payload.get("graph_path") or self.default_graph_path
        if graph_path is None:
            raise ValueError("no graph: pass graph_path or start the server with one")
        sg, source = self.load_graph(str(graph_path))
        cfg = session_config_from_payload(payload, self.defaults)
        session_id = uuid.uuid4().hex[:12]
        session = ActiveSession(
            session_id, sg, cfg, self.sessions_dir / f"{session_id}.jsonl",
            graph_path=str(graph_path), source=source,
        )
        with self.lock:
            self.sessions[session_id] = session
        return session

    def get(self, session_id: str) -> ActiveSession:
        try:
            return self.sessions[session_id]
        except KeyError:
            raise KeyError(f"no session {session_id!r}")


def create_app(
    graph_path: str | None = None,
    sessions_dir: str | Path = "alcurve_sessions",
    defaults: dict | None = None,
) -> FastAPI:
    """Build the FastAPI app; state is confined to this instance."""
    app = FastAPI(title="alcurve annotation service")
    state = ServiceState(graph_path, sessions_dir, defaults)
    state.restore_existing()
    app.state.alcurve = state

    def _session_or_404(session_id: str) -> ActiveSession:
        try:
            return state.get(session_id)
        except KeyError:
            raise HTTPException(status_code=404, detail=f"unknown session {session_id!r}")

    @app.post("/sessions", status_code=201)
    def create_session(payload: dict = Body(default={})):
        try:
            session = state.create_session(payload)
        except (OSError, FormatError, EmptyGraphError, ValueError) as exc:
            raise HTTPException(status_code=400, detail=str(exc))
        return {
            "session_id": session.id,
            "status": session.status,
            "iteration": session.iteration,
        }

    @app.get("/sessions/{session_id}/query")
    def get_query(session_id: str):
        session = _session_or_404(session_id)
        with session.lock:
            return session.query_payload()

    @app.post("/sessions/{session_id}/labels")
    def submit_labels(session_id: str, payload: dict = Body(...)):
        session = _session_or_404(session_id)
        if "labels" not in payload:
            raise HTTPException(status_code=400, detail="body must carry a 'labels' field")
        with session.lock:
            try:
                session.submit(payload["labels"])
            except SubmissionError as exc:
                raise HTTPException(status_code=409, detail=str(exc))
            return {
                "session_id": session.id,
                "status": session.status,
                "iteration": session.iteration,
                "n_labeled": len(session.labels),
                "next_indices": [] if session.batch is None else list(session.batch.indices),
            }

    @app.get("/sessions/{session_id}/status")
    def get_status(session_id: str):
        session = _session_or_404(session_id)
        with session.lock:
            return session.status_payload()

    @app.get("/sessions/{session_id}/export")
    def export_session(session_id: str):
        session = _session_or_404(session_id)
        with session.lock:
            return session.export_payload()

    @app.get("/sessions/{session_id}/graph")
    def get_graph(session_id: str):
        session = _session_or_404(session_id)
        return session.graph_payload()

    return app


def run_server(
    graph_path: str,
    strategy: str = "dps",
    port: int = 8000,
    host: str = "127.0.0.1",
    sessions_dir: str | Path = "alcurve_sessions",
) -> None:
    import uvicorn

    app = create_app(graph_path, sessions_dir, defaults={"strategy": strategy})
    uvicorn.run(app, host=host, port=port, log_level="info")
