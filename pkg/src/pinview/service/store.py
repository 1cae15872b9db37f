"""File-backed store: corpora, trained predictors, session event logs.

Layout under one data directory::

    corpora/<name>/corpus.json + features.bin   (module corpus format)
    corpora/<name>/assets/...                   (optional rendered images)
    predictors/<name>.json                      (relevance predictor per corpus)
    sessions/<id>.jsonl                         (append-only session events)

Session logs are the single source of truth: appending is the only write,
and replaying a log reconstructs the exact session state.
"""
from __future__ import annotations

import json
import os
from dataclasses import dataclass
from pathlib import Path

from pinview.corpus import Corpus
from pinview.relevance import RelevancePredictor

ENV_DATA_DIR = "PINVIEW_DATA_DIR"
ENV_PORT = "PINVIEW_PORT"
ENV_SEED = "PINVIEW_SEED"
CONFIG_FILE = "config.json"
DEFAULT_SESSION_TTL = 24 * 3600.0


@dataclass(frozen=True)
class Settings:
    """Service configuration: one optional file, environment wins."""

    data_dir: Path
    port: int = 8000
    seed: int | None = None
    session_ttl: float = DEFAULT_SESSION_TTL

    @classmethod
    def from_env(cls, env=os.environ) -> "Settings":
        data_dir = Path(env.get(ENV_DATA_DIR, "pinview-data"))
        values: dict = {}
        config_path = data_dir / CONFIG_FILE
        if config_path.is_file():
            with config_path.open() as fh:
                loaded = json.load(fh)
            for key in ("port", "seed", "session_ttl"):
                if key in loaded:
                    values[key] = loaded[key]
        if env.get(ENV_PORT):
            values["port"] = int(env[ENV_PORT])
        if env.get(ENV_SEED):
            values["seed"] = int(env[ENV_SEED])
        return cls(data_dir=data_dir,
                   port=int(values.get("port", 8000)),
                   seed=(int(values["seed"]) if "seed" in values else None),
                   session_ttl=float(values.get("session_ttl",
                                                DEFAULT_SESSION_TTL)))


class Store:
    """Paths plus the read/append primitives the API is built on."""

    def __init__(self, data_dir) -> None:
        self.data_dir = Path(data_dir)
        self.corpora_dir = self.data_dir / "corpora"
        self.predictors_dir = self.data_dir / "predictors"
        self.sessions_dir = self.data_dir / "sessions"
        for path in (self.corpora_dir, self.predictors_dir,
                     self.sessions_dir):
            path.mkdir(parents=True, exist_ok=True)

    # ------------------------------------------------------------- corpora
    def corpus_names(self) -> list:
        return sorted(p.name for p in self.corpora_dir.iterdir()
                      if (p / "corpus.json").is_file())

    def corpus_dir(self, name: str) -> Path:
        return self.corpora_dir / name

    def load_corpus(self, name: str) -> Corpus:
        return Corpus.load(self.corpus_dir(name))

    def save_corpus(self, corpus: Corpus) -> Path:
        target = self.corpus_dir(corpus.name)
        corpus.save(target)
        return target

    # ---------------------------------------------------------- predictors
    def predictor_path(self, corpus_name: str) -> Path:
        return self.predictors_dir / f"{corpus_name}.json"

    def load_predictor(self, corpus_name: str) -> RelevancePredictor | None:
        path = self.predictor_path(corpus_name)
        if not path.is_file():
            return None
        return RelevancePredictor.load(path)

    def save_predictor(self, corpus_name: str,
                       predictor: RelevancePredictor) -> Path:
        path = self.predictor_path(corpus_name)
        predictor.save(path)
        return path

    # -------------------------------------------------------- session logs
    def session_log_path(self, session_id: str) -> Path:
        return self.sessions_dir / f"{session_id}.jsonl"

    def session_ids(self) -> list:
        return sorted(p.stem for p in self.sessions_dir.glob("*.jsonl"))

    def append_event(self, session_id: str, entry: dict) -> None:
        """Durably append one event line (fsync: logs survive crashes)."""
        path = self.session_log_path(session_id)
        with path.open("a") as fh:
            fh.write(json.dumps(entry, sort_keys=True) + "\n")
            fh.flush()
            os.fsync(fh.fileno())

    def read_events(self, session_id: str) -> list:
        path = self.session_log_path(session_id)
        with path.open() as fh:
            return [json.loads(line) for line in fh if line.strip()]
