"""Retrieval session: rounds of collage display and feedback learning.

Each session shows ``rounds`` collages of ``collage_size`` images.  The
first collage is a seeded random sample; every later one comes from the
pipeline relevance scoring -> multiple-kernel learning -> optional tensor
stage -> bandit selection, computed over all images seen so far.  Scores
are frozen once a round's feedback is scored; images never repeat within
a session.  All inputs and derived outputs go to an append-only event
log from which a session can be replayed bit-exactly.
"""
from __future__ import annotations

import json
from dataclasses import dataclass, field, asdict
from pathlib import Path

import numpy as np
from scipy.special import expit

from pinview import linrel, mkl, tensor
from pinview.gaze import CollageLayout, GazeSample, extract_collage_features
from pinview.gaze.features import N_EYE_FEATURES
from pinview.relevance import DEFAULT_ALPHA, DEFAULT_UNVIEWED_SCORE

MODALITIES = ("gaze", "click", "gaze+click", "full", "random")
LOG_VERSION = 1


class SessionError(ValueError):
    """Base class for session protocol violations."""


class StaleRoundError(SessionError):
    def __init__(self, got: int, expected: int):
        super().__init__(f"feedback for round {got}, session is at round {expected}")
        self.got, self.expected = got, expected


class UnknownImageError(SessionError):
    pass


class SessionCompleteError(SessionError):
    pass


class ModalityError(SessionError):
    pass


@dataclass(frozen=True)
class SessionConfig:
    """Everything that determines a session's behaviour besides feedback."""

    corpus: str = "corpus"
    modality: str = "gaze+click"
    rounds: int = 10
    collage_size: int = 15
    grid_cols: int = 5
    grid_rows: int = 3
    cell_w: float = 256.0
    cell_h: float = 256.0
    lam: float = 0.5
    mu_shared: float = 0.1
    explore_c: float = 1.0
    explore_count: int | None = None
    alpha: float = DEFAULT_ALPHA
    default_unviewed: float = DEFAULT_UNVIEWED_SCORE
    tensor_enabled: bool = False
    tensor_rank: int = 5
    seed: int = 0
    target_category: str | None = None

    def __post_init__(self):
        if self.modality not in MODALITIES:
            raise ModalityError(f"unknown modality {self.modality!r}")
        if self.rounds < 1:
            raise SessionError("rounds must be at least 1")
        if self.collage_size < 1:
            raise SessionError("collage_size must be at least 1")
        if self.collage_size > self.grid_cols * self.grid_rows:
            raise SessionError("collage does not fit the grid")
        if not (0.0 <= self.lam <= 1.0):
            raise SessionError("lam must lie in [0, 1]")
        if self.mu_shared < 0 or self.explore_c < 0:
            raise SessionError("mu_shared and explore_c must be non-negative")
        if self.tensor_rank < 1:
            raise SessionError("tensor_rank must be at least 1")

    def to_json(self) -> dict:
        return asdict(self)

    @classmethod
    def from_json(cls, obj: dict) -> "SessionConfig":
        return cls(**obj)


@dataclass
class FeedbackEvent:
    """One round's user feedback.

    ``gaze`` is a whole-collage sample stream in screen coordinates;
    ``eye_features`` supplies per-image 19-vectors directly (the two are
    alternatives).  ``scores`` carries explicit per-image relevance for
    the ``full`` modality.
    """

    round: int
    clicks: tuple = ()
    gaze: list | None = None
    eye_features: dict | None = None
    scores: dict | None = None

    def to_json(self) -> dict:
        return {
            "round": self.round,
            "clicks": sorted(self.clicks),
            "gaze": ([[s.t, s.x, s.y, s.pupil, 1 if s.valid else 0]
                      for s in self.gaze] if self.gaze is not None else None),
            "eye_features": ({k: [float(v) for v in vec]
                              for k, vec in sorted(self.eye_features.items())}
                             if self.eye_features is not None else None),
            "scores": ({k: float(v) for k, v in sorted(self.scores.items())}
                       if self.scores is not None else None),
        }

    @classmethod
    def from_json(cls, obj: dict) -> "FeedbackEvent":
        gaze = obj.get("gaze")
        return cls(
            round=int(obj["round"]),
            clicks=tuple(obj.get("clicks", ())),
            gaze=([GazeSample(t, x, y, p, bool(v)) for t, x, y, p, v in gaze]
                  if gaze is not None else None),
            eye_features=({k: np.array(v, dtype=np.float64)
                           for k, v in obj["eye_features"].items()}
                          if obj.get("eye_features") is not None else None),
            scores=dict(obj["scores"]) if obj.get("scores") is not None else None,
        )


@dataclass
class RoundOutcome:
    """What one feedback submission produced."""

    round: int
    scores: dict
    next_collage: list | None
    summary: dict | None
    eta: list | None = None
    tensor_used: bool = False


class Session:
    """One interactive search session over a fixed corpus."""

    def __init__(self, corpus, config: SessionConfig, predictor=None,
                 kernels=None, session_id: str | None = None):
        if len(corpus) < config.collage_size:
            raise SessionError("corpus smaller than one collage")
        if config.modality in ("gaze", "gaze+click") and predictor is None:
            raise ModalityError(
                f"modality {config.modality!r} needs a relevance predictor")
        self.corpus = corpus
        self.config = config
        self.predictor = predictor
        self.session_id = session_id
        self.kernels = kernels
        if self.kernels is None and config.modality != "random":
            self.kernels = mkl.CorpusKernels(corpus)
        self._rng = np.random.default_rng(config.seed)
        self._round = 0
        self._done = False
        self._seen: list[str] = []
        self._r: list[float] = []
        self._psi: list[np.ndarray] = []
        self._eta = None
        self._eta_trace: list[list[float]] = []
        self._shown: list[list[str]] = []
        self._scores_log: list[dict] = []
        self._tensor_rounds: list[int] = []
        self._events: list[dict] = []
        first = linrel.cold_start(corpus.ids, config.collage_size, self._rng)
        self._shown.append(first)
        self._events.append({
            "type": "start", "version": LOG_VERSION,
            "config": config.to_json(), "collage": list(first),
        })

    # ------------------------------------------------------------ properties
    @property
    def round(self) -> int:
        return self._round

    @property
    def done(self) -> bool:
        return self._done

    @property
    def current_collage(self) -> list:
        return list(self._shown[-1])

    def layout(self, collage_ids=None) -> CollageLayout:
        cfg = self.config
        return CollageLayout.grid(collage_ids or self.current_collage,
                                  cols=cfg.grid_cols, rows=cfg.grid_rows,
                                  cell_w=cfg.cell_w, cell_h=cfg.cell_h)

    def shown_ids(self) -> list:
        return [i for collage in self._shown for i in collage]

    # -------------------------------------------------------------- feedback
    def submit_feedback(self, event: FeedbackEvent) -> RoundOutcome:
        """Score the current collage from feedback and advance the session."""
        if self._done:
            raise SessionCompleteError("session already complete")
        if event.round != self._round:
            raise StaleRoundError(event.round, self._round)
        collage = self.current_collage
        collage_set = set(collage)
        self._validate_ids(event, collage_set)
        scores, psi_map = self._score_round(event, collage)

        for image_id in collage:
            self._seen.append(image_id)
            self._r.append(scores[image_id])
            self._psi.append(psi_map.get(image_id,
                                         np.zeros(N_EYE_FEATURES)))
        self._scores_log.append(scores)

        last = self._round + 1 >= self.config.rounds
        next_collage = None
        tensor_used = False
        if last:
            self._done = True
        else:
            next_collage, tensor_used = self._next_collage()
            self._shown.append(next_collage)
            if self._eta is not None:
                self._eta_trace.append([float(v) for v in self._eta])
        self._round += 1
        if tensor_used:
            self._tensor_rounds.append(self._round)

        outcome = RoundOutcome(
            round=event.round,
            scores=scores,
            next_collage=list(next_collage) if next_collage else None,
            summary=self.summary() if last else None,
            eta=[float(v) for v in self._eta] if self._eta is not None else None,
            tensor_used=tensor_used,
        )
        self._events.append({
            "type": "feedback",
            "round": event.round,
            "event": event.to_json(),
            "scores": {k: float(v) for k, v in sorted(scores.items())},
            "next": list(next_collage) if next_collage else None,
            "tensor_used": tensor_used,
        })
        return outcome

    def _validate_ids(self, event: FeedbackEvent, collage_set) -> None:
        for image_id in event.clicks:
            if image_id not in collage_set:
                raise UnknownImageError(f"clicked id {image_id!r} is not on "
                                        "the current collage")
        for mapping in (event.eye_features, event.scores):
            if mapping:
                for image_id in mapping:
                    if image_id not in collage_set:
                        raise UnknownImageError(
                            f"feedback references {image_id!r} which is not "
                            "on the current collage")
        if self.config.modality == "full":
            if event.scores is None or set(event.scores) != collage_set:
                raise SessionError(
                    "full modality needs explicit scores for every collage image")

    def _score_round(self, event: FeedbackEvent, collage):
        """Frozen per-image scores plus the eye-feature vectors used."""
        cfg = self.config
        modality = cfg.modality
        psi_map: dict[str, np.ndarray] = {}
        if modality == "random":
            return {i: 0.0 for i in collage}, psi_map
        if modality == "full":
            return {i: float(event.scores[i]) for i in collage}, psi_map

        use_gaze = modality in ("gaze", "gaze+click")
        use_clicks = modality in ("click", "gaze+click")
        clicked = set(event.clicks) if use_clicks else set()

        features: dict[str, np.ndarray | None] = {i: None for i in collage}
        if use_gaze:
            if event.gaze is not None:
                per_image = extract_collage_features(event.gaze,
                                                     self.layout(collage))
                for image_id, efv in per_image.items():
                    if efv.viewed:
                        features[image_id] = efv.values
            elif event.eye_features is not None:
                for image_id, vec in event.eye_features.items():
                    features[image_id] = np.asarray(vec, dtype=np.float64)

        scores = {}
        for image_id in collage:
            psi = features[image_id]
            is_clicked = image_id in clicked
            bonus = cfg.alpha if is_clicked else 0.0
            if psi is None:
                scores[image_id] = cfg.default_unviewed + bonus
            else:
                logit = self.predictor.decision_value(psi)
                scores[image_id] = float(expit(logit)) + bonus
                psi_map[image_id] = psi
        return scores, psi_map

    # ------------------------------------------------------------- selection
    def _next_collage(self):
        cfg = self.config
        unseen = [i for i in self.corpus.ids
                  if i not in set(self.shown_ids())]
        if cfg.modality == "random":
            take = min(cfg.collage_size, len(unseen))
            pool = sorted(unseen)
            idx = self._rng.choice(len(pool), size=take, replace=False)
            return [pool[int(k)] for k in idx], False
        bundle = self.kernels.bundle(self._seen, unseen)
        r = np.array(self._r)
        model = mkl.solve_mkl(bundle, r, lam=cfg.lam, mu_shared=cfg.mu_shared,
                              eta0=self._eta)
        self._eta = model.eta
        k_seen = mkl.combined_gram(model, bundle.grams)
        k_cross = np.zeros((len(unseen), len(self._seen)))
        for e, rows in zip(model.eta, bundle.cross):
            k_cross += e * rows

        tensor_used = False
        if cfg.tensor_enabled and len(self._seen) >= 2:
            try:
                k_psi = self._psi_gram()
                gamma = tensor.train_tensor_svm(
                    tensor.tensor_kernel(k_seen, k_psi), r).gamma
                rank = min(cfg.tensor_rank, len(self._seen) - 1)
                tmodel = tensor.decompose(gamma, k_seen, k_psi, rank)
                emb_seen = tmodel.project(k_seen)
                emb_cross = tmodel.project(k_cross)
                k_seen = emb_seen @ emb_seen.T
                k_cross = emb_cross @ emb_seen.T
                tensor_used = True
            except (tensor.SingleClassError, tensor.DecompositionError,
                    ValueError):
                tensor_used = False
        state = linrel.LinRelState(k_seen, r, mu=cfg.mu_shared, c=cfg.explore_c)
        result = linrel.select_collage(state, k_cross, unseen,
                                       n=cfg.collage_size,
                                       explore_count=cfg.explore_count)
        return result.ids, tensor_used

    def _psi_gram(self) -> np.ndarray:
        rows = mkl.cosine_rows(np.vstack(self._psi))
        return rows @ rows.T

    # --------------------------------------------------------------- summary
    def summary(self) -> dict:
        """Deterministic session record (never includes the session id)."""
        cfg = self.config
        shown = [list(c) for c in self._shown]
        out = {
            "complete": self._done,
            "config": cfg.to_json(),
            "rounds_completed": self._round,
            "shown": shown,
            "scores": [
                [self._scores_log[k][i] for i in shown[k]]
                for k in range(len(self._scores_log))
            ],
            "eta": ([float(v) for v in self._eta]
                    if self._eta is not None else None),
            "eta_trace": self._eta_trace,
            "feature_spaces": (list(self.kernels.names)
                               if self.kernels is not None else []),
            "tensor_rounds": self._tensor_rounds,
            "n_images_shown": sum(len(c) for c in shown),
        }
        if cfg.target_category is not None:
            relevant = set(self.corpus.images_with_label(cfg.target_category))
            per_round = [sum(1 for i in c if i in relevant) for c in shown]
            cum = np.cumsum(per_round)
            totals = np.cumsum([len(c) for c in shown])
            out["relevant_per_round"] = per_round
            out["precision_curve"] = [float(c) / float(t)
                                      for c, t in zip(cum, totals)]
        return out

    def summary_json(self) -> str:
        """Canonical serialization used for byte-identity checks."""
        return json.dumps(self.summary(), sort_keys=True,
                          separators=(",", ":"))

    # ------------------------------------------------------------- event log
    def event_log(self) -> list:
        return [dict(e) for e in self._events]

    def write_log(self, path) -> None:
        with Path(path).open("w") as fh:
            for entry in self._events:
                fh.write(json.dumps(entry, sort_keys=True) + "\n")

    @staticmethod
    def read_log(path) -> list:
        with Path(path).open() as fh:
            return [json.loads(line) for line in fh if line.strip()]

    @classmethod
    def replay(cls, corpus, events, predictor=None, kernels=None,
               session_id=None) -> "Session":
        """Rebuild a session from its event log, checking determinism.

        Raises SessionError if the regenerated collages or scores differ
        from the logged ones.
        """
        if not events or events[0].get("type") != "start":
            raise SessionError("event log must begin with a start entry")
        config = SessionConfig.from_json(events[0]["config"])
        session = cls(corpus, config, predictor=predictor, kernels=kernels,
                      session_id=session_id)
        if session.current_collage != list(events[0]["collage"]):
            raise SessionError("replay diverged on the opening collage")
        for entry in events[1:]:
            if entry.get("type") != "feedback":
                continue
            outcome = session.submit_feedback(
                FeedbackEvent.from_json(entry["event"]))
            logged_scores = entry.get("scores") or {}
            for image_id, value in logged_scores.items():
                if abs(outcome.scores[image_id] - value) > 1e-12:
                    raise SessionError(
                        f"replay diverged on round {entry['round']} scores")
            logged_next = entry.get("next")
            got_next = outcome.next_collage
            if (logged_next or None) != (got_next or None):
                raise SessionError(
                    f"replay diverged on round {entry['round']} selection")
        return session
