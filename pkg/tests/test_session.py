"""Session loop tests: determinism, replay, feedback scoring, errors."""
import json

import numpy as np
import pytest
from scipy.special import expit

from pinview.gaze import GazeSample
from pinview.session import (
    MODALITIES,
    FeedbackEvent,
    ModalityError,
    Session,
    SessionCompleteError,
    SessionConfig,
    SessionError,
    StaleRoundError,
    UnknownImageError,
)
from pinview.simulate import make_synthetic_corpus


def click_config(**kw):
    base = dict(modality="click", rounds=3, collage_size=15, seed=5)
    base.update(kw)
    return SessionConfig(**base)


def run_clicks(session, picks=2):
    """Drive a session to completion, clicking the first ids each round."""
    outcomes = []
    while not session.done:
        clicked = tuple(sorted(session.current_collage)[:picks])
        outcomes.append(session.submit_feedback(
            FeedbackEvent(round=session.round, clicks=clicked)))
    return outcomes


# ------------------------------------------------------------- determinism


def test_identical_runs_are_byte_identical(small_corpus):
    runs = []
    for _ in range(2):
        s = Session(small_corpus, click_config())
        run_clicks(s)
        runs.append((s.summary_json(), s.event_log()))
    assert runs[0][0] == runs[1][0]
    assert runs[0][1] == runs[1][1]


def test_seed_changes_the_opening_collage(small_corpus):
    a = Session(small_corpus, click_config(seed=1))
    b = Session(small_corpus, click_config(seed=2))
    assert a.current_collage != b.current_collage


def test_images_never_repeat(small_corpus):
    s = Session(small_corpus, click_config(rounds=4))
    run_clicks(s)
    shown = s.shown_ids()
    assert len(shown) == 4 * 15
    assert len(set(shown)) == len(shown)


def test_scores_are_frozen_in_the_summary(small_corpus):
    s = Session(small_corpus, click_config())
    outcomes = run_clicks(s)
    summary = s.summary()
    for k, outcome in enumerate(outcomes):
        expected = [outcome.scores[i] for i in summary["shown"][k]]
        assert summary["scores"][k] == expected


def test_summary_json_is_canonical_and_omits_session_id(small_corpus):
    s = Session(small_corpus, click_config(), session_id="secret-handle")
    run_clicks(s)
    text = s.summary_json()
    assert "secret-handle" not in text
    assert text == json.dumps(json.loads(text), sort_keys=True,
                              separators=(",", ":"))


# ------------------------------------------------------------------ replay


def test_replay_from_log_reproduces_the_session(small_corpus, tmp_path):
    s = Session(small_corpus, click_config())
    run_clicks(s)
    path = tmp_path / "session.jsonl"
    s.write_log(path)
    events = Session.read_log(path)
    replayed = Session.replay(small_corpus, events)
    assert replayed.summary_json() == s.summary_json()
    assert replayed.done


def test_replay_detects_tampered_selection(small_corpus, tmp_path):
    s = Session(small_corpus, click_config())
    run_clicks(s)
    events = s.event_log()
    events[1]["next"][0], events[1]["next"][1] = (
        events[1]["next"][1], events[1]["next"][0])
    with pytest.raises(SessionError, match="diverged.*selection"):
        Session.replay(small_corpus, events)


def test_replay_detects_tampered_scores(small_corpus):
    s = Session(small_corpus, click_config())
    run_clicks(s)
    events = s.event_log()
    key = next(iter(events[1]["scores"]))
    events[1]["scores"][key] += 0.001
    with pytest.raises(SessionError, match="diverged.*scores"):
        Session.replay(small_corpus, events)


def test_replay_requires_a_start_entry(small_corpus):
    with pytest.raises(SessionError, match="start"):
        Session.replay(small_corpus, [{"type": "feedback"}])


# ------------------------------------------------------- modality behaviour


def test_click_scores_are_default_plus_bonus(small_corpus):
    cfg = click_config(alpha=2.5, default_unviewed=0.07)
    s = Session(small_corpus, cfg)
    clicked = tuple(sorted(s.current_collage)[:2])
    outcome = s.submit_feedback(FeedbackEvent(round=0, clicks=clicked))
    for image_id, value in outcome.scores.items():
        expected = 0.07 + (2.5 if image_id in clicked else 0.0)
        assert value == pytest.approx(expected, abs=1e-12)


def test_gaze_stream_scores_through_the_layout(small_corpus, pool_predictor):
    cfg = SessionConfig(modality="gaze", rounds=2, seed=5)
    s = Session(small_corpus, cfg, predictor=pool_predictor)
    first_cell_image = s.current_collage[0]
    # One clean fixation inside the top-left 256x256 cell.
    samples = [GazeSample(t=20.0 * k, x=100.0, y=100.0, pupil=3.0)
               for k in range(12)]
    outcome = s.submit_feedback(FeedbackEvent(round=0, gaze=samples))
    viewed_score = outcome.scores[first_cell_image]
    assert 0.0 < viewed_score <= 1.0
    assert viewed_score != cfg.default_unviewed
    for image_id in s.shown_ids()[1:15]:
        assert outcome.scores[image_id] == cfg.default_unviewed


def test_gaze_modality_ignores_clicks(small_corpus, pool_predictor):
    cfg = SessionConfig(modality="gaze", rounds=2, seed=5)
    s = Session(small_corpus, cfg, predictor=pool_predictor)
    clicked = s.current_collage[3]
    outcome = s.submit_feedback(FeedbackEvent(round=0, clicks=(clicked,)))
    assert outcome.scores[clicked] == cfg.default_unviewed


def test_gaze_click_combines_predictor_and_bonus(small_corpus,
                                                 pool_predictor):
    cfg = SessionConfig(modality="gaze+click", rounds=2, seed=5, alpha=1.0)
    s = Session(small_corpus, cfg, predictor=pool_predictor)
    target = s.current_collage[0]
    vec = np.linspace(0.1, 1.0, 19)
    outcome = s.submit_feedback(FeedbackEvent(
        round=0, clicks=(target,), eye_features={target: vec}))
    logit = pool_predictor.decision_value(vec)
    assert outcome.scores[target] == pytest.approx(float(expit(logit)) + 1.0,
                                                   abs=1e-12)


def test_full_modality_uses_explicit_scores_verbatim(small_corpus):
    cfg = SessionConfig(modality="full", rounds=2, seed=5)
    s = Session(small_corpus, cfg)
    wanted = {i: 0.25 + 0.01 * k
              for k, i in enumerate(s.current_collage)}
    outcome = s.submit_feedback(FeedbackEvent(round=0, scores=wanted))
    assert outcome.scores == wanted


def test_full_modality_requires_complete_scores(small_corpus):
    s = Session(small_corpus, SessionConfig(modality="full", seed=5))
    partial = {s.current_collage[0]: 1.0}
    with pytest.raises(SessionError, match="every collage image"):
        s.submit_feedback(FeedbackEvent(round=0, scores=partial))


def test_random_modality_scores_zero_and_solves_nothing(small_corpus):
    cfg = SessionConfig(modality="random", rounds=3, seed=5)
    s = Session(small_corpus, cfg)
    outcomes = run_clicks(s, picks=0)
    assert all(v == 0.0 for o in outcomes for v in o.scores.values())
    assert all(o.eta is None for o in outcomes)
    summary = s.summary()
    assert summary["eta"] is None
    assert summary["eta_trace"] == []
    assert summary["feature_spaces"] == []


def test_mixture_weights_traced_once_per_solve(small_corpus):
    s = Session(small_corpus, click_config(rounds=3))
    outcomes = run_clicks(s)
    assert all(o.eta is not None for o in outcomes)
    summary = s.summary()
    # The last round shows no further collage, so no further solve.
    assert len(summary["eta_trace"]) == 2
    for eta in summary["eta_trace"]:
        assert len(eta) == 3
        assert sum(eta) == pytest.approx(1.0, abs=1e-9)
    assert summary["feature_spaces"] == list(s.kernels.names)


def test_tensor_stage_runs_when_enabled(small_corpus):
    s = Session(small_corpus, click_config(tensor_enabled=True, rounds=3))
    outcomes = run_clicks(s)
    assert outcomes[0].tensor_used and outcomes[1].tensor_used
    assert not outcomes[-1].tensor_used  # final round selects nothing
    assert s.summary()["tensor_rounds"] == [1, 2]


def test_tensor_stage_skips_single_class_feedback(small_corpus):
    s = Session(small_corpus, click_config(tensor_enabled=True))
    outcome = s.submit_feedback(FeedbackEvent(round=0, clicks=()))
    assert not outcome.tensor_used  # every score is 0.05: one class only


def test_precision_curve_matches_hand_count(small_corpus):
    cfg = SessionConfig(modality="random", rounds=3, seed=9,
                        target_category="cat04")
    s = Session(small_corpus, cfg)
    run_clicks(s, picks=0)
    summary = s.summary()
    relevant = set(small_corpus.images_with_label("cat04"))
    per_round = [sum(1 for i in c if i in relevant) for c in summary["shown"]]
    assert summary["relevant_per_round"] == per_round
    cum = np.cumsum(per_round)
    totals = np.cumsum([len(c) for c in summary["shown"]])
    assert summary["precision_curve"] == [c / t for c, t in zip(cum, totals)]


# ---------------------------------------------------------------- protocol


def test_stale_round_is_rejected_with_context(small_corpus):
    s = Session(small_corpus, click_config())
    with pytest.raises(StaleRoundError) as exc:
        s.submit_feedback(FeedbackEvent(round=1))
    assert exc.value.got == 1 and exc.value.expected == 0


def test_feedback_for_unknown_image_is_rejected(small_corpus):
    s = Session(small_corpus, click_config())
    with pytest.raises(UnknownImageError, match="not-shown"):
        s.submit_feedback(FeedbackEvent(round=0, clicks=("not-shown",)))
    with pytest.raises(UnknownImageError):
        s.submit_feedback(FeedbackEvent(
            round=0, eye_features={"not-shown": np.zeros(19)}))


def test_finished_session_rejects_more_feedback(small_corpus):
    s = Session(small_corpus, click_config(rounds=1))
    run_clicks(s)
    with pytest.raises(SessionCompleteError):
        s.submit_feedback(FeedbackEvent(round=1))


def test_gaze_modalities_need_a_predictor(small_corpus):
    for modality in ("gaze", "gaze+click"):
        with pytest.raises(ModalityError, match="predictor"):
            Session(small_corpus, SessionConfig(modality=modality))


@pytest.mark.parametrize("kw, msg", [
    (dict(modality="telepathy"), "unknown modality"),
    (dict(rounds=0), "rounds"),
    (dict(collage_size=0), "collage_size"),
    (dict(collage_size=16), "fit the grid"),
    (dict(lam=1.5), "lam"),
    (dict(mu_shared=-1.0), "non-negative"),
    (dict(explore_c=-0.1), "non-negative"),
    (dict(tensor_rank=0), "tensor_rank"),
])
def test_config_validation(kw, msg):
    with pytest.raises(SessionError, match=msg):
        SessionConfig(**kw)


def test_corpus_must_hold_at_least_one_collage():
    tiny = make_synthetic_corpus(n_images=10, seed=1, name="tiny")
    with pytest.raises(SessionError, match="smaller than one collage"):
        Session(tiny, click_config())


def test_config_and_feedback_json_roundtrip(small_corpus):
    cfg = click_config(alpha=2.0, tensor_enabled=True)
    assert SessionConfig.from_json(cfg.to_json()) == cfg
    event = FeedbackEvent(
        round=2, clicks=("b", "a"),
        gaze=[GazeSample(0.0, 1.0, 2.0, 3.0, True),
              GazeSample(10.0, 1.5, 2.5, 0.0, False)],
        eye_features={"a": np.arange(19.0)}, scores={"b": 0.5})
    back = FeedbackEvent.from_json(json.loads(json.dumps(event.to_json())))
    assert back.round == 2 and back.clicks == ("a", "b")
    assert back.gaze == event.gaze
    assert np.array_equal(back.eye_features["a"], event.eye_features["a"])
    assert back.scores == {"b": 0.5}


def test_modalities_constant_is_complete():
    assert MODALITIES == ("gaze", "click", "gaze+click", "full", "random")
