"""Command-line entry points: ingest, train-relevance, simulate, serve."""
from __future__ import annotations

import json
import sys
from pathlib import Path

import click

from pinview.corpus import ImportFormatError, import_features, ingest_directory
from pinview.relevance import TrainingError, load_training_csv, train_predictor
from pinview.service import Settings, Store, serve as serve_app
from pinview.session import MODALITIES


@click.group()
def main() -> None:
    """Session-adaptive image retrieval engine."""


def _store(data_dir: str | None) -> Store:
    if data_dir is not None:
        return Store(data_dir)
    return Store(Settings.from_env().data_dir)


@main.command()
@click.argument("directory", type=click.Path(exists=True, file_okay=False))
@click.option("--data-dir", type=click.Path(), default=None,
              help="Store root (default: PINVIEW_DATA_DIR or ./pinview-data).")
@click.option("--name", default=None, help="Corpus name (default: dir name).")
@click.option("--labels-file", default="labels.json", show_default=True,
              help="JSON file inside DIRECTORY mapping image id to labels.")
@click.option("--features", "feature_tables", multiple=True,
              type=click.Path(exists=True, dir_okay=False),
              help="Tab-separated feature table(s) to attach after ingest.")
def ingest(directory, data_dir, name, labels_file, feature_tables) -> None:
    """Extract features from the images in DIRECTORY and store the corpus."""
    corpus, report = ingest_directory(directory, name=name,
                                      labels_file=labels_file)
    for table in feature_tables:
        try:
            rows = import_features(corpus, table)
        except ImportFormatError as exc:
            raise click.ClickException(str(exc)) from exc
        click.echo(f"attached {rows} feature rows from {table}")
    store = _store(data_dir)
    target = store.save_corpus(corpus)
    click.echo(f"ingested {len(report.ingested)} images "
               f"({len(report.skipped)} skipped) into {target}")
    for image_id, reason in report.skipped:
        click.echo(f"  skipped {image_id}: {reason}", err=True)


@main.command("train-relevance")
@click.argument("training_csv", type=click.Path(exists=True, dir_okay=False))
@click.option("--data-dir", type=click.Path(), default=None)
@click.option("--corpus", "corpus_name", required=True,
              help="Corpus the predictor will serve.")
@click.option("--alpha", type=float, default=1.0, show_default=True,
              help="Additive click bonus.")
@click.option("--default-unviewed", type=float, default=0.05,
              show_default=True, help="Score for images never viewed.")
@click.option("--seed", type=int, default=0, show_default=True)
def train_relevance(training_csv, data_dir, corpus_name, alpha,
                    default_unviewed, seed) -> None:
    """Fit the eye-feature relevance predictor from a labelled CSV."""
    X, y = load_training_csv(training_csv)
    try:
        predictor = train_predictor(X, y, seed=seed, alpha=alpha,
                                    default_unviewed=default_unviewed)
    except TrainingError as exc:
        raise click.ClickException(str(exc)) from exc
    store = _store(data_dir)
    path = store.save_predictor(corpus_name, predictor)
    click.echo(f"trained on {len(y)} rows "
               f"(regularization {predictor.reg:g}) -> {path}")


@main.command()
@click.option("--data-dir", type=click.Path(), default=None)
@click.option("--corpus", "corpus_name", default=None,
              help="Stored corpus to search (default: a synthetic one).")
@click.option("--modality", type=click.Choice(MODALITIES),
              default="gaze+click", show_default=True)
@click.option("--sessions", type=int, default=5, show_default=True)
@click.option("--rounds", type=int, default=10, show_default=True)
@click.option("--seed", type=int, default=0, show_default=True)
@click.option("--category", "categories", multiple=True,
              help="Restrict to specific target categories.")
@click.option("--pool-separation", type=float, default=3.0, show_default=True,
              help="Class separation of the simulated eye-feature pool.")
@click.option("--out", type=click.Path(), default=None,
              help="Write the full result JSON here (default: stdout).")
def simulate(data_dir, corpus_name, modality, sessions, rounds, seed,
             categories, pool_separation, out) -> None:
    """Run simulated search sessions and report MAP per category."""
    from pinview.simulate import (HarnessConfig, generate_synthetic_pool,
                                  make_synthetic_corpus, run_experiment,
                                  train_pool_predictor)

    if corpus_name is not None:
        corpus = _store(data_dir).load_corpus(corpus_name)
    else:
        corpus = make_synthetic_corpus(seed=seed)
    pool = predictor = None
    if modality in ("gaze", "gaze+click"):
        pool = generate_synthetic_pool(separation=pool_separation, seed=seed)
        predictor = train_pool_predictor(pool, seed=seed)
    config = HarnessConfig(modality=modality, sessions=sessions,
                           rounds=rounds, seed=seed,
                           categories=tuple(categories) or None)
    result = run_experiment(corpus, config, predictor=predictor, pool=pool)
    payload = json.dumps(result.to_json(), indent=2, sort_keys=True)
    if out is not None:
        Path(out).write_text(payload + "\n")
        click.echo(f"wrote {out}")
    else:
        click.echo(payload)
    click.echo(f"macro MAP: {result.map_score:.4f}", err=True)


@main.command("make-synthetic")
@click.option("--data-dir", type=click.Path(), default=None)
@click.option("--name", default="synthetic", show_default=True)
@click.option("--images", type=int, default=1000, show_default=True)
@click.option("--seed", type=int, default=0, show_default=True)
@click.option("--render-assets/--no-render-assets", default=False,
              show_default=True, help="Write placeholder PNGs for the UI.")
def make_synthetic(data_dir, name, images, seed, render_assets) -> None:
    """Generate a labelled synthetic corpus (for demos and experiments)."""
    from pinview.corpus import Corpus, ImageRecord
    from pinview.simulate import generate_synthetic_pool, make_synthetic_corpus
    from pinview.simulate.harness import train_pool_predictor

    store = _store(data_dir)
    assets_dir = (store.corpus_dir(name) / "assets") if render_assets else None
    corpus = make_synthetic_corpus(n_images=images, seed=seed, name=name,
                                   assets_dir=assets_dir)
    if render_assets:
        # Store sources relative to the corpus directory so the asset
        # endpoint resolves them no matter where the data dir moves.
        records = [ImageRecord(image_id, f"assets/{image_id}.png",
                               corpus.record(image_id).labels)
                   for image_id in corpus.ids]
        data = {feature: corpus.feature_matrix(feature)
                for feature in corpus.feature_names()}
        corpus = Corpus(records, data, name=name)
    target = store.save_corpus(corpus)
    pool = generate_synthetic_pool(seed=seed)
    store.save_predictor(name, train_pool_predictor(pool, seed=seed))
    click.echo(f"wrote {len(corpus)} images ({len(corpus.categories())} "
               f"categories) and a relevance predictor to {target.parent.parent}")


@main.command()
@click.option("--data-dir", type=click.Path(), default=None)
@click.option("--host", default="127.0.0.1", show_default=True)
@click.option("--port", type=int, default=None,
              help="Override PINVIEW_PORT / config file.")
def serve(data_dir, host, port) -> None:
    """Run the HTTP session service."""
    settings = Settings.from_env()
    if data_dir is not None:
        settings = Settings(data_dir=Path(data_dir), port=settings.port,
                            seed=settings.seed,
                            session_ttl=settings.session_ttl)
    if port is not None:
        settings = Settings(data_dir=settings.data_dir, port=port,
                            seed=settings.seed,
                            session_ttl=settings.session_ttl)
    click.echo(f"serving {settings.data_dir} on {host}:{settings.port}")
    serve_app(settings, host=host)


if __name__ == "__main__":
    sys.exit(main())
