"""Command-line entry points.

``predict`` ranks the next character for a text, ``evaluate`` runs metric
campaigns over a dataset, ``serve`` hosts the prediction service,
``backend serve-ngram`` hosts a built-in model under the backend wire
protocol, and ``corrupt`` applies the noise model to lines of text.
"""
from __future__ import annotations

import sys
from pathlib import Path

import click
import numpy as np

from .backends import NgramBackend, build_backend_app
from .config import build_engine_from_file, load_service_config
from .metrics import (
    CampaignError,
    delta_report,
    emit_delta,
    emit_report,
    run_campaign,
)
from .noise import NoiseSpec, corrupt_with_rng
from .service import build_app
from .text import DEFAULT_ALPHABET, load_corpus, make_instances
from .vocab import Vocabulary

SPACE_GLYPH = "␣"


@click.group()
def main():
    """Character-level predictive typing tools."""


@main.command()
@click.option("--config", "config_path", required=True, type=click.Path(exists=True))
@click.option("--text", required=True, help="Typing history to rank against.")
def predict(config_path: str, text: str):
    """Print the full ranked alphabet, one 'rank char probability' line each."""
    engine = build_engine_from_file(config_path)
    history = text.lower()
    try:
        engine.alphabet.check_text(history)
    except ValueError as exc:
        raise click.ClickException(str(exc))
    for rank, (ch, prob) in enumerate(engine.rank(history), start=1):
        glyph = SPACE_GLYPH if ch == engine.alphabet.boundary_char else ch
        click.echo(f"{rank}\t{glyph}\t{prob:.6f}")


@main.command()
@click.option("--engine", "engine_path", required=True, type=click.Path(exists=True))
@click.option("--dataset", required=True, type=click.Path(exists=True))
@click.option(
    "--dataset-format",
    default="phrase_lines",
    type=click.Choice(["phrase_lines", "switchboard_transcript"]),
)
@click.option("--noise-rate", type=float, default=None, help="Also run a noisy campaign.")
@click.option("--seed", type=int, default=0, help="Noise seed.")
@click.option("--repeats", type=int, default=1)
@click.option("--out-dir", default="reports", type=click.Path())
@click.option("--name", default="report")
def evaluate(engine_path, dataset, dataset_format, noise_rate, seed, repeats, out_dir, name):
    """Run an evaluation campaign and write report CSVs."""
    engine = build_engine_from_file(engine_path)
    phrases = load_corpus(dataset, dataset_format, alphabet=engine.alphabet)
    instances = [i for p in phrases for i in make_instances(p, engine.alphabet)]
    if not instances:
        raise click.ClickException("dataset produced no evaluation instances")
    try:
        clean = run_campaign(engine, instances, repeats=repeats)
        paths = emit_report(clean, out_dir, name=name)
        if noise_rate is not None:
            spec = NoiseSpec(rate=noise_rate, seed=seed)
            noisy = run_campaign(engine, instances, noise=spec, repeats=repeats)
            noisy_paths = emit_report(noisy, out_dir, name=f"{name}_noisy")
            paths.update({f"noisy_{k}": v for k, v in noisy_paths.items()})
            paths.update(emit_delta(delta_report(clean, noisy), out_dir, name=name))
    except CampaignError as exc:
        raise click.ClickException(str(exc))
    for label, path in sorted(paths.items()):
        click.echo(f"{label}: {path}")


@main.command()
@click.option("--config", "config_path", default=None, type=click.Path(exists=True))
@click.option("--host", default=None)
@click.option("--port", type=int, default=None)
def serve(config_path, host, port):
    """Host the prediction service."""
    import uvicorn

    cfg = load_service_config(config_path)
    if not cfg.engine_config:
        raise click.ClickException(
            "no engine config: set service.engine_config or CHARPILOT_ENGINE"
        )
    engine = build_engine_from_file(cfg.engine_config)
    app = build_app(engine, max_sessions=cfg.max_sessions, static_dir=cfg.static_dir)
    uvicorn.run(app, host=host or cfg.host, port=port or cfg.port)


@main.group()
def backend():
    """Backend wire-protocol servers."""


@backend.command("serve-ngram")
@click.option("--corpus", required=True, type=click.Path(exists=True))
@click.option("--order", type=int, default=1)
@click.option(
    "--kind",
    default="char_direct",
    type=click.Choice(["char_direct", "closed_word", "subword"]),
)
@click.option("--add-k", type=float, default=1.0)
@click.option("--vocab", "vocab_path", default=None, type=click.Path(exists=True))
@click.option("--corpus-format", default="phrase_lines")
@click.option("--host", default="127.0.0.1")
@click.option("--port", type=int, default=8001)
def serve_ngram(corpus, order, kind, add_k, vocab_path, corpus_format, host, port):
    """Train an n-gram backend and host it under the wire protocol."""
    import uvicorn

    vocab = None
    if vocab_path:
        vocab_kind = {"char_direct": "character", "closed_word": "closed_word"}.get(
            kind, "subword"
        )
        vocab = Vocabulary.from_tsv(vocab_path, vocab_kind)
    phrases = load_corpus(corpus, corpus_format)
    model = NgramBackend(kind=kind, order=order, add_k=add_k, vocab=vocab).fit(phrases)
    uvicorn.run(build_backend_app(model), host=host, port=port)


@main.command()
@click.option("--rate", type=float, required=True)
@click.option("--seed", type=int, default=0)
@click.option("--input", "input_path", default="-", type=click.Path(allow_dash=True))
@click.option("--output", "output_path", default="-", type=click.Path(allow_dash=True))
def corrupt(rate, seed, input_path, output_path):
    """Corrupt each input line's letters at the given rate."""
    spec = NoiseSpec(rate=rate, seed=seed)
    rng = np.random.default_rng(spec.seed)
    in_fh = sys.stdin if input_path == "-" else open(input_path, encoding="utf-8")
    out_fh = sys.stdout if output_path == "-" else open(output_path, "w", encoding="utf-8")
    try:
        for line in in_fh:
            line = line.rstrip("\n")
            out_fh.write(corrupt_with_rng(line, spec.rate, rng) + "\n")
    finally:
        if in_fh is not sys.stdin:
            in_fh.close()
        if out_fh is not sys.stdout:
            out_fh.close()


if __name__ == "__main__":
    main()
