"""Configuration files for engines, campaigns, and the service.

TOML or JSON, chosen by file extension. Relative paths inside a config
resolve against the config file's directory. The service additionally
honors environment overrides for its bind address and engine path.
"""
from __future__ import annotations

import json
import os
from dataclasses import dataclass
from pathlib import Path

try:
    import tomllib
except ModuleNotFoundError:
    import tomli as tomllib

from .backends import ExternalBackend, NgramBackend
from .engine import NextCharPredictor
from .text import DEFAULT_ALPHABET, Alphabet, load_corpus
from .vocab import Vocabulary

__all__ = [
    "ConfigError",
    "ServiceConfig",
    "load_config",
    "build_engine",
    "build_engine_from_file",
    "load_service_config",
    "ENV_BIND",
    "ENV_ENGINE",
]

ENV_BIND = "CHARPILOT_BIND"
ENV_ENGINE = "CHARPILOT_ENGINE"

_VOCAB_KIND = {
    "char_direct": "character",
    "closed_word": "closed_word",
    "subword": "subword",
}


class ConfigError(ValueError):
    pass


def load_config(path: str | Path) -> dict:
    path = Path(path)
    if not path.exists():
        raise ConfigError(f"config file not found: {path}")
    if path.suffix == ".toml":
        with open(path, "rb") as fh:
            return tomllib.load(fh)
    if path.suffix == ".json":
        with open(path, encoding="utf-8") as fh:
            return json.load(fh)
    raise ConfigError(f"unsupported config extension {path.suffix!r} (use .toml or .json)")


def _resolve(base_dir: Path, value: str) -> Path:
    p = Path(value)
    return p if p.is_absolute() else base_dir / p


def _alphabet_from(cfg: dict) -> Alphabet:
    section = cfg.get("alphabet")
    if not section:
        return DEFAULT_ALPHABET
    chars = section.get("chars")
    if not chars:
        raise ConfigError("alphabet override requires a 'chars' string")
    boundary = section.get("boundary", " ")
    return Alphabet(tuple(chars), boundary)


def build_engine(cfg: dict, base_dir: str | Path = ".") -> NextCharPredictor:
    """Construct and fit a predictor from a parsed engine config."""
    base_dir = Path(base_dir)
    alphabet = _alphabet_from(cfg)
    backend_cfg = cfg.get("backend", {})
    engine_cfg = cfg.get("engine", {})

    vocab = None
    if backend_cfg.get("vocab"):
        kind = backend_cfg.get("kind", "subword")
        vocab = Vocabulary.from_tsv(
            _resolve(base_dir, backend_cfg["vocab"]),
            _VOCAB_KIND.get(kind, "subword"),
            alphabet,
        )

    if backend_cfg.get("url"):
        backend = ExternalBackend(
            base_url=backend_cfg["url"],
            vocab=vocab,
            timeout=float(backend_cfg.get("timeout", 10.0)),
            alphabet=alphabet,
        )
    else:
        kind = backend_cfg.get("kind", "char_direct")
        backend = NgramBackend(
            kind=kind,
            order=int(backend_cfg.get("order", 1)),
            add_k=float(backend_cfg.get("add_k", 1.0)),
            vocab=vocab,
            alphabet=alphabet,
        )

    corpus = None
    if backend_cfg.get("corpus"):
        corpus = load_corpus(
            _resolve(base_dir, backend_cfg["corpus"]),
            backend_cfg.get("corpus_format", "phrase_lines"),
            profile=backend_cfg.get("profile"),
            seed=int(backend_cfg.get("corpus_seed", 0)),
            alphabet=alphabet,
        )
    elif isinstance(backend, NgramBackend):
        raise ConfigError("built-in backends require a training corpus path")

    predictor = NextCharPredictor(
        backend=backend,
        interp_weight=float(engine_cfg.get("lambda", 0.8)),
        beam_size=int(engine_cfg.get("beam_size", 20)),
        beam_depth=int(engine_cfg.get("beam_depth", 2)),
        alphabet=alphabet,
    )
    return predictor.fit(corpus)


def build_engine_from_file(path: str | Path) -> NextCharPredictor:
    path = Path(path)
    return build_engine(load_config(path), path.parent)


@dataclass(frozen=True)
class ServiceConfig:
    host: str = "127.0.0.1"
    port: int = 8000
    engine_config: str = ""
    request_timeout: float = 10.0
    max_sessions: int = 1000
    static_dir: str | None = None

    def __post_init__(self):
        if self.request_timeout <= 0:
            raise ConfigError("request timeout must be positive")
        if self.max_sessions < 1:
            raise ConfigError("max_sessions must be >= 1")


def load_service_config(path: str | Path | None, env=os.environ) -> ServiceConfig:
    """Service settings from file, with env overrides for bind and engine."""
    cfg = {}
    base_dir = Path(".")
    if path is not None:
        cfg = load_config(path)
        base_dir = Path(path).parent
    service = cfg.get("service", cfg)

    host = service.get("host", "127.0.0.1")
    port = int(service.get("port", 8000))
    bind = env.get(ENV_BIND)
    if bind:
        host, _, port_str = bind.rpartition(":")
        if not host or not port_str.isdigit():
            raise ConfigError(f"{ENV_BIND} must look like host:port, got {bind!r}")
        port = int(port_str)

    engine_path = env.get(ENV_ENGINE) or service.get("engine_config", "")
    if engine_path:
        engine_path = str(_resolve(base_dir, engine_path))
    static_dir = service.get("static_dir")
    if static_dir:
        static_dir = str(_resolve(base_dir, static_dir))
    return ServiceConfig(
        host=host,
        port=port,
        engine_config=engine_path,
        request_timeout=float(service.get("request_timeout", 10.0)),
        max_sessions=int(service.get("max_sessions", 1000)),
        static_dir=static_dir,
    )
