"""Next-token probability backends.

A backend answers one question: given a token-id context, what is the
probability of each token in its vocabulary coming next? Built-in backends
are anchored add-k n-gram models over characters, whole words, or subword
units. A thin HTTP client speaks the same contract to external model
servers, and ``build_backend_app`` hosts any built-in backend under that
wire protocol.
"""
import math
import uuid
from dataclasses import dataclass, field

import numpy as np
from sklearn.base import BaseEstimator
from sklearn.utils.validation import check_is_fitted

from .text import DEFAULT_ALPHABET, Alphabet, as_texts
from .vocab import (
    Token,
    TokenizeError,
    VocabFormatError,
    Vocabulary,
    find_partial_suffix,
    greedy_tokenize,
)

__all__ = [
    "BACKEND_KINDS",
    "TokenDistribution",
    "BackendDescriptor",
    "BackendTransportError",
    "NgramBackend",
    "ExternalBackend",
    "build_backend_app",
    "LOGPROB_FLOOR",
]

BACKEND_KINDS = ("char_direct", "closed_word", "subword")
_VOCAB_KIND = {
    "char_direct": "character",
    "closed_word": "closed_word",
    "subword": "subword",
}

# Serialized log probability for zero mass; JSON cannot carry -inf.
LOGPROB_FLOOR = -1e9


@dataclass(frozen=True)
class TokenDistribution:
    """Dense probability array over a vocabulary's token ids."""

    vocab: Vocabulary
    probs: np.ndarray

    def __post_init__(self):
        probs = np.asarray(self.probs, dtype=float)
        if probs.shape != (len(self.vocab),):
            raise ValueError(
                f"expected {len(self.vocab)} probabilities, got {probs.shape}"
            )
        if len(probs) and (probs.min() < 0 or abs(probs.sum() - 1.0) > 1e-9):
            raise ValueError("token probabilities must be nonnegative and sum to 1")
        probs.setflags(write=False)
        object.__setattr__(self, "probs", probs)

    def prob(self, token_id: int) -> float:
        return float(self.probs[token_id])


@dataclass(frozen=True)
class BackendDescriptor:
    """What a backend is: its kind, vocabulary, and context budget."""

    kind: str
    vocab: Vocabulary
    max_context: int
    deterministic: bool = True

    def __post_init__(self):
        if self.kind not in BACKEND_KINDS:
            raise ValueError(f"unknown backend kind {self.kind!r}")
        if _VOCAB_KIND[self.kind] != self.vocab.kind:
            raise ValueError(
                f"backend kind {self.kind!r} requires a"
                f" {_VOCAB_KIND[self.kind]!r} vocabulary, got {self.vocab.kind!r}"
            )
        if self.max_context < 0:
            raise ValueError("max_context must be nonnegative")


class BackendTransportError(RuntimeError):
    """A backend could not be reached or answered unusably.

    ``retry_safe`` says whether resending the identical request is safe.
    """

    def __init__(self, message: str, retry_safe: bool = False):
        super().__init__(message)
        self.retry_safe = retry_safe


def _uniform(vocab: Vocabulary) -> TokenDistribution:
    n = len(vocab)
    return TokenDistribution(vocab, np.full(n, 1.0 / n))


class NgramBackend(BaseEstimator):
    """Anchored n-gram model with add-k smoothing.

    Contexts shorter than ``order - 1`` are counted as they occur at
    sequence starts, so a short query context means "near the beginning",
    not "backed off". Unseen contexts fall back to the uniform
    distribution (which equals add-k smoothing of an all-zero count row).
    """

    def __init__(
        self,
        kind: str = "char_direct",
        order: int = 1,
        add_k: float = 1.0,
        vocab: Vocabulary | None = None,
        alphabet: Alphabet = DEFAULT_ALPHABET,
    ):
        self.kind = kind
        self.order = order
        self.add_k = add_k
        self.vocab = vocab
        self.alphabet = alphabet

    # Training -------------------------------------------------------------

    def fit(self, X, y=None):
        if self.kind not in BACKEND_KINDS:
            raise ValueError(f"unknown backend kind {self.kind!r}")
        if self.order < 1:
            raise ValueError("order must be >= 1")
        if self.add_k < 0:
            raise ValueError("add_k must be nonnegative")
        texts = as_texts(X)
        if not texts:
            raise ValueError("training corpus is empty")
        vocab = self.vocab
        if vocab is None:
            if self.kind == "char_direct":
                vocab = Vocabulary.character(self.alphabet)
            elif self.kind == "closed_word":
                words = sorted({w for t in texts for w in t.split(self.alphabet.boundary_char) if w})
                if not words:
                    raise ValueError("training corpus contains no words")
                vocab = Vocabulary.from_words(words, self.alphabet)
            else:
                raise ValueError("subword backends require an explicit vocabulary")
        elif vocab.kind != _VOCAB_KIND[self.kind]:
            raise ValueError(
                f"kind {self.kind!r} requires a {_VOCAB_KIND[self.kind]!r} vocabulary"
            )

        n = len(vocab)
        counts: dict[tuple[int, ...], np.ndarray] = {}
        span = self.order - 1
        for seq in self._sequences(texts, vocab):
            for i, token_id in enumerate(seq):
                ctx = tuple(seq[max(0, i - span):i])
                row = counts.get(ctx)
                if row is None:
                    row = counts[ctx] = np.zeros(n)
                row[token_id] += 1.0
        self.vocab_ = vocab
        self.counts_ = counts
        self.max_context_ = span
        self.descriptor_ = BackendDescriptor(self.kind, vocab, span)
        return self

    def _sequences(self, texts: list[str], vocab: Vocabulary):
        boundary = self.alphabet.boundary_char
        if self.kind == "char_direct":
            ids = {t.surface: t.token_id for t in vocab}
            for text in texts:
                try:
                    yield [ids[ch] for ch in text]
                except KeyError as exc:
                    raise VocabFormatError(
                        f"character {exc.args[0]!r} missing from vocabulary"
                    ) from None
        elif self.kind == "closed_word":
            ids = {t.surface: t.token_id for t in vocab}
            for text in texts:
                # unknown words break the sequence: no context spans them
                run: list[int] = []
                for word in text.split(boundary):
                    if word in ids:
                        run.append(ids[word])
                    elif run:
                        yield run
                        run = []
                if run:
                    yield run
        else:
            for text in texts:
                yield greedy_tokenize(vocab, text)

    # Queries --------------------------------------------------------------

    @property
    def descriptor(self) -> BackendDescriptor:
        check_is_fitted(self, "descriptor_")
        return self.descriptor_

    def next_token_dist(self, context_ids) -> TokenDistribution:
        check_is_fitted(self, "counts_")
        vocab = self.vocab_
        n = len(vocab)
        ids = [int(t) for t in context_ids]
        for t in ids:
            if not 0 <= t < n:
                raise ValueError(f"context token id {t} out of range")
        ctx = tuple(ids[-self.max_context_:]) if self.max_context_ else ()
        counts = self.counts_.get(ctx)
        if counts is None:
            return _uniform(vocab)
        k = self.add_k
        if k > 0:
            probs = (counts + k) / (counts.sum() + k * n)
        else:
            total = counts.sum()
            if total <= 0:
                return _uniform(vocab)
            probs = counts / total
        return TokenDistribution(vocab, probs)


class ExternalBackend:
    """Client for a remote backend speaking the JSON wire protocol.

    The server must offer ``GET /v1/info`` and ``POST /v1/logprobs``;
    ``POST /v1/tokenize`` and ``GET /v1/vocab`` are optional. Token
    surfaces come from a locally supplied vocabulary or, failing that,
    from the vocab endpoint. Every request carries a timeout and an
    ``X-Request-Id`` header.
    """

    def __init__(
        self,
        base_url: str = "",
        vocab: Vocabulary | None = None,
        timeout: float = 10.0,
        client=None,
        alphabet: Alphabet = DEFAULT_ALPHABET,
    ):
        if timeout <= 0:
            raise ValueError("timeout must be positive")
        import httpx

        self._own_client = client is None
        self._client = client or httpx.Client(base_url=base_url, timeout=timeout)
        self._timeout = timeout
        self._alphabet = alphabet
        self._vocab = vocab
        self._descriptor: BackendDescriptor | None = None
        self._tokenize_available: bool | None = None

    def close(self):
        if self._own_client:
            self._client.close()

    def __enter__(self):
        return self

    def __exit__(self, *exc):
        self.close()

    def _request(self, method: str, path: str, json_body=None):
        import httpx

        headers = {"X-Request-Id": uuid.uuid4().hex}
        try:
            resp = self._client.request(
                method, path, json=json_body, headers=headers, timeout=self._timeout
            )
        except httpx.TimeoutException as exc:
            raise BackendTransportError(f"backend timeout on {path}: {exc}", True) from exc
        except httpx.TransportError as exc:
            raise BackendTransportError(f"backend unreachable on {path}: {exc}", True) from exc
        if resp.status_code >= 500:
            raise BackendTransportError(
                f"backend error {resp.status_code} on {path}", True
            )
        return resp

    def connect(self) -> BackendDescriptor:
        if self._descriptor is not None:
            return self._descriptor
        resp = self._request("GET", "/v1/info")
        if resp.status_code != 200:
            raise BackendTransportError(
                f"info endpoint returned {resp.status_code}", False
            )
        info = resp.json()
        kind = info.get("kind")
        vocab_size = int(info.get("vocab_size", -1))
        vocab = self._vocab or self._fetch_vocab(kind)
        if vocab is None:
            raise VocabFormatError(
                "no local vocabulary supplied and the server offers no vocab endpoint"
            )
        if len(vocab) != vocab_size:
            raise VocabFormatError(
                f"vocabulary size mismatch: server reports {vocab_size},"
                f" local vocabulary has {len(vocab)}"
            )
        self._descriptor = BackendDescriptor(
            kind,
            vocab,
            int(info.get("max_context", 0)),
            bool(info.get("deterministic", True)),
        )
        return self._descriptor

    def _fetch_vocab(self, kind: str) -> Vocabulary | None:
        resp = self._request("GET", "/v1/vocab")
        if resp.status_code != 200:
            return None
        body = resp.json()
        tokens = [Token(int(i), s, bool(m)) for i, s, m in body["tokens"]]
        return Vocabulary(tokens, _VOCAB_KIND[kind], self._alphabet)

    @property
    def descriptor(self) -> BackendDescriptor:
        return self.connect()

    def next_token_dist(self, context_ids) -> TokenDistribution:
        desc = self.connect()
        ids = [int(t) for t in context_ids]
        if desc.max_context:
            ids = ids[-desc.max_context:]
        resp = self._request("POST", "/v1/logprobs", {"context_ids": ids})
        if resp.status_code != 200:
            raise BackendTransportError(
                f"logprobs endpoint returned {resp.status_code}", False
            )
        logprobs = np.asarray(resp.json()["logprobs"], dtype=float)
        if logprobs.shape != (len(desc.vocab),):
            raise BackendTransportError(
                f"expected {len(desc.vocab)} log probabilities,"
                f" got {logprobs.shape}",
                False,
            )
        probs = np.exp(logprobs - logprobs.max())
        total = probs.sum()
        if not math.isfinite(total) or total <= 0:
            raise BackendTransportError("backend returned unusable log probabilities", False)
        return TokenDistribution(desc.vocab, probs / total)

    def tokenize(self, text: str) -> tuple[list[int], str] | None:
        """Server-side tokenization; None when the endpoint is absent."""
        if self._tokenize_available is False:
            return None
        resp = self._request("POST", "/v1/tokenize", {"text": text})
        if resp.status_code in (404, 405, 501):
            self._tokenize_available = False
            return None
        if resp.status_code != 200:
            raise BackendTransportError(
                f"tokenize endpoint returned {resp.status_code}", False
            )
        self._tokenize_available = True
        body = resp.json()
        return [int(i) for i in body["ids"]], str(body["partial_suffix"])


def build_backend_app(backend):
    """Host a fitted backend under the wire protocol (for integration tests
    and as a stand-in for real model servers)."""
    from fastapi import FastAPI, HTTPException
    from pydantic import BaseModel

    desc = backend.descriptor
    app = FastAPI(title="token backend")

    class LogprobsRequest(BaseModel):
        context_ids: list[int]

    class TokenizeRequest(BaseModel):
        text: str

    @app.get("/v1/info")
    def info():
        return {
            "kind": desc.kind,
            "vocab_size": len(desc.vocab),
            "max_context": desc.max_context,
            "deterministic": desc.deterministic,
        }

    @app.get("/v1/vocab")
    def vocab():
        return {
            "kind": desc.vocab.kind,
            "tokens": [
                [t.token_id, t.surface, int(t.starts_word)] for t in desc.vocab
            ],
        }

    @app.post("/v1/logprobs")
    def logprobs(req: LogprobsRequest):
        try:
            dist = backend.next_token_dist(req.context_ids)
        except ValueError as exc:
            raise HTTPException(status_code=400, detail=str(exc))
        with np.errstate(divide="ignore"):
            lp = np.log(dist.probs)
        lp = np.maximum(lp, LOGPROB_FLOOR)
        return {"logprobs": [float(x) for x in lp]}

    @app.post("/v1/tokenize")
    def tokenize(req: TokenizeRequest):
        try:
            ids, partial = find_partial_suffix(desc.vocab, req.text)
        except TokenizeError as exc:
            raise HTTPException(status_code=400, detail=str(exc))
        return {"ids": ids, "partial_suffix": partial}

    return app
