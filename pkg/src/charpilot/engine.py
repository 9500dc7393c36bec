"""Next-character prediction strategies.

Three ways to turn a backend's next-token distribution into a distribution
over the alphabet: read it off directly (character backends), marginalize
whole words sharing the typed prefix (closed vocabularies), or run a
prefix-constrained beam search over subword units and marginalize the
completions. A unigram interpolation smooths the word and subword paths,
and ``NextCharPredictor`` wraps the dispatch as a fittable estimator.
"""
from __future__ import annotations

import math
from dataclasses import dataclass

import numpy as np
from sklearn.base import BaseEstimator, clone
from sklearn.utils.validation import check_is_fitted

from .backends import NgramBackend
from .text import DEFAULT_ALPHABET, Alphabet, as_texts
from .vocab import char_after_prefix, find_partial_suffix

__all__ = [
    "CharDistribution",
    "BeamHypothesis",
    "BeamConfig",
    "InterpolationConfig",
    "char_unigram",
    "predict_direct",
    "predict_closed_vocab",
    "predict_beam",
    "interpolate",
    "NextCharPredictor",
]


class CharDistribution:
    """Probability distribution over an alphabet, or an explicit EMPTY state.

    EMPTY means "no mass was found at all" and lets callers fall back to a
    unigram; it is distinct from a valid distribution that happens to put
    low mass everywhere.
    """

    __slots__ = ("alphabet", "probs")

    def __init__(self, alphabet: Alphabet, probs: np.ndarray | None):
        if probs is not None:
            probs = np.asarray(probs, dtype=float)
            if probs.shape != (len(alphabet),):
                raise ValueError(
                    f"expected {len(alphabet)} probabilities, got {probs.shape}"
                )
            if probs.min() < 0 or abs(probs.sum() - 1.0) > 1e-9:
                raise ValueError("probabilities must be nonnegative and sum to 1")
            probs.setflags(write=False)
        self.alphabet = alphabet
        self.probs = probs

    @classmethod
    def empty(cls, alphabet: Alphabet) -> "CharDistribution":
        return cls(alphabet, None)

    @classmethod
    def uniform(cls, alphabet: Alphabet) -> "CharDistribution":
        n = len(alphabet)
        return cls(alphabet, np.full(n, 1.0 / n))

    @classmethod
    def from_mass(cls, alphabet: Alphabet, mass: np.ndarray) -> "CharDistribution":
        """Renormalize nonnegative mass; all-zero mass yields EMPTY."""
        mass = np.asarray(mass, dtype=float)
        total = mass.sum()
        if total <= 0:
            return cls.empty(alphabet)
        return cls(alphabet, mass / total)

    @property
    def is_empty(self) -> bool:
        return self.probs is None

    def prob(self, ch: str) -> float:
        if self.is_empty:
            raise ValueError("EMPTY distribution has no probabilities")
        return float(self.probs[self.alphabet.index(ch)])

    def ranking(self) -> list[tuple[str, float]]:
        """Characters by descending probability; ties in alphabet order."""
        if self.is_empty:
            raise ValueError("EMPTY distribution has no ranking")
        order = sorted(range(len(self.probs)), key=lambda i: (-self.probs[i], i))
        return [(self.alphabet.chars[i], float(self.probs[i])) for i in order]

    def rank_of(self, ch: str) -> int:
        """1-based rank of a character under the deterministic ranking."""
        target = self.alphabet.index(ch)
        for rank, (c, _) in enumerate(self.ranking(), start=1):
            if self.alphabet.index(c) == target:
                return rank
        raise ValueError(f"character {ch!r} not ranked")


@dataclass(frozen=True)
class BeamHypothesis:
    """A candidate continuation: tokens beyond the committed context."""

    token_ids: tuple[int, ...]
    logprob: float
    surface: str


@dataclass(frozen=True)
class BeamConfig:
    beam_size: int = 20
    depth: int = 2

    def __post_init__(self):
        if self.beam_size < 1 or self.depth < 1:
            raise ValueError("beam_size and depth must be >= 1")


@dataclass(frozen=True)
class InterpolationConfig:
    """Blend weight on the model distribution; the rest goes to the unigram."""

    weight: float
    unigram: CharDistribution

    def __post_init__(self):
        if not 0.0 <= self.weight <= 1.0:
            raise ValueError("interpolation weight must lie in [0, 1]")


def char_unigram(corpus, alphabet: Alphabet = DEFAULT_ALPHABET, add_k: float = 1.0) -> CharDistribution:
    """Character relative frequencies over a corpus, add-k smoothed."""
    counts = np.full(len(alphabet), float(add_k))
    for text in as_texts(corpus):
        for ch in text:
            if ch in alphabet:
                counts[alphabet.index(ch)] += 1.0
    return CharDistribution.from_mass(alphabet, counts)


def _check_kind(backend, expected: str):
    kind = backend.descriptor.kind
    if kind != expected:
        raise ValueError(f"strategy requires a {expected} backend, got {kind}")


def _suffix_ids(items, id_map) -> list[int]:
    """Ids of the longest mappable suffix; stops at the first unknown."""
    ids: list[int] = []
    for item in reversed(items):
        mapped = id_map.get(item)
        if mapped is None:
            break
        ids.append(mapped)
    ids.reverse()
    return ids


def predict_direct(backend, history: str, alphabet: Alphabet = DEFAULT_ALPHABET) -> CharDistribution:
    """Read a character backend's next-token distribution as characters.

    Mass on tokens outside the alphabet is dropped and the rest
    renormalized.
    """
    _check_kind(backend, "char_direct")
    vocab = backend.descriptor.vocab
    id_map = {t.surface: t.token_id for t in vocab}
    dist = backend.next_token_dist(_suffix_ids(history, id_map))
    mass = np.zeros(len(alphabet))
    for t in vocab:
        if t.surface in alphabet:
            mass[alphabet.index(t.surface)] += dist.probs[t.token_id]
    return CharDistribution.from_mass(alphabet, mass)


def predict_closed_vocab(backend, history: str, alphabet: Alphabet = DEFAULT_ALPHABET) -> CharDistribution:
    """Marginalize whole-word probabilities onto the next character.

    The partially typed last word selects the words that still match; each
    contributes its mass to its first character past the prefix, an exact
    match contributing to the word boundary. No matching words → EMPTY.
    """
    _check_kind(backend, "closed_word")
    vocab = backend.descriptor.vocab
    boundary = alphabet.boundary_char
    parts = history.split(boundary)
    if history == "" or history.endswith(boundary):
        prefix = ""
        context = [w for w in parts if w]
    else:
        prefix = parts[-1]
        context = [w for w in parts[:-1] if w]
    id_map = {t.surface: t.token_id for t in vocab}
    dist = backend.next_token_dist(_suffix_ids(context, id_map))
    matches = vocab.tokens_with_prefix(prefix, require_word_start=True)
    mass = np.zeros(len(alphabet))
    for tid in matches:
        nxt = char_after_prefix(vocab.surface(tid), prefix)
        ch = boundary if nxt is None else nxt
        if ch in alphabet:
            mass[alphabet.index(ch)] += dist.probs[tid]
    return CharDistribution.from_mass(alphabet, mass)


def _word_start_requirement(history: str, partial: str, boundary: str) -> bool | None:
    """Must the token replacing the partial be word-initial?

    True: yes (fresh word after a typed boundary). False: no (mid-word
    continuation). None: either (the very start of the text, where a
    word-initial token carries no preceding boundary).
    """
    base = history[:-len(partial)] if partial else history
    if base == "":
        return None
    return base.endswith(boundary)


def predict_beam(
    backend,
    history: str,
    cfg: BeamConfig,
    alphabet: Alphabet = DEFAULT_ALPHABET,
    tokenizer=None,
) -> CharDistribution:
    """Prefix-constrained beam search over subword units.

    The history splits into committed tokens and a partial suffix. Step 1
    scores every token extending the partial (flag-compatible with its
    position); hypotheses strictly longer than the partial freeze as
    completions and are kept regardless of later steps, exact matches stay
    live and are expanded over the whole vocabulary up to ``cfg.depth``
    steps, each step keeping the ``cfg.beam_size`` best new hypotheses.
    Completions then marginalize onto their first character past the
    partial; a word-initial continuation token contributes the boundary.
    Exact matches still unresolved at depth exhaustion are dropped.
    """
    _check_kind(backend, "subword")
    vocab = backend.descriptor.vocab
    boundary = alphabet.boundary_char

    committed = partial = None
    if tokenizer is not None:
        remote = tokenizer(history)
        if remote is not None:
            committed, partial = remote
            if partial and not history.endswith(partial):
                raise ValueError(
                    f"tokenizer returned partial {partial!r} that does not"
                    f" end the history"
                )
    if committed is None:
        committed, partial = find_partial_suffix(vocab, history)

    require = _word_start_requirement(history, partial, boundary)
    candidates = vocab.tokens_with_prefix(partial, require_word_start=require is True)
    if require is False:
        candidates = {t for t in candidates if not vocab.token(t).starts_word}

    def top(hyps: list[BeamHypothesis]) -> list[BeamHypothesis]:
        hyps.sort(key=lambda h: (-h.logprob, h.token_ids))
        return hyps[: cfg.beam_size]

    dist0 = backend.next_token_dist(committed)
    step1 = []
    for tid in sorted(candidates):
        p = dist0.probs[tid]
        if p <= 0:
            continue
        step1.append(BeamHypothesis((tid,), math.log(p), vocab.surface(tid)))
    kept = top(step1)
    frozen = [h for h in kept if len(h.surface) > len(partial)]
    live = [h for h in kept if len(h.surface) == len(partial)]

    for _ in range(cfg.depth - 1):
        if not live:
            break
        children = []
        for hyp in live:
            dist = backend.next_token_dist(list(committed) + list(hyp.token_ids))
            for t in vocab:
                p = dist.probs[t.token_id]
                if p <= 0:
                    continue
                piece = boundary + t.surface if t.starts_word else t.surface
                children.append(
                    BeamHypothesis(
                        hyp.token_ids + (t.token_id,),
                        hyp.logprob + math.log(p),
                        hyp.surface + piece,
                    )
                )
        kept = top(children)
        frozen.extend(h for h in kept if len(h.surface) > len(partial))
        live = [h for h in kept if len(h.surface) == len(partial)]

    if not frozen:
        return CharDistribution.empty(alphabet)
    shift = max(h.logprob for h in frozen)
    mass = np.zeros(len(alphabet))
    for h in frozen:
        ch = h.surface[len(partial)]
        if ch in alphabet:
            mass[alphabet.index(ch)] += math.exp(h.logprob - shift)
    return CharDistribution.from_mass(alphabet, mass)


def interpolate(model: CharDistribution, cfg: InterpolationConfig) -> CharDistribution:
    """Blend the model distribution with the unigram: w·model + (1−w)·unigram."""
    if model.is_empty:
        return cfg.unigram
    unigram = cfg.unigram
    if unigram.is_empty:
        return model
    if unigram.alphabet != model.alphabet:
        raise ValueError("distributions must share an alphabet")
    mass = cfg.weight * model.probs + (1.0 - cfg.weight) * unigram.probs
    return CharDistribution.from_mass(model.alphabet, mass)


class NextCharPredictor(BaseEstimator):
    """Fittable façade over the prediction strategies.

    The backend decides the strategy: ``char_direct`` reads characters
    directly (no interpolation), ``closed_word`` marginalizes words,
    ``subword`` runs the beam search; the last two are blended with a
    character unigram trained on the fitting corpus. ``fit`` trains an
    unfitted built-in backend on the same corpus.
    """

    def __init__(
        self,
        backend=None,
        interp_weight: float = 0.8,
        beam_size: int = 20,
        beam_depth: int = 2,
        unigram: CharDistribution | None = None,
        alphabet: Alphabet = DEFAULT_ALPHABET,
    ):
        self.backend = backend
        self.interp_weight = interp_weight
        self.beam_size = beam_size
        self.beam_depth = beam_depth
        self.unigram = unigram
        self.alphabet = alphabet

    def fit(self, X, y=None):
        texts = as_texts(X) if X is not None else []
        backend = self.backend
        if backend is None:
            backend = NgramBackend(kind="char_direct", order=1, alphabet=self.alphabet)
        if isinstance(backend, NgramBackend) and not hasattr(backend, "descriptor_"):
            backend = clone(backend).fit(texts)
        self.backend_ = backend
        self.kind_ = backend.descriptor.kind
        if self.unigram is not None:
            unigram = self.unigram
        elif texts:
            unigram = char_unigram(texts, self.alphabet)
        else:
            unigram = CharDistribution.uniform(self.alphabet)
        self.unigram_ = unigram
        self.interp_ = InterpolationConfig(self.interp_weight, unigram)
        self.beam_ = BeamConfig(self.beam_size, self.beam_depth)
        return self

    def distribution(self, history: str) -> CharDistribution:
        """Final next-character distribution for a typing history."""
        check_is_fitted(self, "backend_")
        self.alphabet.check_text(history)
        if self.kind_ == "char_direct":
            result = predict_direct(self.backend_, history, self.alphabet)
        elif self.kind_ == "closed_word":
            raw = predict_closed_vocab(self.backend_, history, self.alphabet)
            result = interpolate(raw, self.interp_)
        else:
            raw = predict_beam(
                self.backend_,
                history,
                self.beam_,
                self.alphabet,
                tokenizer=getattr(self.backend_, "tokenize", None),
            )
            result = interpolate(raw, self.interp_)
        if result.is_empty:
            result = self.unigram_
        if result.is_empty:
            result = CharDistribution.uniform(self.alphabet)
        return result

    def rank(self, history: str) -> list[tuple[str, float]]:
        """Full ranked alphabet with probabilities for one history."""
        return self.distribution(history).ranking()

    def predict(self, X) -> list[str]:
        """Most likely next character for each history in X."""
        return [self.rank(h)[0][0] for h in X]

    def predict_proba(self, X) -> np.ndarray:
        """Row-per-history probabilities in alphabet order."""
        return np.stack([self.distribution(h).probs for h in X])
