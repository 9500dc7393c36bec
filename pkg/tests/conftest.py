"""Shared helpers: independent oracles and fixture generators.

The oracles deliberately avoid the production code paths they check:
linear scans instead of tries, unpruned recursion instead of beam
selection, direct counting instead of the n-gram tables.
"""
from __future__ import annotations

import math
import random
from collections import defaultdict

import numpy as np

from charpilot import DEFAULT_ALPHABET, Phrase, Vocabulary, find_partial_suffix


def brute_force_closed_vocab(backend, history: str, alphabet=DEFAULT_ALPHABET):
    """Closed-vocabulary marginalization by scanning every word.

    Returns a dict char → prob, or None for the no-matching-words case.
    """
    boundary = alphabet.boundary_char
    vocab = backend.descriptor.vocab
    if history == "" or history.endswith(boundary):
        prefix = ""
        context = [w for w in history.split(boundary) if w]
    else:
        parts = history.split(boundary)
        prefix = parts[-1]
        context = [w for w in parts[:-1] if w]
    surface_to_id = {t.surface: t.token_id for t in vocab}
    ids = []
    for word in reversed(context):
        if word not in surface_to_id:
            break
        ids.append(surface_to_id[word])
    ids.reverse()
    dist = backend.next_token_dist(ids)
    mass = defaultdict(float)
    for t in vocab:
        if not t.surface.startswith(prefix):
            continue
        ch = boundary if t.surface == prefix else t.surface[len(prefix)]
        if ch in alphabet:
            mass[ch] += float(dist.probs[t.token_id])
    total = sum(mass.values())
    if total <= 0:
        return None
    return {c: m / total for c, m in mass.items()}


def exhaustive_beam(backend, history: str, depth: int, alphabet=DEFAULT_ALPHABET):
    """Depth-bounded enumeration of every completion, no pruning.

    Semantics mirror the search contract: candidates must extend the
    partial suffix and suit their position's word-start requirement;
    hypotheses passing the partial contribute their next character and
    stop; exact matches still unresolved at the depth limit are dropped.
    Returns a dict char → prob, or None when nothing contributes.
    """
    vocab = backend.descriptor.vocab
    boundary = alphabet.boundary_char
    committed, partial = find_partial_suffix(vocab, history)
    base = history[: len(history) - len(partial)] if partial else history
    if base == "":
        allowed = {True, False}
    elif base.endswith(boundary):
        allowed = {True}
    else:
        allowed = {False}
    candidates = [
        t
        for t in vocab
        if t.surface.startswith(partial) and t.starts_word in allowed
    ]
    mass = defaultdict(float)

    def extend(ids, prob, surface, step):
        if len(surface) > len(partial):
            ch = surface[len(partial)]
            if ch in alphabet:
                mass[ch] += prob
            return
        if step >= depth:
            return
        dist = backend.next_token_dist(list(committed) + ids)
        for t in vocab:
            p = float(dist.probs[t.token_id])
            if p <= 0:
                continue
            piece = boundary + t.surface if t.starts_word else t.surface
            extend(ids + [t.token_id], prob * p, surface + piece, step + 1)

    dist0 = backend.next_token_dist(list(committed))
    for t in candidates:
        p = float(dist0.probs[t.token_id])
        if p > 0:
            extend([t.token_id], p, t.surface, 1)
    total = sum(mass.values())
    if total <= 0:
        return None
    return {c: m / total for c, m in mass.items()}


def total_variation(dist, mapping, alphabet=DEFAULT_ALPHABET) -> float:
    """TV distance between a CharDistribution and a char → prob dict."""
    if dist.is_empty or mapping is None:
        assert dist.is_empty and mapping is None
        return 0.0
    return 0.5 * sum(
        abs(dist.prob(c) - mapping.get(c, 0.0)) for c in alphabet.chars
    )


def count_reachable(backend, history: str, alphabet=DEFAULT_ALPHABET) -> int:
    """Upper bound on hypotheses any depth-2 search can visit."""
    n = len(backend.descriptor.vocab)
    return n * n + n


def random_subword_vocab(rng: random.Random, letters: str, max_tokens: int = 30) -> Vocabulary:
    """Random inventory guaranteed total: every letter present both plain
    and word-initial, plus random longer pieces of both flags."""
    entries = [(ch, False) for ch in letters] + [(ch, True) for ch in letters]
    seen = set(entries)
    budget = max_tokens - len(entries)
    for _ in range(budget):
        surface = "".join(
            rng.choice(letters) for _ in range(rng.randint(2, 3))
        )
        entry = (surface, rng.random() < 0.5)
        if entry not in seen:
            seen.add(entry)
            entries.append(entry)
    return Vocabulary.from_subwords(entries)


def random_phrases(rng: random.Random, n: int, lexicon=None) -> list[Phrase]:
    """Deterministic synthetic corpus: phrases of 1-6 lexicon words."""
    if lexicon is None:
        lexicon = [
            "the", "they", "them", "then", "cat", "can", "call", "go",
            "gone", "good", "home", "hope", "help", "water", "want",
            "was", "will", "with", "now", "not", "note", "here", "hear",
            "please", "play", "time", "turn", "my", "me", "more",
        ]
    phrases = []
    for _ in range(n):
        words = [rng.choice(lexicon) for _ in range(rng.randint(1, 6))]
        phrases.append(Phrase(" ".join(words)))
    return phrases


def random_history(rng: random.Random, alphabet=DEFAULT_ALPHABET, max_len: int = 14) -> str:
    """Random alphabet string without leading/double boundaries."""
    length = rng.randint(0, max_len)
    out = []
    for _ in range(length):
        if out and out[-1] != alphabet.boundary_char and rng.random() < 0.18:
            out.append(alphabet.boundary_char)
        else:
            out.append(rng.choice(alphabet.letters))
    return "".join(out)


def assert_report_sane(report):
    """The metric inequalities every report must satisfy."""
    ks = sorted(report.ks)
    for k in ks:
        assert 0.0 <= report.recall[k] <= 1.0
        assert 0.0 <= report.mrr[k] <= report.recall[k] + 1e-12
    for lo, hi in zip(ks, ks[1:]):
        assert report.mrr[lo] <= report.mrr[hi] + 1e-12
        assert report.recall[lo] <= report.recall[hi] + 1e-12
    for slices in (report.by_position, report.by_context):
        for s in slices.values():
            for k in ks:
                assert 0.0 <= s.mrr[k] <= s.recall[k] + 1e-12
