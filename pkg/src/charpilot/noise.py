"""Noisy-typing simulation by random letter substitution.

Each letter of a history is independently replaced, with a configured
probability, by a uniformly random different letter; word boundaries are
never touched. Replacement excludes the original letter so the nominal
rate equals the effective corruption rate.
"""
from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from .text import DEFAULT_ALPHABET, Alphabet

__all__ = ["NoiseSpec", "corrupt", "corrupt_with_rng", "derived_rng"]


@dataclass(frozen=True)
class NoiseSpec:
    rate: float
    seed: int = 0
    scope: str = "letters_only"

    def __post_init__(self):
        if not 0.0 <= self.rate <= 1.0:
            raise ValueError("noise rate must lie in [0, 1]")
        if self.scope != "letters_only":
            raise ValueError(f"unknown noise scope {self.scope!r}")


def corrupt_with_rng(
    history: str,
    rate: float,
    rng: np.random.Generator,
    alphabet: Alphabet = DEFAULT_ALPHABET,
) -> str:
    """Corrupt using a caller-owned generator (draw order = character order)."""
    letters = alphabet.letters
    if len(letters) < 2:
        raise ValueError("substitution needs at least two letters")
    index = {ch: i for i, ch in enumerate(letters)}
    out = []
    for ch in history:
        original = index.get(ch)
        if original is None or rng.random() >= rate:
            out.append(ch)
            continue
        # uniform over the other letters: skip past the original
        pick = int(rng.integers(len(letters) - 1))
        if pick >= original:
            pick += 1
        out.append(letters[pick])
    return "".join(out)


def corrupt(history: str, spec: NoiseSpec, alphabet: Alphabet = DEFAULT_ALPHABET) -> str:
    """Deterministically corrupt a history under a seeded noise spec."""
    alphabet.check_text(history)
    rng = np.random.default_rng(spec.seed)
    return corrupt_with_rng(history, spec.rate, rng, alphabet)


def derived_rng(campaign_seed: int, instance_index: int, repeat_index: int) -> np.random.Generator:
    """Per-trial generator; independent of evaluation order, so parallel
    campaigns reproduce sequential ones."""
    seq = np.random.SeedSequence(campaign_seed, spawn_key=(instance_index, repeat_index))
    return np.random.default_rng(seq)
