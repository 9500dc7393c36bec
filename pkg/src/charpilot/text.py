"""Alphabet, text normalization, and evaluation-instance generation.

Everything downstream of this module works on a small closed symbol set:
by default the 26 lowercase letters plus the space character that separates
words. Raw text (chat logs, transcripts) is folded onto that set here, and
phrases are unrolled into per-character prediction trials.
"""
from __future__ import annotations

import random
import re
from dataclasses import dataclass, field
from importlib import resources
from pathlib import Path
from typing import Iterable, Sequence

from sklearn.base import BaseEstimator, TransformerMixin
from sklearn.utils.validation import check_is_fitted

__all__ = [
    "Alphabet",
    "DEFAULT_ALPHABET",
    "Phrase",
    "PredictionInstance",
    "TextNormalizer",
    "CorpusFormatError",
    "load_contractions",
    "normalize",
    "normalize_history",
    "make_instances",
    "load_corpus",
]

LOWERCASE = "abcdefghijklmnopqrstuvwxyz"

# Interjection tokens removed under the conversational-transcript profile.
# Placeholder tokens beginning with this prefix are removed as well.
DEFAULT_INTERJECTIONS = frozenset({"uh-huh", "yeah", "uh"})
PLACEHOLDER_PREFIX = "mumble"

# Characters treated as word separators rather than dropped outright.
_SEPARATOR_CHARS = frozenset({"-", "/", "–", "—"})
_APOSTROPHES = ("’", "ʼ", "`")
_WS = re.compile(r"\s+")


@dataclass(frozen=True)
class Alphabet:
    """Ordered closed character set with an explicit word-boundary symbol."""

    chars: tuple[str, ...]
    boundary_char: str = " "
    _index: dict = field(init=False, repr=False, compare=False, hash=False)

    def __post_init__(self):
        chars = tuple(self.chars)
        if len(set(chars)) != len(chars):
            raise ValueError("alphabet characters must be unique")
        if any(len(c) != 1 for c in chars):
            raise ValueError("alphabet entries must be single characters")
        if self.boundary_char not in chars:
            raise ValueError("boundary character must be part of the alphabet")
        object.__setattr__(self, "chars", chars)
        object.__setattr__(self, "_index", {c: i for i, c in enumerate(chars)})

    def __len__(self) -> int:
        return len(self.chars)

    def __contains__(self, ch: str) -> bool:
        return ch in self._index

    def index(self, ch: str) -> int:
        try:
            return self._index[ch]
        except KeyError:
            raise ValueError(f"character {ch!r} is not in the alphabet") from None

    @property
    def letters(self) -> tuple[str, ...]:
        """All symbols except the word boundary."""
        return tuple(c for c in self.chars if c != self.boundary_char)

    def check_text(self, text: str) -> str:
        """Validate that every character of ``text`` belongs to the alphabet."""
        for ch in text:
            if ch not in self._index:
                raise ValueError(f"character {ch!r} is not in the alphabet")
        return text


DEFAULT_ALPHABET = Alphabet(tuple(LOWERCASE) + (" ",))


@dataclass(frozen=True)
class Phrase:
    """A normalized line of text plus an opaque provenance identifier."""

    text: str
    source_id: str = ""

    def words(self, alphabet: Alphabet = DEFAULT_ALPHABET) -> list[str]:
        if not self.text:
            return []
        return self.text.split(alphabet.boundary_char)


@dataclass(frozen=True)
class PredictionInstance:
    """A single next-character trial.

    ``history`` is everything typed so far, ``target`` the gold next
    character. ``position_in_word`` counts characters of the target word
    already present at the end of ``history``; ``context_words`` counts the
    complete words preceding the target word.
    """

    history: str
    target: str
    position_in_word: int
    context_words: int


def load_contractions(path: str | Path | None = None) -> dict[str, str]:
    """Load a two-column TSV mapping contractions to their expansions."""
    if path is None:
        source = resources.files("charpilot.data").joinpath("contractions.tsv")
        raw = source.read_text(encoding="utf-8")
    else:
        raw = Path(path).read_text(encoding="utf-8")
    table = {}
    for line in raw.splitlines():
        line = line.strip()
        if not line:
            continue
        key, _, expansion = line.partition("\t")
        table[key.strip().lower()] = expansion.strip().lower()
    return table


_DEFAULT_CONTRACTIONS: dict[str, str] | None = None


def _default_contractions() -> dict[str, str]:
    global _DEFAULT_CONTRACTIONS
    if _DEFAULT_CONTRACTIONS is None:
        _DEFAULT_CONTRACTIONS = load_contractions()
    return _DEFAULT_CONTRACTIONS


def _strip_outer_punct(token: str) -> str:
    junk = "".join(c for c in token if not c.isalpha())
    return token.strip(junk) if junk else token


def normalize(
    raw: str,
    profile: str = "als",
    *,
    alphabet: Alphabet = DEFAULT_ALPHABET,
    contractions: dict[str, str] | None = None,
    interjections: frozenset[str] | Iterable[str] = DEFAULT_INTERJECTIONS,
) -> str:
    """Fold arbitrary text onto the alphabet.

    Lowercases, expands contractions from a fixed table, removes punctuation
    and digits, and collapses whitespace to single boundary characters. The
    ``switchboard`` profile additionally deletes interjection tokens and
    MUMBLE-style placeholders before expansion. Unknown symbols are dropped,
    so the result may be empty. Idempotent.
    """
    if profile not in ("als", "switchboard"):
        raise ValueError(f"unknown normalization profile {profile!r}")
    if contractions is None:
        contractions = _default_contractions()
    interjections = frozenset(interjections)
    letters = set(alphabet.letters)
    boundary = alphabet.boundary_char

    text = raw.lower()
    for mark in _APOSTROPHES:
        text = text.replace(mark, "'")

    words: list[str] = []
    for token in _WS.split(text):
        if not token:
            continue
        core = _strip_outer_punct(token)
        if profile == "switchboard" and core:
            if core in interjections or core.startswith(PLACEHOLDER_PREFIX):
                continue
        expanded = contractions.get(core, core)
        for piece in expanded.split():
            cleaned = []
            for ch in piece:
                if ch in letters:
                    cleaned.append(ch)
                elif ch in _SEPARATOR_CHARS:
                    cleaned.append(boundary)
                # apostrophes, digits, stray punctuation: dropped
            for word in "".join(cleaned).split(boundary):
                if not word:
                    continue
                # re-check after cleaning: stripping digits or punctuation can
                # reveal an interjection ("u0h" -> "uh"), and idempotence
                # requires the second pass to see nothing new to delete
                if profile == "switchboard" and (
                    word in interjections or word.startswith(PLACEHOLDER_PREFIX)
                ):
                    continue
                words.append(word)
    return boundary.join(words)


def normalize_history(
    raw: str,
    profile: str = "als",
    *,
    alphabet: Alphabet = DEFAULT_ALPHABET,
    **kwargs,
) -> str:
    """Normalize a typing history, keeping a meaningful trailing boundary.

    ``normalize`` strips leading/trailing separators, which is right for
    stored phrases but loses the "just finished a word" state of a live
    history. Here a trailing whitespace character survives as a single
    boundary so prediction happens at the start of the next word.
    """
    out = normalize(raw, profile, alphabet=alphabet, **kwargs)
    if out and raw and raw[-1].isspace():
        out += alphabet.boundary_char
    return out


class TextNormalizer(TransformerMixin, BaseEstimator):
    """Stateless transformer applying :func:`normalize` to a list of strings."""

    def __init__(self, profile: str = "als", contractions_path: str | None = None):
        self.profile = profile
        self.contractions_path = contractions_path

    def fit(self, X, y=None):
        self.contractions_ = (
            load_contractions(self.contractions_path)
            if self.contractions_path
            else _default_contractions()
        )
        return self

    def transform(self, X) -> list[str]:
        check_is_fitted(self, "contractions_")
        return [normalize(x, self.profile, contractions=self.contractions_) for x in X]


def make_instances(
    phrase: Phrase, alphabet: Alphabet = DEFAULT_ALPHABET
) -> list[PredictionInstance]:
    """Unroll the last word of a phrase into one trial per character.

    Instance ``p`` sees all preceding words (joined and followed by a
    boundary) plus the first ``p`` characters of the last word; its target is
    the word's ``p``-th character.
    """
    words = phrase.words(alphabet)
    if not words or words == [""]:
        raise ValueError("phrase has no target word")
    last = words[-1]
    context_words = len(words) - 1
    if context_words:
        prefix = alphabet.boundary_char.join(words[:-1]) + alphabet.boundary_char
    else:
        prefix = ""
    return [
        PredictionInstance(
            history=prefix + last[:p],
            target=ch,
            position_in_word=p,
            context_words=context_words,
        )
        for p, ch in enumerate(last)
    ]


class CorpusFormatError(ValueError):
    """Raised for unparseable corpus records; carries the offending line number."""

    def __init__(self, message: str, line_number: int | None = None):
        if line_number is not None:
            message = f"line {line_number}: {message}"
        super().__init__(message)
        self.line_number = line_number


def _load_phrase_lines(path: Path, profile: str, norm_kwargs: dict) -> list[Phrase]:
    phrases = []
    with open(path, encoding="utf-8") as fh:
        for lineno, line in enumerate(fh, start=1):
            line = line.strip()
            if not line:
                continue
            text = normalize(line, profile, **norm_kwargs)
            if text:
                phrases.append(Phrase(text=text, source_id=f"{path.name}:{lineno}"))
    return phrases


def _load_switchboard(
    path: Path,
    profile: str,
    norm_kwargs: dict,
    turn_cutoff: int,
    sample_conversations: int | None,
    seed: int,
) -> list[Phrase]:
    turns: dict[str, list[tuple[int, int, str]]] = {}
    order: list[str] = []
    with open(path, encoding="utf-8") as fh:
        for lineno, line in enumerate(fh, start=1):
            if not line.strip():
                continue
            parts = line.rstrip("\n").split("\t", 3)
            if len(parts) != 4:
                raise CorpusFormatError(
                    "expected conversation_id<TAB>turn_index<TAB>speaker<TAB>text",
                    lineno,
                )
            conv_id, turn_str, _speaker, text = parts
            try:
                turn_index = int(turn_str)
            except ValueError:
                raise CorpusFormatError(
                    f"turn index {turn_str!r} is not an integer", lineno
                ) from None
            if conv_id not in turns:
                turns[conv_id] = []
                order.append(conv_id)
            turns[conv_id].append((turn_index, lineno, text))

    if sample_conversations is not None and sample_conversations < len(order):
        rng = random.Random(seed)
        selected = set(rng.sample(order, sample_conversations))
    else:
        selected = set(order)

    phrases = []
    for conv_id in order:
        if conv_id not in selected:
            continue
        for turn_index, _lineno, text in sorted(turns[conv_id])[:turn_cutoff]:
            normalized = normalize(text, profile, **norm_kwargs)
            if normalized:
                phrases.append(
                    Phrase(text=normalized, source_id=f"{conv_id}:{turn_index}")
                )
    return phrases


def load_corpus(
    path: str | Path,
    format: str = "phrase_lines",
    *,
    profile: str | None = None,
    turn_cutoff: int = 4,
    sample_conversations: int | None = 500,
    seed: int = 0,
    alphabet: Alphabet = DEFAULT_ALPHABET,
    contractions: dict[str, str] | None = None,
) -> list[Phrase]:
    """Read a corpus file into normalized phrases.

    ``phrase_lines`` yields one phrase per nonempty line. The
    ``switchboard_transcript`` format (``conversation_id<TAB>turn_index<TAB>
    speaker<TAB>text``) yields one phrase per turn, keeping the first
    ``turn_cutoff`` turns of a seeded random sample of ``sample_conversations``
    conversations. Loading is deterministic for a fixed seed.
    """
    path = Path(path)
    if not path.exists():
        raise FileNotFoundError(f"corpus file not found: {path}")
    norm_kwargs = {"alphabet": alphabet, "contractions": contractions}
    if format == "phrase_lines":
        return _load_phrase_lines(path, profile or "als", norm_kwargs)
    if format == "switchboard_transcript":
        return _load_switchboard(
            path,
            profile or "switchboard",
            norm_kwargs,
            turn_cutoff,
            sample_conversations,
            seed,
        )
    raise ValueError(f"unknown corpus format {format!r}")


def as_texts(corpus: Sequence[Phrase | str]) -> list[str]:
    """Accept phrases or raw strings and return their texts."""
    return [p.text if isinstance(p, Phrase) else p for p in corpus]
