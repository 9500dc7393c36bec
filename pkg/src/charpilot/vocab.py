"""Token inventories with explicit word-start marking and prefix queries.

A token is a surface string over the alphabet plus a ``starts_word`` flag;
the flag replaces in-band marker characters, so surfaces never contain the
word boundary (the single-character inventory, where the boundary itself is
a token, is the one exception). A two-rooted character trie answers
prefix-constrained token lookups and drives greedy longest-match
tokenization.
"""
from __future__ import annotations

from dataclasses import dataclass
from pathlib import Path
from typing import Iterable, Sequence

from .text import Alphabet, DEFAULT_ALPHABET

__all__ = [
    "Token",
    "Vocabulary",
    "VocabTrie",
    "VocabFormatError",
    "TokenizeError",
    "char_after_prefix",
    "greedy_tokenize",
    "detokenize",
    "find_partial_suffix",
]

VOCAB_KINDS = ("character", "closed_word", "subword")


@dataclass(frozen=True)
class Token:
    token_id: int
    surface: str
    starts_word: bool


class VocabFormatError(ValueError):
    """Raised for invalid vocabulary definitions or files."""

    def __init__(self, message: str, line_number: int | None = None):
        if line_number is not None:
            message = f"line {line_number}: {message}"
        super().__init__(message)
        self.line_number = line_number


class TokenizeError(ValueError):
    """Raised when text cannot be segmented; carries the failing offset."""

    def __init__(self, text: str, offset: int):
        super().__init__(
            f"cannot tokenize {text!r} at offset {offset} ({text[offset:offset + 10]!r})"
        )
        self.offset = offset


class _TrieNode:
    __slots__ = ("children", "ids_through", "ids_ending")

    def __init__(self):
        self.children: dict[str, _TrieNode] = {}
        self.ids_through: set[int] = set()
        self.ids_ending: set[int] = set()


class VocabTrie:
    """Character trie over token surfaces, one root per starts_word value."""

    def __init__(self, tokens: Iterable[Token]):
        self._roots = {False: _TrieNode(), True: _TrieNode()}
        for token in tokens:
            node = self._roots[token.starts_word]
            node.ids_through.add(token.token_id)
            for ch in token.surface:
                node = node.children.setdefault(ch, _TrieNode())
                node.ids_through.add(token.token_id)
            node.ids_ending.add(token.token_id)

    def _walk(self, prefix: str, starts_word: bool) -> _TrieNode | None:
        node = self._roots[starts_word]
        for ch in prefix:
            node = node.children.get(ch)
            if node is None:
                return None
        return node

    def tokens_with_prefix(self, prefix: str, require_word_start: bool = False) -> set[int]:
        """Ids of tokens whose surface starts with ``prefix``.

        ``require_word_start=True`` restricts to word-initial tokens; False
        imposes no flag requirement.
        """
        hits: set[int] = set()
        for flag in ((True,) if require_word_start else (True, False)):
            node = self._walk(prefix, flag)
            if node is not None:
                hits |= node.ids_through
        return hits

    def longest_match(self, text: str, start: int, starts_word: bool) -> tuple[int, int] | None:
        """Longest token surface matching ``text`` at ``start``.

        Returns (matched length, token_id), the id being the smallest among
        tokens sharing that longest surface. None if nothing matches.
        """
        node = self._roots[starts_word]
        best: tuple[int, int] | None = None
        for i in range(start, len(text)):
            node = node.children.get(text[i])
            if node is None:
                break
            if node.ids_ending:
                best = (i - start + 1, min(node.ids_ending))
        return best


class Vocabulary:
    """Immutable token inventory of one of three kinds.

    ``character``: single-character surfaces (the boundary char allowed).
    ``closed_word``: whole words, all word-initial.
    ``subword``: word pieces; the boundary never appears in a surface.
    """

    def __init__(
        self,
        tokens: Sequence[Token | tuple],
        kind: str,
        alphabet: Alphabet = DEFAULT_ALPHABET,
    ):
        if kind not in VOCAB_KINDS:
            raise VocabFormatError(f"unknown vocabulary kind {kind!r}")
        toks = [t if isinstance(t, Token) else Token(*t) for t in tokens]
        if sorted(t.token_id for t in toks) != list(range(len(toks))):
            raise VocabFormatError("token ids must be dense in [0, vocab size)")
        boundary = alphabet.boundary_char
        for t in toks:
            if not t.surface:
                raise VocabFormatError(f"token {t.token_id} has an empty surface")
            for ch in t.surface:
                if ch not in alphabet:
                    raise VocabFormatError(
                        f"token {t.token_id} surface {t.surface!r} uses"
                        f" out-of-alphabet character {ch!r}"
                    )
            if kind == "character" and len(t.surface) != 1:
                raise VocabFormatError(
                    f"character vocabulary requires single-character surfaces,"
                    f" got {t.surface!r}"
                )
            if kind == "closed_word":
                if not t.starts_word:
                    raise VocabFormatError(
                        f"closed-word token {t.surface!r} must be word-initial"
                    )
                if boundary in t.surface:
                    raise VocabFormatError(
                        f"closed-word surface {t.surface!r} contains the boundary"
                    )
            if kind == "subword" and boundary in t.surface:
                raise VocabFormatError(
                    f"subword surface {t.surface!r} contains the boundary"
                )
        self.kind = kind
        self.alphabet = alphabet
        self.tokens: tuple[Token, ...] = tuple(
            sorted(toks, key=lambda t: t.token_id)
        )
        self.trie = VocabTrie(self.tokens)

    def __len__(self) -> int:
        return len(self.tokens)

    def __iter__(self):
        return iter(self.tokens)

    def token(self, token_id: int) -> Token:
        if not 0 <= token_id < len(self.tokens):
            raise VocabFormatError(f"token id {token_id} out of range")
        return self.tokens[token_id]

    def surface(self, token_id: int) -> str:
        return self.token(token_id).surface

    def tokens_with_prefix(self, prefix: str, require_word_start: bool = False) -> set[int]:
        return self.trie.tokens_with_prefix(prefix, require_word_start)

    # Constructors ---------------------------------------------------------

    @classmethod
    def character(cls, alphabet: Alphabet = DEFAULT_ALPHABET) -> "Vocabulary":
        """One unmarked token per alphabet character, boundary included."""
        tokens = [Token(i, ch, False) for i, ch in enumerate(alphabet.chars)]
        return cls(tokens, "character", alphabet)

    @classmethod
    def from_words(
        cls, words: Iterable[str], alphabet: Alphabet = DEFAULT_ALPHABET
    ) -> "Vocabulary":
        tokens = [Token(i, w, True) for i, w in enumerate(words)]
        return cls(tokens, "closed_word", alphabet)

    @classmethod
    def from_subwords(
        cls,
        entries: Iterable[tuple[str, bool]],
        alphabet: Alphabet = DEFAULT_ALPHABET,
    ) -> "Vocabulary":
        tokens = [Token(i, s, bool(m)) for i, (s, m) in enumerate(entries)]
        return cls(tokens, "subword", alphabet)

    @classmethod
    def from_tsv(
        cls, path: str | Path, kind: str, alphabet: Alphabet = DEFAULT_ALPHABET
    ) -> "Vocabulary":
        """Load ``token_id<TAB>surface<TAB>starts_word(0|1)`` lines."""
        tokens = []
        with open(path, encoding="utf-8") as fh:
            for lineno, line in enumerate(fh, start=1):
                line = line.rstrip("\n")
                if not line.strip():
                    continue
                parts = line.split("\t")
                if len(parts) != 3:
                    raise VocabFormatError(
                        "expected token_id<TAB>surface<TAB>starts_word", lineno
                    )
                id_str, surface, flag_str = parts
                try:
                    token_id = int(id_str)
                except ValueError:
                    raise VocabFormatError(
                        f"token id {id_str!r} is not an integer", lineno
                    ) from None
                if flag_str not in ("0", "1"):
                    raise VocabFormatError(
                        f"starts_word must be 0 or 1, got {flag_str!r}", lineno
                    )
                tokens.append(Token(token_id, surface, flag_str == "1"))
        return cls(tokens, kind, alphabet)

    def to_tsv(self, path: str | Path) -> None:
        with open(path, "w", encoding="utf-8") as fh:
            for t in self.tokens:
                fh.write(f"{t.token_id}\t{t.surface}\t{int(t.starts_word)}\n")


def char_after_prefix(surface: str, prefix: str) -> str | None:
    """First character of ``surface`` past ``prefix``; None on exact match."""
    if not surface.startswith(prefix):
        raise ValueError(f"{prefix!r} is not a prefix of {surface!r}")
    if len(surface) == len(prefix):
        return None
    return surface[len(prefix)]


def _pick(marked: tuple[int, int] | None, plain: tuple[int, int] | None):
    """Choose between a word-initial and a plain match by consumed length.

    Ties prefer the word-initial token. Each entry is (consumed, token_id)
    where consumed counts every character absorbed, boundary included.
    """
    if marked is None:
        return plain
    if plain is None or marked[0] >= plain[0]:
        return marked
    return plain


def greedy_tokenize(vocab: Vocabulary, text: str) -> list[int]:
    """Deterministic left-to-right longest-match segmentation.

    A word-initial token placed after a boundary character consumes that
    boundary; at the very start of the text it consumes nothing, matching
    how surfaces are rejoined. Raises :class:`TokenizeError` with the
    offending offset when no token fits.
    """
    trie = vocab.trie
    boundary = vocab.alphabet.boundary_char
    out: list[int] = []
    pos = 0
    n = len(text)
    while pos < n:
        if pos == 0:
            best = _pick(
                trie.longest_match(text, 0, True),
                trie.longest_match(text, 0, False),
            )
        elif text[pos] == boundary:
            marked = trie.longest_match(text, pos + 1, True)
            if marked is not None:
                marked = (marked[0] + 1, marked[1])
            best = _pick(marked, trie.longest_match(text, pos, False))
        else:
            best = trie.longest_match(text, pos, False)
        if best is None:
            raise TokenizeError(text, pos)
        consumed, token_id = best
        out.append(token_id)
        pos += consumed
    return out


def detokenize(vocab: Vocabulary, token_ids: Sequence[int]) -> str:
    """Rejoin surfaces, inserting a boundary before each word-initial token
    except at the start of the sequence."""
    boundary = vocab.alphabet.boundary_char
    pieces = []
    for i, token_id in enumerate(token_ids):
        token = vocab.token(token_id)
        if token.starts_word and i > 0:
            pieces.append(boundary)
        pieces.append(token.surface)
    return "".join(pieces)


def find_partial_suffix(vocab: Vocabulary, history: str) -> tuple[list[int], str]:
    """Split a typing history into committed tokens and a partial suffix.

    The partial is the surface of the final greedy token, the part of the
    history a replacement token must extend. A history ending at a word
    boundary has an empty partial: the next token starts a fresh word.
    """
    if not history:
        return [], ""
    if history.endswith(vocab.alphabet.boundary_char):
        return greedy_tokenize(vocab, history[:-1]), ""
    ids = greedy_tokenize(vocab, history)
    return ids[:-1], vocab.token(ids[-1]).surface
