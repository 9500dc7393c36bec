import math
import random

import numpy as np
import pytest
from sklearn.base import clone
from sklearn.exceptions import NotFittedError

from charpilot.backends import NgramBackend
from charpilot.engine import (
    BeamConfig,
    CharDistribution,
    InterpolationConfig,
    NextCharPredictor,
    char_unigram,
    interpolate,
    predict_beam,
    predict_closed_vocab,
    predict_direct,
)
from charpilot.text import Alphabet, DEFAULT_ALPHABET
from charpilot.vocab import Vocabulary
from conftest import (
    brute_force_closed_vocab,
    exhaustive_beam,
    random_history,
    random_subword_vocab,
    total_variation,
)

AB_SPACE = Alphabet(("a", "b", " "))


class TestCharDistribution:
    def test_validation(self):
        with pytest.raises(ValueError):
            CharDistribution(DEFAULT_ALPHABET, np.full(26, 1 / 26))
        bad = np.full(27, 1 / 27)
        bad[0], bad[1] = -bad[0], 2 * bad[1] + bad[0]
        with pytest.raises(ValueError):
            CharDistribution(DEFAULT_ALPHABET, bad)
        with pytest.raises(ValueError):
            CharDistribution(DEFAULT_ALPHABET, np.full(27, 0.9 / 27))

    def test_read_only(self):
        dist = CharDistribution.uniform(DEFAULT_ALPHABET)
        with pytest.raises(ValueError):
            dist.probs[0] = 1.0

    def test_empty_state(self):
        dist = CharDistribution.empty(DEFAULT_ALPHABET)
        assert dist.is_empty
        with pytest.raises(ValueError):
            dist.prob("a")
        with pytest.raises(ValueError):
            dist.ranking()

    def test_from_mass_normalizes(self):
        mass = np.zeros(3)
        mass[0], mass[1] = 3.0, 1.0
        dist = CharDistribution.from_mass(AB_SPACE, mass)
        assert dist.prob("a") == pytest.approx(0.75)
        assert dist.prob("b") == pytest.approx(0.25)

    def test_from_mass_zero_is_empty(self):
        assert CharDistribution.from_mass(AB_SPACE, np.zeros(3)).is_empty

    def test_ranking_descending_ties_alphabet_order(self):
        probs = np.zeros(27)
        probs[DEFAULT_ALPHABET.index("z")] = 0.4
        probs[DEFAULT_ALPHABET.index("b")] = 0.3
        probs[DEFAULT_ALPHABET.index("m")] = 0.3
        dist = CharDistribution(DEFAULT_ALPHABET, probs / probs.sum())
        chars = [c for c, _ in dist.ranking()]
        assert chars[:3] == ["z", "b", "m"]
        assert chars[3:] == [
            c for c in DEFAULT_ALPHABET.chars if c not in ("z", "b", "m")
        ]

    def test_rank_of(self):
        probs = np.zeros(3)
        probs[AB_SPACE.index("b")] = 0.7
        probs[AB_SPACE.index("a")] = 0.3
        dist = CharDistribution(AB_SPACE, probs)
        assert dist.rank_of("b") == 1
        assert dist.rank_of("a") == 2
        assert dist.rank_of(" ") == 3

    def test_uniform(self):
        dist = CharDistribution.uniform(DEFAULT_ALPHABET)
        assert dist.prob("q") == pytest.approx(1 / 27)


class TestConfigs:
    def test_beam_config_validation(self):
        BeamConfig(1, 1)
        with pytest.raises(ValueError):
            BeamConfig(0, 2)
        with pytest.raises(ValueError):
            BeamConfig(20, 0)

    def test_interpolation_weight_bounds(self):
        uni = CharDistribution.uniform(DEFAULT_ALPHABET)
        InterpolationConfig(0.0, uni)
        InterpolationConfig(1.0, uni)
        with pytest.raises(ValueError):
            InterpolationConfig(1.5, uni)
        with pytest.raises(ValueError):
            InterpolationConfig(-0.1, uni)


class TestCharUnigram:
    def test_unsmoothed(self):
        dist = char_unigram(["ab"], add_k=0)
        assert dist.prob("a") == pytest.approx(0.5)
        assert dist.prob("b") == pytest.approx(0.5)
        assert dist.prob("c") == 0.0

    def test_add_one(self):
        dist = char_unigram(["ab"])
        assert dist.prob("a") == pytest.approx(2 / 29)
        assert dist.prob("z") == pytest.approx(1 / 29)

    def test_boundary_counted(self):
        dist = char_unigram(["a a a"], add_k=0)
        assert dist.prob(" ") == pytest.approx(2 / 5)


class TestPredictDirect:
    def test_reads_backend_distribution(self):
        backend = NgramBackend(order=1, add_k=0).fit(["aab"])
        dist = predict_direct(backend, "")
        assert dist.prob("a") == pytest.approx(2 / 3)
        assert dist.prob("b") == pytest.approx(1 / 3)
        assert dist.prob("c") == 0.0

    def test_context_sensitive(self):
        backend = NgramBackend(order=2, add_k=0).fit(["abab"])
        assert predict_direct(backend, "a").prob("b") == pytest.approx(1.0)
        assert predict_direct(backend, "zza").prob("b") == pytest.approx(1.0)

    def test_foreign_tokens_dropped_and_renormalized(self):
        extended = Alphabet(("a", "b", "#", " "))
        backend = NgramBackend(order=1, add_k=0, alphabet=extended).fit(
            ["aaaaabbb##"]
        )
        assert backend.next_token_dist([]).probs[extended.index("#")] == pytest.approx(0.2)
        dist = predict_direct(backend, "", AB_SPACE)
        assert dist.prob("a") == pytest.approx(0.625)
        assert dist.prob("b") == pytest.approx(0.375)
        assert dist.prob(" ") == 0.0

    def test_rejects_wrong_backend_kind(self):
        backend = NgramBackend(kind="closed_word", order=1).fit(["the cat"])
        with pytest.raises(ValueError):
            predict_direct(backend, "")

    def test_history_chars_unknown_to_backend_truncate_context(self):
        # context mapping stops at the first character the backend has no
        # token for, keeping only the usable suffix
        extended = Alphabet(("a", "b", "#", " "))
        small = Vocabulary.character(AB_SPACE)
        backend = NgramBackend(order=2, add_k=0, vocab=small).fit(["abab"])
        dist = predict_direct(backend, "a", AB_SPACE)
        assert dist.prob("b") == pytest.approx(1.0)


def words_backend(counts, order=1, add_k=0):
    corpus = [" ".join(w for w, c in counts.items() for _ in range(c))]
    return NgramBackend(kind="closed_word", order=order, add_k=add_k).fit(corpus)


class TestPredictClosedVocab:
    def test_prefix_marginalization(self):
        backend = words_backend({"the": 5, "them": 3, "they": 2})
        dist = predict_closed_vocab(backend, "i saw the")
        assert dist.prob(" ") == pytest.approx(0.5)
        assert dist.prob("m") == pytest.approx(0.3)
        assert dist.prob("y") == pytest.approx(0.2)
        assert dist.prob("a") == 0.0

    def test_empty_history_uses_word_starts(self):
        backend = words_backend({"the": 1, "cat": 1})
        dist = predict_closed_vocab(backend, "")
        assert dist.prob("t") == pytest.approx(0.5)
        assert dist.prob("c") == pytest.approx(0.5)

    def test_trailing_boundary_starts_fresh_word(self):
        backend = words_backend({"the": 3, "cat": 1})
        dist = predict_closed_vocab(backend, "the ")
        assert dist.prob("t") == pytest.approx(0.75)
        assert dist.prob("c") == pytest.approx(0.25)

    def test_no_matching_word_is_empty(self):
        backend = words_backend({"the": 1})
        assert predict_closed_vocab(backend, "xyz").is_empty

    def test_context_conditions_bigram(self):
        backend = NgramBackend(kind="closed_word", order=2, add_k=0).fit(
            ["the cat", "the dog", "a cat"]
        )
        dist = predict_closed_vocab(backend, "the ")
        assert dist.prob("c") == pytest.approx(0.5)
        assert dist.prob("d") == pytest.approx(0.5)
        dist = predict_closed_vocab(backend, "a ")
        assert dist.prob("c") == pytest.approx(1.0)

    def test_unknown_context_word_truncates(self):
        backend = NgramBackend(kind="closed_word", order=2, add_k=0).fit(
            ["the cat", "the dog"]
        )
        # "zz" is not in the vocabulary, so the usable context is empty and
        # the anchored start distribution applies
        dist = predict_closed_vocab(backend, "zz the ")
        with_ctx = predict_closed_vocab(backend, "the ")
        assert dist.prob("c") == pytest.approx(with_ctx.prob("c"))

    def test_rejects_wrong_backend_kind(self):
        backend = NgramBackend(order=1).fit(["ab"])
        with pytest.raises(ValueError):
            predict_closed_vocab(backend, "")

    def test_brute_force_oracle(self):
        rng = random.Random(31)
        lexicon = [
            "the", "they", "them", "then", "there", "cat", "can", "call",
            "go", "gone", "good", "home", "hope", "help", "water", "want",
        ]
        corpus = [
            " ".join(rng.choice(lexicon) for _ in range(rng.randint(1, 6)))
            for _ in range(60)
        ]
        backend = NgramBackend(kind="closed_word", order=2, add_k=1).fit(corpus)
        for _ in range(300):
            n_ctx = rng.randint(0, 3)
            words = [rng.choice(lexicon + ["zz"]) for _ in range(n_ctx)]
            history = " ".join(words)
            if rng.random() < 0.75:
                stem = rng.choice(lexicon)
                partial = stem[: rng.randint(1, len(stem))]
                history = (history + " " + partial).strip()
            elif history:
                history += " "
            got = predict_closed_vocab(backend, history)
            want = brute_force_closed_vocab(backend, history)
            assert total_variation(got, want) <= 1e-12


def beam_fixture():
    vocab = Vocabulary.from_subwords(
        [("el", False), ("ela", False), ("a", False), ("j", True), ("el", True)]
    )
    backend = NgramBackend(kind="subword", order=2, add_k=1, vocab=vocab).fit(
        ["jel", "jela", "jel ela"]
    )
    return backend


class TestPredictBeam:
    def test_partial_word_completion(self):
        backend = beam_fixture()
        dist = predict_beam(backend, "jel", BeamConfig(20, 2))
        assert dist.prob("a") == pytest.approx(0.5)
        assert dist.prob(" ") == pytest.approx(0.3)
        assert dist.prob("e") == pytest.approx(0.2)

    def test_fresh_word_requires_marked_tokens(self):
        backend = beam_fixture()
        dist = predict_beam(backend, "jel ", BeamConfig(20, 2))
        assert dist.prob("e") == pytest.approx(2 / 3)
        assert dist.prob("j") == pytest.approx(1 / 3)
        assert dist.prob("a") == 0.0

    def test_mid_word_excludes_marked_tokens(self):
        # the practical effect of the word-start filter: with the marked
        # "el" admitted, the boundary would collect extra first-step mass
        backend = beam_fixture()
        dist = predict_beam(backend, "jel", BeamConfig(20, 2))
        assert dist.prob(" ") == pytest.approx(0.3)

    def test_depth_one_drops_unresolved_exact_matches(self):
        backend = beam_fixture()
        dist = predict_beam(backend, "jel", BeamConfig(20, 1))
        assert dist.prob("a") == pytest.approx(1.0)

    def test_beam_size_one_is_greedy(self):
        backend = beam_fixture()
        dist = predict_beam(backend, "jel", BeamConfig(1, 2))
        assert dist.prob(" ") == pytest.approx(1.0)

    def test_zero_probability_partial_is_empty(self):
        vocab = Vocabulary.from_subwords(
            [("a", False), ("b", False), ("c", False)]
        )
        backend = NgramBackend(kind="subword", order=1, add_k=0, vocab=vocab).fit(
            ["ab"]
        )
        assert predict_beam(backend, "c", BeamConfig(20, 2)).is_empty

    def test_empty_history_scores_whole_vocab(self):
        backend = beam_fixture()
        dist = predict_beam(backend, "", BeamConfig(20, 2))
        assert not dist.is_empty
        assert dist.probs.sum() == pytest.approx(1.0)

    def test_rejects_wrong_backend_kind(self):
        backend = NgramBackend(order=1).fit(["ab"])
        with pytest.raises(ValueError):
            predict_beam(backend, "", BeamConfig(20, 2))

    def test_remote_tokenizer_overrides_greedy(self):
        vocab = Vocabulary.from_subwords(
            [("ab", False), ("a", False), ("b", False), ("a", True), ("b", True)]
        )
        backend = NgramBackend(kind="subword", order=1, add_k=1, vocab=vocab).fit(
            ["ab ab"]
        )
        a_id = 1
        calls = []

        def fake_tokenizer(text):
            calls.append(text)
            return [a_id], "b"

        class Recorder:
            def __init__(self, inner):
                self.inner = inner
                self.contexts = []

            @property
            def descriptor(self):
                return self.inner.descriptor

            def next_token_dist(self, ids):
                self.contexts.append(list(ids))
                return self.inner.next_token_dist(ids)

        rec = Recorder(backend)
        predict_beam(rec, "ab", BeamConfig(50, 2))
        assert rec.contexts[0] == []

        rec = Recorder(backend)
        predict_beam(rec, "ab", BeamConfig(50, 2), tokenizer=fake_tokenizer)
        assert calls == ["ab"]
        assert rec.contexts[0] == [a_id]

    def test_remote_tokenizer_none_falls_back(self):
        backend = beam_fixture()
        with_none = predict_beam(
            backend, "jel", BeamConfig(20, 2), tokenizer=lambda t: None
        )
        plain = predict_beam(backend, "jel", BeamConfig(20, 2))
        assert np.allclose(with_none.probs, plain.probs)

    def test_remote_tokenizer_bad_partial_rejected(self):
        backend = beam_fixture()
        with pytest.raises(ValueError):
            predict_beam(
                backend,
                "jel",
                BeamConfig(20, 2),
                tokenizer=lambda t: ([], "zz"),
            )

    def test_exhaustive_oracle(self):
        for seed in (1, 2, 3):
            rng = random.Random(seed)
            vocab = random_subword_vocab(rng, "abc", max_tokens=14)
            alphabet = Alphabet(("a", "b", "c", " "))
            corpus = [
                " ".join(
                    "".join(rng.choice("abc") for _ in range(rng.randint(1, 5)))
                    for _ in range(rng.randint(1, 3))
                )
                for _ in range(25)
            ]
            backend = NgramBackend(
                kind="subword", order=2, add_k=1, vocab=vocab, alphabet=alphabet
            ).fit(corpus)
            n = len(vocab)
            cfg = BeamConfig(n * n + n, 2)
            for _ in range(15):
                history = random_history(rng, alphabet, max_len=8)
                got = predict_beam(backend, history, cfg, alphabet)
                want = exhaustive_beam(backend, history, 2, alphabet)
                assert total_variation(got, want, alphabet) <= 1e-9

    def test_small_beam_stays_normalized(self):
        backend = beam_fixture()
        for size in (1, 2, 3, 5):
            dist = predict_beam(backend, "jel", BeamConfig(size, 2))
            if not dist.is_empty:
                assert dist.probs.sum() == pytest.approx(1.0)


class TestInterpolate:
    def test_blend(self):
        probs = np.zeros(3)
        probs[AB_SPACE.index("a")] = 1.0
        model = CharDistribution(AB_SPACE, probs)
        uni_probs = np.zeros(3)
        uni_probs[AB_SPACE.index("a")] = 0.5
        uni_probs[AB_SPACE.index("b")] = 0.5
        unigram = CharDistribution(AB_SPACE, uni_probs)
        out = interpolate(model, InterpolationConfig(0.8, unigram))
        assert out.prob("a") == pytest.approx(0.9)
        assert out.prob("b") == pytest.approx(0.1)

    def test_weight_one_is_model(self):
        model = CharDistribution.uniform(AB_SPACE)
        unigram = CharDistribution(AB_SPACE, np.array([1.0, 0.0, 0.0]))
        out = interpolate(model, InterpolationConfig(1.0, unigram))
        assert np.allclose(out.probs, model.probs)

    def test_weight_zero_is_unigram(self):
        model = CharDistribution(AB_SPACE, np.array([1.0, 0.0, 0.0]))
        unigram = CharDistribution.uniform(AB_SPACE)
        out = interpolate(model, InterpolationConfig(0.0, unigram))
        assert np.allclose(out.probs, unigram.probs)

    def test_empty_model_falls_back_to_unigram(self):
        unigram = CharDistribution.uniform(AB_SPACE)
        out = interpolate(
            CharDistribution.empty(AB_SPACE), InterpolationConfig(0.8, unigram)
        )
        assert out is unigram

    def test_empty_unigram_keeps_model(self):
        model = CharDistribution.uniform(AB_SPACE)
        out = interpolate(
            model, InterpolationConfig(0.8, CharDistribution.empty(AB_SPACE))
        )
        assert out is model

    def test_alphabet_mismatch(self):
        model = CharDistribution.uniform(AB_SPACE)
        unigram = CharDistribution.uniform(DEFAULT_ALPHABET)
        with pytest.raises(ValueError):
            interpolate(model, InterpolationConfig(0.8, unigram))

    def test_blend_can_reorder_top_choice(self):
        # a sharp unigram can overtake a mild model preference at w=0.8
        model = CharDistribution(AB_SPACE, np.array([0.55, 0.45, 0.0]))
        unigram = CharDistribution(AB_SPACE, np.array([0.0, 1.0, 0.0]))
        out = interpolate(model, InterpolationConfig(0.8, unigram))
        assert out.prob("b") == pytest.approx(0.56)
        assert out.prob("a") == pytest.approx(0.44)


class TestNextCharPredictor:
    def test_default_backend_is_char_unigram(self):
        p = NextCharPredictor().fit(["aab"])
        assert p.kind_ == "char_direct"
        dist = p.distribution("zz")
        assert np.allclose(dist.probs, p.distribution("").probs)
        assert dist.probs.sum() == pytest.approx(1.0)

    def test_char_direct_skips_interpolation(self):
        backend = NgramBackend(order=1, add_k=0)
        p = NextCharPredictor(backend=backend, interp_weight=0.8).fit(["aab"])
        dist = p.distribution("")
        assert dist.prob("a") == pytest.approx(2 / 3)
        assert dist.prob("c") == 0.0

    def test_closed_word_is_interpolated(self):
        backend = NgramBackend(kind="closed_word", order=1, add_k=0)
        corpus = ["the the the the the them them them they they"]
        p = NextCharPredictor(backend=backend, interp_weight=0.8).fit(corpus)
        raw = predict_closed_vocab(p.backend_, "the")
        want = 0.8 * raw.probs + 0.2 * p.unigram_.probs
        assert np.allclose(p.distribution("the").probs, want / want.sum())

    def test_subword_beam_end_to_end(self):
        vocab = Vocabulary.from_subwords(
            [("el", False), ("ela", False), ("a", False), ("j", True), ("el", True)]
        )
        backend = NgramBackend(kind="subword", order=2, add_k=1, vocab=vocab)
        p = NextCharPredictor(backend=backend, interp_weight=1.0).fit(
            ["jel", "jela", "jel ela"]
        )
        dist = p.distribution("jel")
        assert dist.prob("a") == pytest.approx(0.5)
        assert dist.prob(" ") == pytest.approx(0.3)
        assert dist.prob("e") == pytest.approx(0.2)

    def test_empty_result_falls_back_to_unigram(self):
        backend = NgramBackend(kind="closed_word", order=1, add_k=0)
        p = NextCharPredictor(backend=backend, interp_weight=1.0).fit(["the cat"])
        dist = p.distribution("xyz")
        assert np.allclose(dist.probs, p.unigram_.probs)

    def test_empty_unigram_falls_back_to_uniform(self):
        backend = NgramBackend(kind="closed_word", order=1, add_k=0)
        p = NextCharPredictor(
            backend=backend,
            interp_weight=1.0,
            unigram=CharDistribution.empty(DEFAULT_ALPHABET),
        ).fit(["the cat"])
        dist = p.distribution("xyz")
        assert np.allclose(dist.probs, 1 / 27)

    def test_prefitted_backend_reused(self):
        backend = NgramBackend(order=1, add_k=0).fit(["aaa"])
        p = NextCharPredictor(backend=backend).fit(["bbb"])
        assert p.backend_ is backend
        assert p.distribution("").prob("a") == pytest.approx(1.0)

    def test_unfitted_backend_cloned_not_mutated(self):
        backend = NgramBackend(order=1, add_k=0)
        NextCharPredictor(backend=backend).fit(["aab"])
        assert not hasattr(backend, "counts_")

    def test_rank_covers_alphabet(self):
        p = NextCharPredictor().fit(["go home"])
        ranked = p.rank("go ")
        assert len(ranked) == 27
        assert {c for c, _ in ranked} == set(DEFAULT_ALPHABET.chars)
        probs = [pr for _, pr in ranked]
        assert probs == sorted(probs, reverse=True)

    def test_uniform_ties_rank_in_alphabet_order(self):
        p = NextCharPredictor(unigram=CharDistribution.uniform(DEFAULT_ALPHABET))
        backend = NgramBackend(kind="closed_word", order=1, add_k=0)
        p = NextCharPredictor(
            backend=backend, unigram=CharDistribution.uniform(DEFAULT_ALPHABET)
        ).fit(["the"])
        ranked = p.rank("xyz")
        assert [c for c, _ in ranked] == list(DEFAULT_ALPHABET.chars)

    def test_predict_and_proba(self):
        p = NextCharPredictor().fit(["aab"])
        assert p.predict(["", "a"]) == ["a", "a"]
        proba = p.predict_proba(["", "a", "b"])
        assert proba.shape == (3, 27)
        assert np.allclose(proba.sum(axis=1), 1.0)

    def test_out_of_alphabet_history_rejected(self):
        p = NextCharPredictor().fit(["ab"])
        with pytest.raises(ValueError):
            p.distribution("A!")

    def test_requires_fit(self):
        with pytest.raises(NotFittedError):
            NextCharPredictor().distribution("")

    def test_sklearn_clone(self):
        p = NextCharPredictor(interp_weight=0.5, beam_size=7)
        c = clone(p)
        assert c.interp_weight == 0.5
        assert c.beam_size == 7
        params = p.get_params()
        assert params["beam_depth"] == 2

    def test_deterministic(self):
        corpus = ["the cat sat", "the dog ran"]
        a = NextCharPredictor().fit(corpus)
        b = NextCharPredictor().fit(corpus)
        histories = ["", "t", "the ", "the c"]
        assert np.array_equal(a.predict_proba(histories), b.predict_proba(histories))
