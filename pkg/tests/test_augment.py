"""Augmentation pipeline tests, anchored on the illustrative edit examples."""

from __future__ import annotations

import random

import numpy as np
import pytest

from algolisp.augment import (
    MASK_TOKEN,
    AugmentConfig,
    AugmentRecord,
    BackTranslation,
    EchoTranslator,
    EditOp,
    EmptyTranslation,
    FixtureAttentionSource,
    FixtureTranslator,
    HttpMaskFiller,
    HttpTranslator,
    KernelAttentionSource,
    NoEditableTokens,
    Providers,
    UnigramMaskFiller,
    attention_replace,
    back_translate,
    basic_edit,
    offline_providers,
    run_pipeline,
)
from algolisp.corpus import make_instance
from algolisp.providers import ProviderUnavailable

PALINDROME = "Consider an array of numbers a , your task is to find if a reads the same from both ends ."
PALINDROME_SHORT = "Consider an array of numbers a , your task is to find if a reads the same from both ends"

BT_SOURCE = "Given arrays of numbers a and b , what is the difference of elements of a and median in b ."
BT_PIVOT = (
    "Was ist der Unterschied zwischen den Elementen von a und dem Median in b , "
    "wenn Arrays von Zahlen a und b gegeben sind ?"
)
BT_RESULT = "What is the difference between the elements of a and the median in b given arrays of numbers a and b ?"

AR_SOURCE = "you are given an array of numbers a , find not prime values in a"


class StubFiller:
    """Fills masks left to right from a fixed word list."""

    def __init__(self, words):
        self._words = list(words)

    def fill(self, tokens, rng=None, forbidden=None):
        queue = iter(self._words)
        return tuple(next(queue) if t == MASK_TOKEN else t for t in tokens)


def _seed_where(predicate, limit=5000):
    for seed in range(limit):
        if predicate(random.Random(seed)):
            return seed
    raise AssertionError("no seed reached the expected outcome")


def _instance(i, text):
    return make_instance(
        f"p{i}", text, [["a", "int[]"]], "int", "( len a )",
        [{"input": {"a": [1, 2, 3]}, "output": 3}],
    )


# -- config -----------------------------------------------------------------------


def test_config_defaults_and_budget():
    cfg = AugmentConfig()
    assert cfg.alpha == 0.1
    assert cfg.rho == (0.5, 0.2, 0.1)
    assert cfg.sigma_long == (0.5, 0.25, 0.25)
    assert cfg.sigma_short == (0.2, 0.4, 0.4)
    assert "sum" in cfg.protected and "concatenation" in cfg.protected
    assert cfg.edit_budget(21) == 2
    assert cfg.edit_budget(9) == 0


def test_config_sigma_choice_uses_strict_greater():
    cfg = AugmentConfig()
    assert cfg.sigma_for(30, 20.0) == ((0.5, 0.25, 0.25), "long")
    assert cfg.sigma_for(10, 20.0) == ((0.2, 0.4, 0.4), "short")
    assert cfg.sigma_for(20, 20.0)[1] == "short"


def test_config_validation():
    with pytest.raises(ValueError):
        AugmentConfig(alpha=1.5)
    with pytest.raises(ValueError):
        AugmentConfig(rho=(0.5, 0.2))
    with pytest.raises(ValueError):
        AugmentConfig(sigma_long=(0.5, 0.5, 0.5))
    with pytest.raises(ValueError):
        AugmentConfig(sigma_short=(-0.2, 0.8, 0.4))


# -- basic edits --------------------------------------------------------------------


def test_rd_reaches_the_illustrative_removal():
    tokens = tuple(PALINDROME.split())
    cfg = AugmentConfig()
    want = tuple(
        "Consider an array of numbers a , your task to find if a reads same from both ends .".split()
    )

    def hits(rng):
        return basic_edit(tokens, EditOp.RD, cfg, None, rng) == want

    seed = _seed_where(hits)
    assert basic_edit(tokens, EditOp.RD, cfg, None, random.Random(seed)) == want


def test_rd_deletes_exactly_the_budget():
    tokens = tuple(PALINDROME.split())
    cfg = AugmentConfig()
    for seed in range(40):
        out = basic_edit(tokens, EditOp.RD, cfg, None, random.Random(seed))
        assert len(tokens) - len(out) == cfg.edit_budget(len(tokens)) == 2


def test_rd_never_touches_protected_tokens():
    tokens = tuple("find the sum of the digits of the number a please now".split())
    cfg = AugmentConfig()
    for seed in range(40):
        out = basic_edit(tokens, EditOp.RD, cfg, None, random.Random(seed))
        assert out.count("sum") == 1 and out.count("digits") == 1


def test_rd_requires_enough_editable_tokens():
    cfg = AugmentConfig(protected=frozenset(
        "consider array numbers your task find reads same from both ends".split()
    ))
    tokens = tuple("consider array numbers your task find reads same from both ends".split())
    with pytest.raises(NoEditableTokens):
        basic_edit(tokens, EditOp.RD, cfg, None, random.Random(0))


def test_zero_budget_is_a_noop():
    tokens = tuple("Given a number a , what is a ?".split())
    assert len(tokens) == 9
    out = basic_edit(tokens, EditOp.RD, AugmentConfig(), None, random.Random(0))
    assert out == tokens


def test_empty_description_rejected():
    with pytest.raises(NoEditableTokens):
        basic_edit((), EditOp.RD, AugmentConfig(), None, random.Random(0))


def test_rs_reaches_the_illustrative_substitution():
    tokens = tuple(PALINDROME_SHORT.split())
    cfg = AugmentConfig()
    filler = UnigramMaskFiller({"integers": 30, "on": 1, "regular": 1})
    want = tuple(
        "Consider an array of integers a , your task is to find if a reads the integers from both ends".split()
    )

    def hits(rng):
        return basic_edit(tokens, EditOp.RS, cfg, filler, rng) == want

    seed = _seed_where(hits)
    assert basic_edit(tokens, EditOp.RS, cfg, filler, random.Random(seed)) == want


def test_rs_substitutes_exactly_the_budget_in_place():
    tokens = tuple(PALINDROME.split())
    cfg = AugmentConfig()
    filler = UnigramMaskFiller({"alpha": 3, "beta": 2, "gamma": 1})
    for seed in range(40):
        out = basic_edit(tokens, EditOp.RS, cfg, filler, random.Random(seed))
        assert len(out) == len(tokens)
        changed = [i for i, (x, y) in enumerate(zip(tokens, out)) if x != y]
        assert len(changed) == 2
        assert MASK_TOKEN not in out


def test_ri_reaches_the_illustrative_insertion():
    tokens = tuple(PALINDROME.split())
    cfg = AugmentConfig()
    filler = StubFiller(["on", "regular"])
    want = tuple(
        "Consider on an array of regular numbers a , your task is to find if a reads the same from both ends .".split()
    )

    def hits(rng):
        return basic_edit(tokens, EditOp.RI, cfg, filler, rng) == want

    seed = _seed_where(hits)
    assert basic_edit(tokens, EditOp.RI, cfg, filler, random.Random(seed)) == want


def test_ri_inserts_and_keeps_the_original_in_order():
    tokens = tuple(PALINDROME.split())
    cfg = AugmentConfig()
    filler = UnigramMaskFiller({"pad": 1})
    for seed in range(20):
        out = basic_edit(tokens, EditOp.RI, cfg, filler, random.Random(seed))
        assert len(out) == len(tokens) + 2
        queue = list(out)
        for tok in tokens:  # original survives as a subsequence
            assert tok in queue
            queue = queue[queue.index(tok) + 1:]


def test_mask_ops_need_a_filler():
    tokens = tuple(PALINDROME.split())
    with pytest.raises(ProviderUnavailable):
        basic_edit(tokens, EditOp.RS, AugmentConfig(), None, random.Random(0))
    with pytest.raises(ProviderUnavailable):
        basic_edit(tokens, EditOp.RI, AugmentConfig(), None, random.Random(0))


# -- mask filler --------------------------------------------------------------------


def test_unigram_filler_excludes_protected_words():
    corpus = [_instance(0, "what is the sum of digits of a number a")]
    filler = UnigramMaskFiller(corpus)
    filled = filler.fill(("the", MASK_TOKEN), rng=random.Random(0))
    assert filled[1] not in ("sum", "digits", MASK_TOKEN)


def test_unigram_filler_honors_forbidden_positions():
    filler = UnigramMaskFiller({"alpha": 1, "beta": 1})
    for seed in range(60):
        out = filler.fill((MASK_TOKEN, "x", MASK_TOKEN), rng=random.Random(seed),
                          forbidden={0: "alpha", 2: "beta"})
        assert out[0] == "beta" and out[2] == "alpha"


def test_unigram_filler_is_deterministic():
    filler = UnigramMaskFiller({"alpha": 2, "beta": 5, "gamma": 1})
    a = filler.fill((MASK_TOKEN, MASK_TOKEN), rng=random.Random(3))
    b = filler.fill((MASK_TOKEN, MASK_TOKEN), rng=random.Random(3))
    assert a == b


def test_unigram_filler_rejects_empty_vocabulary():
    with pytest.raises(ValueError):
        UnigramMaskFiller({"sum": 4, "digits": 2})  # everything protected


def test_http_providers_surface_unreachable_hosts():
    with pytest.raises(ProviderUnavailable):
        HttpMaskFiller("http://127.0.0.1:9/fill").fill((MASK_TOKEN,))
    with pytest.raises(ProviderUnavailable):
        HttpTranslator("http://127.0.0.1:9/mt").translate("hello", "en-de")


# -- back translation ----------------------------------------------------------------


def test_back_translation_follows_the_illustrative_round_trip():
    translator = FixtureTranslator({
        (BT_SOURCE, "en-de"): BT_PIVOT,
        (BT_PIVOT, "de-en"): BT_RESULT,
    })
    result = back_translate(BT_SOURCE, translator)
    assert result == BackTranslation(text=BT_RESULT, pivot=BT_PIVOT, degenerate=False)


def test_back_translation_flags_identity_round_trips():
    result = back_translate("given a number a , compute a factorial", EchoTranslator())
    assert result.degenerate


def test_back_translation_rejects_empty_text():
    with pytest.raises(EmptyTranslation):
        back_translate("   ", EchoTranslator())

    class Hollow:
        def translate(self, text, direction):
            return ""

    with pytest.raises(EmptyTranslation):
        back_translate("some text", Hollow())


def test_fixture_translator_misses_are_provider_errors():
    with pytest.raises(ProviderUnavailable):
        FixtureTranslator({}).translate("text", "en-de")


# -- attention replace ----------------------------------------------------------------


def _peaked(tokens, index, height=0.9):
    rest = (1.0 - height) / (len(tokens) - 1)
    w = [rest] * len(tokens)
    w[index] = height
    return w


def test_ar_reaches_the_illustrative_replacement():
    tokens = tuple(AR_SOURCE.split())
    attn = FixtureAttentionSource({AR_SOURCE: _peaked(tokens, 3)})
    vocab = set(tokens) | {"at"}
    want = tuple("you are given at array of numbers a , find not prime values in a".split())

    def hits(rng):
        return attention_replace(tokens, attn, AugmentConfig(), rng, vocab) == want

    seed = _seed_where(hits)
    assert attention_replace(tokens, attn, AugmentConfig(), random.Random(seed), vocab) == want


def test_ar_skips_protected_peaks():
    tokens = tuple(AR_SOURCE.split())
    w = _peaked(tokens, tokens.index("prime"), 0.5)
    w[3] = 0.3  # strongest editable position
    total = sum(w)
    attn = FixtureAttentionSource({AR_SOURCE: [x / total for x in w]})
    out = attention_replace(tokens, attn, AugmentConfig(), random.Random(0), set(tokens))
    assert out[tokens.index("prime")] == "prime"
    assert out[3] != "an"
    assert sum(1 for a, b in zip(tokens, out) if a != b) == 1


def test_ar_breaks_ties_toward_the_lowest_index():
    tokens = ("alpha", "beta", "gamma")
    attn = FixtureAttentionSource({"alpha beta gamma": [1 / 3] * 3})
    for seed in range(10):
        out = attention_replace(tokens, attn, AugmentConfig(), random.Random(seed),
                                {"alpha", "beta", "gamma", "delta"})
        assert out[1:] == ("beta", "gamma")
        assert out[0] != "alpha"


def test_ar_requires_an_editable_token():
    cfg = AugmentConfig(protected=frozenset({"sum", "digits"}))
    attn = FixtureAttentionSource({"sum digits": [0.5, 0.5]})
    with pytest.raises(NoEditableTokens):
        attention_replace(("sum", "digits"), attn, cfg, random.Random(0), {"x"})


def test_ar_validates_weight_vectors():
    tokens = ("one", "two")
    bad_len = FixtureAttentionSource({"one two": [1.0]})
    with pytest.raises(ValueError):
        attention_replace(tokens, bad_len, AugmentConfig(), random.Random(0), {"x"})
    bad_sum = FixtureAttentionSource({"one two": [0.9, 0.3]})
    with pytest.raises(ValueError):
        attention_replace(tokens, bad_sum, AugmentConfig(), random.Random(0), {"x"})


def test_kernel_attention_weights_are_a_distribution():
    source = KernelAttentionSource(dim=8, seed=4)
    tokens = tuple(AR_SOURCE.split())
    w = source.weights(tokens)
    assert w.shape == (len(tokens),)
    assert np.all(w >= 0) and abs(w.sum() - 1.0) < 1e-9
    assert np.array_equal(w, KernelAttentionSource(dim=8, seed=4).weights(tokens))
    assert source.weights(()).shape == (0,)


# -- pipeline ---------------------------------------------------------------------------


def _corpus(n):
    texts = [
        "Given an array of numbers a , what is the sum of elements in a",
        "Given an array of numbers a , your task is to find if a reads the same from both ends now",
        "Given a number a , compute a factorial",
        "you are given an array of numbers a , find not prime values in a",
    ]
    return [_instance(i, texts[i % len(texts)]) for i in range(n)]


def test_pipeline_with_zero_probabilities_returns_the_corpus():
    corpus = _corpus(6)
    result = run_pipeline(corpus, AugmentConfig(rho=(0.0, 0.0, 0.0)))
    assert list(result.instances) == corpus
    assert result.variant_count == 0
    assert result.audit == ()


def test_pipeline_is_deterministic():
    corpus = _corpus(25)
    cfg = AugmentConfig(seed=42)
    a = run_pipeline(corpus, cfg, offline_providers(corpus, cfg))
    b = run_pipeline(corpus, cfg, offline_providers(corpus, cfg))
    assert [i.id for i in a.instances] == [i.id for i in b.instances]
    assert [i.description for i in a.instances] == [i.description for i in b.instances]
    assert a.audit == b.audit


def test_pipeline_variant_volume_tracks_the_probabilities():
    corpus = _corpus(200)
    result = run_pipeline(corpus, AugmentConfig(seed=1))
    # expected 200 * 0.8 = 160 variants, allow 4 sigma
    assert 120 <= result.variant_count <= 200
    assert len(result.instances) == result.variant_count + 200
    assert list(result.originals) == corpus


def test_pipeline_variants_change_only_the_description():
    corpus = _corpus(40)
    by_id = {inst.id: inst for inst in corpus}
    result = run_pipeline(corpus, AugmentConfig(seed=3))
    assert result.variant_count > 0
    for variant in result.variants:
        source = by_id[variant.id.split(":")[0]]
        assert variant.program_tokens == source.program_tokens
        assert variant.args == source.args
        assert variant.tests == source.tests
        assert variant.return_type == source.return_type


def test_pipeline_preserves_protected_tokens_outside_bt():
    corpus = _corpus(60)
    by_id = {inst.id: inst for inst in corpus}
    cfg = AugmentConfig(seed=5)
    result = run_pipeline(corpus, cfg, offline_providers(corpus, cfg))
    checked = 0
    for variant in result.variants:
        source_id, kind = variant.id.split(":")
        if kind.startswith("bt"):
            continue
        source = by_id[source_id]
        for word in cfg.protected:
            assert variant.description.count(word) >= source.description.count(word)
        checked += 1
    assert checked > 0


def test_pipeline_orders_variants_by_instance_then_kind():
    corpus = _corpus(8)
    result = run_pipeline(corpus, AugmentConfig(rho=(1.0, 1.0, 1.0), seed=2))
    assert result.variant_count == 24
    kinds = [v.id.split(":")[1] for v in result.variants]
    for i in range(0, 24, 3):
        assert kinds[i].startswith("be-")
        assert kinds[i + 1] == "bt"
        assert kinds[i + 2] == "ar"
    sources = [v.id.split(":")[0] for v in result.variants]
    assert sources == [inst.id for inst in corpus for _ in range(3)]


def test_pipeline_records_sigma_branch_per_variant():
    corpus = [
        _instance(0, "Given a number a , compute the sum of a and a plus one more"),
        _instance(1, "Given an array of numbers a , your task is to find if a reads the same from "
                     "both ends and then some more words to make this sentence quite long indeed"),
    ]
    result = run_pipeline(corpus, AugmentConfig(rho=(1.0, 0.0, 0.0), seed=0))
    rows = {r.source_id: r for r in result.audit if r.kind == "be"}
    assert rows["p0"].sigma == "short"
    assert rows["p1"].sigma == "long"


def test_pipeline_flags_zero_budget_noops():
    corpus = [_instance(0, "Given a number a , what is a ?")]
    result = run_pipeline(corpus, AugmentConfig(rho=(1.0, 0.0, 0.0), seed=0))
    (row,) = result.audit
    assert row.noop and row.budget == 0 and row.edits == 0
    assert result.variants[0].description == corpus[0].description


def test_pipeline_skips_broken_providers_without_aborting():
    # every description is long enough for a nonzero budget, so rs needs the filler
    corpus = [_instance(i, PALINDROME) for i in range(10)]
    cfg = AugmentConfig(rho=(1.0, 1.0, 1.0), seed=7,
                        sigma_long=(0.0, 0.0, 1.0), sigma_short=(0.0, 0.0, 1.0))
    result = run_pipeline(corpus, cfg, Providers(filler=None, translator=None, attention=None))
    assert result.variant_count == 0
    assert list(result.originals) == corpus
    assert len(result.audit) == 30
    assert all(row.skipped for row in result.audit)


def test_pipeline_rd_needs_no_provider():
    corpus = _corpus(10)
    cfg = AugmentConfig(rho=(1.0, 0.0, 0.0), seed=7,
                        sigma_long=(1.0, 0.0, 0.0), sigma_short=(1.0, 0.0, 0.0))
    result = run_pipeline(corpus, cfg, Providers(filler=None, translator=None, attention=None))
    assert result.variant_count == 10
    assert all(r.op == "rd" and r.variant_id for r in result.audit)


def test_pipeline_marks_degenerate_echo_round_trips():
    corpus = _corpus(5)
    result = run_pipeline(corpus, AugmentConfig(rho=(0.0, 1.0, 0.0), seed=0))
    assert result.variant_count == 5
    assert all(r.kind == "bt" and r.degenerate for r in result.audit)
    for variant, source in zip(result.variants, corpus):
        assert variant.description == source.description


def test_pipeline_uses_real_translations_when_available():
    inst = _instance(0, BT_SOURCE)
    translator = FixtureTranslator({
        (BT_SOURCE, "en-de"): BT_PIVOT,
        (BT_PIVOT, "de-en"): BT_RESULT,
    })
    result = run_pipeline(
        [inst], AugmentConfig(rho=(0.0, 1.0, 0.0), seed=0),
        Providers(translator=translator),
    )
    (variant,) = result.variants
    assert variant.description == tuple(BT_RESULT.split())
    (row,) = result.audit
    assert not row.degenerate
