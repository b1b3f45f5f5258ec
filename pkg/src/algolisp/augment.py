"""Description augmentation: token edits, back translation, attention replace.

The pipeline walks a corpus and, per instance, independently draws whether
to add a basic-edit variant (probability rho1), a back-translated variant
(rho2), and an attention-replace variant (rho3); all originals are then
appended, so the expected output size is (1 + rho1 + rho2 + rho3) times the
input.  Variants change only the description: program, arguments, and tests
are carried over byte-identical.

Providers for mask filling, translation, and attention weights are
pluggable.  Reference implementations run hermetically: a unigram sampler
over the corpus vocabulary, a table- or echo-based translator, and token
embeddings fed through the attention kernel.  Per-instance randomness is
derived by hashing (seed, instance id), so output bytes are independent of
processing order.
"""

from __future__ import annotations

import hashlib
import math
import random
from collections import Counter
from collections.abc import Iterable, Mapping, Sequence
from dataclasses import dataclass, field
from enum import Enum
from pathlib import Path
from typing import Protocol

import numpy as np

from .attnkernel import attention_weights
from .corpus import ProblemInstance
from .providers import CachedEndpoint, ProviderUnavailable
from .wordlists import protected_tokens

__all__ = [
    "MASK_TOKEN",
    "AugmentError",
    "NoEditableTokens",
    "EmptyTranslation",
    "EditOp",
    "AugmentConfig",
    "MaskFiller",
    "Translator",
    "AttentionSource",
    "UnigramMaskFiller",
    "HttpMaskFiller",
    "FixtureTranslator",
    "EchoTranslator",
    "HttpTranslator",
    "FixtureAttentionSource",
    "KernelAttentionSource",
    "BackTranslation",
    "basic_edit",
    "back_translate",
    "attention_replace",
    "Providers",
    "offline_providers",
    "AugmentRecord",
    "PipelineResult",
    "run_pipeline",
]

MASK_TOKEN = "<mask>"


class AugmentError(Exception):
    """Base class for augmentation failures."""


class NoEditableTokens(AugmentError):
    """The description has too few editable tokens for the operation."""


class EmptyTranslation(AugmentError):
    """A translation step produced or received empty text."""


class EditOp(Enum):
    RD = "rd"  # random deletion
    RI = "ri"  # random insertion
    RS = "rs"  # random substitution


@dataclass(frozen=True)
class AugmentConfig:
    """Knobs of the generation algorithm.

    ``alpha`` sets the edit budget floor(alpha * L) per sentence.  ``rho``
    are the probabilities of adding a basic-edit, back-translation, and
    attention-replace variant.  The sigma triples weight (delete, insert,
    substitute): ``sigma_long`` applies to sentences longer than the corpus
    average, ``sigma_short`` to the rest.  ``protected`` tokens are never
    deleted or substituted; the bundled list is used when omitted.
    """

    alpha: float = 0.1
    rho: tuple[float, float, float] = (0.5, 0.2, 0.1)
    sigma_long: tuple[float, float, float] = (0.5, 0.25, 0.25)
    sigma_short: tuple[float, float, float] = (0.2, 0.4, 0.4)
    seed: int = 42
    protected: frozenset[str] = field(default=frozenset())

    def __post_init__(self):
        if not 0.0 <= self.alpha <= 1.0:
            raise ValueError(f"alpha {self.alpha} outside [0, 1]")
        if len(self.rho) != 3 or any(not 0.0 <= p <= 1.0 for p in self.rho):
            raise ValueError(f"rho must be three probabilities, got {self.rho}")
        for name, triple in (("sigma_long", self.sigma_long), ("sigma_short", self.sigma_short)):
            if len(triple) != 3 or any(p < 0.0 for p in triple):
                raise ValueError(f"{name} must be three non-negative weights")
            if abs(sum(triple) - 1.0) > 1e-9:
                raise ValueError(f"{name} must sum to 1, got {sum(triple)}")
        if not self.protected:
            object.__setattr__(self, "protected", protected_tokens())
        else:
            object.__setattr__(self, "protected", frozenset(self.protected))

    def edit_budget(self, length: int) -> int:
        return math.floor(self.alpha * length)

    def sigma_for(self, length: int, average: float) -> tuple[tuple[float, float, float], str]:
        if length > average:
            return self.sigma_long, "long"
        return self.sigma_short, "short"


# -- provider interfaces ---------------------------------------------------------


class MaskFiller(Protocol):
    def fill(
        self,
        tokens: Sequence[str],
        rng: random.Random | None = None,
        forbidden: Mapping[int, str] | None = None,
    ) -> tuple[str, ...]: ...


class Translator(Protocol):
    def translate(self, text: str, direction: str) -> str: ...


class AttentionSource(Protocol):
    def weights(self, tokens: Sequence[str]) -> np.ndarray: ...


class UnigramMaskFiller:
    """Frequency-weighted unigram sampler over a corpus vocabulary.

    Stands in for a masked language model in hermetic runs: each mask is
    filled with an editable vocabulary token drawn by frequency.  Positions
    listed in ``forbidden`` never receive the named token, which keeps
    substitutions real substitutions.
    """

    def __init__(
        self,
        corpus: Iterable[ProblemInstance] | Mapping[str, int],
        protected: frozenset[str] | None = None,
    ):
        protected = protected if protected is not None else protected_tokens()
        if isinstance(corpus, Mapping):
            counts = Counter(dict(corpus))
        else:
            counts = Counter(
                tok for inst in corpus for tok in inst.description
            )
        counts = Counter({
            tok: n for tok, n in counts.items()
            if tok.lower() not in protected and tok != MASK_TOKEN
        })
        if not counts:
            raise ValueError("vocabulary is empty after removing protected tokens")
        self._population = sorted(counts)
        self._weights = [counts[t] for t in self._population]

    def fill(
        self,
        tokens: Sequence[str],
        rng: random.Random | None = None,
        forbidden: Mapping[int, str] | None = None,
    ) -> tuple[str, ...]:
        rng = rng if rng is not None else random.Random(0)
        forbidden = forbidden or {}
        out = list(tokens)
        for i, tok in enumerate(out):
            if tok != MASK_TOKEN:
                continue
            banned = forbidden.get(i)
            choice = rng.choices(self._population, weights=self._weights)[0]
            for _ in range(100):
                if choice != banned:
                    break
                choice = rng.choices(self._population, weights=self._weights)[0]
            else:
                fallback = [t for t in self._population if t != banned]
                if not fallback:
                    raise ProviderUnavailable("vocabulary too small to avoid the original token")
                choice = fallback[0]
            out[i] = choice
        return tuple(out)


class HttpMaskFiller:
    """Client for a masked-LM infill service; responses cached on disk."""

    def __init__(self, url: str, cache_dir: str | Path | None = None, timeout: float = 30.0):
        self._endpoint = CachedEndpoint(url, cache_dir=cache_dir, timeout=timeout)

    def fill(
        self,
        tokens: Sequence[str],
        rng: random.Random | None = None,
        forbidden: Mapping[int, str] | None = None,
    ) -> tuple[str, ...]:
        reply = self._endpoint.call({"tokens": list(tokens), "mask_token": MASK_TOKEN})
        filled = reply.get("tokens") if isinstance(reply, dict) else None
        if (
            not isinstance(filled, list)
            or len(filled) != len(tokens)
            or any(t == MASK_TOKEN for t in filled)
            or any(a != b for a, b in zip(tokens, filled) if a != MASK_TOKEN)
        ):
            raise ProviderUnavailable("mask filler returned a malformed sequence")
        forbidden = forbidden or {}
        for i, banned in forbidden.items():
            if filled[i] == banned:
                raise ProviderUnavailable("mask filler reinserted a forbidden token")
        return tuple(str(t) for t in filled)


class FixtureTranslator:
    """Table-driven translator keyed by (text, direction); misses raise."""

    def __init__(self, table: Mapping[tuple[str, str], str]):
        self._table = dict(table)

    def translate(self, text: str, direction: str) -> str:
        try:
            return self._table[(text, direction)]
        except KeyError:
            raise ProviderUnavailable(f"no fixture translation for {direction!r}") from None


class EchoTranslator:
    """Returns the input unchanged; round trips are flagged degenerate."""

    def translate(self, text: str, direction: str) -> str:
        return text


class HttpTranslator:
    """Client for a translation service; responses cached on disk."""

    def __init__(self, url: str, cache_dir: str | Path | None = None, timeout: float = 30.0):
        self._endpoint = CachedEndpoint(url, cache_dir=cache_dir, timeout=timeout)

    def translate(self, text: str, direction: str) -> str:
        reply = self._endpoint.call({"text": text, "direction": direction})
        out = reply.get("text") if isinstance(reply, dict) else None
        if not isinstance(out, str):
            raise ProviderUnavailable("translator returned a malformed reply")
        return out


class FixtureAttentionSource:
    """Table of per-token weights keyed by the joined description."""

    def __init__(self, table: Mapping[str, Sequence[float]]):
        self._table = {k: np.asarray(v, dtype=float) for k, v in table.items()}

    def weights(self, tokens: Sequence[str]) -> np.ndarray:
        key = " ".join(tokens)
        try:
            return self._table[key]
        except KeyError:
            raise ProviderUnavailable("no fixture attention weights for this text") from None


class KernelAttentionSource:
    """Self-attention over seeded token embeddings, averaged across rows.

    Each token gets a reproducible random embedding derived from (seed,
    token); the mean attention row then scores how strongly the sentence
    as a whole attends to each position.
    """

    def __init__(self, dim: int = 16, seed: int = 0):
        if dim < 1:
            raise ValueError("dim must be >= 1")
        self.dim = dim
        self.seed = seed

    def _embed(self, token: str) -> np.ndarray:
        key = f"{self.seed}:{token}".encode("utf-8")
        stream = int.from_bytes(hashlib.sha256(key).digest()[:8], "big")
        return np.random.default_rng(stream).uniform(-1.0, 1.0, self.dim)

    def weights(self, tokens: Sequence[str]) -> np.ndarray:
        if not tokens:
            return np.zeros(0)
        X = np.stack([self._embed(t) for t in tokens])
        return attention_weights(X, X).mean(axis=0)


# -- the three operations ---------------------------------------------------------


def _editable_positions(tokens: Sequence[str], protected: frozenset[str]) -> list[int]:
    return [i for i, tok in enumerate(tokens) if tok.lower() not in protected]


def basic_edit(
    tokens: Sequence[str],
    op: EditOp,
    cfg: AugmentConfig,
    filler: MaskFiller | None,
    rng: random.Random,
) -> tuple[str, ...]:
    """Apply floor(alpha * L) deletions, insertions, or substitutions.

    A budget of zero returns the input unchanged (the caller flags the
    no-op).  Deletion and substitution act only on editable positions;
    insertion and substitution fill masks through ``filler``.
    """
    tokens = tuple(tokens)
    if not tokens:
        raise NoEditableTokens("empty description")
    k = cfg.edit_budget(len(tokens))
    if k == 0:
        return tokens

    if op is EditOp.RD:
        editable = _editable_positions(tokens, cfg.protected)
        if len(editable) < k:
            raise NoEditableTokens(f"need {k} editable tokens, have {len(editable)}")
        drop = set(rng.sample(editable, k))
        return tuple(tok for i, tok in enumerate(tokens) if i not in drop)

    if filler is None:
        raise ProviderUnavailable(f"{op.value} requires a mask filler")

    if op is EditOp.RI:
        out = list(tokens)
        for _ in range(k):
            out.insert(rng.randrange(len(out) + 1), MASK_TOKEN)
        return filler.fill(out, rng=rng)

    editable = _editable_positions(tokens, cfg.protected)
    if len(editable) < k:
        raise NoEditableTokens(f"need {k} editable tokens, have {len(editable)}")
    spots = rng.sample(editable, k)
    masked = list(tokens)
    forbidden = {}
    for i in spots:
        forbidden[i] = masked[i]
        masked[i] = MASK_TOKEN
    return filler.fill(masked, rng=rng, forbidden=forbidden)


@dataclass(frozen=True)
class BackTranslation:
    """Round-trip result; ``degenerate`` marks an unchanged sentence."""

    text: str
    pivot: str
    degenerate: bool


def back_translate(
    text: str,
    translator: Translator,
    pivot_language: str = "de",
) -> BackTranslation:
    """English -> pivot -> English; empty text at any step is an error."""
    if not text.strip():
        raise EmptyTranslation("empty source text")
    pivot = translator.translate(text, f"en-{pivot_language}")
    if not pivot.strip():
        raise EmptyTranslation("translation to the pivot language came back empty")
    back = translator.translate(pivot, f"{pivot_language}-en")
    if not back.strip():
        raise EmptyTranslation("translation back to English came back empty")
    return BackTranslation(text=back, pivot=pivot, degenerate=back == text)


def attention_replace(
    tokens: Sequence[str],
    attn: AttentionSource,
    cfg: AugmentConfig,
    rng: random.Random,
    vocabulary: Iterable[str],
) -> tuple[str, ...]:
    """Replace the most-attended editable token with a random editable word.

    Ties on the attention weight break toward the lowest index; the
    replacement is drawn uniformly from ``vocabulary`` minus the protected
    set and the token being replaced.
    """
    tokens = tuple(tokens)
    editable = _editable_positions(tokens, cfg.protected)
    if not editable:
        raise NoEditableTokens("every token is protected")
    w = np.asarray(attn.weights(tokens), dtype=float)
    if w.shape != (len(tokens),):
        raise ValueError(f"attention weights have shape {w.shape}, expected ({len(tokens)},)")
    if np.any(w < 0) or not np.isclose(w.sum(), 1.0, atol=1e-6):
        raise ValueError("attention weights must be non-negative and sum to 1")
    target = max(editable, key=lambda i: (w[i], -i))
    candidates = sorted(
        {v for v in vocabulary if v.lower() not in cfg.protected and v != tokens[target]}
    )
    if not candidates:
        raise NoEditableTokens("vocabulary has no usable replacement")
    replacement = candidates[rng.randrange(len(candidates))]
    return tuple(replacement if i == target else tok for i, tok in enumerate(tokens))


# -- the pipeline -----------------------------------------------------------------


@dataclass(frozen=True)
class Providers:
    """The three external services the pipeline may call."""

    filler: MaskFiller | None = None
    translator: Translator | None = None
    attention: AttentionSource | None = None


def offline_providers(
    corpus: Sequence[ProblemInstance],
    cfg: AugmentConfig | None = None,
    dim: int = 16,
) -> Providers:
    """Hermetic provider set: unigram filler, echo translator, kernel attention."""
    cfg = cfg if cfg is not None else AugmentConfig()
    return Providers(
        filler=UnigramMaskFiller(corpus, protected=cfg.protected),
        translator=EchoTranslator(),
        attention=KernelAttentionSource(dim=dim, seed=cfg.seed),
    )


@dataclass(frozen=True)
class AugmentRecord:
    """Audit row for one attempted variant."""

    source_id: str
    kind: str                      # "be", "bt", or "ar"
    variant_id: str | None         # None when the variant was skipped
    op: str | None = None          # rd/ri/rs for basic edits
    sigma: str | None = None       # "long" or "short" for basic edits
    budget: int | None = None      # floor(alpha * L) for basic edits
    edits: int | None = None       # tokens actually changed
    degenerate: bool = False       # back translation returned the input
    noop: bool = False             # zero edit budget
    skipped: str | None = None     # error message when no variant was emitted

    def to_json_dict(self) -> dict:
        return {
            "source_id": self.source_id,
            "kind": self.kind,
            "variant_id": self.variant_id,
            "op": self.op,
            "sigma": self.sigma,
            "budget": self.budget,
            "edits": self.edits,
            "degenerate": self.degenerate,
            "noop": self.noop,
            "skipped": self.skipped,
        }


@dataclass(frozen=True)
class PipelineResult:
    """Augmented corpus (variants first, then all originals) plus audit rows."""

    instances: tuple[ProblemInstance, ...]
    audit: tuple[AugmentRecord, ...]
    variant_count: int

    @property
    def variants(self) -> tuple[ProblemInstance, ...]:
        return self.instances[: self.variant_count]

    @property
    def originals(self) -> tuple[ProblemInstance, ...]:
        return self.instances[self.variant_count :]


def _stream(seed: int, instance_id: str, stage: str) -> random.Random:
    key = f"{seed}:{instance_id}:{stage}".encode("utf-8")
    return random.Random(int.from_bytes(hashlib.sha256(key).digest()[:8], "big"))


def _with_description(inst: ProblemInstance, suffix: str, description: tuple[str, ...]) -> ProblemInstance:
    return ProblemInstance(
        id=f"{inst.id}:{suffix}",
        description=description,
        args=inst.args,
        return_type=inst.return_type,
        program=inst.program,
        program_tokens=inst.program_tokens,
        tests=inst.tests,
        parse_issue=inst.parse_issue,
    )


def _substitution_count(a: Sequence[str], b: Sequence[str]) -> int:
    return sum(1 for x, y in zip(a, b) if x != y)


def run_pipeline(
    corpus: Sequence[ProblemInstance],
    cfg: AugmentConfig | None = None,
    providers: Providers | None = None,
) -> PipelineResult:
    """Generate description variants for a corpus and append the originals.

    Per instance, three independent coin tosses decide whether to add a
    basic-edit, back-translated, and attention-replaced variant.  Provider
    and eligibility failures skip that variant (recorded in the audit) and
    never abort the run.  Output bytes depend only on (corpus, cfg bytes,
    provider behaviour): randomness is keyed by instance id, and variants
    are ordered by (corpus position, variant kind) with originals last.
    """
    cfg = cfg if cfg is not None else AugmentConfig()
    providers = providers if providers is not None else offline_providers(corpus, cfg)
    if len(corpus) == 0:
        return PipelineResult(instances=(), audit=(), variant_count=0)

    average = sum(len(inst.description) for inst in corpus) / len(corpus)
    vocabulary = sorted({tok for inst in corpus for tok in inst.description})
    rho1, rho2, rho3 = cfg.rho

    out: list[ProblemInstance] = []
    audit: list[AugmentRecord] = []

    for inst in corpus:
        tokens = inst.description
        rng = _stream(cfg.seed, inst.id, "be-bt")

        if rng.random() < rho1:
            sigma, sigma_label = cfg.sigma_for(len(tokens), average)
            op = EditOp(rng.choices(("rd", "ri", "rs"), weights=sigma)[0])
            budget = cfg.edit_budget(len(tokens))
            try:
                edited = basic_edit(tokens, op, cfg, providers.filler, rng)
            except (AugmentError, ProviderUnavailable) as exc:
                audit.append(AugmentRecord(
                    source_id=inst.id, kind="be", variant_id=None, op=op.value,
                    sigma=sigma_label, budget=budget, skipped=str(exc),
                ))
            else:
                variant = _with_description(inst, f"be-{op.value}", edited)
                edits = (
                    _substitution_count(tokens, edited)
                    if len(edited) == len(tokens)
                    else abs(len(edited) - len(tokens))
                )
                out.append(variant)
                audit.append(AugmentRecord(
                    source_id=inst.id, kind="be", variant_id=variant.id, op=op.value,
                    sigma=sigma_label, budget=budget, edits=edits, noop=budget == 0,
                ))

        if rng.random() < rho2:
            if providers.translator is None:
                audit.append(AugmentRecord(
                    source_id=inst.id, kind="bt", variant_id=None,
                    skipped="no translator configured",
                ))
            else:
                try:
                    bt = back_translate(" ".join(tokens), providers.translator)
                except (AugmentError, ProviderUnavailable) as exc:
                    audit.append(AugmentRecord(
                        source_id=inst.id, kind="bt", variant_id=None, skipped=str(exc),
                    ))
                else:
                    variant = _with_description(inst, "bt", tuple(bt.text.split()))
                    out.append(variant)
                    audit.append(AugmentRecord(
                        source_id=inst.id, kind="bt", variant_id=variant.id,
                        degenerate=bt.degenerate,
                    ))

        ar_rng = _stream(cfg.seed, inst.id, "ar")
        if ar_rng.random() < rho3:
            if providers.attention is None:
                audit.append(AugmentRecord(
                    source_id=inst.id, kind="ar", variant_id=None,
                    skipped="no attention source configured",
                ))
            else:
                try:
                    replaced = attention_replace(tokens, providers.attention, cfg, ar_rng, vocabulary)
                except (AugmentError, ProviderUnavailable, ValueError) as exc:
                    audit.append(AugmentRecord(
                        source_id=inst.id, kind="ar", variant_id=None, skipped=str(exc),
                    ))
                else:
                    variant = _with_description(inst, "ar", replaced)
                    out.append(variant)
                    audit.append(AugmentRecord(
                        source_id=inst.id, kind="ar", variant_id=variant.id, edits=1,
                    ))

    n_variants = len(out)
    out.extend(corpus)
    return PipelineResult(instances=tuple(out), audit=tuple(audit), variant_count=n_variants)
