"""Perturbation measurements: token edit distance, length-normalized ratio,
embedding distance, and the human-confusion percentage.

Distances operate on token sequences (a one-word substitution costs exactly
1), never on characters.  Embeddings come from a pluggable provider so the
library stays model-free.
"""

from __future__ import annotations

from dataclasses import dataclass
from pathlib import Path
from typing import Mapping, Protocol, Sequence

import numpy as np

from .providers import CachedEndpoint, ProviderUnavailable

__all__ = [
    "DistanceReport",
    "DimensionMismatch",
    "EmbeddingProvider",
    "EmptyOriginal",
    "FixtureEmbeddingProvider",
    "HttpEmbeddingProvider",
    "OutOfRange",
    "ProviderUnavailable",
    "ZeroVector",
    "confusion_pct",
    "embedding_distance",
    "lev_ratio",
    "mean_distances",
    "measure",
    "token_levenshtein",
]


class EmptyOriginal(ValueError):
    """lev_ratio needs a nonempty original sequence as denominator."""


class DimensionMismatch(ValueError):
    """Embedding vectors disagree in shape."""


class ZeroVector(ValueError):
    """An embedding has zero norm, so cosine similarity is undefined."""


class OutOfRange(ValueError):
    """A rating fell outside the 1..5 scale."""


def token_levenshtein(a: Sequence[str], b: Sequence[str]) -> int:
    """Minimum number of token insertions, deletions, and substitutions
    turning ``a`` into ``b``; the classic two-row dynamic program."""
    # shared prefix and suffix never change the distance
    la, lb = len(a), len(b)
    lo = 0
    while lo < la and lo < lb and a[lo] == b[lo]:
        lo += 1
    hi = 0
    while hi < la - lo and hi < lb - lo and a[la - 1 - hi] == b[lb - 1 - hi]:
        hi += 1
    a = a[lo:la - hi]
    b = b[lo:lb - hi]
    if not a:
        return len(b)
    if not b:
        return len(a)
    if len(b) > len(a):
        a, b = b, a
    prev = list(range(len(b) + 1))
    for i, ca in enumerate(a, 1):
        cur = [i]
        append = cur.append
        for j, cb in enumerate(b, 1):
            d = prev[j - 1] + (ca != cb)
            u = prev[j] + 1
            left = cur[j - 1] + 1
            append(d if d <= u and d <= left else u if u <= left else left)
        prev = cur
    return prev[-1]


def lev_ratio(a: Sequence[str], b: Sequence[str]) -> float:
    """Edit distance normalized by the original sequence's length."""
    if len(a) == 0:
        raise EmptyOriginal("original sequence is empty")
    return token_levenshtein(a, b) / len(a)


class EmbeddingProvider(Protocol):
    def embed(self, text: str) -> np.ndarray: ...


class FixtureEmbeddingProvider:
    """Embeddings from a checked-in text → vector table (JSON file or dict)."""

    def __init__(self, source: str | Path | Mapping[str, Sequence[float]]):
        if isinstance(source, (str, Path)):
            import json

            table = json.loads(Path(source).read_text(encoding="utf-8"))
        else:
            table = dict(source)
        self._table = {k: np.asarray(v, dtype=np.float64) for k, v in table.items()}

    def embed(self, text: str) -> np.ndarray:
        try:
            return self._table[text]
        except KeyError:
            raise ProviderUnavailable(f"fixture has no embedding for {text!r}") from None


class HttpEmbeddingProvider:
    """Client for a sentence-embedding service: POST {"text": ...} →
    {"embedding": [...]}; responses are cached on disk when a directory is
    given."""

    def __init__(self, url: str, cache_dir: str | Path | None = None, timeout: float = 30.0):
        self._endpoint = CachedEndpoint(url, cache_dir, timeout)

    def embed(self, text: str) -> np.ndarray:
        reply = self._endpoint.call({"text": text})
        try:
            return np.asarray(reply["embedding"], dtype=np.float64)
        except (KeyError, TypeError, ValueError) as exc:
            raise ProviderUnavailable(f"malformed embedding reply: {exc}") from exc


def embedding_distance(a: str, b: str, provider: EmbeddingProvider) -> float:
    """1 − cosine similarity of the two texts' embeddings, clamped to [0, 2]."""
    va = np.asarray(provider.embed(a), dtype=np.float64)
    vb = np.asarray(provider.embed(b), dtype=np.float64)
    if va.ndim != 1 or vb.ndim != 1 or va.shape != vb.shape:
        raise DimensionMismatch(f"embedding shapes {va.shape} and {vb.shape} differ")
    na = float(np.linalg.norm(va))
    nb = float(np.linalg.norm(vb))
    if na == 0.0 or nb == 0.0:
        raise ZeroVector("embedding with zero norm")
    distance = 1.0 - float(va @ vb) / (na * nb)
    return min(max(distance, 0.0), 2.0)


def confusion_pct(original_score: float, adversarial_score: float) -> float:
    """How indistinguishable a perturbation is to raters on the 1..5 scale:
    (1 − |original − adversarial| / 5) · 100."""
    for score in (original_score, adversarial_score):
        if not 1.0 <= score <= 5.0:
            raise OutOfRange(f"score {score} outside [1, 5]")
    return (1.0 - abs(original_score - adversarial_score) / 5.0) * 100.0


@dataclass(frozen=True)
class DistanceReport:
    """Perturbation size: token edit distance, its ratio to the original
    length, and optionally an embedding distance in [0, 2]."""

    lev: int
    lev_ratio: float
    embedding_distance: float | None = None

    def to_json_dict(self) -> dict:
        return {
            "lev": self.lev,
            "lev_ratio": self.lev_ratio,
            "embedding_distance": self.embedding_distance,
        }


def measure(
    original: Sequence[str],
    perturbed: Sequence[str],
    provider: EmbeddingProvider | None = None,
) -> DistanceReport:
    """Full distance report between an original and a perturbed token
    sequence; embedding distance only when a provider is supplied."""
    lev = token_levenshtein(original, perturbed)
    ratio = lev_ratio(original, perturbed)
    emb = None
    if provider is not None:
        emb = embedding_distance(" ".join(original), " ".join(perturbed), provider)
    return DistanceReport(lev=lev, lev_ratio=ratio, embedding_distance=emb)


def mean_distances(rows: Sequence[tuple[str, DistanceReport]]) -> dict[str, dict]:
    """Per-group mean lev / lev_ratio / embedding distance.

    ``rows`` pairs a group label (e.g. an attack class) with a report; the
    embedding mean is None when no row of the group carries one.
    """
    groups: dict[str, list[DistanceReport]] = {}
    for label, report in rows:
        groups.setdefault(label, []).append(report)
    out: dict[str, dict] = {}
    for label, reports in groups.items():
        embs = [r.embedding_distance for r in reports if r.embedding_distance is not None]
        out[label] = {
            "count": len(reports),
            "lev": sum(r.lev for r in reports) / len(reports),
            "lev_ratio": sum(r.lev_ratio for r in reports) / len(reports),
            "embedding_distance": sum(embs) / len(embs) if embs else None,
        }
    return out
