"""Bundled word tables used by description perturbations.

Three tables ship with the package:

* ``stopwords`` -- function words that may be removed from a description;
* ``synonyms`` -- a small curated lexicon of same-part-of-speech
  substitutions, hand-checked against the templated description language;
* ``protected_tokens`` -- semantic words (operation names, quantities)
  that no perturbation may delete or substitute.

The synonym lexicon and the protected set must stay disjoint; the loaders
enforce that so a bad edit to the data files fails fast.
"""

from __future__ import annotations

import json
import re
from functools import lru_cache
from importlib import resources
from types import MappingProxyType
from typing import Mapping

__all__ = ["stopwords", "synonyms", "protected_tokens"]

_TOKEN_RE = re.compile(r"[a-z][a-z'-]*\Z")


def _data_text(name: str) -> str:
    return resources.files("algolisp.data").joinpath(name).read_text("utf-8")


def _read_wordfile(name: str) -> frozenset[str]:
    words = []
    for raw in _data_text(name).splitlines():
        line = raw.strip()
        if not line or line.startswith("#"):
            continue
        if not _TOKEN_RE.match(line):
            raise ValueError(f"{name}: bad entry {line!r}")
        words.append(line)
    return frozenset(words)


@lru_cache(maxsize=None)
def stopwords() -> frozenset[str]:
    """Lowercase function words eligible for removal."""
    return _read_wordfile("stopwords.txt")


@lru_cache(maxsize=None)
def protected_tokens() -> frozenset[str]:
    """Lowercase semantic words that must survive every perturbation."""
    return _read_wordfile("non_editable.txt")


@lru_cache(maxsize=None)
def synonyms() -> Mapping[str, tuple[str, ...]]:
    """Curated synonym lexicon: lowercase word -> candidate replacements."""
    table = json.loads(_data_text("synonyms.json"))
    protected = protected_tokens()
    out: dict[str, tuple[str, ...]] = {}
    for word, alts in table.items():
        if not _TOKEN_RE.match(word):
            raise ValueError(f"synonyms.json: bad key {word!r}")
        if word in protected:
            raise ValueError(f"synonyms.json: {word!r} is protected")
        cleaned = tuple(alts)
        if not cleaned:
            raise ValueError(f"synonyms.json: {word!r} has no alternatives")
        for alt in cleaned:
            if not _TOKEN_RE.match(alt) or alt == word:
                raise ValueError(f"synonyms.json: bad alternative {alt!r} for {word!r}")
            if alt in protected:
                raise ValueError(f"synonyms.json: {alt!r} is protected")
        out[word] = cleaned
    return MappingProxyType(out)
