"""Adversarial perturbations of problem descriptions.

Five generator families, two categories:

* program-invariance (``RR``, ``SR``, ``VoC``): the description changes
  but the original program is still a solution, so program and tests are
  carried over byte-identical;
* program-directional (``VC``, ``VI``): the perturbation renames or swaps
  variables, so the ground-truth program and test keys are transformed to
  match and the result is machine-validated by running it.

Every generator is deterministic given (instance, rng state) and attaches
a distance report measuring the size of the perturbation.
"""

from __future__ import annotations

import hashlib
import itertools
import random
import re
import string
from collections.abc import Callable, Mapping, Sequence
from concurrent.futures import ThreadPoolExecutor
from dataclasses import dataclass
from enum import Enum
from pathlib import Path
from typing import Iterable

from . import dsl
from .corpus import ProblemInstance, instance_to_json_dict
from .interp import IoPair, default_registry, run_tests
from .metrics import DistanceReport, measure
from .wordlists import protected_tokens, stopwords, synonyms

__all__ = [
    "AttackClass",
    "Category",
    "AdversarialInstance",
    "AttackError",
    "NotEligible",
    "NoFreshName",
    "NoRemovableToken",
    "NoSynonymAvailable",
    "NoRuleMatch",
    "TooFewVariables",
    "ValidationFailed",
    "InsufficientEligibleInstances",
    "variable_positions",
    "variable_names",
    "gen_vc",
    "gen_rr",
    "gen_sr",
    "gen_voc",
    "gen_vi",
    "DEFAULT_VOC_RULES",
    "build_suite",
    "write_suite",
]


class Category(Enum):
    INVARIANCE = "invariance"
    DIRECTIONAL = "directional"


class AttackClass(Enum):
    """The five perturbation families."""

    VC = "vc"   # variable change: rename one argument to a fresh name
    RR = "rr"   # redundancy removal: drop stopwords
    SR = "sr"   # synonym replacement: swap one word for a synonym
    VOC = "voc" # voice conversion: reorder clauses
    VI = "vi"   # variable interchange: swap two variable names

    @property
    def category(self) -> Category:
        if self in (AttackClass.VC, AttackClass.VI):
            return Category.DIRECTIONAL
        return Category.INVARIANCE

    @property
    def is_directional(self) -> bool:
        return self.category is Category.DIRECTIONAL


CLASS_ORDER = (AttackClass.VC, AttackClass.RR, AttackClass.SR, AttackClass.VOC, AttackClass.VI)


class AttackError(Exception):
    """Base class for generation failures."""


class NotEligible(AttackError):
    """The instance does not satisfy a generator's preconditions."""


class NoFreshName(NotEligible):
    pass


class NoRemovableToken(NotEligible):
    pass


class NoSynonymAvailable(NotEligible):
    pass


class NoRuleMatch(NotEligible):
    pass


class TooFewVariables(NotEligible):
    pass


class ValidationFailed(AttackError):
    """A generated ground truth did not pass its own tests."""


class InsufficientEligibleInstances(AttackError):
    """Suite building ran out of eligible instances; reports the shortfall."""

    def __init__(self, shortfall: Mapping[str, int]):
        self.shortfall = dict(shortfall)
        missing = ", ".join(f"{k}: {v}" for k, v in sorted(self.shortfall.items()))
        super().__init__(f"per-class shortfall ({missing})")


@dataclass(frozen=True)
class AdversarialInstance:
    """A perturbed instance together with its provenance and distance."""

    attack_class: AttackClass
    original_id: str
    original_description: tuple[str, ...]
    instance: ProblemInstance
    distance: DistanceReport

    @property
    def description(self) -> tuple[str, ...]:
        return self.instance.description

    def to_json_dict(self) -> dict:
        return {
            "attack_class": self.attack_class.value,
            "category": self.attack_class.category.value,
            "original_id": self.original_id,
            "original_description": " ".join(self.original_description),
            "instance": instance_to_json_dict(self.instance),
            "distance": self.distance.to_json_dict(),
        }


# Words that, when following "a"/"an", mark the token as an article rather
# than a variable mention.  Only those two tokens are ambiguous: any other
# variable name can never be an article.
_NOUN_FOLLOWERS = frozenset({
    "array", "arrays", "digit", "digits", "element", "factorial", "letter",
    "list", "lists", "number", "numbers", "palindrome", "position", "prime",
    "sentence", "square", "string", "strings", "value", "values", "word",
})

_NAME_RE = re.compile(r"[a-z][a-z0-9_]{0,9}\Z")


def variable_positions(tokens: Sequence[str], name: str) -> tuple[int, ...]:
    """Positions where ``name`` is used as a variable, not as an article.

    "Given a string a" mentions the variable once: the first "a" precedes
    a noun and is the article.
    """
    out = []
    ambiguous = name in ("a", "an")
    for i, tok in enumerate(tokens):
        if tok != name:
            continue
        if ambiguous and i + 1 < len(tokens) and tokens[i + 1].lower() in _NOUN_FOLLOWERS:
            continue
        out.append(i)
    return tuple(out)


def variable_names(instance: ProblemInstance) -> tuple[str, ...]:
    """Argument names plus description-declared names ("define e as ...")."""
    names = list(instance.arg_names)
    seen = set(names)
    tokens = instance.description
    for i, tok in enumerate(tokens[:-1]):
        if tok.lower() == "define" and _NAME_RE.match(tokens[i + 1]):
            declared = tokens[i + 1]
            if declared not in seen:
                names.append(declared)
                seen.add(declared)
    return tuple(names)


def _variable_position_set(instance: ProblemInstance) -> frozenset[int]:
    taken: set[int] = set()
    for name in variable_names(instance):
        taken.update(variable_positions(instance.description, name))
    return frozenset(taken)


def _rekey_tests(tests: Sequence[IoPair], mapping: Mapping[str, str]) -> tuple[IoPair, ...]:
    return tuple(
        IoPair({mapping.get(k, k): v for k, v in pair.input.items()}, pair.output)
        for pair in tests
    )


def _validated(instance: ProblemInstance) -> ProblemInstance:
    if instance.program is None:
        raise ValidationFailed(f"{instance.id}: program did not parse")
    results = run_tests(instance.program, instance.tests)
    bad = [i for i, r in enumerate(results) if not r.passed]
    if bad:
        raise ValidationFailed(f"{instance.id}: ground truth fails tests {bad}")
    return instance


def _derived(
    source: ProblemInstance,
    cls: AttackClass,
    description: tuple[str, ...],
    args: tuple[tuple[str, str], ...],
    program: dsl.ProgramAst | None,
    tests: tuple[IoPair, ...],
) -> ProblemInstance:
    tokens = tuple(dsl.serialize(program)) if program is not None else source.program_tokens
    return ProblemInstance(
        id=f"{source.id}:{cls.value}",
        description=description,
        args=args,
        return_type=source.return_type,
        program=program,
        program_tokens=tokens,
        tests=tests,
        parse_issue=source.parse_issue,
    )


def _result(
    cls: AttackClass,
    source: ProblemInstance,
    perturbed: ProblemInstance,
) -> AdversarialInstance:
    return AdversarialInstance(
        attack_class=cls,
        original_id=source.id,
        original_description=source.description,
        instance=perturbed,
        distance=measure(source.description, perturbed.description),
    )


# -- directional generators ----------------------------------------------------


def _fresh_names() -> Iterable[str]:
    yield from string.ascii_lowercase
    for pair in itertools.product(string.ascii_lowercase, repeat=2):
        yield "".join(pair)


def gen_vc(instance: ProblemInstance, rng: random.Random) -> AdversarialInstance:
    """Rename one argument to a fresh name, consistently everywhere."""
    if not instance.args:
        raise TooFewVariables(f"{instance.id}: no arguments to rename")
    if instance.program is None:
        raise NotEligible(f"{instance.id}: program did not parse")
    prog_ids = dsl.identifiers(instance.program)
    eligible = [
        name for name in instance.arg_names
        if name in prog_ids and variable_positions(instance.description, name)
    ]
    if not eligible:
        raise NotEligible(f"{instance.id}: no argument appears in both description and program")
    old = eligible[rng.randrange(len(eligible))]

    used = set(instance.description)
    used.update(instance.arg_names)
    used.update(prog_ids)
    used.update(default_registry().names())
    used.update(("self", "arg1", "arg2"))
    fresh = next((c for c in _fresh_names() if c not in used), None)
    if fresh is None:
        raise NoFreshName(f"{instance.id}: candidate pool exhausted")

    spots = set(variable_positions(instance.description, old))
    description = tuple(
        fresh if i in spots else tok for i, tok in enumerate(instance.description)
    )
    args = tuple((fresh if n == old else n, t) for n, t in instance.args)
    program = dsl.rename_identifiers(instance.program, {old: fresh})
    tests = _rekey_tests(instance.tests, {old: fresh})
    perturbed = _validated(_derived(instance, AttackClass.VC, description, args, program, tests))
    return _result(AttackClass.VC, instance, perturbed)


def gen_vi(instance: ProblemInstance, rng: random.Random) -> AdversarialInstance:
    """Swap two variable names everywhere; program and test keys follow."""
    if instance.program is None:
        raise NotEligible(f"{instance.id}: program did not parse")
    mentioned = [
        name for name in variable_names(instance)
        if variable_positions(instance.description, name)
    ]
    if len(mentioned) < 2:
        raise TooFewVariables(f"{instance.id}: needs two variables in the description")
    prog_ids = dsl.identifiers(instance.program)
    pairs = [
        (x, y)
        for x, y in itertools.combinations(mentioned, 2)
        if x in prog_ids or y in prog_ids  # a swap touching no identifier is vacuous
    ]
    if not pairs:
        raise TooFewVariables(f"{instance.id}: every variable pair is vacuous")
    x, y = pairs[rng.randrange(len(pairs))]

    swap = {x: y, y: x}
    x_spots = set(variable_positions(instance.description, x))
    y_spots = set(variable_positions(instance.description, y))
    description = tuple(
        y if i in x_spots else x if i in y_spots else tok
        for i, tok in enumerate(instance.description)
    )
    args = tuple((swap.get(n, n), t) for n, t in instance.args)
    program = dsl.rename_identifiers(instance.program, swap)
    tests = _rekey_tests(instance.tests, swap)
    perturbed = _validated(_derived(instance, AttackClass.VI, description, args, program, tests))
    return _result(AttackClass.VI, instance, perturbed)


# -- invariance generators -----------------------------------------------------


def _carried_over(source: ProblemInstance, cls: AttackClass, description: tuple[str, ...]) -> ProblemInstance:
    """The perturbed instance for invariance classes: only the text moves."""
    return ProblemInstance(
        id=f"{source.id}:{cls.value}",
        description=description,
        args=source.args,
        return_type=source.return_type,
        program=source.program,
        program_tokens=source.program_tokens,
        tests=source.tests,
        parse_issue=source.parse_issue,
    )


def gen_rr(
    instance: ProblemInstance,
    rng: random.Random,
    stopword_list: Iterable[str] | None = None,
) -> AdversarialInstance:
    """Remove between 1 and floor(0.1 * L) stopwords; program untouched."""
    stops = frozenset(stopword_list) if stopword_list is not None else stopwords()
    protected = protected_tokens()
    var_spots = _variable_position_set(instance)
    tokens = instance.description
    candidates = [
        i for i, tok in enumerate(tokens)
        if tok.lower() in stops and tok.lower() not in protected and i not in var_spots
    ]
    if not candidates:
        raise NoRemovableToken(f"{instance.id}: no removable stopword")
    cap = max(1, len(tokens) // 10)
    k = min(rng.randint(1, cap), len(candidates))
    chosen = set(rng.sample(candidates, k))
    description = tuple(tok for i, tok in enumerate(tokens) if i not in chosen)
    return _result(AttackClass.RR, instance, _carried_over(instance, AttackClass.RR, description))


def gen_sr(
    instance: ProblemInstance,
    rng: random.Random,
    synonym_lexicon: Mapping[str, Sequence[str]] | None = None,
) -> AdversarialInstance:
    """Replace exactly one word with a synonym; token distance is 1."""
    lexicon = synonyms() if synonym_lexicon is None else synonym_lexicon
    protected = protected_tokens()
    var_spots = _variable_position_set(instance)
    tokens = instance.description
    candidates = [
        i for i, tok in enumerate(tokens)
        if tok.lower() in lexicon and tok.lower() not in protected and i not in var_spots
    ]
    if not candidates:
        raise NoSynonymAvailable(f"{instance.id}: no description token in the lexicon")
    spot = candidates[rng.randrange(len(candidates))]
    options = tuple(lexicon[tokens[spot].lower()])
    replacement = options[rng.randrange(len(options))]
    if tokens[spot][:1].isupper():
        replacement = replacement.capitalize()
    description = tuple(replacement if i == spot else tok for i, tok in enumerate(tokens))
    return _result(AttackClass.SR, instance, _carried_over(instance, AttackClass.SR, description))


# Clause starters mark where the "given ..." preamble ends and the request
# begins; the first comma followed by one of these splits the sentence.
_CLAUSE_STARTERS = frozenset({
    "calculate", "compute", "consider", "create", "define", "determine",
    "find", "output", "print", "produce", "return", "what", "which",
    "write", "you", "your",
})

_TRAILING_PUNCT = (".", "?", "!")

VocRule = Callable[[Sequence[str]], tuple[str, ...] | None]


def _split_on_clause_comma(tokens: Sequence[str]) -> int | None:
    for i, tok in enumerate(tokens):
        if tok == "," and i + 1 < len(tokens) and tokens[i + 1].lower() in _CLAUSE_STARTERS:
            return i
    return None


def _rule_given_to_back(tokens: Sequence[str]) -> tuple[str, ...] | None:
    """"Given X, <request>" -> "<Request>, given X"."""
    if not tokens or tokens[0].lower() != "given":
        return None
    split = _split_on_clause_comma(tokens)
    if split is None:
        return None
    was_capital = tokens[0][:1].isupper()
    head = list(tokens[:split])
    tail = list(tokens[split + 1:])
    punct = [tail.pop()] if tail and tail[-1] in _TRAILING_PUNCT else []
    if not head or not tail:
        return None
    head[0] = head[0].lower()
    if was_capital:
        tail[0] = tail[0].capitalize()
    return tuple(tail + [","] + head + punct)


def _rule_given_to_front(tokens: Sequence[str]) -> tuple[str, ...] | None:
    """"<Request>, given X" -> "Given X, <request>": inverse of the above."""
    if not tokens or tokens[0].lower() == "given":
        return None
    split = None
    for i in range(len(tokens) - 1, 0, -1):
        if tokens[i] == "," and i + 1 < len(tokens) and tokens[i + 1].lower() == "given":
            split = i
            break
    if split is None:
        return None
    was_capital = tokens[0][:1].isupper()
    head = list(tokens[:split])
    tail = list(tokens[split + 1:])
    punct = [tail.pop()] if tail and tail[-1] in _TRAILING_PUNCT else []
    if not head or not tail:
        return None
    head[0] = head[0].lower()
    if was_capital:
        tail[0] = tail[0].capitalize()
    return tuple(tail + [","] + head + punct)


DEFAULT_VOC_RULES: tuple[VocRule, ...] = (_rule_given_to_back, _rule_given_to_front)


def gen_voc(
    instance: ProblemInstance,
    ruleset: Sequence[VocRule] | None = None,
) -> AdversarialInstance:
    """Reorder clauses by the first matching rule; program untouched."""
    rules = DEFAULT_VOC_RULES if ruleset is None else tuple(ruleset)
    for rule in rules:
        reordered = rule(instance.description)
        if reordered is not None:
            perturbed = _carried_over(instance, AttackClass.VOC, reordered)
            return _result(AttackClass.VOC, instance, perturbed)
    raise NoRuleMatch(f"{instance.id}: no clause-reordering rule applies")


# -- suite building --------------------------------------------------------------


def _stream(seed: int, cls: AttackClass, instance_id: str, round_: int) -> random.Random:
    key = f"{seed}:{cls.value}:{instance_id}:{round_}".encode()
    return random.Random(int.from_bytes(hashlib.sha256(key).digest()[:8], "big"))


def _generate(
    cls: AttackClass,
    instance: ProblemInstance,
    rng: random.Random,
    stopword_list: Iterable[str] | None,
    synonym_lexicon: Mapping[str, Sequence[str]] | None,
    ruleset: Sequence[VocRule] | None,
) -> AdversarialInstance:
    if cls is AttackClass.VC:
        return gen_vc(instance, rng)
    if cls is AttackClass.RR:
        return gen_rr(instance, rng, stopword_list)
    if cls is AttackClass.SR:
        return gen_sr(instance, rng, synonym_lexicon)
    if cls is AttackClass.VOC:
        return gen_voc(instance, ruleset)
    return gen_vi(instance, rng)


def _check_suite_entry(adv: AdversarialInstance, source: ProblemInstance) -> None:
    """Machine validation: invariance keeps bytes, directional passes tests."""
    if adv.attack_class.is_directional:
        _validated(adv.instance)
        if adv.instance.program_tokens == source.program_tokens:
            raise ValidationFailed(f"{adv.instance.id}: perturbation left the program unchanged")
    else:
        if adv.instance.program_tokens != source.program_tokens or adv.instance.tests != source.tests:
            raise ValidationFailed(f"{adv.instance.id}: invariance class altered program or tests")


def _build_class(
    cls: AttackClass,
    corpus: Sequence[ProblemInstance],
    per_class: int,
    seed: int,
    rounds: int,
    stopword_list: Iterable[str] | None,
    synonym_lexicon: Mapping[str, Sequence[str]] | None,
    ruleset: Sequence[VocRule] | None,
) -> list[AdversarialInstance]:
    picked: list[AdversarialInstance] = []
    for instance in corpus:
        if len(picked) == per_class:
            break
        for round_ in range(rounds):
            rng = _stream(seed, cls, instance.id, round_)
            try:
                adv = _generate(cls, instance, rng, stopword_list, synonym_lexicon, ruleset)
                _check_suite_entry(adv, instance)
            except NotEligible:
                break  # retrying cannot make the instance eligible
            except ValidationFailed:
                continue
            picked.append(adv)
            break
    return picked


def build_suite(
    corpus: Sequence[ProblemInstance],
    per_class: int = 200,
    rng: int | random.Random = 0,
    classes: Sequence[AttackClass] | None = None,
    stopword_list: Iterable[str] | None = None,
    synonym_lexicon: Mapping[str, Sequence[str]] | None = None,
    ruleset: Sequence[VocRule] | None = None,
    jobs: int | None = None,
    rounds: int = 5,
) -> list[AdversarialInstance]:
    """Build ``per_class`` validated instances for each requested class.

    Instance-level randomness comes from streams derived by hashing
    (seed, class, instance id, round), so results do not depend on the
    order or concurrency of generation.  Classes run in parallel when
    ``jobs`` exceeds 1.  Raises InsufficientEligibleInstances with the
    per-class shortfall when the corpus cannot fill a class.
    """
    if per_class < 0:
        raise ValueError("per_class must be >= 0")
    seed = rng.getrandbits(64) if isinstance(rng, random.Random) else int(rng)
    wanted = tuple(classes) if classes is not None else CLASS_ORDER

    def one_class(cls: AttackClass) -> list[AdversarialInstance]:
        return _build_class(
            cls, corpus, per_class, seed, rounds,
            stopword_list, synonym_lexicon, ruleset,
        )

    if jobs is not None and jobs > 1:
        with ThreadPoolExecutor(max_workers=min(jobs, len(wanted) or 1)) as pool:
            per_cls = list(pool.map(one_class, wanted))
    else:
        per_cls = [one_class(cls) for cls in wanted]

    shortfall = {
        cls.value: per_class - len(got)
        for cls, got in zip(wanted, per_cls)
        if len(got) < per_class
    }
    if shortfall:
        raise InsufficientEligibleInstances(shortfall)
    return [adv for got in per_cls for adv in got]


def write_suite(suite: Iterable[AdversarialInstance], path: str | Path) -> None:
    import json

    with open(path, "w", encoding="utf-8") as fh:
        for adv in suite:
            fh.write(json.dumps(adv.to_json_dict(), ensure_ascii=False))
            fh.write("\n")
