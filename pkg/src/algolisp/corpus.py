"""Corpus ingestion, validation, statistics, and canonical serialization.

The canonical on-disk form is JSONL, one instance per line:

    {"id": ..., "text": "space separated tokens", "args": [["a", "int[]"]],
     "return_type": "int[]", "program": "( len a )",
     "tests": [{"input": {"a": [1]}, "output": 1}]}

An adapter accepts the official dataset layout (args as an object, programs
as nested lists under ``short_tree``/``code_tree``) and normalizes it to the
same in-memory type, so everything downstream is format-agnostic.
"""

from __future__ import annotations

import json
from concurrent.futures import ThreadPoolExecutor
from dataclasses import dataclass, field
from pathlib import Path
from typing import Iterable, Mapping, Sequence

from . import dsl
from .interp import IoPair, Limits, OpRegistry, run_tests


class CorpusError(Exception):
    """Base class for corpus ingestion errors."""


class ParseError(CorpusError):
    """A line or field of a corpus file could not be interpreted."""


class EmptyCorpus(CorpusError):
    """Statistics were requested for zero instances."""


@dataclass(frozen=True)
class ProblemInstance:
    """One synthesis problem: description tokens, typed arguments, program,
    and I/O examples.

    ``program`` is None when the program text uses operators missing from
    the registry; such instances stay loadable (``program_tokens`` keeps the
    raw text and ``parse_issue`` the reason) but can never validate.
    """

    id: str
    description: tuple[str, ...]
    args: tuple[tuple[str, str], ...]
    return_type: str
    program: dsl.ProgramAst | None
    program_tokens: tuple[str, ...]
    tests: tuple[IoPair, ...]
    parse_issue: str | None = None

    @property
    def text(self) -> str:
        return " ".join(self.description)

    @property
    def arg_names(self) -> tuple[str, ...]:
        return tuple(name for name, _ in self.args)

    @property
    def is_lazy(self) -> bool:
        return self.program is None


@dataclass(frozen=True)
class DatasetStats:
    """Corpus-level aggregates: sizes are averages over all instances,
    vocabulary counts distinct description tokens."""

    instances: int
    avg_text_len: float
    avg_code_depth: float
    avg_code_len: float
    vocab_size: int

    def to_json_dict(self) -> dict:
        return {
            "instances": self.instances,
            "avg_text_len": self.avg_text_len,
            "avg_code_depth": self.avg_code_depth,
            "avg_code_len": self.avg_code_len,
            "vocab_size": self.vocab_size,
        }

    def to_table(self, label: str = "Corpus") -> str:
        rows = [
            ("No. of instances", f"{self.instances}"),
            ("Avg. text length", f"{self.avg_text_len:.2f}"),
            ("Avg. code depth", f"{self.avg_code_depth:.2f}"),
            ("Avg. code length", f"{self.avg_code_len:.2f}"),
            ("Vocabulary size", f"{self.vocab_size}"),
        ]
        width = max(len(r[0]) for r in rows)
        lines = [f"{'':{width}}  {label}"]
        lines += [f"{name:{width}}  {value}" for name, value in rows]
        return "\n".join(lines)


@dataclass(frozen=True)
class Rejection:
    """A filtered-out instance and why each check failed."""

    instance: ProblemInstance
    reasons: tuple[str, ...]


def make_instance(
    id: str,
    text: str | Sequence[str],
    args: Sequence[Sequence[str]],
    return_type: str,
    program: str | Sequence[str],
    tests: Iterable[IoPair | Mapping],
    registry: OpRegistry | None = None,
) -> ProblemInstance:
    """Build a normalized instance from plain data, parsing the program.

    Unknown operators do not raise; they leave the instance lazily parsed
    with the reason recorded, matching file loading behaviour.
    """
    description = tuple(text.split() if isinstance(text, str) else text)
    tokens = tuple(program.split() if isinstance(program, str) else program)
    pairs = tuple(
        t if isinstance(t, IoPair) else IoPair(dict(t["input"]), t["output"])
        for t in tests
    )
    ast: dsl.ProgramAst | None
    issue: str | None
    try:
        ast = dsl.parse_program(tokens, registry=registry)
        issue = None
    except dsl.UnknownToken as exc:
        ast = None
        issue = f"UnknownOp: {exc}"
    return ProblemInstance(
        id=id,
        description=description,
        args=tuple((str(n), str(t)) for n, t in args),
        return_type=return_type,
        program=ast,
        program_tokens=tokens,
        tests=pairs,
        parse_issue=issue,
    )


def _instance_from_canonical(obj: Mapping, idx: int, registry) -> ProblemInstance:
    try:
        return make_instance(
            id=str(obj.get("id", f"inst{idx:06d}")),
            text=obj["text"],
            args=obj["args"],
            return_type=obj["return_type"],
            program=obj["program"],
            tests=obj["tests"],
            registry=registry,
        )
    except (KeyError, TypeError, dsl.DslError) as exc:
        raise ParseError(f"instance {idx}: bad field: {exc}") from exc


def _nested_to_tokens(node) -> list[str]:
    """Flatten the official nested-list program form into tokens."""
    if isinstance(node, list):
        if not node:
            raise ParseError("empty application in nested program")
        out = ["(", str(node[0])]
        for child in node[1:]:
            out.extend(_nested_to_tokens(child))
        out.append(")")
        return out
    return [str(node)]


def _instance_from_official(obj: Mapping, idx: int, registry) -> ProblemInstance:
    try:
        program = obj.get("short_tree", obj.get("code_tree", obj.get("program")))
        if program is None:
            raise ParseError(f"instance {idx}: no program field")
        tokens = (
            program.split() if isinstance(program, str) else _nested_to_tokens(program)
        )
        raw_args = obj["args"]
        args = list(raw_args.items()) if isinstance(raw_args, Mapping) else raw_args
        return make_instance(
            id=str(obj.get("id", obj.get("name", f"inst{idx:06d}"))),
            text=obj["text"],
            args=args,
            return_type=obj["return_type"],
            program=tokens,
            tests=obj["tests"],
            registry=registry,
        )
    except (KeyError, TypeError, dsl.DslError) as exc:
        raise ParseError(f"instance {idx}: bad field: {exc}") from exc


_FORMATS = ("canonical-jsonl", "official-json")


def load(
    path: str | Path,
    format: str = "canonical-jsonl",
    registry: OpRegistry | None = None,
) -> list[ProblemInstance]:
    """Read a corpus file into normalized instances.

    ``canonical-jsonl`` is one JSON object per line; ``official-json``
    additionally accepts a single top-level JSON array.  Raises
    :class:`ParseError` naming the offending line.  Instances whose
    programs use unregistered operators are retained lazily parsed.
    """
    if format not in _FORMATS:
        raise ValueError(f"format must be one of {_FORMATS}, got {format!r}")
    raw = Path(path).read_text(encoding="utf-8")
    build = (
        _instance_from_canonical if format == "canonical-jsonl" else _instance_from_official
    )

    stripped = raw.lstrip()
    if format == "official-json" and stripped.startswith("["):
        try:
            objs = json.loads(raw)
        except json.JSONDecodeError as exc:
            raise ParseError(f"bad JSON array: {exc}") from exc
        return [build(obj, i, registry) for i, obj in enumerate(objs)]

    instances: list[ProblemInstance] = []
    for lineno, line in enumerate(raw.splitlines(), start=1):
        if not line.strip():
            continue
        try:
            obj = json.loads(line)
        except json.JSONDecodeError as exc:
            raise ParseError(f"line {lineno}: bad JSON: {exc}") from exc
        instances.append(build(obj, lineno - 1, registry))
    return instances


def instance_to_json_dict(inst: ProblemInstance) -> dict:
    return {
        "id": inst.id,
        "text": inst.text,
        "args": [[n, t] for n, t in inst.args],
        "return_type": inst.return_type,
        "program": " ".join(inst.program_tokens),
        "tests": [{"input": dict(t.input), "output": t.output} for t in inst.tests],
    }


def write(instances: Iterable[ProblemInstance], path: str | Path) -> None:
    """Emit canonical JSONL; ``load`` of the result reproduces the input."""
    with open(path, "w", encoding="utf-8") as fh:
        for inst in instances:
            fh.write(json.dumps(instance_to_json_dict(inst), ensure_ascii=False))
            fh.write("\n")


def filter_valid(
    instances: Sequence[ProblemInstance],
    limits: Limits | None = None,
    registry: OpRegistry | None = None,
    jobs: int = 1,
) -> tuple[list[ProblemInstance], list[Rejection]]:
    """Keep instances whose ground-truth program passes every example.

    Rejections carry one reason per failed check: unparseable programs,
    missing examples, wrong outputs (with positions), or runtime errors.
    Filtering kept instances again changes nothing.
    """

    def check(inst: ProblemInstance) -> Rejection | None:
        if inst.program is None:
            return Rejection(inst, (inst.parse_issue or "UnknownOp",))
        if not inst.tests:
            return Rejection(inst, ("no test cases",))
        reasons = []
        for i, result in enumerate(run_tests(inst.program, inst.tests, limits, registry)):
            if result.passed:
                continue
            if result.error is not None:
                reasons.append(f"test {i}: {result.error}")
            else:
                reasons.append(f"test {i}: wrong output")
        return Rejection(inst, tuple(reasons)) if reasons else None

    if jobs > 1:
        with ThreadPoolExecutor(max_workers=jobs) as pool:
            outcomes = list(pool.map(check, instances))
    else:
        outcomes = [check(inst) for inst in instances]

    kept = [inst for inst, bad in zip(instances, outcomes) if bad is None]
    rejected = [bad for bad in outcomes if bad is not None]
    return kept, rejected


def structural_depth(tokens: Sequence[str]) -> int:
    """Tree depth read off the token stream: 1 + maximum paren nesting.

    Agrees with ``tree_depth(parse_program(tokens))`` on parseable programs
    and still works for instances kept lazily parsed.
    """
    depth = 0
    best = 0
    for tok in tokens:
        if tok == "(":
            depth += 1
            if depth > best:
                best = depth
        elif tok == ")":
            depth -= 1
    return best + 1


def stats(instances: Sequence[ProblemInstance], count_parens: bool = False) -> DatasetStats:
    """Aggregate corpus statistics; code length excludes parens unless asked."""
    if not instances:
        raise EmptyCorpus("no instances to summarize")
    n = len(instances)
    text_total = 0
    depth_total = 0
    code_total = 0
    vocab: set[str] = set()
    for inst in instances:
        text_total += len(inst.description)
        vocab.update(inst.description)
        depth_total += structural_depth(inst.program_tokens)
        if count_parens:
            code_total += len(inst.program_tokens)
        else:
            code_total += sum(1 for t in inst.program_tokens if t not in ("(", ")"))
    return DatasetStats(
        instances=n,
        avg_text_len=text_total / n,
        avg_code_depth=depth_total / n,
        avg_code_len=code_total / n,
        vocab_size=len(vocab),
    )
