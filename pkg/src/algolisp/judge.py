"""Functional-equivalence judging and prediction scoring.

A predicted program is a solution exactly when it passes every example of
its instance; a single failing example (wrong value or runtime error) makes
the whole prediction a failure.  Scoring aggregates those verdicts into
accuracy and error-rate figures for a corpus of predictions.
"""

from __future__ import annotations

from concurrent.futures import ThreadPoolExecutor
from dataclasses import dataclass, field
from typing import Mapping, Sequence

from . import dsl
from .interp import IoPair, Limits, OpRegistry, TestResult, run_tests


class EmptyTestSuite(ValueError):
    """A verdict was requested for an instance with no examples."""


def is_solution(
    ast: dsl.ProgramAst,
    tests: Sequence[IoPair],
    limits: Limits | None = None,
    registry: OpRegistry | None = None,
) -> bool:
    """True iff the program passes every example; vacuous suites are refused."""
    if not tests:
        raise EmptyTestSuite("cannot judge against zero examples")
    return all(r.passed for r in run_tests(ast, tests, limits=limits, registry=registry))


def is_adversarial_failure(
    ast: dsl.ProgramAst,
    tests: Sequence[IoPair],
    limits: Limits | None = None,
    registry: OpRegistry | None = None,
) -> bool:
    """True iff at least one example fails; the exact negation of is_solution."""
    return not is_solution(ast, tests, limits=limits, registry=registry)


@dataclass(frozen=True)
class InstanceVerdict:
    """Scored outcome for one instance's prediction."""

    instance_id: str
    passed: bool
    reason: str | None = None
    results: tuple[TestResult, ...] = ()


@dataclass(frozen=True)
class EvalReport:
    """Aggregate accuracy over a prediction map.

    ``accuracy`` is the fraction of instances whose prediction passed all
    examples; ``error_pct`` is its complement in percent.  Both ``n_passed``
    and ``failures`` identify instances, so the report is reproducible and
    independent of instance order.
    """

    n_passed: int
    n_total: int
    accuracy: float
    error_pct: float
    verdicts: tuple[InstanceVerdict, ...] = field(repr=False)
    failures: tuple[str, ...] = ()

    def to_json_dict(self) -> dict:
        return {
            "n_passed": self.n_passed,
            "n_total": self.n_total,
            "accuracy": self.accuracy,
            "error_pct": self.error_pct,
            "failures": list(self.failures),
        }


def score_predictions(
    instances: Sequence,
    predictions: Mapping[str, str | Sequence[str]],
    limits: Limits | None = None,
    registry: OpRegistry | None = None,
    jobs: int = 1,
) -> EvalReport:
    """Judge a prediction per instance and aggregate accuracy.

    ``instances`` supply ids and example suites (any object with ``id`` and
    ``tests`` attributes works, in particular corpus instances).  Predictions
    map instance id to a program given as a token sequence or a
    whitespace-joined string.  Missing and unparseable predictions count as
    failures with an explanatory reason.  ``jobs`` > 1 judges instances on a
    thread pool; the report is identical either way.
    """
    if not instances:
        raise ValueError("no instances to score")

    def judge_one(inst) -> InstanceVerdict:
        raw = predictions.get(inst.id)
        if raw is None:
            return InstanceVerdict(inst.id, False, reason="missing prediction")
        tokens = raw.split() if isinstance(raw, str) else list(raw)
        try:
            ast = dsl.parse_program(tokens, registry=registry)
        except dsl.DslError as exc:
            return InstanceVerdict(
                inst.id, False, reason=f"parse error: {type(exc).__name__}: {exc}"
            )
        if not inst.tests:
            return InstanceVerdict(inst.id, False, reason="instance has no examples")
        results = run_tests(ast, inst.tests, limits=limits, registry=registry)
        passed = all(r.passed for r in results)
        return InstanceVerdict(inst.id, passed, results=tuple(results))

    if jobs > 1:
        with ThreadPoolExecutor(max_workers=jobs) as pool:
            verdicts = list(pool.map(judge_one, instances))
    else:
        verdicts = [judge_one(inst) for inst in instances]

    n_total = len(verdicts)
    n_passed = sum(1 for v in verdicts if v.passed)
    accuracy = n_passed / n_total
    error_pct = (100.0 * (n_total - n_passed)) / n_total
    failures = tuple(sorted(v.instance_id for v in verdicts if not v.passed))
    return EvalReport(
        n_passed=n_passed,
        n_total=n_total,
        accuracy=accuracy,
        error_pct=error_pct,
        verdicts=tuple(verdicts),
        failures=failures,
    )
