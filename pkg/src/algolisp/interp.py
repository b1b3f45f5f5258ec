"""AlgoLisp evaluation: values, environments, the operator registry, and limits.

Evaluation is pure (no mutation of the environment or the tree) and
deterministic.  The evaluator is an explicit-stack machine rather than a
recursive tree walk so that programs may recurse via ``self`` up to the
configured depth limit without consuming Python stack; only higher-order
operators (``map``, ``filter``, ``reduce``, ``invoke*``) re-enter the loop,
and that re-entry depth is capped separately.
"""

from __future__ import annotations

from dataclasses import dataclass
from typing import Any, Callable, Iterable, Mapping, Sequence

from .dsl import APPLY, IDENT, INT, ProgramAst

Value = Any  # int | bool | str | list | FunctionValue


class EvalError(Exception):
    """Base class for runtime evaluation failures."""


class UnboundIdentifier(EvalError):
    """Identifier is neither bound in the environment nor a builtin."""


class DslTypeError(EvalError):
    """Operand has the wrong runtime type for its operator."""


class DivisionByZero(EvalError):
    """Division or modulus by zero."""


class EmptyListError(EvalError):
    """head or seedless reduce applied to an empty list."""


class StepLimitExceeded(EvalError):
    """Evaluation visited more AST nodes than the step budget allows."""


class DepthLimitExceeded(EvalError):
    """Function applications nested deeper than the recursion budget."""


@dataclass(frozen=True)
class Limits:
    """Resource budget for one evaluation: steps are AST-node visits, depth
    is the number of simultaneously active function applications."""

    max_steps: int = 1_000_000
    max_depth: int = 10_000

    def __post_init__(self) -> None:
        if self.max_steps < 1 or self.max_depth < 1:
            raise ValueError("limits must be positive")


@dataclass(frozen=True)
class IoPair:
    """One input/output example: named argument bindings and the expected value."""

    input: Mapping[str, Value]
    output: Value


@dataclass(frozen=True)
class TestResult:
    """Outcome of running a program on one example."""

    passed: bool
    error: str | None = None
    got: Value | None = None


class Env:
    """Chained lexical environment; lookups search innermost-first."""

    __slots__ = ("_bindings", "_parent")

    def __init__(self, bindings: Mapping[str, Value] | None = None, parent: "Env | None" = None):
        self._bindings = dict(bindings) if bindings else {}
        self._parent = parent

    def lookup(self, name: str) -> Value:
        env: Env | None = self
        while env is not None:
            if name in env._bindings:
                return env._bindings[name]
            env = env._parent
        raise UnboundIdentifier(f"unbound identifier {name!r}")

    def child(self, bindings: Mapping[str, Value]) -> "Env":
        return Env(bindings, parent=self)


class FunctionValue:
    """Base class for applicable runtime values."""

    arity: int | None = None


class Closure(FunctionValue):
    """A lambda value: parameter names, body, and the captured environment."""

    __slots__ = ("params", "body", "env")

    def __init__(self, params: tuple[str, ...], body: ProgramAst, env: Env):
        self.params = params
        self.body = body
        self.env = env

    @property
    def arity(self) -> int:  # type: ignore[override]
        return len(self.params)


class Builtin(FunctionValue):
    """A registry operator reified as a value (e.g. a bare ``>`` leaf)."""

    __slots__ = ("spec",)

    def __init__(self, spec: "OpSpec"):
        self.spec = spec

    @property
    def arity(self) -> int | None:  # type: ignore[override]
        return self.spec.arity


class Partial(FunctionValue):
    """A function with one argument position pre-bound."""

    __slots__ = ("fn", "pos", "bound")

    def __init__(self, fn: FunctionValue, pos: int, bound: Value):
        self.fn = fn
        self.pos = pos
        self.bound = bound

    @property
    def arity(self) -> int | None:  # type: ignore[override]
        inner = self.fn.arity
        return None if inner is None else inner - 1


@dataclass(frozen=True)
class OpSpec:
    """Registry entry: operator name, arity (None = variadic), and semantics.

    ``special`` marks operators the machine itself interprets (lazy ``if``,
    the ``lambda*`` constructors, ``self``); they never become values.
    """

    name: str
    arity: int | None
    func: Callable[[list, "EvalContext"], Value] | None = None
    special: bool = False


class OpRegistry:
    """Mutable name → :class:`OpSpec` table; extend copies, never the default."""

    def __init__(self, specs: Iterable[OpSpec] = ()):
        self._specs: dict[str, OpSpec] = {}
        for spec in specs:
            self.register(spec)

    def register(self, spec: OpSpec) -> None:
        self._specs[spec.name] = spec

    def extended(self, *specs: OpSpec) -> "OpRegistry":
        clone = OpRegistry(self._specs.values())
        for spec in specs:
            clone.register(spec)
        return clone

    def get(self, name: str) -> OpSpec | None:
        return self._specs.get(name)

    def arity_of(self, name: str) -> int | None:
        spec = self._specs.get(name)
        if spec is None:
            raise KeyError(name)
        return spec.arity

    def names(self) -> frozenset[str]:
        return frozenset(self._specs)

    def __contains__(self, name: object) -> bool:
        return name in self._specs


def deep_equal(a: Value, b: Value) -> bool:
    """Structural equality that keeps booleans and integers distinct."""
    if isinstance(a, bool) or isinstance(b, bool):
        return isinstance(a, bool) and isinstance(b, bool) and a == b
    if isinstance(a, int) and isinstance(b, int):
        return a == b
    if isinstance(a, str) and isinstance(b, str):
        return a == b
    if isinstance(a, list) and isinstance(b, list):
        return len(a) == len(b) and all(deep_equal(x, y) for x, y in zip(a, b))
    return False


# ---------------------------------------------------------------------------
# builtin semantics


def _int(x: Value, op: str) -> int:
    if isinstance(x, bool) or not isinstance(x, int):
        raise DslTypeError(f"{op} expects an integer, got {type(x).__name__}")
    return x


def _list(x: Value, op: str) -> list:
    if not isinstance(x, list):
        raise DslTypeError(f"{op} expects a list, got {type(x).__name__}")
    return x


def _str(x: Value, op: str) -> str:
    if not isinstance(x, str):
        raise DslTypeError(f"{op} expects a string, got {type(x).__name__}")
    return x


def _func(x: Value, op: str) -> FunctionValue:
    if not isinstance(x, FunctionValue):
        raise DslTypeError(f"{op} expects a function, got {type(x).__name__}")
    return x


def _trunc_div(a: int, b: int) -> int:
    if b == 0:
        raise DivisionByZero("division by zero")
    q = abs(a) // abs(b)
    return q if (a >= 0) == (b >= 0) else -q


def _same_type_pair(a: Value, b: Value, op: str) -> tuple:
    ok_int = not isinstance(a, bool) and not isinstance(b, bool) \
        and isinstance(a, int) and isinstance(b, int)
    ok_str = isinstance(a, str) and isinstance(b, str)
    if not (ok_int or ok_str):
        raise DslTypeError(
            f"{op} expects two integers or two strings, "
            f"got {type(a).__name__} and {type(b).__name__}"
        )
    return a, b


def _op_add(args, ctx):
    return _int(args[0], "+") + _int(args[1], "+")


def _op_sub(args, ctx):
    return _int(args[0], "-") - _int(args[1], "-")


def _op_mul(args, ctx):
    return _int(args[0], "*") * _int(args[1], "*")


def _op_div(args, ctx):
    return _trunc_div(_int(args[0], "/"), _int(args[1], "/"))


def _op_mod(args, ctx):
    a, b = _int(args[0], "%"), _int(args[1], "%")
    return a - b * _trunc_div(a, b)


def _op_eq(args, ctx):
    return deep_equal(args[0], args[1])


def _op_ne(args, ctx):
    return not deep_equal(args[0], args[1])


def _op_lt(args, ctx):
    a, b = _same_type_pair(args[0], args[1], "<")
    return a < b


def _op_gt(args, ctx):
    a, b = _same_type_pair(args[0], args[1], ">")
    return a > b


def _op_le(args, ctx):
    a, b = _same_type_pair(args[0], args[1], "<=")
    return a <= b


def _op_ge(args, ctx):
    a, b = _same_type_pair(args[0], args[1], ">=")
    return a >= b


def _op_len(args, ctx):
    return len(_list(args[0], "len"))


def _op_strlen(args, ctx):
    return len(_str(args[0], "strlen"))


def _op_slice(args, ctx):
    lst = _list(args[0], "slice")
    i, j = _int(args[1], "slice"), _int(args[2], "slice")
    n = len(lst)
    i = min(max(i, 0), n)
    j = min(max(j, 0), n)
    return lst[i:j]


def _op_reverse(args, ctx):
    return list(reversed(_list(args[0], "reverse")))


def _op_head(args, ctx):
    lst = _list(args[0], "head")
    if not lst:
        raise EmptyListError("head of an empty list")
    return lst[0]


def _op_sort(args, ctx):
    lst = _list(args[0], "sort")
    if not lst:
        return []
    all_int = all(isinstance(x, int) and not isinstance(x, bool) for x in lst)
    all_str = all(isinstance(x, str) for x in lst)
    if not (all_int or all_str):
        raise DslTypeError("sort expects a list of integers or of strings")
    return sorted(lst)


def _op_min(args, ctx):
    a, b = _same_type_pair(args[0], args[1], "min")
    return a if a <= b else b


def _op_max(args, ctx):
    a, b = _same_type_pair(args[0], args[1], "max")
    return a if a >= b else b


def _op_digits(args, ctx):
    n = abs(_int(args[0], "digits"))
    if n == 0:
        return [0]
    out = []
    while n:
        out.append(n % 10)
        n //= 10
    return out  # least-significant digit first


def _op_filter(args, ctx):
    lst = _list(args[0], "filter")
    fn = _func(args[1], "filter")
    out = []
    for x in lst:
        keep = ctx.apply(fn, [x])
        if not isinstance(keep, bool):
            raise DslTypeError("filter predicate must return a boolean")
        if keep:
            out.append(x)
    return out


def _op_map(args, ctx):
    lst = _list(args[0], "map")
    fn = _func(args[1], "map")
    return [ctx.apply(fn, [x]) for x in lst]


def _op_reduce(args, ctx):
    if len(args) == 2:
        lst = _list(args[0], "reduce")
        fn = _func(args[1], "reduce")
        if not lst:
            raise EmptyListError("seedless reduce of an empty list")
        acc = lst[0]
        rest = lst[1:]
    elif len(args) == 3:
        lst = _list(args[0], "reduce")
        acc = args[1]
        fn = _func(args[2], "reduce")
        rest = lst
    else:
        raise DslTypeError(f"reduce takes 2 or 3 operands, got {len(args)}")
    for x in rest:
        acc = ctx.apply(fn, [acc, x])
    return acc


def _op_invoke1(args, ctx):
    return ctx.apply(_func(args[0], "invoke1"), [args[1]])


def _op_invoke2(args, ctx):
    return ctx.apply(_func(args[0], "invoke2"), [args[1], args[2]])


def _op_partial0(args, ctx):
    return Partial(_func(args[1], "partial0"), 0, args[0])


def _op_partial1(args, ctx):
    return Partial(_func(args[1], "partial1"), 1, args[0])


_DEFAULT_SPECS = (
    OpSpec("+", 2, _op_add),
    OpSpec("-", 2, _op_sub),
    OpSpec("*", 2, _op_mul),
    OpSpec("/", 2, _op_div),
    OpSpec("%", 2, _op_mod),
    OpSpec("==", 2, _op_eq),
    OpSpec("!=", 2, _op_ne),
    OpSpec("<", 2, _op_lt),
    OpSpec(">", 2, _op_gt),
    OpSpec("<=", 2, _op_le),
    OpSpec(">=", 2, _op_ge),
    OpSpec("if", 3, special=True),
    OpSpec("len", 1, _op_len),
    OpSpec("strlen", 1, _op_strlen),
    OpSpec("slice", 3, _op_slice),
    OpSpec("reverse", 1, _op_reverse),
    OpSpec("head", 1, _op_head),
    OpSpec("sort", 1, _op_sort),
    OpSpec("min", 2, _op_min),
    OpSpec("max", 2, _op_max),
    OpSpec("digits", 1, _op_digits),
    OpSpec("filter", 2, _op_filter),
    OpSpec("map", 2, _op_map),
    OpSpec("reduce", None, _op_reduce),
    OpSpec("lambda1", 1, special=True),
    OpSpec("lambda2", 1, special=True),
    OpSpec("self", None, special=True),
    OpSpec("invoke1", 2, _op_invoke1),
    OpSpec("invoke2", 3, _op_invoke2),
    OpSpec("partial0", 2, _op_partial0),
    OpSpec("partial1", 2, _op_partial1),
)

_DEFAULT_REGISTRY = OpRegistry(_DEFAULT_SPECS)


def default_registry() -> OpRegistry:
    """The shared default operator table; use ``.extended(...)`` to add ops."""
    return _DEFAULT_REGISTRY


# ---------------------------------------------------------------------------
# the machine

_EVAL, _APPLY, _BRANCH, _LEAVE = 0, 1, 2, 3

# Cap on machine re-entries (higher-order callbacks); keeps adversarial
# programs from exhausting the Python stack.  Recursion via ``self`` runs
# inside one loop and is bounded only by Limits.max_depth.
_MAX_NEST = 200


class EvalContext:
    """Callback surface handed to builtins so higher-order operators can
    apply function values."""

    __slots__ = ("_machine",)

    def __init__(self, machine: "_Machine"):
        self._machine = machine

    def apply(self, fn: FunctionValue, args: list) -> Value:
        return self._machine.apply_function(fn, args)


class _Machine:
    __slots__ = ("registry", "limits", "steps", "depth", "nest", "ctx")

    def __init__(self, registry: OpRegistry, limits: Limits):
        self.registry = registry
        self.limits = limits
        self.steps = 0
        self.depth = 0
        self.nest = 0
        self.ctx = EvalContext(self)

    def apply_function(self, fn: FunctionValue, args: list) -> Value:
        if isinstance(fn, Partial):
            inner = list(args)
            inner.insert(fn.pos, fn.bound)
            return self.apply_function(fn.fn, inner)
        if isinstance(fn, Builtin):
            spec = fn.spec
            if spec.arity is not None and spec.arity != len(args):
                raise DslTypeError(
                    f"{spec.name} takes {spec.arity} argument(s), got {len(args)}"
                )
            return spec.func(args, self.ctx)  # type: ignore[misc]
        if isinstance(fn, Closure):
            if len(fn.params) != len(args):
                raise DslTypeError(
                    f"function takes {len(fn.params)} argument(s), got {len(args)}"
                )
            self.depth += 1
            if self.depth > self.limits.max_depth:
                raise DepthLimitExceeded(f"recursion deeper than {self.limits.max_depth}")
            try:
                bindings = dict(zip(fn.params, args))
                bindings["self"] = fn
                return self.run(fn.body, fn.env.child(bindings))
            finally:
                self.depth -= 1
        raise DslTypeError(f"cannot apply non-function {type(fn).__name__}")

    def resolve(self, name: str, env: Env) -> Value:
        try:
            return env.lookup(name)
        except UnboundIdentifier:
            spec = self.registry.get(name)
            if spec is not None and not spec.special:
                return Builtin(spec)
            raise

    def run(self, node: ProgramAst, env: Env) -> Value:
        self.nest += 1
        if self.nest > _MAX_NEST:
            raise DepthLimitExceeded(
                f"higher-order evaluation nested deeper than {_MAX_NEST}"
            )
        try:
            return self._loop(node, env)
        finally:
            self.nest -= 1

    def _loop(self, root: ProgramAst, root_env: Env) -> Value:
        limits = self.limits
        registry = self.registry
        work: list[tuple] = [(_EVAL, root, root_env)]
        vals: list = []
        while work:
            item = work.pop()
            tag = item[0]
            if tag == _EVAL:
                node, env = item[1], item[2]
                self.steps += 1
                if self.steps > limits.max_steps:
                    raise StepLimitExceeded(f"more than {limits.max_steps} steps")
                kind = node.kind
                if kind == APPLY:
                    op = node.symbol
                    spec = registry.get(op)
                    if spec is None:
                        raise UnboundIdentifier(f"unknown operator {op!r}")
                    if spec.special:
                        if spec.arity is not None and spec.arity != len(node.children):
                            raise DslTypeError(
                                f"{op} takes {spec.arity} operand(s), "
                                f"got {len(node.children)}"
                            )
                        if op == "if":
                            work.append((_BRANCH, node, env))
                            work.append((_EVAL, node.children[0], env))
                        elif op == "lambda1":
                            vals.append(Closure(("arg1",), node.children[0], env))
                        elif op == "lambda2":
                            vals.append(Closure(("arg1", "arg2"), node.children[0], env))
                        else:  # self: strict application resolved in _APPLY
                            work.append((_APPLY, node, env))
                            for child in reversed(node.children):
                                work.append((_EVAL, child, env))
                    else:
                        if spec.arity is not None and spec.arity != len(node.children):
                            raise DslTypeError(
                                f"{op} takes {spec.arity} operand(s), "
                                f"got {len(node.children)}"
                            )
                        work.append((_APPLY, node, env))
                        for child in reversed(node.children):
                            work.append((_EVAL, child, env))
                elif kind == IDENT:
                    vals.append(self.resolve(node.symbol, env))
                elif kind == INT:
                    vals.append(node.value)
                else:
                    vals.append(node.value)
            elif tag == _APPLY:
                node, env = item[1], item[2]
                argc = len(node.children)
                args = vals[len(vals) - argc:]
                del vals[len(vals) - argc:]
                op = node.symbol
                if op == "self":
                    fn = env.lookup("self")
                    if not isinstance(fn, Closure):
                        raise DslTypeError("self is not applicable here")
                    if len(fn.params) != argc:
                        raise DslTypeError(
                            f"self takes {len(fn.params)} argument(s), got {argc}"
                        )
                    self.depth += 1
                    if self.depth > limits.max_depth:
                        raise DepthLimitExceeded(
                            f"recursion deeper than {limits.max_depth}"
                        )
                    bindings = dict(zip(fn.params, args))
                    bindings["self"] = fn
                    work.append((_LEAVE,))
                    work.append((_EVAL, fn.body, fn.env.child(bindings)))
                else:
                    spec = registry.get(op)
                    vals.append(spec.func(args, self.ctx))  # type: ignore[union-attr]
            elif tag == _BRANCH:
                node, env = item[1], item[2]
                cond = vals.pop()
                if not isinstance(cond, bool):
                    raise DslTypeError("if condition must be a boolean")
                work.append((_EVAL, node.children[1 if cond else 2], env))
            else:  # _LEAVE
                self.depth -= 1
        return vals.pop()


def eval_program(
    ast: ProgramAst,
    env: Mapping[str, Value] | None = None,
    limits: Limits | None = None,
    registry: OpRegistry | None = None,
) -> Value:
    """Evaluate a program tree against named argument bindings.

    Pure and deterministic: the binding map and the tree are never mutated,
    and equal inputs give equal outputs.  Raises a subclass of
    :class:`EvalError` on any runtime failure, including exhausted limits.
    """
    machine = _Machine(registry or _DEFAULT_REGISTRY, limits or Limits())
    return machine.run(ast, Env(env or {}))


def run_tests(
    ast: ProgramAst,
    tests: Sequence[IoPair],
    limits: Limits | None = None,
    registry: OpRegistry | None = None,
) -> list[TestResult]:
    """Run a program on each example, capturing failures instead of raising.

    Results line up with ``tests`` by position.  A wrong value yields
    ``TestResult(False, None, got)``; an evaluation error yields its
    class name and message in ``error``.
    """
    out: list[TestResult] = []
    for pair in tests:
        try:
            got = eval_program(ast, pair.input, limits=limits, registry=registry)
        except EvalError as exc:
            out.append(TestResult(False, error=f"{type(exc).__name__}: {exc}"))
            continue
        if deep_equal(got, pair.output):
            out.append(TestResult(True, got=got))
        else:
            out.append(TestResult(False, got=got))
    return out
