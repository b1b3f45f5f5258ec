"""AlgoLisp program syntax: token streams, program trees, and tree transforms.

Programs are fully parenthesized prefix expressions over a flat token
alphabet: ``( slice a ( / ( len a ) 2 ) ( len a ) )``.  Every application
names a registered operator; leaves are identifiers, integer literals, or
double-quoted string literals.  This module knows nothing about evaluation;
it only builds, inspects, serializes, and rewrites trees.
"""

from __future__ import annotations

import re
from dataclasses import dataclass, field
from typing import Iterator, Mapping, Sequence

APPLY = "apply"
IDENT = "ident"
INT = "int"
STR = "str"

_IDENT_RE = re.compile(r"[A-Za-z_][A-Za-z0-9_]*\Z")
_INT_RE = re.compile(r"-?[0-9]+\Z")


class DslError(Exception):
    """Base class for program-syntax errors."""


class UnbalancedParens(DslError):
    """Token stream is not one balanced S-expression."""


class UnknownToken(DslError):
    """Token is neither a literal, an identifier, nor a registered operator."""


class ArityMismatch(DslError):
    """Application has the wrong number of children for its operator."""


class CollisionError(DslError):
    """Renaming would merge two distinct identifiers."""


@dataclass(frozen=True)
class ProgramAst:
    """One node of a program tree.

    ``kind`` is one of :data:`APPLY`, :data:`IDENT`, :data:`INT`, :data:`STR`.
    Applications carry the operator name in ``symbol`` and their operands in
    ``children``; leaves carry ``symbol`` (identifiers) or ``value``
    (literals).  ``pos`` is the index of the introducing token and is
    excluded from equality so that structurally identical trees compare equal
    wherever they came from.
    """

    kind: str
    symbol: str | None = None
    value: int | str | None = None
    children: tuple["ProgramAst", ...] = ()
    pos: int = field(default=-1, compare=False, repr=False)

    @staticmethod
    def apply(op: str, children: Sequence["ProgramAst"], pos: int = -1) -> "ProgramAst":
        return ProgramAst(APPLY, symbol=op, children=tuple(children), pos=pos)

    @staticmethod
    def ident(name: str, pos: int = -1) -> "ProgramAst":
        return ProgramAst(IDENT, symbol=name, pos=pos)

    @staticmethod
    def int_lit(value: int, pos: int = -1) -> "ProgramAst":
        return ProgramAst(INT, value=value, pos=pos)

    @staticmethod
    def str_lit(value: str, pos: int = -1) -> "ProgramAst":
        return ProgramAst(STR, value=value, pos=pos)

    @property
    def is_leaf(self) -> bool:
        return self.kind != APPLY

    def walk(self) -> Iterator["ProgramAst"]:
        """Yield every node in pre-order."""
        stack = [self]
        while stack:
            node = stack.pop()
            yield node
            stack.extend(reversed(node.children))


def parse_program(tokens: Sequence[str], registry=None) -> ProgramAst:
    """Parse a token sequence into a program tree.

    The operator registry (defaulting to the interpreter's) supplies the
    reserved operator names and their arities; fixed arities are enforced
    here so malformed applications never reach evaluation.  Raises
    :class:`UnbalancedParens`, :class:`UnknownToken`, or
    :class:`ArityMismatch` with the offending token position.
    """
    if registry is None:
        from .interp import default_registry

        registry = default_registry()
    stack: list[tuple[str, int, list[ProgramAst]]] = []
    result: ProgramAst | None = None

    def attach(node: ProgramAst) -> None:
        nonlocal result
        if stack:
            stack[-1][2].append(node)
        elif result is None:
            result = node
        else:
            raise UnbalancedParens(f"unexpected second expression at token {node.pos}")

    i = 0
    n = len(tokens)
    while i < n:
        tok = tokens[i]
        if tok == "(":
            if i + 1 >= n:
                raise UnbalancedParens(f"dangling '(' at token {i}")
            op = tokens[i + 1]
            if op in ("(", ")"):
                raise UnbalancedParens(f"operator expected after '(' at token {i}")
            if op not in registry:
                raise UnknownToken(f"unknown operator {op!r} at token {i + 1}")
            stack.append((op, i, []))
            i += 2
            continue
        if tok == ")":
            if not stack:
                raise UnbalancedParens(f"unexpected ')' at token {i}")
            op, pos, kids = stack.pop()
            arity = registry.arity_of(op)
            if arity is not None and arity != len(kids):
                raise ArityMismatch(
                    f"{op!r} takes {arity} operand(s), got {len(kids)} at token {pos}"
                )
            attach(ProgramAst.apply(op, kids, pos=pos))
        else:
            attach(_leaf(tok, i, registry))
        i += 1
    if stack:
        raise UnbalancedParens(f"unclosed '(' at token {stack[-1][1]}")
    if result is None:
        raise UnbalancedParens("empty token sequence")
    return result


def _leaf(tok: str, pos: int, registry) -> ProgramAst:
    if _INT_RE.match(tok):
        return ProgramAst.int_lit(int(tok), pos=pos)
    if len(tok) >= 2 and tok.startswith('"') and tok.endswith('"'):
        return ProgramAst.str_lit(tok[1:-1], pos=pos)
    if _IDENT_RE.match(tok) or tok in registry:
        # Bare operator names (e.g. the ">" in "( partial1 b > )") are
        # identifier leaves; evaluation resolves them to builtins.
        return ProgramAst.ident(tok, pos=pos)
    raise UnknownToken(f"unrecognized token {tok!r} at token {pos}")


def serialize(ast: ProgramAst) -> list[str]:
    """Emit the canonical token sequence; parse ∘ serialize is the identity."""
    out: list[str] = []
    stack: list[ProgramAst | None] = [ast]
    while stack:
        node = stack.pop()
        if node is None:
            out.append(")")
            continue
        if node.kind == APPLY:
            out.append("(")
            out.append(node.symbol)  # type: ignore[arg-type]
            stack.append(None)
            stack.extend(reversed(node.children))
        elif node.kind == IDENT:
            out.append(node.symbol)  # type: ignore[arg-type]
        elif node.kind == INT:
            out.append(str(node.value))
        else:
            out.append(f'"{node.value}"')
    return out


def tree_depth(ast: ProgramAst) -> int:
    """Longest root-to-leaf path counted in nodes; a bare leaf has depth 1."""
    best = 1
    stack = [(ast, 1)]
    while stack:
        node, d = stack.pop()
        if d > best:
            best = d
        for child in node.children:
            stack.append((child, d + 1))
    return best


def code_length(ast: ProgramAst, count_parens: bool = False) -> int:
    """Number of serialized tokens, excluding parentheses unless asked."""
    tokens = serialize(ast)
    if count_parens:
        return len(tokens)
    return sum(1 for t in tokens if t not in ("(", ")"))


def identifiers(ast: ProgramAst) -> frozenset[str]:
    """All identifier-leaf names in the tree (operator heads excluded)."""
    return frozenset(n.symbol for n in ast.walk() if n.kind == IDENT)  # type: ignore[misc]


@dataclass(frozen=True)
class VarMap:
    """Finite injective identifier mapping used by renaming transforms."""

    pairs: tuple[tuple[str, str], ...]

    def __post_init__(self) -> None:
        seen_old: set[str] = set()
        seen_new: set[str] = set()
        for old, new in self.pairs:
            if old in seen_old:
                raise ValueError(f"duplicate source name {old!r}")
            if new in seen_new:
                raise ValueError(f"mapping not injective: {new!r} targeted twice")
            seen_old.add(old)
            seen_new.add(new)

    @staticmethod
    def of(mapping: Mapping[str, str]) -> "VarMap":
        return VarMap(tuple(mapping.items()))

    @property
    def domain(self) -> frozenset[str]:
        return frozenset(old for old, _ in self.pairs)

    @property
    def image(self) -> frozenset[str]:
        return frozenset(new for _, new in self.pairs)

    def get(self, name: str) -> str:
        for old, new in self.pairs:
            if old == name:
                return new
        return name


def rename_identifiers(ast: ProgramAst, mapping: VarMap | Mapping[str, str]) -> ProgramAst:
    """Rewrite identifier leaves through an injective mapping.

    Simultaneous substitution, so swaps like {b↔c} are safe.  Raises
    :class:`CollisionError` if a target name already occurs in the tree
    outside the mapping's domain, which would silently merge variables.
    """
    vm = mapping if isinstance(mapping, VarMap) else VarMap.of(mapping)
    present = identifiers(ast)
    for _, new in vm.pairs:
        if new in present and new not in vm.domain:
            raise CollisionError(f"target name {new!r} already occurs in the program")

    def rebuild(node: ProgramAst) -> ProgramAst:
        if node.kind == IDENT:
            new = vm.get(node.symbol)  # type: ignore[arg-type]
            if new != node.symbol:
                return ProgramAst.ident(new, pos=node.pos)
            return node
        if node.kind != APPLY:
            return node
        kids = tuple(rebuild(c) for c in node.children)
        if all(a is b for a, b in zip(kids, node.children)):
            return node
        return ProgramAst.apply(node.symbol, kids, pos=node.pos)  # type: ignore[arg-type]

    return rebuild(ast)
