#!/usr/bin/env python3
"""Generate the checked-in 50-instance corpus fixture.

Deliberately self-contained: test outputs come from plain Python functions
and the printed statistics from direct token counting, so the fixture is an
independent oracle for the library (which is never imported here).  Output
is deterministic for a fixed seed.

Usage: python3 tools/make_corpus_fixture.py [out.jsonl]
"""

from __future__ import annotations

import json
import math
import random
import sys
from pathlib import Path


def clamp_slice(a, i, j):
    n = len(a)
    lo = min(max(i, 0), n)
    hi = min(max(j, 0), n)
    return a[lo:hi]


def ints(rng, lo=0, hi=30, n_lo=5, n_hi=10):
    return [rng.randrange(lo, hi) for _ in range(rng.randrange(n_lo, n_hi + 1))]


# (description, args, return_type, program, native function, input maker)
TEMPLATES = [
    (
        "given an array of numbers a , your task is to output elements of a after only keeping last half",
        [["a", "int[]"]], "int[]",
        "( slice a ( / ( len a ) 2 ) ( len a ) )",
        lambda e: e["a"][len(e["a"]) // 2:],
        lambda rng: {"a": ints(rng)},
    ),
    (
        "given a number a , your task is to compute a factorial of a",
        [["a", "int"]], "int",
        "( invoke1 ( lambda1 ( if ( <= arg1 1 ) 1 ( * ( self ( - arg1 1 ) ) arg1 ) ) ) a )",
        lambda e: math.factorial(e["a"]),
        lambda rng: {"a": rng.randrange(0, 10)},
    ),
    (
        "given an array of numbers a , what is reverse of values in a that are odd",
        [["a", "int[]"]], "int[]",
        "( reverse ( filter a ( lambda1 ( == ( % arg1 2 ) 1 ) ) ) )",
        lambda e: [x for x in e["a"] if x % 2 == 1][::-1],
        lambda rng: {"a": ints(rng)},
    ),
    (
        "given an array of numbers a and a number b , find the values of a that are bigger than b",
        [["a", "int[]"], ["b", "int"]], "int[]",
        "( filter a ( partial1 b > ) )",
        lambda e: [x for x in e["a"] if x > e["b"]],
        lambda rng: {"a": ints(rng), "b": rng.randrange(5, 25)},
    ),
    (
        "you are given an array of numbers a and numbers b , c and d , define e as elements in a "
        "starting at position b ending at the product of c and d ( 0 based ) , what is e",
        [["a", "int[]"], ["b", "int"], ["c", "int"], ["d", "int"]], "int[]",
        "( slice a b ( * c d ) )",
        lambda e: clamp_slice(e["a"], e["b"], e["c"] * e["d"]),
        lambda rng: {"a": ints(rng), "b": rng.randrange(0, 4),
                     "c": rng.randrange(1, 4), "d": rng.randrange(1, 4)},
    ),
    (
        "given an array of numbers a , compute the sum of elements of a",
        [["a", "int[]"]], "int",
        "( reduce a 0 ( lambda2 ( + arg1 arg2 ) ) )",
        lambda e: sum(e["a"]),
        lambda rng: {"a": ints(rng)},
    ),
    (
        "given an array of numbers a , what is the largest element of a",
        [["a", "int[]"]], "int",
        "( reduce a ( lambda2 ( max arg1 arg2 ) ) )",
        lambda e: max(e["a"]),
        lambda rng: {"a": ints(rng)},
    ),
    (
        "given a number a , compute the sum of digits of a",
        [["a", "int"]], "int",
        "( reduce ( digits a ) 0 ( lambda2 ( + arg1 arg2 ) ) )",
        lambda e: sum(int(ch) for ch in str(abs(e["a"]))),
        lambda rng: {"a": rng.randrange(0, 10_000)},
    ),
    (
        "given a string a , your task is to find the length of a",
        [["a", "string"]], "int",
        "( strlen a )",
        lambda e: len(e["a"]),
        lambda rng: {"a": "".join(rng.choice("abcdexyz") for _ in range(rng.randrange(0, 12)))},
    ),
    (
        "given an array of numbers a , what is the first element of a",
        [["a", "int[]"]], "int",
        "( head a )",
        lambda e: e["a"][0],
        lambda rng: {"a": ints(rng)},
    ),
    (
        "given an array of numbers a , output elements of a in increasing order",
        [["a", "int[]"]], "int[]",
        "( sort a )",
        lambda e: sorted(e["a"]),
        lambda rng: {"a": ints(rng)},
    ),
    (
        "given an array of numbers a and a number b , count the values in a that are bigger than b",
        [["a", "int[]"], ["b", "int"]], "int",
        "( len ( filter a ( partial1 b > ) ) )",
        lambda e: sum(1 for x in e["a"] if x > e["b"]),
        lambda rng: {"a": ints(rng), "b": rng.randrange(5, 25)},
    ),
    (
        "given an array of numbers a , compute the square of each element of a",
        [["a", "int[]"]], "int[]",
        "( map a ( lambda1 ( * arg1 arg1 ) ) )",
        lambda e: [x * x for x in e["a"]],
        lambda rng: {"a": ints(rng)},
    ),
    (
        "given an array of numbers a and a number b , add b to each element of a",
        [["a", "int[]"], ["b", "int"]], "int[]",
        "( map a ( partial0 b + ) )",
        lambda e: [e["b"] + x for x in e["a"]],
        lambda rng: {"a": ints(rng), "b": rng.randrange(1, 20)},
    ),
    (
        "given numbers a and b , what is the smaller value of a and b",
        [["a", "int"], ["b", "int"]], "int",
        "( min a b )",
        lambda e: min(e["a"], e["b"]),
        lambda rng: {"a": rng.randrange(0, 50), "b": rng.randrange(0, 50)},
    ),
    (
        "you are given an array of numbers a and numbers b and c , output elements of a "
        "between positions b and c ( 0 based )",
        [["a", "int[]"], ["b", "int"], ["c", "int"]], "int[]",
        "( slice a b c )",
        lambda e: clamp_slice(e["a"], e["b"], e["c"]),
        lambda rng: {"a": ints(rng), "b": rng.randrange(0, 5), "c": rng.randrange(3, 10)},
    ),
    (
        "given numbers a , b and c , compute the product of a , b and c",
        [["a", "int"], ["b", "int"], ["c", "int"]], "int",
        "( * a ( * b c ) )",
        lambda e: e["a"] * e["b"] * e["c"],
        lambda rng: {"a": rng.randrange(1, 12), "b": rng.randrange(1, 12), "c": rng.randrange(1, 12)},
    ),
    (
        "given numbers a and b , compute the difference of a and b",
        [["a", "int"], ["b", "int"]], "int",
        "( - a b )",
        lambda e: e["a"] - e["b"],
        lambda rng: {"a": rng.randrange(0, 50), "b": rng.randrange(0, 50)},
    ),
    (
        "given an array of numbers a , what is the last element of a",
        [["a", "int[]"]], "int",
        "( head ( reverse a ) )",
        lambda e: e["a"][-1],
        lambda rng: {"a": ints(rng)},
    ),
    (
        "given an array of numbers a , count the even values of a",
        [["a", "int[]"]], "int",
        "( len ( filter a ( lambda1 ( == ( % arg1 2 ) 0 ) ) ) )",
        lambda e: sum(1 for x in e["a"] if x % 2 == 0),
        lambda rng: {"a": ints(rng)},
    ),
]


def build(seed: int = 20240801):
    rng = random.Random(seed)
    instances = []

    def add(text, args, rtype, program, fn, mkinput, n_tests=3):
        tests = []
        for _ in range(n_tests):
            env = mkinput(rng)
            tests.append({"input": env, "output": fn(env)})
        instances.append({
            "id": f"fx{len(instances):03d}",
            "text": text,
            "args": args,
            "return_type": rtype,
            "program": program,
            "tests": tests,
        })

    # 47 valid: two rounds over all templates, a third for the first seven.
    for text, args, rtype, program, fn, mkinput in TEMPLATES:
        add(text, args, rtype, program, fn, mkinput)
    for text, args, rtype, program, fn, mkinput in TEMPLATES:
        add(text, args, rtype, program, fn, mkinput)
    for text, args, rtype, program, fn, mkinput in TEMPLATES[:7]:
        add(text, args, rtype, program, fn, mkinput)

    # 3 deliberately broken instances.
    text, args, rtype, program, fn, mkinput = TEMPLATES[5]
    env = mkinput(rng)
    instances.append({
        "id": f"fx{len(instances):03d}",
        "text": text,
        "args": args,
        "return_type": rtype,
        "program": program,
        "tests": [{"input": env, "output": fn(env) + 1}],  # wrong expectation
    })
    instances.append({
        "id": f"fx{len(instances):03d}",
        "text": "given an array of numbers a , apply a mysterious operation to a",
        "args": [["a", "int[]"]],
        "return_type": "int[]",
        "program": "( frobnicate a )",  # operator unknown to the registry
        "tests": [{"input": {"a": [1, 2]}, "output": [1, 2]}],
    })
    instances.append({
        "id": f"fx{len(instances):03d}",
        "text": "given an array of numbers a and a number b , what is the first value of a bigger than b",
        "args": [["a", "int[]"], ["b", "int"]], "return_type": "int",
        "program": "( head ( filter a ( partial1 b > ) ) )",
        # no element exceeds b: head of an empty list errors at run time
        "tests": [{"input": {"a": [1, 2, 3], "b": 99}, "output": 0}],
    })
    return instances


def independent_stats(instances):
    n = len(instances)
    text_lens = []
    depths = []
    code_lens = []
    vocab = set()
    for inst in instances:
        toks = inst["text"].split()
        text_lens.append(len(toks))
        vocab.update(toks)
        ptoks = inst["program"].split()
        depth = 0
        best = 0
        for t in ptoks:
            if t == "(":
                depth += 1
                best = max(best, depth)
            elif t == ")":
                depth -= 1
        depths.append(best + 1)
        code_lens.append(sum(1 for t in ptoks if t not in "()"))
    return {
        "instances": n,
        "avg_text_len": sum(text_lens) / n,
        "avg_code_depth": sum(depths) / n,
        "avg_code_len": sum(code_lens) / n,
        "vocab_size": len(vocab),
    }


def main():
    out = Path(sys.argv[1]) if len(sys.argv) > 1 else Path("tests/data/corpus50.jsonl")
    out.parent.mkdir(parents=True, exist_ok=True)
    instances = build()
    with open(out, "w", encoding="utf-8") as fh:
        for inst in instances:
            fh.write(json.dumps(inst, ensure_ascii=False) + "\n")
    print(json.dumps(independent_stats(instances), indent=2))
    print(f"wrote {len(instances)} instances to {out}", file=sys.stderr)


if __name__ == "__main__":
    main()
