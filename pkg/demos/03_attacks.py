"""
Generating adversarial descriptions
===================================

"""

# five attack classes; two of them (vc, vi) also rewrite the ground truth,
# and every emitted instance is re-validated against its transformed tests
from algolisp import build_suite, make_instance

text = ("Given an array of numbers a and a number b , "
        "define c as elements in a bigger than b , what is c")
corpus = [
    make_instance(
        f"task{i}", text, [["a", "int[]"], ["b", "int"]], "int[]",
        "( filter a ( partial1 b > ) )",
        [{"input": {"a": [1 + i, 8, 2, 9], "b": 3}, "output": [x for x in [1 + i, 8, 2, 9] if x > 3]}],
    )
    for i in range(4)
]

suite = build_suite(corpus, per_class=2, rng=7)
for adv in suite:
    print(f"{adv.attack_class.value:>3}  lev={adv.distance.lev}")
    print("     was:", " ".join(adv.original_description))
    print("     now:", adv.instance.text)
    if adv.attack_class.is_directional:
        print("     new program:", " ".join(adv.instance.program_tokens))
