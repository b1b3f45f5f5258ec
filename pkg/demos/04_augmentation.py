"""
Debiasing a corpus with description variants
============================================

"""

# each instance may gain a basic-edit variant, a back-translated variant,
# and an attention-guided replacement; all originals are kept at the end
from algolisp import AugmentConfig, make_instance, offline_providers, run_pipeline

texts = [
    "Given an array of numbers a , what is the sum of elements in a",
    "Consider an array of numbers a , your task is to find if a reads the same from both ends .",
    "you are given an array of numbers a , find not prime values in a",
]
corpus = [
    make_instance(f"t{i}", t, [["a", "int[]"]], "int", "( len a )",
                  [{"input": {"a": [1, 2, 3]}, "output": 3}])
    for i, t in enumerate(texts * 3)
]

cfg = AugmentConfig(seed=7)
result = run_pipeline(corpus, cfg, offline_providers(corpus, cfg))
print(len(corpus), "originals ->", len(result.instances), "instances",
      f"({result.variant_count} variants)")

for variant in result.variants:
    print(f"\n{variant.id}")
    print("  ", variant.text)

# the audit log records every draw, including skips and zero-budget noops
print()
for row in result.audit[:6]:
    print(row.source_id, row.kind, row.op or "-", row.sigma or "-",
          "-" if row.edits is None else f"edits={row.edits}",
          "skipped" if row.skipped else "")
