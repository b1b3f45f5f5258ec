"""
Judging predictions by functional equivalence
=============================================

"""

# a correct prediction is one that passes every example, not one that
# matches the reference program token for token
from algolisp import make_instance, score_predictions

corpus = [
    make_instance(
        "sum", "given numbers a and b , what is the sum of a and b",
        [["a", "int"], ["b", "int"]], "int", "( + a b )",
        [{"input": {"a": 2, "b": 3}, "output": 5},
         {"input": {"a": 10, "b": 4}, "output": 14}],
    ),
    make_instance(
        "biggest", "given an array of numbers a , what is the largest element of a",
        [["a", "int[]"]], "int", "( reduce a ( lambda2 ( max arg1 arg2 ) ) )",
        [{"input": {"a": [3, 9, 4]}, "output": 9},
         {"input": {"a": [7]}, "output": 7}],
    ),
]

# a structurally different but equivalent program still scores as correct
predictions = {
    "sum": "( + b a )",
    "biggest": "( reduce a ( lambda2 ( if ( > arg1 arg2 ) arg1 arg2 ) ) )",
}
report = score_predictions(corpus, predictions)
print("accuracy", report.accuracy)

# break one prediction and the report names it
predictions["sum"] = "( - a b )"
report = score_predictions(corpus, predictions)
print("accuracy", report.accuracy, "failures", report.failures)
