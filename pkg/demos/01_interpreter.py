"""
Parsing and running DSL programs
================================

"""

# parse a fully parenthesized prefix program into an AST
from algolisp import parse_program, eval_program

half_list = "( slice a ( / ( len a ) 2 ) ( len a ) )".split()
ast = parse_program(half_list)

# the program keeps the last half of the array
print(eval_program(ast, {"a": [20, 21, 7, 21, 6, 21, 25, 24, 14, 20, 17]}))
print(eval_program(ast, {"a": [15, 17, 30, 13, 4, 24, 11]}))

# recursion works through invoke1/lambda1/self: factorial of a
factorial = ("( invoke1 ( lambda1 ( if ( <= arg1 1 ) 1 "
             "( * ( self ( - arg1 1 ) ) arg1 ) ) ) a )").split()
fact = parse_program(factorial)
for n in range(7):
    print(n, "! =", eval_program(fact, {"a": n}))

# structural helpers: rename identifiers without touching operators
from algolisp import rename_identifiers, serialize, code_length, tree_depth

renamed = rename_identifiers(parse_program("( filter a ( partial1 b > ) )".split()),
                             {"a": "xs", "b": "lo"})
print(serialize(renamed))
print("length", code_length(renamed), "depth", tree_depth(renamed))
