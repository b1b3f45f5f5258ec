"""Shared program texts and corpus helpers for the test suite."""

from __future__ import annotations

import pytest

# The half-list example: keep the last half of an array.
HALF_LIST = "( slice a ( / ( len a ) 2 ) ( len a ) )"

# Recursive factorial of argument a, written with invoke1/lambda1/self.
FACTORIAL = "( invoke1 ( lambda1 ( if ( <= arg1 1 ) 1 ( * ( self ( - arg1 1 ) ) arg1 ) ) ) a )"

# Odd elements of a, reversed.
REVERSE_ODDS = "( reverse ( filter a ( lambda1 ( == ( % arg1 2 ) 1 ) ) ) )"

# Elements of a strictly greater than b, via a partially applied comparison.
GREATER_THAN_B = "( filter a ( partial1 b > ) )"

# Elements of a from position d up to the product of c and b.
SLICE_WINDOW = "( slice a d ( * c b ) )"


@pytest.fixture
def half_list_tokens() -> list[str]:
    return HALF_LIST.split()


@pytest.fixture
def factorial_tokens() -> list[str]:
    return FACTORIAL.split()


@pytest.fixture
def reverse_odds_tokens() -> list[str]:
    return REVERSE_ODDS.split()
