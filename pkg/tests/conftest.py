import random

import pytest
import sympy as sp

from contactlax.jetalg import PPoly

X, Y, Z, T, PSYM = sp.symbols("x y z t p")
COORDS = (X, Y, Z, T)


def sympy_funcs(n):
    return [sp.Function(f"U{i}")(*COORDS) for i in range(n)]


def to_sympy(h, funcs):
    """Independent rendering: jets become derivatives of genuine sympy functions."""
    h = PPoly.coerce(h)
    out = 0
    for k, c in h.items():
        for mono, coeff in c.terms:
            term = sp.Rational(coeff.numerator, coeff.denominator) if hasattr(coeff, "denominator") else coeff
            for j, e in mono:
                f = funcs[j.component]
                for coord, n in zip(COORDS, j.multi_index):
                    if n:
                        f = sp.diff(f, coord, n)
                term = term * f ** e
            out += term * PSYM ** k
    return sp.expand(out)


def sympy_bracket(h1, h2):
    d = sp.diff
    return sp.expand(
        d(h1, PSYM) * d(h2, X) - d(h2, PSYM) * d(h1, X)
        - PSYM * (d(h1, PSYM) * d(h2, Z) - d(h2, PSYM) * d(h1, Z))
        + h1 * d(h2, Z) - h2 * d(h1, Z)
    )


@pytest.fixture
def rng():
    return random.Random(1234)
