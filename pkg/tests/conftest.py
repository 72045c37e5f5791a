import itertools
import random
from fractions import Fraction

import pytest

from poisskit import poisson
from poisskit.expr import Poly, RatFunc, chart, parse_expr
from poisskit.multivec import DiffForm, MultiVec


@pytest.fixture
def ch2():
    return chart("x", "y")


@pytest.fixture
def ch3():
    return chart("x", "y", "z")


@pytest.fixture
def chqp():
    return chart("q", "p")


@pytest.fixture
def ch4():
    return chart("q1", "p1", "q2", "p2")


@pytest.fixture
def so3_structure(ch3):
    pi = MultiVec(ch3, 2, {
        (0, 1): parse_expr("z", ch3),
        (1, 2): parse_expr("x", ch3),
        (0, 2): parse_expr("-y", ch3),
    })
    return poisson.require_poisson(pi)


@pytest.fixture
def sl2r_structure(ch3):
    pi = MultiVec(ch3, 2, {
        (0, 1): parse_expr("-z", ch3),
        (1, 2): parse_expr("x", ch3),
        (0, 2): parse_expr("-y", ch3),
    })
    return poisson.require_poisson(pi)


@pytest.fixture
def book_structure(ch3):
    pi = MultiVec(ch3, 2, {
        (0, 2): parse_expr("x", ch3),
        (1, 2): parse_expr("y", ch3),
    })
    return poisson.require_poisson(pi)


@pytest.fixture
def pican_structure(chqp):
    # pi = d/dp ^ d/dq, i.e. {q,p} = -1
    return poisson.require_poisson(
        MultiVec(chqp, 2, {(0, 1): RatFunc.const(chqp, -1)})
    )


@pytest.fixture
def pican4_structure(ch4):
    return poisson.require_poisson(MultiVec(ch4, 2, {
        (0, 1): RatFunc.const(ch4, -1),
        (2, 3): RatFunc.const(ch4, -1),
    }))


@pytest.fixture
def xdxdy_structure(ch2):
    return poisson.require_poisson(
        MultiVec(ch2, 2, {(0, 1): parse_expr("x", ch2)})
    )


def random_poly(rng, ch, max_degree=2, terms=3):
    out = {}
    for _ in range(terms):
        e = [0] * ch.dim
        for _ in range(rng.randint(0, max_degree)):
            e[rng.randrange(ch.dim)] += 1
        out[tuple(e)] = Fraction(rng.randint(-3, 3))
    return RatFunc.from_poly(Poly(ch, out))


def random_multivec(rng, ch, degree, max_degree=2):
    coeffs = {}
    for idx in itertools.combinations(range(ch.dim), degree):
        if rng.random() < 0.8:
            coeffs[idx] = random_poly(rng, ch, max_degree)
    return MultiVec(ch, degree, coeffs)


def random_form(rng, ch, degree, max_degree=2):
    coeffs = {}
    for idx in itertools.combinations(range(ch.dim), degree):
        if rng.random() < 0.8:
            coeffs[idx] = random_poly(rng, ch, max_degree)
    return DiffForm(ch, degree, coeffs)


def rng_for(name):
    return random.Random(name)
