"""Shared fixtures: the doubling-chain test configuration and oracles."""

from __future__ import annotations

from fractions import Fraction

import pytest

from cnl.sequences import ChainSpec, ConstantRule, GeometricRule
from cnl.theta import SelectionPolicy, build_schedule, generate_digits

STREAM_LEN = 5000


def doubling_spec(depth: int = 4) -> ChainSpec:
    """q_n = 2**(n+3) contracted by a constant step of 2."""
    return ChainSpec(base=GeometricRule(8, 2), s=ConstantRule(2), depth=depth)


@pytest.fixture(scope="session")
def spec_a() -> ChainSpec:
    return doubling_spec()


@pytest.fixture(scope="session")
def schedule_a(spec_a):
    return build_schedule(spec_a)


@pytest.fixture(scope="session")
def stream_a(schedule_a):
    return generate_digits(schedule_a, SelectionPolicy("min"), STREAM_LEN)


def brute_force_star_discrepancy(points) -> Fraction:
    """Independent oracle: breakpoint supremum by direct counting.

    The empirical count A(gamma) = #{x < gamma} is a step function, so
    the supremum of |A/n - gamma| is attained as a one-sided limit at a
    point value: evaluate |#{x < v}/n - v| and |#{x <= v}/n - v| at
    every distinct v (the right limit covers gamma just above v).
    """
    values = [Fraction(p) for p in points]
    n = len(values)
    best = Fraction(0)
    for v in sorted(set(values)):
        c_lt = sum(1 for x in values if x < v)
        c_le = sum(1 for x in values if x <= v)
        for candidate in (abs(Fraction(c_lt, n) - v), abs(Fraction(c_le, n) - v)):
            if candidate > best:
                best = candidate
    return best
