"""Classical oracle: exhaustive deterministic local-hidden-variable strategies.

A deterministic strategy fixes Alice's outcome for each of her two settings
and Bob's for each of his, so the correlations are products a_i * b_j.  Any
LHV model is a probability mixture of these 16 strategies and B is convex in
the mixture weights, so the deterministic maximum is the LHV bound.
"""

from __future__ import annotations

import itertools
from typing import NamedTuple


class DeterministicStrategy(NamedTuple):
    a1: int
    a2: int
    b1: int
    b2: int

    def flipped(self) -> "DeterministicStrategy":
        return DeterministicStrategy(-self.a1, -self.a2, -self.b1, -self.b2)


def enumerate_strategies() -> list[DeterministicStrategy]:
    return [DeterministicStrategy(*signs) for signs in itertools.product((1, -1), repeat=4)]


def strategy_bell_value(s: DeterministicStrategy) -> int:
    """|-a1 b1 + a1 b2 + a2 b1 + a2 b2|, in exact integer arithmetic."""
    return abs(-s.a1 * s.b1 + s.a1 * s.b2 + s.a2 * s.b1 + s.a2 * s.b2)


def lhv_bound() -> int:
    return max(strategy_bell_value(s) for s in enumerate_strategies())
