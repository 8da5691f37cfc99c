"""Sampling baselines: truncated Monte Carlo over permutations and CC-Shapley."""

from __future__ import annotations

import itertools
import math
import time

import numpy as np

from .coalition import full_mask, random_permutation
from .stratified import Scheme, default_plan, stratified_estimate
from .utility import Memoized, as_oracle
from .valuation import Valuation

DEFAULT_TRUNC_FRACTION = 1e-3


def extended_tmc(
    oracle,
    n: int,
    rounds: int,
    trunc_tol: float | None = None,
    rng: np.random.Generator | None = None,
    *,
    exhaustive: bool = False,
) -> Valuation:
    """Truncated Monte Carlo permutation sampling.

    Each round walks a random ordering, crediting every client with the
    utility gain it brings to the clients before it.  Once the running
    utility is within ``trunc_tol`` of ``U(N)`` the rest of the walk is
    credited 0 without further evaluations.  ``trunc_tol=None`` uses
    ``1e-3 * |U(N)|``.

    With ``exhaustive=True`` every one of the ``n!`` orderings is walked
    once in lexicographic order and ``rounds``/``rng`` are ignored.
    """
    if rounds < 1 and not exhaustive:
        raise ValueError(f"rounds must be >= 1, got {rounds}")
    memo = Memoized(as_oracle(oracle, n))
    if rng is None:
        rng = np.random.default_rng()
    start = time.perf_counter()
    grand = memo.evaluate(full_mask(n))
    empty = memo.evaluate(0)
    if trunc_tol is None:
        trunc_tol = DEFAULT_TRUNC_FRACTION * abs(grand)
    if trunc_tol < 0:
        raise ValueError(f"trunc_tol must be >= 0, got {trunc_tol}")

    if exhaustive:
        orderings = itertools.permutations(range(n))
        rounds = math.factorial(n)
    else:
        orderings = (random_permutation(n, rng) for _ in range(rounds))
    gains = [[] for _ in range(n)]
    truncated = 0
    for order in orderings:
        prefix, current = 0, empty
        for pos, client in enumerate(order):
            if abs(grand - current) < trunc_tol:
                truncated += n - pos
                break
            prefix |= 1 << client
            nxt = memo.evaluate(prefix)
            gains[client].append(nxt - current)
            current = nxt
    values = [math.fsum(g) / rounds for g in gains]
    return Valuation(
        method="tmc",
        values=values,
        evaluations=memo.stats.evaluations,
        wall_ms=(time.perf_counter() - start) * 1e3,
        meta={"rounds": rounds, "trunc_tol": trunc_tol, "truncated_steps": truncated},
    )


def cc_shapley(oracle, n: int, gamma: int, rng: np.random.Generator | None = None) -> Valuation:
    """Complementary-contribution stratified sampling with the default plan."""
    val = stratified_estimate(oracle, n, default_plan(n, gamma), Scheme.CC, rng)
    val.method = "ccshapley"
    return val
