"""Exact Shapley values under the three equivalent definitions.

* marginal contributions: ``phi_i = sum_S [U(S+i) - U(S)] / (n C(n-1,|S|))``
* complementary contributions: ``U(S+i) - U(N - S - i)`` with the same weights
* permutations: mean marginal contribution over all ``n!`` orderings

All three first pull the full utility table through the oracle (so a
memoized oracle sees exactly ``2^n`` evaluations) and then reduce with
``math.fsum``, which makes the result independent of evaluation order.
"""

from __future__ import annotations

import itertools
import math
import time

import numpy as np

from .coalition import full_mask, stratum_sizes
from .errors import GuardError
from .utility import as_oracle, evaluate_many
from .valuation import Valuation

EXACT_MAX_N = 20
PERM_MAX_N = 10


def utility_vector(oracle, n: int, workers: int | None = None) -> np.ndarray:
    """Utilities of all ``2^n`` coalitions indexed by mask."""
    oracle = as_oracle(oracle, n)
    values = evaluate_many(oracle, range(full_mask(n) + 1), workers)
    return np.array([values[m] for m in range(full_mask(n) + 1)])


def _guard(n: int, limit_n: int, what: str, required: int, limit: int, force: bool) -> None:
    if n > limit_n and not force:
        raise GuardError(what, required, limit)


def _weights(n: int) -> np.ndarray:
    return np.array([1.0 / (n * math.comb(n - 1, k)) for k in range(n)])


def _subset_sum(u: np.ndarray, n: int, complementary: bool) -> np.ndarray:
    masks = np.arange(1 << n, dtype=np.int64)
    sizes = stratum_sizes(1 << n)
    w = _weights(n)
    full = full_mask(n)
    values = np.zeros(n)
    for i in range(n):
        bit = 1 << i
        S = masks[(masks & bit) == 0]
        with_i = S | bit
        other = (full ^ with_i) if complementary else S
        terms = (u[with_i] - u[other]) * w[sizes[S]]
        values[i] = math.fsum(terms)
    return values


def _run(method, oracle, n, reducer, workers):
    oracle = as_oracle(oracle, n)
    start = time.perf_counter()
    before = oracle.stats.evaluations
    u = utility_vector(oracle, n, workers)
    values = reducer(u)
    return Valuation(
        method=method,
        values=values,
        evaluations=oracle.stats.evaluations - before,
        wall_ms=(time.perf_counter() - start) * 1e3,
    )


def exact_mc_sv(oracle, n: int, *, force: bool = False, workers: int | None = None) -> Valuation:
    """Exact Shapley value from marginal contributions."""
    _guard(n, EXACT_MAX_N, "exact Shapley", 1 << n, 1 << EXACT_MAX_N, force)
    return _run("exact_mc", oracle, n, lambda u: _subset_sum(u, n, False), workers)


def exact_cc_sv(oracle, n: int, *, force: bool = False, workers: int | None = None) -> Valuation:
    """Exact Shapley value from complementary contributions."""
    _guard(n, EXACT_MAX_N, "exact Shapley", 1 << n, 1 << EXACT_MAX_N, force)
    return _run("exact_cc", oracle, n, lambda u: _subset_sum(u, n, True), workers)


def _permutation_sum(u: np.ndarray, n: int, chunk: int = 200_000) -> np.ndarray:
    partial = [[] for _ in range(n)]
    perms = itertools.permutations(range(n))
    while True:
        block = np.array(list(itertools.islice(perms, chunk)), dtype=np.int64)
        if block.size == 0:
            break
        bits = np.left_shift(1, block)
        after = np.cumsum(bits, axis=1)  # distinct bits, so the sum is the union
        before = after - bits
        gains = u[after] - u[before]
        for i in range(n):
            partial[i].append(math.fsum(gains[block == i]))
    count = math.factorial(n)
    return np.array([math.fsum(p) / count for p in partial])


def exact_perm_sv(oracle, n: int, *, force: bool = False, workers: int | None = None) -> Valuation:
    """Exact Shapley value by enumerating every ordering of the clients."""
    _guard(n, PERM_MAX_N, "permutation Shapley", math.factorial(n), math.factorial(PERM_MAX_N), force)
    return _run("exact_perm", oracle, n, lambda u: _permutation_sum(u, n), workers)
