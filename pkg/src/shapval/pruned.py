"""Importance-pruned estimators: K-Greedy and IPSS.

Both keep the marginal-contribution weights ``1 / (n C(n-1, |S|))`` but only
look at small coalitions, where almost all of the value sits when utility
gains shrink as coalitions grow.  IPSS spends a budget ``gamma`` on every
coalition of size ``<= k*`` and then on a client-balanced sample of size
``k* + 1`` coalitions.
"""

from __future__ import annotations

import itertools
import math
import time
from dataclasses import dataclass

import numpy as np

from .coalition import binomial, enumerate_stratum, format_mask, mask_of, members
from .errors import GuardError
from .utility import Memoized, as_oracle, evaluate_many
from .valuation import Valuation

KGREEDY_MAX_EVALUATIONS = 1 << 20


@dataclass(frozen=True)
class IpssBudget:
    n: int
    gamma: int
    k_star: int
    extra: int

    @property
    def phase_one(self) -> int:
        """Coalitions evaluated exhaustively (sizes ``0..k_star``)."""
        return sum(binomial(self.n, j) for j in range(self.k_star + 1))


def k_star(n: int, gamma: int) -> IpssBudget:
    """Largest ``k`` with ``sum_{j<=k} C(n, j) <= gamma``, and the rounds left over.

    At ``k_star == n`` nothing larger exists to spend on, so ``extra`` is 0.
    """
    if gamma < 1:
        raise ValueError(f"gamma must be >= 1, got {gamma}")
    total = 0
    k = -1
    while k < n and total + binomial(n, k + 1) <= gamma:
        k += 1
        total += binomial(n, k)
    extra = 0 if k == n else gamma - total
    return IpssBudget(n, gamma, k, extra)


def _small_terms(util: dict[int, float], n: int, i: int, max_size: int, binom_n_weights: bool) -> list[float]:
    """Weighted marginal terms of client ``i`` over ``S`` with ``|S| < max_size``."""
    bit = 1 << i
    terms = []
    for s in range(min(max_size, n)):
        weight = 1.0 / (n * (math.comb(n, s) if binom_n_weights else math.comb(n - 1, s)))
        for S in enumerate_stratum(n, s):
            if not S & bit:
                terms.append((util[S | bit] - util[S]) * weight)
    return terms


def _strata_up_to(n: int, size: int) -> list[int]:
    return [S for s in range(size + 1) for S in enumerate_stratum(n, s)]


def k_greedy(
    oracle,
    n: int,
    K: int,
    *,
    binom_n_weights: bool = False,
    max_evaluations: int = KGREEDY_MAX_EVALUATIONS,
    workers: int | None = None,
) -> Valuation:
    """Marginal-contribution estimate from every coalition of at most ``K`` clients.

    ``binom_n_weights=True`` weights terms by ``1 / (n C(n, |S|))`` instead
    of ``1 / (n C(n-1, |S|))``; with it, ``K = n`` no longer reproduces the
    exact value.
    """
    if not 1 <= K <= n:
        raise ValueError(f"K must lie in [1, {n}], got {K}")
    needed = sum(binomial(n, j) for j in range(K + 1))
    if needed > max_evaluations:
        raise GuardError(f"K-Greedy with K={K}", needed, max_evaluations)
    memo = Memoized(as_oracle(oracle, n))
    start = time.perf_counter()
    util = evaluate_many(memo, _strata_up_to(n, K), workers)
    values = [math.fsum(_small_terms(util, n, i, K, binom_n_weights)) for i in range(n)]
    return Valuation(
        method="kgreedy",
        values=values,
        evaluations=memo.stats.evaluations,
        wall_ms=(time.perf_counter() - start) * 1e3,
        meta={"K": K, "binom_n_weights": binom_n_weights},
    )


def _balanced_pick(n: int, size: int, budget: int, rng: np.random.Generator, node_limit: int) -> list[int]:
    # Each step takes the least-used clients, ties broken by a seeded
    # priority order; this walks a shuffled cyclic layout and keeps every
    # count within one of the others.  Depth-first backtracking handles the
    # rare case where all balanced choices are already taken.
    priority = [int(c) for c in rng.permutation(n)]
    counts = [0] * n
    chosen: list[int] = []
    used: set[int] = set()

    def candidates():
        lo = min(counts)
        low = [c for c in priority if counts[c] == lo]
        if len(low) >= size:
            for combo in itertools.combinations(low, size):
                yield mask_of(combo)
        else:
            nxt = [c for c in priority if counts[c] == lo + 1]
            base = mask_of(low)
            for combo in itertools.combinations(nxt, size - len(low)):
                yield base | mask_of(combo)

    stack = [candidates()]
    nodes = 0
    while len(chosen) < budget:
        nodes += 1
        if nodes > node_limit:
            raise RuntimeError(f"no balanced design found for n={n}, size={size}, budget={budget}")
        for mask in stack[-1]:
            if mask not in used:
                chosen.append(mask)
                used.add(mask)
                for c in members(mask):
                    counts[c] += 1
                stack.append(candidates())
                break
        else:
            stack.pop()
            if not chosen:
                raise RuntimeError(f"no balanced design exists for n={n}, size={size}, budget={budget}")
            mask = chosen.pop()
            used.discard(mask)
            for c in members(mask):
                counts[c] -= 1
    return chosen


def balanced_extra(n: int, size: int, budget: int, rng: np.random.Generator, *, node_limit: int = 200_000) -> list[int]:
    """Distinct size-``size`` coalitions whose client counts differ by at most one.

    Exactly ``budget`` coalitions are returned, sorted by mask.  Large budgets
    are built as the full stratum minus a balanced set of the same kind.
    """
    total = binomial(n, size)
    if not 0 <= budget <= total:
        raise ValueError(f"budget {budget} outside [0, C({n},{size})={total}]")
    if budget == 0:
        return []
    if budget == total:
        return list(enumerate_stratum(n, size))
    if 2 * budget > total:
        dropped = set(_balanced_pick(n, size, total - budget, rng, node_limit))
        return [S for S in enumerate_stratum(n, size) if S not in dropped]
    return sorted(_balanced_pick(n, size, budget, rng, node_limit))


def appearance_counts(coalitions, n: int) -> list[int]:
    counts = [0] * n
    for S in coalitions:
        for c in members(int(S)):
            counts[c] += 1
    return counts


def ipss(oracle, n: int, gamma: int, rng: np.random.Generator | None = None, *, workers: int | None = None) -> Valuation:
    """Importance-pruned stratified sampling within ``gamma`` evaluations."""
    if gamma < n + 1:
        raise ValueError(f"IPSS needs gamma >= n + 1 = {n + 1}, got {gamma}")
    if rng is None:
        rng = np.random.default_rng()
    budget = k_star(n, gamma)
    ks = budget.k_star
    memo = Memoized(as_oracle(oracle, n))
    start = time.perf_counter()
    extra = balanced_extra(n, ks + 1, budget.extra, rng) if ks < n and budget.extra else []
    util = evaluate_many(memo, _strata_up_to(n, ks) + extra, workers)
    values = []
    for i in range(n):
        terms = _small_terms(util, n, i, ks, False)
        if extra:
            bit = 1 << i
            weight = 1.0 / (n * math.comb(n - 1, ks))
            terms += [(util[T] - util[T ^ bit]) * weight for T in extra if T & bit]
        values.append(math.fsum(terms))
    return Valuation(
        method="ipss",
        values=values,
        evaluations=memo.stats.evaluations,
        wall_ms=(time.perf_counter() - start) * 1e3,
        meta={
            "gamma": gamma,
            "k_star": ks,
            "extra": budget.extra,
            "extra_coalitions": [format_mask(T) for T in extra],
        },
    )
