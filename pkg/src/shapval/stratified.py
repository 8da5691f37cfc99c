"""Unified stratified sampling over coalition sizes, for both pairing schemes.

Stratum ``k`` holds the coalitions of exactly ``k`` clients.  For a client
``i`` and a coalition ``S`` that contains it, the scheme decides the partner
coalition:

* ``MC``: ``S - {i}`` (marginal contribution)
* ``CC``: ``N - S`` (complementary contribution)

and the estimate is ``phi_i = (1/n) sum_k mean_k(U(S) - U(partner))``, where
a stratum in which no pair is available contributes 0.

Two sampling modes are offered:

``"shared"``
    ``m_k`` coalitions are drawn per stratum and shared by all clients; a
    pair counts only if its partner was evaluated too (the empty coalition
    always is).  Oracle cost is at most ``gamma + 1``.  Strata where a client
    finds no pair are zeroed, which biases the estimate whenever that can
    happen.

``"per_client"``
    For every client and stratum, ``m_k`` coalitions are drawn from those
    containing the client and every partner is evaluated.  No stratum is ever
    empty, so the estimate is unbiased; cost is up to about ``2 n gamma``.
"""

from __future__ import annotations

import enum
import math
import time
from dataclasses import dataclass

import numpy as np

from .coalition import binomial, full_mask, members, sample_stratum
from .exact import exact_mc_sv
from .utility import Memoized, RegressionFederation, as_oracle, evaluate_many, regression_oracle
from .valuation import Valuation

SAMPLING_MODES = ("shared", "per_client")


class Scheme(str, enum.Enum):
    MC = "MC"
    CC = "CC"

    @classmethod
    def coerce(cls, value) -> Scheme:
        if isinstance(value, cls):
            return value
        return cls(str(value).upper())


@dataclass(frozen=True)
class SamplingPlan:
    """Rounds ``m[k-1]`` for stratum ``k = 1..n``."""

    n: int
    m: tuple[int, ...]

    def __post_init__(self):
        object.__setattr__(self, "m", tuple(int(x) for x in self.m))
        if len(self.m) != self.n:
            raise ValueError(f"plan needs {self.n} strata, got {len(self.m)}")
        for k, mk in enumerate(self.m, start=1):
            if not 0 <= mk <= binomial(self.n, k):
                raise ValueError(f"m_{k}={mk} outside [0, C({self.n},{k})]")
        if self.gamma < 1:
            raise ValueError("a plan must sample at least one coalition")

    @property
    def gamma(self) -> int:
        return sum(self.m)

    @property
    def is_full(self) -> bool:
        return all(mk == binomial(self.n, k) for k, mk in enumerate(self.m, start=1))

    @classmethod
    def full(cls, n: int) -> SamplingPlan:
        return cls(n, tuple(binomial(n, k) for k in range(1, n + 1)))


def default_plan(n: int, gamma: int) -> SamplingPlan:
    """Split ``gamma`` evenly over strata ``1..n``.

    Each stratum gets ``gamma // n`` capped at its size; what is left is
    handed out one round at a time starting from the smallest uncapped
    stratum.  Budgets of ``2^n - 1`` or more give the full plan.
    """
    if gamma < 1:
        raise ValueError(f"gamma must be >= 1, got {gamma}")
    caps = [binomial(n, k) for k in range(1, n + 1)]
    if gamma >= sum(caps):
        return SamplingPlan(n, tuple(caps))
    m = [min(gamma // n, c) for c in caps]
    left = gamma - sum(m)
    while left:
        for k in range(n):
            if left and m[k] < caps[k]:
                m[k] += 1
                left -= 1
    return SamplingPlan(n, tuple(m))


def aggregate_strata(sums: np.ndarray, counts: np.ndarray) -> np.ndarray:
    """``(1/n) sum_k sums[i,k] / counts[i,k]``, counting empty strata as 0.

    ``sums`` and ``counts`` are ``(clients, strata)`` arrays; the divisor is
    the number of clients ``n`` regardless of how many strata had pairs.
    """
    sums = np.asarray(sums, dtype=float)
    counts = np.asarray(counts)
    n = sums.shape[0]
    means = np.divide(sums, counts, out=np.zeros_like(sums), where=counts > 0)
    return np.array([math.fsum(row) for row in means]) / n


def _partner(mask: int, i: int, scheme: Scheme, full: int) -> int:
    return mask & ~(1 << i) if scheme is Scheme.MC else full ^ mask


def stratified_estimate(
    oracle,
    n: int,
    plan: SamplingPlan,
    scheme=Scheme.MC,
    rng: np.random.Generator | None = None,
    *,
    sampling: str = "shared",
    workers: int | None = None,
) -> Valuation:
    """Stratified-sampling Shapley estimate; see the module docstring."""
    scheme = Scheme.coerce(scheme)
    if sampling not in SAMPLING_MODES:
        raise ValueError(f"sampling must be one of {SAMPLING_MODES}, got {sampling!r}")
    if plan.n != n:
        raise ValueError(f"plan is for {plan.n} clients, not {n}")
    if rng is None:
        rng = np.random.default_rng()
    memo = Memoized(as_oracle(oracle, n))
    full = full_mask(n)
    sums = np.zeros((n, n + 1))
    counts = np.zeros((n, n + 1), dtype=np.int64)

    start = time.perf_counter()
    if sampling == "shared":
        drawn = {k: sample_stratum(n, k, plan.m[k - 1], rng) for k in range(1, n + 1)}
        wanted = [0] + [s for k in range(1, n + 1) for s in drawn[k]]
        util = evaluate_many(memo, wanted, workers)
        for k in range(1, n + 1):
            for S in drawn[k]:
                for i in members(S):
                    partner = _partner(S, i, scheme, full)
                    if partner in util:
                        sums[i, k] += util[S] - util[partner]
                        counts[i, k] += 1
    else:
        picks: list[tuple[int, int, int]] = []
        for i in range(n):
            others = full ^ (1 << i)
            for k in range(1, n + 1):
                r = min(plan.m[k - 1], math.comb(n - 1, k - 1))
                for sub in sample_stratum(n, k - 1, r, rng, universe=others):
                    picks.append((i, k, sub | (1 << i)))
        wanted = [0]
        for i, _, S in picks:
            wanted += [S, _partner(S, i, scheme, full)]
        util = evaluate_many(memo, dict.fromkeys(wanted), workers)
        for i, k, S in picks:
            sums[i, k] += util[S] - util[_partner(S, i, scheme, full)]
            counts[i, k] += 1
    values = aggregate_strata(sums[:, 1:], counts[:, 1:])
    return Valuation(
        method=f"stratified_{scheme.value.lower()}",
        values=values,
        evaluations=memo.stats.evaluations,
        wall_ms=(time.perf_counter() - start) * 1e3,
        meta={
            "scheme": scheme.value,
            "sampling": sampling,
            "plan": list(plan.m),
            "gamma": plan.gamma,
            "pair_counts": counts[:, 1:].tolist(),
        },
    )


def repeat_rng(seed: int, repeat: int) -> np.random.Generator:
    """Independent stream for repeat ``repeat`` of a run seeded with ``seed``."""
    return np.random.default_rng([int(seed), int(repeat)])


@dataclass
class UnbiasednessReport:
    mean: np.ndarray
    stderr: np.ndarray
    exact: np.ndarray
    z: np.ndarray
    repeats: int

    @property
    def max_abs_z(self) -> float:
        return float(np.max(np.abs(self.z)))


_FLOAT_NOISE = 1e-12


def _z_scores(mean, stderr, exact):
    # A plan that covers every pair makes each run exact up to rounding; the
    # spread is then float noise and only the size of the gap matters.
    diff = mean - exact
    noise = _FLOAT_NOISE * max(1.0, float(np.max(np.abs(exact))))
    live = stderr > noise
    with np.errstate(divide="ignore", invalid="ignore"):
        z = np.where(live, diff / np.where(live, stderr, 1.0), np.where(np.abs(diff) <= noise, 0.0, np.inf))
    return np.where(np.isnan(stderr), np.nan, z)


def unbiasedness_check(
    oracle,
    n: int,
    plan: SamplingPlan,
    scheme=Scheme.MC,
    repeats: int = 1000,
    seed: int = 0,
    *,
    sampling: str = "per_client",
) -> UnbiasednessReport:
    """Compare the mean of ``repeats`` independent estimates with the exact value."""
    memo = Memoized(as_oracle(oracle, n))
    exact = exact_mc_sv(memo, n).values
    runs = np.array(
        [
            stratified_estimate(memo, n, plan, scheme, repeat_rng(seed, r), sampling=sampling).values
            for r in range(repeats)
        ]
    )
    mean = runs.mean(axis=0)
    if repeats > 1:
        stderr = runs.std(axis=0, ddof=1) / math.sqrt(repeats)
    else:
        stderr = np.full(n, np.nan)
    return UnbiasednessReport(mean, stderr, exact, _z_scores(mean, stderr, exact), repeats)


@dataclass
class VarianceReport:
    var_mc: np.ndarray
    var_cc: np.ndarray
    repeats: int

    @property
    def degenerate(self) -> bool:
        """True when fewer than two repeats make variances meaningless."""
        return self.repeats < 2

    @property
    def fraction_mc_lower(self) -> float:
        return float(np.mean(self.var_mc <= self.var_cc))


def variance_comparison(
    fed,
    plan: SamplingPlan,
    repeats: int = 100,
    seed: int = 0,
    *,
    sampling: str = "per_client",
) -> VarianceReport:
    """Empirical per-client variance of both schemes under one plan.

    ``fed`` is a :class:`RegressionFederation` or any oracle.  Both schemes
    draw from the same per-repeat streams.
    """
    oracle = regression_oracle(fed) if isinstance(fed, RegressionFederation) else fed
    n = plan.n
    memo = Memoized(as_oracle(oracle, n))
    variances = {}
    for scheme in Scheme:
        runs = np.array(
            [
                stratified_estimate(memo, n, plan, scheme, repeat_rng(seed, r), sampling=sampling).values
                for r in range(repeats)
            ]
        )
        variances[scheme] = runs.var(axis=0, ddof=1) if repeats > 1 else np.zeros(n)
    return VarianceReport(variances[Scheme.MC], variances[Scheme.CC], repeats)
