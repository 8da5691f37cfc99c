"""Coalitions as bitmasks, plus the exact combinatorics the solvers share.

Client ``i`` (0-based) is bit ``1 << i``.  Every solver works on plain ``int``
masks internally; :class:`Coalition` is the validated, printable wrapper used
at API boundaries.  Text forms are 1-based, e.g. ``"{1,3}"``.
"""

from __future__ import annotations

import math
import re
from dataclasses import dataclass
from typing import Iterator

import numpy as np

MAX_CLIENTS = 64
_UINT64_MAX = (1 << 64) - 1


def full_mask(n: int) -> int:
    return (1 << n) - 1


def popcount(mask: int) -> int:
    return bin(mask).count("1")


def members(mask: int) -> list[int]:
    """0-based client indices set in ``mask``, ascending."""
    out = []
    i = 0
    while mask:
        if mask & 1:
            out.append(i)
        mask >>= 1
        i += 1
    return out


def mask_of(indices) -> int:
    m = 0
    for i in indices:
        m |= 1 << int(i)
    return m


def format_mask(mask: int) -> str:
    return "{" + ",".join(str(i + 1) for i in members(mask)) + "}"


_TEXT_RE = re.compile(r"^\{\s*(\d+(\s*,\s*\d+)*)?\s*\}$")


def parse_mask(text: str, n: int | None = None) -> int:
    """Parse ``"{1,3}"`` into a mask.  Raises ``ValueError`` on bad input."""
    m = _TEXT_RE.match(text.strip())
    if not m:
        raise ValueError(f"malformed coalition text {text!r}")
    body = text.strip()[1:-1].strip()
    mask = 0
    if body:
        for tok in body.split(","):
            idx = int(tok) - 1
            if idx < 0 or (n is not None and idx >= n):
                raise ValueError(f"client id {idx + 1} out of range in {text!r}")
            if mask >> idx & 1:
                raise ValueError(f"client id {idx + 1} repeated in {text!r}")
            mask |= 1 << idx
    return mask


def _check_n(n: int) -> None:
    if not 1 <= n <= MAX_CLIENTS:
        raise ValueError(f"client count must lie in [1, {MAX_CLIENTS}], got {n}")


@dataclass(frozen=True, order=True)
class Coalition:
    """An immutable subset of the ``n`` clients."""

    members: int
    n: int

    def __post_init__(self):
        _check_n(self.n)
        if self.members < 0 or self.members >> self.n:
            raise ValueError(f"mask {self.members:#x} has bits outside {self.n} clients")

    @classmethod
    def from_indices(cls, indices, n: int) -> Coalition:
        return cls(mask_of(indices), n)

    @classmethod
    def parse(cls, text: str, n: int) -> Coalition:
        return cls(parse_mask(text, n), n)

    @classmethod
    def empty(cls, n: int) -> Coalition:
        return cls(0, n)

    @classmethod
    def grand(cls, n: int) -> Coalition:
        return cls(full_mask(n), n)

    @property
    def size(self) -> int:
        return popcount(self.members)

    def indices(self) -> list[int]:
        return members(self.members)

    def complement(self) -> Coalition:
        return Coalition(full_mask(self.n) ^ self.members, self.n)

    def __contains__(self, i: int) -> bool:
        return bool(self.members >> i & 1)

    def with_client(self, i: int) -> Coalition:
        return Coalition(self.members | (1 << i), self.n)

    def without_client(self, i: int) -> Coalition:
        return Coalition(self.members & ~(1 << i), self.n)

    def __int__(self) -> int:
        return self.members

    def __index__(self) -> int:
        return self.members

    def __str__(self) -> str:
        return format_mask(self.members)


def binomial(n: int, k: int) -> int:
    """Exact ``C(n, k)`` for ``0 <= k <= n <= 64``.

    Raises ``ValueError`` outside the domain and ``OverflowError`` if the
    result does not fit an unsigned 64-bit word (it always does for n <= 64,
    the check guards callers that lift the cap).
    """
    if n < 0 or k < 0:
        raise ValueError(f"binomial needs non-negative arguments, got ({n}, {k})")
    if k > n:
        raise ValueError(f"binomial({n}, {k}): k exceeds n")
    if n > MAX_CLIENTS:
        raise ValueError(f"binomial: n={n} exceeds the {MAX_CLIENTS}-client cap")
    value = math.comb(n, k)
    if value > _UINT64_MAX:
        raise OverflowError(f"binomial({n}, {k}) does not fit 64 bits")
    return value


def enumerate_stratum(n: int, k: int) -> Iterator[int]:
    """Yield every size-``k`` mask over ``n`` clients in ascending order.

    Gosper's hack walks the masks in increasing numeric order, which is
    also colexicographic order on the member sets.
    """
    _check_n(n)
    if not 0 <= k <= n:
        raise ValueError(f"stratum size {k} outside [0, {n}]")
    if k == 0:
        yield 0
        return
    mask = (1 << k) - 1
    limit = 1 << n
    while mask < limit:
        yield mask
        low = mask & -mask
        ripple = mask + low
        mask = (((ripple ^ mask) >> 2) // low) | ripple


def unrank_colex(rank: int, n: int, k: int) -> int:
    """Mask at position ``rank`` of :func:`enumerate_stratum` ``(n, k)``.

    Uses the combinatorial number system: ``rank = sum_j C(c_j, j)`` with
    ``c_k > ... > c_1 >= 0``.
    """
    if not 0 <= rank < math.comb(n, k):
        raise ValueError(f"rank {rank} outside stratum ({n}, {k})")
    mask = 0
    c = n
    for j in range(k, 0, -1):
        c -= 1
        while math.comb(c, j) > rank:
            c -= 1
        mask |= 1 << c
        rank -= math.comb(c, j)
    return mask


def rank_colex(mask: int) -> int:
    """Inverse of :func:`unrank_colex`."""
    return sum(math.comb(c, j) for j, c in enumerate(members(mask), start=1))


def sample_stratum(
    n: int, k: int, count: int, rng: np.random.Generator, universe: int | None = None
) -> list[int]:
    """Draw ``count`` distinct size-``k`` masks uniformly, without replacement.

    With ``universe`` set, the masks are drawn from subsets of that mask
    instead of all ``n`` clients.  The result is sorted ascending.
    """
    if universe is None:
        universe = full_mask(n)
    pool = members(universe)
    total = math.comb(len(pool), k)
    if not 0 <= count <= total:
        raise ValueError(f"cannot draw {count} coalitions from a stratum of {total}")
    if count == 0:
        return []
    ranks = rng.choice(total, size=count, replace=False) if total > 1 else [0]
    out = []
    for r in ranks:
        local = unrank_colex(int(r), len(pool), k)
        out.append(mask_of(pool[j] for j in members(local)))
    out.sort()
    return out


def sample_coalition(n: int, k: int, rng: np.random.Generator) -> Coalition:
    """One uniform draw from the size-``k`` stratum."""
    _check_n(n)
    if not 0 <= k <= n:
        raise ValueError(f"stratum size {k} outside [0, {n}]")
    if k == 0:
        return Coalition(0, n)
    picks = rng.choice(n, size=k, replace=False)
    return Coalition(mask_of(picks), n)


def random_permutation(n: int, rng: np.random.Generator) -> list[int]:
    """Uniform ordering of the 0-based client ids."""
    _check_n(n)
    return [int(i) for i in rng.permutation(n)]


def stratum_sizes(mask_count: int) -> np.ndarray:
    """Popcount of every mask in ``range(mask_count)`` as an int array."""
    masks = np.arange(mask_count, dtype=np.int64)
    sizes = np.zeros(mask_count, dtype=np.int64)
    while masks.any():
        sizes += masks & 1
        masks >>= 1
    return sizes
