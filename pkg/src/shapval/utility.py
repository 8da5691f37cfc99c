"""Utility oracles ``U(M_S)``.

An oracle maps a coalition mask to a finite float.  Two concrete sources are
provided: :class:`TableOracle` (a stored utility per coalition) and
:class:`RegressionOracle` (negative test MSE of a least-squares model fitted
on the pooled data of the coalition).  :class:`Memoized` adds the
single-evaluation cache every sampler relies on for its cost accounting.
"""

from __future__ import annotations

import json
import math
import threading
import time
from concurrent.futures import ThreadPoolExecutor
from dataclasses import dataclass, field
from pathlib import Path
from typing import Callable, Iterable, Mapping

import numpy as np

from .coalition import format_mask, full_mask, parse_mask
from .errors import DataError, MissingCoalitionError, TableFormatError

RIDGE = 1e-8


@dataclass
class OracleStats:
    """Counters for one oracle layer.  Updates are guarded by a lock."""

    evaluations: int = 0
    hits: int = 0
    wall_time: float = 0.0
    _lock: threading.Lock = field(default_factory=threading.Lock, repr=False, compare=False)

    def record(self, *, evaluations: int = 0, hits: int = 0, wall_time: float = 0.0) -> None:
        with self._lock:
            self.evaluations += evaluations
            self.hits += hits
            self.wall_time += wall_time

    def snapshot(self) -> dict:
        with self._lock:
            return {"evaluations": self.evaluations, "hits": self.hits, "wall_time": self.wall_time}


def _as_mask(coalition) -> int:
    return int(coalition)


class UtilityOracle:
    """Base class: subclasses implement ``_evaluate(mask) -> float``."""

    def __init__(self, n: int):
        self.n = n
        self.stats = OracleStats()

    def _evaluate(self, mask: int) -> float:
        raise NotImplementedError

    def evaluate(self, coalition) -> float:
        mask = _as_mask(coalition)
        start = time.perf_counter()
        value = float(self._evaluate(mask))
        if not math.isfinite(value):
            raise DataError(f"oracle returned {value} for coalition {format_mask(mask)}")
        self.stats.record(evaluations=1, wall_time=time.perf_counter() - start)
        return value

    __call__ = evaluate

    def _check_range(self, mask: int) -> None:
        if mask < 0 or mask >> self.n:
            raise ValueError(f"coalition {format_mask(mask)} is not a subset of {self.n} clients")


class FunctionOracle(UtilityOracle):
    """Wrap a plain ``f(mask) -> float``."""

    def __init__(self, n: int, fn: Callable[[int], float]):
        super().__init__(n)
        self.fn = fn

    def _evaluate(self, mask: int) -> float:
        self._check_range(mask)
        return self.fn(mask)


def as_oracle(oracle, n: int) -> UtilityOracle:
    if isinstance(oracle, UtilityOracle):
        if oracle.n != n:
            raise ValueError(f"oracle is defined for {oracle.n} clients, not {n}")
        return oracle
    if callable(oracle):
        return FunctionOracle(n, oracle)
    raise TypeError(f"cannot use {type(oracle).__name__} as a utility oracle")


class Memoized(UtilityOracle):
    """Cache in front of another oracle.

    Each distinct coalition reaches the inner oracle at most once, even when
    several threads ask for it at the same time; ``stats.evaluations`` counts
    those inner calls and ``stats.hits`` the cached answers.  Failed
    evaluations are not cached.
    """

    def __init__(self, inner: UtilityOracle):
        super().__init__(inner.n)
        self.inner = inner
        self._cache: dict[int, float] = {}
        self._inflight: dict[int, threading.Event] = {}
        self._lock = threading.Lock()

    def evaluate(self, coalition) -> float:
        mask = _as_mask(coalition)
        while True:
            with self._lock:
                if mask in self._cache:
                    self.stats.record(hits=1)
                    return self._cache[mask]
                event = self._inflight.get(mask)
                owner = event is None
                if owner:
                    event = self._inflight[mask] = threading.Event()
            if not owner:
                event.wait()
                continue
            start = time.perf_counter()
            try:
                value = self.inner.evaluate(mask)
            except BaseException:
                with self._lock:
                    del self._inflight[mask]
                event.set()
                raise
            with self._lock:
                self._cache[mask] = value
                del self._inflight[mask]
            self.stats.record(evaluations=1, wall_time=time.perf_counter() - start)
            event.set()
            return value

    __call__ = evaluate

    @property
    def distinct(self) -> int:
        return len(self._cache)

    def cached(self, coalition) -> bool:
        return _as_mask(coalition) in self._cache

    def table(self) -> UtilityTable:
        with self._lock:
            return UtilityTable(self.n, dict(self._cache))


def memoize(oracle: UtilityOracle) -> Memoized:
    return Memoized(oracle)


def evaluate_many(oracle: UtilityOracle, masks: Iterable[int], workers: int | None = None) -> dict[int, float]:
    """Evaluate ``masks`` (optionally on a thread pool) and return them keyed by mask.

    Completion order never matters: callers reduce over the returned mapping
    in their own canonical order.
    """
    masks = list(masks)
    if not workers or workers <= 1:
        return {m: oracle.evaluate(m) for m in masks}
    with ThreadPoolExecutor(max_workers=workers) as pool:
        values = list(pool.map(oracle.evaluate, masks))
    return dict(zip(masks, values))


# -- tables -------------------------------------------------------------------


@dataclass
class UtilityTable:
    n: int
    entries: dict[int, float]

    def __post_init__(self):
        for mask, value in self.entries.items():
            if mask < 0 or mask >> self.n:
                raise ValueError(f"coalition {format_mask(mask)} is invalid for n={self.n}")
            if not math.isfinite(value):
                raise DataError(f"non-finite utility for {format_mask(mask)}")

    @property
    def complete(self) -> bool:
        return len(self.entries) == 1 << self.n

    @classmethod
    def from_array(cls, values) -> UtilityTable:
        """Build a full table from values listed in mask order ``0 .. 2^n - 1``."""
        values = np.asarray(values, dtype=float)
        n = int(round(math.log2(len(values))))
        if 1 << n != len(values):
            raise ValueError(f"{len(values)} values is not a power of two")
        return cls(n, {m: float(v) for m, v in enumerate(values)})

    @classmethod
    def from_text(cls, n: int, mapping: Mapping[str, float]) -> UtilityTable:
        return cls(n, {parse_mask(k, n): float(v) for k, v in mapping.items()})

    def to_array(self) -> np.ndarray:
        if not self.complete:
            raise ValueError("table is incomplete")
        return np.array([self.entries[m] for m in range(1 << self.n)])

    def __eq__(self, other) -> bool:
        return isinstance(other, UtilityTable) and self.n == other.n and self.entries == other.entries


class TableOracle(UtilityOracle):
    def __init__(self, table: UtilityTable):
        if not table.entries:
            raise ValueError("utility table is empty")
        super().__init__(table.n)
        self.table = table

    def _evaluate(self, mask: int) -> float:
        try:
            return self.table.entries[mask]
        except KeyError:
            raise MissingCoalitionError(format_mask(mask)) from None


def table_oracle(table: UtilityTable) -> TableOracle:
    return TableOracle(table)


def save_table(table: UtilityTable, path) -> None:
    """Write ``{"n": .., "entries": [{"coalition": "{1,3}", "utility": ..}]}``.

    Floats go through ``repr`` (the json default), which round-trips exactly.
    """
    doc = {
        "n": table.n,
        "entries": [
            {"coalition": format_mask(m), "utility": table.entries[m]}
            for m in sorted(table.entries)
        ],
    }
    Path(path).write_text(json.dumps(doc, indent=1) + "\n", encoding="utf-8")


def load_table(path) -> UtilityTable:
    text = Path(path).read_text(encoding="utf-8")
    try:
        doc = json.loads(text)
    except json.JSONDecodeError as exc:
        raise TableFormatError(f"{path}: line {exc.lineno} column {exc.colno}: {exc.msg}") from None
    if not isinstance(doc, dict) or "n" not in doc or "entries" not in doc:
        raise TableFormatError(f"{path}: expected an object with 'n' and 'entries'")
    n = doc["n"]
    if not isinstance(n, int) or isinstance(n, bool) or not 1 <= n <= 64:
        raise TableFormatError(f"{path}: 'n' must be an integer in [1, 64], got {n!r}")
    if not isinstance(doc["entries"], list):
        raise TableFormatError(f"{path}: 'entries' must be a list")
    entries: dict[int, float] = {}
    for idx, rec in enumerate(doc["entries"]):
        where = f"{path}: entry {idx}"
        if not isinstance(rec, dict) or set(rec) != {"coalition", "utility"}:
            raise TableFormatError(f"{where}: expected keys 'coalition' and 'utility'")
        try:
            mask = parse_mask(str(rec["coalition"]), n)
        except ValueError as exc:
            raise TableFormatError(f"{where}: {exc}") from None
        value = rec["utility"]
        if isinstance(value, bool) or not isinstance(value, (int, float)) or not math.isfinite(value):
            raise TableFormatError(f"{where}: utility must be a finite number, got {value!r}")
        if mask in entries:
            raise TableFormatError(f"{where}: duplicate coalition {format_mask(mask)}")
        entries[mask] = float(value)
    return UtilityTable(n, entries)


# -- federated linear regression ---------------------------------------------


def ols_fit(features, targets, ridge: float = RIDGE) -> np.ndarray:
    """Least-squares coefficients from the normal equations.

    ``ridge`` is added to the diagonal of ``X^T X`` so rank-deficient pools
    (fewer rows than features) still have a unique answer.  An empty design
    returns the zero vector, i.e. the untrained model.
    """
    X = np.asarray(features, dtype=float)
    y = np.asarray(targets, dtype=float)
    if X.ndim != 2 or y.shape != (X.shape[0],):
        raise ValueError(f"shape mismatch: features {X.shape}, targets {y.shape}")
    if not (np.isfinite(X).all() and np.isfinite(y).all()):
        raise DataError("features or targets contain NaN or infinity")
    d = X.shape[1]
    if X.shape[0] == 0:
        return np.zeros(d)
    gram = X.T @ X
    gram[np.diag_indices(d)] += ridge
    return np.linalg.solve(gram, X.T @ y)


@dataclass
class RegressionFederation:
    """Per-client regression datasets plus the shared test set.

    ``test_targets`` are noiseless (``x . w*``), so the test MSE measures how
    far the fitted model is from the true one.
    """

    features: list[np.ndarray]
    targets: list[np.ndarray]
    test_features: np.ndarray
    test_targets: np.ndarray
    true_coef: np.ndarray
    sigma: float
    t: int
    scenario: str = "same_size_same_dist"
    meta: dict = field(default_factory=dict)

    @property
    def n(self) -> int:
        return len(self.features)

    @property
    def d(self) -> int:
        return self.test_features.shape[1]

    @property
    def sizes(self) -> list[int]:
        return [len(y) for y in self.targets]

    @property
    def m0(self) -> float:
        """MSE of the zero-coefficient (initialized) model on the test set."""
        return float(np.mean(self.test_targets**2))

    def pooled(self, mask: int) -> tuple[np.ndarray, np.ndarray]:
        idx = [i for i in range(self.n) if mask >> i & 1]
        if not idx:
            return np.zeros((0, self.d)), np.zeros(0)
        return (
            np.concatenate([self.features[i] for i in idx]),
            np.concatenate([self.targets[i] for i in idx]),
        )

    def test_mse(self, coef) -> float:
        resid = self.test_features @ np.asarray(coef) - self.test_targets
        return float(np.mean(resid**2))


class RegressionOracle(UtilityOracle):
    """``U(S) = -MSE`` on the test set of OLS fitted to the pooled data of ``S``."""

    def __init__(self, fed: RegressionFederation, ridge: float = RIDGE):
        super().__init__(fed.n)
        self.fed = fed
        self.ridge = ridge

    def _evaluate(self, mask: int) -> float:
        self._check_range(mask)
        X, y = self.fed.pooled(mask)
        return -self.fed.test_mse(ols_fit(X, y, self.ridge))


def regression_oracle(fed: RegressionFederation) -> RegressionOracle:
    return RegressionOracle(fed)


def full_table(oracle: UtilityOracle, workers: int | None = None) -> UtilityTable:
    """Evaluate all ``2^n`` coalitions."""
    values = evaluate_many(oracle, range(full_mask(oracle.n) + 1), workers)
    return UtilityTable(oracle.n, values)
