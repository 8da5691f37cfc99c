"""Synthetic regression federations for the five partition scenarios.

=========================  ==================================================
``same_size_same_dist``    every client draws ``t`` i.i.d. samples
``same_size_diff_dist``    each client's features are shifted by its own mean
``diff_size_same_dist``    sizes in ratio ``1:2:...:n``, ``n*t`` samples total
``same_size_noisy_label``  a ``noise_level`` share of each client's targets is
                           replaced by fresh draws from the target marginal
``same_size_noisy_feature`` ``noise_level * N(0, 1)`` added to the features
=========================  ==================================================

Features are standard Gaussian, targets ``x . w* + N(0, sigma^2)``; the test
set holds ``10 * d * n`` noiseless samples.  Scenario-specific perturbations
draw from their own random stream, so at ``noise_level=0`` the noisy
scenarios reproduce the plain one exactly.
"""

from __future__ import annotations

import copy
from dataclasses import asdict, dataclass, field

import numpy as np

from .coalition import MAX_CLIENTS
from .errors import ConfigError
from .utility import RegressionFederation

SCENARIOS = (
    "same_size_same_dist",
    "same_size_diff_dist",
    "diff_size_same_dist",
    "same_size_noisy_label",
    "same_size_noisy_feature",
)
_ALIASES = dict(zip("abcde", SCENARIOS))
MAX_NOISE = 0.20
TEST_ROWS_PER_FEATURE_CLIENT = 10


@dataclass
class ScenarioConfig:
    scenario: str = "same_size_same_dist"
    n: int = 6
    t: int = 80
    d: int = 5
    sigma: float = 1.0
    noise_level: float = 0.0
    seed: int = 0
    shift_scale: float = 1.0
    null_clients: list[int] = field(default_factory=list)
    duplicates: list[tuple[int, int]] = field(default_factory=list)

    def __post_init__(self):
        self.scenario = _ALIASES.get(self.scenario, self.scenario)
        if self.scenario not in SCENARIOS:
            raise ConfigError(f"unknown scenario {self.scenario!r}; expected one of {', '.join(SCENARIOS)}")
        if not 1 <= self.n <= MAX_CLIENTS:
            raise ConfigError(f"n must lie in [1, {MAX_CLIENTS}], got {self.n}")
        if self.t < 1 or self.d < 1:
            raise ConfigError(f"t and d must be positive, got t={self.t}, d={self.d}")
        if self.sigma < 0:
            raise ConfigError(f"sigma must be >= 0, got {self.sigma}")
        if not 0.0 <= self.noise_level <= MAX_NOISE:
            raise ConfigError(f"noise_level must lie in [0, {MAX_NOISE}], got {self.noise_level}")
        self.duplicates = [tuple(p) for p in self.duplicates]
        for j in list(self.null_clients) + [c for p in self.duplicates for c in p]:
            if not 0 <= j < self.n:
                raise ConfigError(f"client index {j} out of range for n={self.n}")

    @classmethod
    def from_dict(cls, doc: dict) -> ScenarioConfig:
        known = set(cls.__dataclass_fields__)
        unknown = set(doc) - known
        if unknown:
            raise ConfigError(f"unknown scenario fields: {', '.join(sorted(unknown))}")
        return cls(**doc)

    def to_dict(self) -> dict:
        out = asdict(self)
        out["duplicates"] = [list(p) for p in self.duplicates]
        return out


def proportional_sizes(n: int, t: int) -> list[int]:
    """Sizes in ratio ``1:2:...:n`` summing to ``n*t``; rounding slack goes to the largest."""
    total = n * t
    weight = n * (n + 1) // 2
    sizes = [total * (i + 1) // weight for i in range(n)]
    sizes[-1] += total - sum(sizes)
    return sizes


def generate(config: ScenarioConfig) -> RegressionFederation:
    """Build the federation described by ``config`` (deterministic in its seed)."""
    base_seq, aux_seq = np.random.SeedSequence(config.seed).spawn(2)
    rng = np.random.default_rng(base_seq)
    aux = np.random.default_rng(aux_seq)
    n, d, sigma = config.n, config.d, config.sigma

    coef = rng.standard_normal(d)
    if config.scenario == "diff_size_same_dist":
        sizes = proportional_sizes(n, config.t)
    else:
        sizes = [config.t] * n
    features, noise = [], []
    for size in sizes:
        features.append(rng.standard_normal((size, d)))
        noise.append(sigma * rng.standard_normal(size))
    test_x = rng.standard_normal((TEST_ROWS_PER_FEATURE_CLIENT * d * n, d))
    test_y = test_x @ coef

    if config.scenario == "same_size_diff_dist":
        for c in range(n):
            features[c] = features[c] + config.shift_scale * aux.standard_normal(d)
    targets = [X @ coef + e for X, e in zip(features, noise)]

    if config.scenario == "same_size_noisy_label":
        for c in range(n):
            k = int(round(config.noise_level * sizes[c]))
            if k:
                idx = aux.choice(sizes[c], size=k, replace=False)
                fresh = aux.standard_normal((k, d)) @ coef + sigma * aux.standard_normal(k)
                targets[c][idx] = fresh
    elif config.scenario == "same_size_noisy_feature":
        for c in range(n):
            features[c] = features[c] + config.noise_level * aux.standard_normal(features[c].shape)

    fed = RegressionFederation(
        features=features,
        targets=targets,
        test_features=test_x,
        test_targets=test_y,
        true_coef=coef,
        sigma=sigma,
        t=config.t,
        scenario=config.scenario,
        meta={"config": config.to_dict()},
    )
    for j in config.null_clients:
        fed = with_null_client(fed, j)
    for i, j in config.duplicates:
        fed = with_duplicate(fed, i, j)
    return fed


def _check_index(fed: RegressionFederation, *idx: int) -> None:
    for i in idx:
        if not 0 <= i < fed.n:
            raise IndexError(f"client {i} out of range for {fed.n} clients")


def with_null_client(fed: RegressionFederation, j: int) -> RegressionFederation:
    """Copy of ``fed`` where client ``j`` holds no data."""
    _check_index(fed, j)
    out = copy.copy(fed)
    out.features = list(fed.features)
    out.targets = list(fed.targets)
    out.features[j] = np.zeros((0, fed.d))
    out.targets[j] = np.zeros(0)
    out.meta = {**fed.meta, "null_clients": sorted(set(fed.meta.get("null_clients", [])) | {j})}
    return out


def with_duplicate(fed: RegressionFederation, i: int, j: int) -> RegressionFederation:
    """Copy of ``fed`` where client ``j`` holds a copy of client ``i``'s data."""
    _check_index(fed, i, j)
    if i == j:
        raise ValueError("a client cannot duplicate itself")
    out = copy.copy(fed)
    out.features = list(fed.features)
    out.targets = list(fed.targets)
    out.features[j] = fed.features[i].copy()
    out.targets[j] = fed.targets[i].copy()
    out.meta = {**fed.meta, "duplicates": list(fed.meta.get("duplicates", [])) + [[i, j]]}
    return out
