"""Method matrix, accuracy metrics and report files for valuation experiments."""

from __future__ import annotations

import csv
import hashlib
import io
import json
import math
import os
import time
from dataclasses import dataclass, field
from pathlib import Path

import numpy as np

from .baselines import cc_shapley, extended_tmc
from .errors import ConfigError, ShapvalError, UndefinedMetricError
from .exact import exact_cc_sv, exact_mc_sv, exact_perm_sv
from .pruned import ipss, k_greedy
from .scenarios import ScenarioConfig, generate
from .stratified import SAMPLING_MODES, SamplingPlan, Scheme, default_plan, stratified_estimate
from .utility import Memoized, RegressionOracle, TableOracle, load_table
from .valuation import Valuation

METHODS = ("exact_mc", "exact_cc", "exact_perm", "sample", "kgreedy", "ipss", "tmc", "ccshapley")
SAMPLING_METHODS = ("sample", "ipss", "tmc", "ccshapley")
_PARAMS = {"gamma", "K", "rounds", "trunc_tol", "scheme", "sampling", "m", "binom_n_weights"}
SEED_ENV = "SHAPVAL_SEED"


def _vector(v) -> np.ndarray:
    return np.asarray(v.values if isinstance(v, Valuation) else v, dtype=float)


def relative_error(estimate, exact) -> float:
    """``||estimate - exact||_2 / ||exact||_2``."""
    est, ref = _vector(estimate), _vector(exact)
    if est.shape != ref.shape:
        raise ValueError(f"length mismatch: {est.shape} vs {ref.shape}")
    norm = float(np.linalg.norm(ref))
    if norm == 0.0:
        raise UndefinedMetricError("relative error is undefined for an all-zero reference")
    return float(np.linalg.norm(est - ref)) / norm


def fairness_proxies(estimate, null_clients=(), duplicate_pairs=()) -> dict:
    """Largest value given to a data-less client and largest gap between duplicates.

    A proxy whose designation set is empty is reported as ``None``.
    """
    v = _vector(estimate)
    nulls = list(null_clients)
    pairs = [tuple(p) for p in duplicate_pairs]
    return {
        "free_rider_error": max(abs(float(v[j])) for j in nulls) if nulls else None,
        "symmetry_error": max(abs(float(v[i] - v[j])) for i, j in pairs) if pairs else None,
    }


@dataclass
class MethodSpec:
    name: str
    params: dict = field(default_factory=dict)
    label: str = ""

    def __post_init__(self):
        if self.name not in METHODS:
            raise ConfigError(f"unknown method {self.name!r}; expected one of {', '.join(METHODS)}")
        unknown = set(self.params) - _PARAMS
        if unknown:
            raise ConfigError(f"method {self.name}: unknown parameters {', '.join(sorted(unknown))}")
        if not self.label:
            self.label = self.name

    @classmethod
    def from_dict(cls, doc) -> MethodSpec:
        if isinstance(doc, str):
            return cls(doc)
        doc = dict(doc)
        name = doc.pop("name", None)
        if name is None:
            raise ConfigError("every method entry needs a 'name'")
        label = doc.pop("label", "")
        params = doc.pop("params", {})
        params = {**params, **doc}
        return cls(name, params, label)

    def to_dict(self) -> dict:
        return {"name": self.name, "label": self.label, **self.params}


@dataclass
class ExperimentConfig:
    methods: list[MethodSpec]
    scenario: ScenarioConfig | None = None
    table: str | None = None
    repeats: int = 1
    seed: int = 0
    out: str | None = None
    exact: bool = True

    def __post_init__(self):
        if not self.methods:
            raise ConfigError("at least one method is required")
        if (self.scenario is None) == (self.table is None):
            raise ConfigError("give exactly one of 'scenario' or 'table'")
        if self.repeats < 1:
            raise ConfigError(f"repeats must be >= 1, got {self.repeats}")
        labels = [m.label for m in self.methods]
        if len(set(labels)) != len(labels):
            raise ConfigError("method labels must be unique; add 'label' to repeated methods")

    @classmethod
    def from_dict(cls, doc: dict, base_dir=None) -> ExperimentConfig:
        known = {"methods", "scenario", "table", "repeats", "seed", "out", "exact"}
        unknown = set(doc) - known
        if unknown:
            raise ConfigError(f"unknown config fields: {', '.join(sorted(unknown))}")
        scenario = doc.get("scenario")
        if isinstance(scenario, dict):
            scenario = ScenarioConfig.from_dict(scenario)
        table = doc.get("table")
        if table is not None and base_dir is not None and not os.path.isabs(table):
            table = str(Path(base_dir) / table)
        return cls(
            methods=[MethodSpec.from_dict(m) for m in doc.get("methods", [])],
            scenario=scenario,
            table=table,
            repeats=int(doc.get("repeats", 1)),
            seed=int(doc.get("seed", 0)),
            out=doc.get("out"),
            exact=bool(doc.get("exact", True)),
        )

    @classmethod
    def load(cls, path) -> ExperimentConfig:
        try:
            doc = json.loads(Path(path).read_text(encoding="utf-8"))
        except (OSError, json.JSONDecodeError) as exc:
            raise ConfigError(f"cannot read config {path}: {exc}") from None
        config = cls.from_dict(doc, base_dir=Path(path).parent)
        if os.environ.get(SEED_ENV):
            try:
                config.seed = int(os.environ[SEED_ENV])
            except ValueError:
                raise ConfigError(f"{SEED_ENV} must be an integer") from None
        return config

    def to_dict(self) -> dict:
        return {
            "methods": [m.to_dict() for m in self.methods],
            "scenario": self.scenario.to_dict() if self.scenario else None,
            "table": self.table,
            "repeats": self.repeats,
            "seed": self.seed,
            "exact": self.exact,
        }


def stream_seed(seed: int, label: str, repeat: int) -> int:
    """64-bit seed for one (base seed, method label, repeat) cell."""
    digest = hashlib.sha256(f"{seed}/{label}/{repeat}".encode()).digest()
    return int.from_bytes(digest[:8], "little")


def build_oracle(config: ExperimentConfig):
    """Return ``(oracle, n, null_clients, duplicate_pairs)`` for the configured source."""
    if config.table is not None:
        table = load_table(config.table)
        return TableOracle(table), table.n, [], []
    scen = config.scenario
    fed = generate(scen)
    return RegressionOracle(fed), fed.n, list(scen.null_clients), [tuple(p) for p in scen.duplicates]


def run_method(spec: MethodSpec, oracle, n: int, rng: np.random.Generator) -> Valuation:
    p = spec.params
    name = spec.name
    if name == "exact_mc":
        return exact_mc_sv(oracle, n)
    if name == "exact_cc":
        return exact_cc_sv(oracle, n)
    if name == "exact_perm":
        return exact_perm_sv(oracle, n)
    if name == "kgreedy":
        return k_greedy(oracle, n, int(p.get("K", 2)), binom_n_weights=bool(p.get("binom_n_weights", False)))
    if name == "ipss":
        return ipss(oracle, n, _gamma(p, n), rng)
    if name == "ccshapley":
        return cc_shapley(oracle, n, _gamma(p, n), rng)
    if name == "tmc":
        return extended_tmc(oracle, n, int(p.get("rounds", n)), p.get("trunc_tol"), rng)
    if name == "sample":
        plan = SamplingPlan(n, p["m"]) if "m" in p else default_plan(n, _gamma(p, n))
        sampling = p.get("sampling", "shared")
        if sampling not in SAMPLING_MODES:
            raise ConfigError(f"sampling must be one of {SAMPLING_MODES}")
        return stratified_estimate(oracle, n, plan, Scheme.coerce(p.get("scheme", "MC")), rng, sampling=sampling)
    raise ConfigError(f"unknown method {name!r}")


def _gamma(params: dict, n: int) -> int:
    if "gamma" not in params:
        raise ConfigError("this method needs a 'gamma' budget")
    return int(params["gamma"])


def method_budget(spec: MethodSpec, n: int) -> int | None:
    """Evaluation cap a sampling run must respect, or ``None`` when unbounded."""
    if spec.name in ("ipss",):
        return _gamma(spec.params, n)
    if spec.name == "ccshapley" or (spec.name == "sample" and spec.params.get("sampling", "shared") == "shared"):
        gamma = sum(spec.params["m"]) if "m" in spec.params else _gamma(spec.params, n)
        return gamma + 1
    return None


class ExperimentFailure(ShapvalError):
    def __init__(self, method: str, repeat: int, cause: Exception):
        self.method, self.repeat, self.cause = method, repeat, cause
        super().__init__(f"method {method!r} failed on repeat {repeat}: {type(cause).__name__}: {cause}")


@dataclass
class ExperimentReport:
    config: dict
    n: int
    exact: list[float] | None
    rows: list[dict]
    aggregates: list[dict]

    def to_dict(self, wall_time: bool = True) -> dict:
        rows = self.rows
        aggs = self.aggregates
        if not wall_time:
            rows = [{k: v for k, v in r.items() if k != "wall_ms"} for r in rows]
            aggs = [{k: v for k, v in a.items() if k != "mean_wall_ms"} for a in aggs]
        return {"config": self.config, "n": self.n, "exact": self.exact, "rows": rows, "aggregates": aggs}

    def to_json(self, wall_time: bool = True) -> str:
        return json.dumps(self.to_dict(wall_time), indent=1, sort_keys=True) + "\n"

    def aggregates_csv(self) -> str:
        cols = ["method", "runs", "mean_relative_error", "error_variance", "mean_evaluations", "mean_wall_ms",
                "mean_free_rider_error", "mean_symmetry_error"]
        buf = io.StringIO()
        writer = csv.DictWriter(buf, fieldnames=cols, lineterminator="\n")
        writer.writeheader()
        for agg in self.aggregates:
            writer.writerow({c: "" if agg.get(c) is None else agg.get(c) for c in cols})
        return buf.getvalue()

    def write(self, out_dir) -> None:
        out = Path(out_dir)
        out.mkdir(parents=True, exist_ok=True)
        (out / "report.json").write_text(self.to_json(), encoding="utf-8")
        (out / "aggregates.csv").write_text(self.aggregates_csv(), encoding="utf-8")


def _mean(xs):
    xs = [x for x in xs if x is not None]
    return math.fsum(xs) / len(xs) if xs else None


def aggregate_rows(rows: list[dict], labels: list[str]) -> list[dict]:
    """Per-method summary; every field is a plain function of ``rows``."""
    out = []
    for label in labels:
        mine = [r for r in rows if r["method"] == label]
        errors = [r.get("relative_error") for r in mine]
        errors = [e for e in errors if e is not None]
        mean_err = _mean(errors)
        out.append({
            "method": label,
            "runs": len(mine),
            "mean_relative_error": mean_err,
            "error_variance": math.fsum((e - mean_err) ** 2 for e in errors) / len(errors) if errors else None,
            "mean_evaluations": _mean([r["evaluations"] for r in mine]),
            "mean_wall_ms": _mean([r["wall_ms"] for r in mine]),
            "mean_free_rider_error": _mean([r.get("free_rider_error") for r in mine]),
            "mean_symmetry_error": _mean([r.get("symmetry_error") for r in mine]),
        })
    return out


def run_experiment(config: ExperimentConfig, write: bool = True, log=None) -> ExperimentReport:
    """Run every method ``repeats`` times and assemble the report.

    Each (method label, repeat) cell gets its own random stream, so adding or
    re-parameterising one method never changes another's output.
    """
    base, n, nulls, dups = build_oracle(config)
    shared = Memoized(base)
    exact = None
    if config.exact:
        exact = exact_mc_sv(shared, n).values
    rows = []
    for spec in config.methods:
        for r in range(config.repeats):
            stream = stream_seed(config.seed, spec.label, r)
            run_oracle = Memoized(shared)
            start = time.perf_counter()
            try:
                val = run_method(spec, run_oracle, n, np.random.default_rng(stream))
            except Exception as exc:
                raise ExperimentFailure(spec.label, r, exc) from exc
            wall_ms = (time.perf_counter() - start) * 1e3
            row = {
                "method": spec.label,
                "name": spec.name,
                "repeat": r,
                "stream": stream,
                "values": [float(v) for v in val.values],
                "evaluations": run_oracle.stats.evaluations,
                "wall_ms": wall_ms,
            }
            for key in ("k_star", "extra", "scheme", "sampling", "plan", "rounds", "K"):
                if key in val.meta:
                    row[key] = val.meta[key]
            if exact is not None:
                try:
                    row["relative_error"] = relative_error(val, exact)
                except UndefinedMetricError:
                    row["relative_error"] = None
            if nulls or dups:
                row.update(fairness_proxies(val, nulls, dups))
            rows.append(row)
            if log:
                log(f"{spec.label} repeat {r}: {val.evaluations} evaluations")
    report = ExperimentReport(
        config=config.to_dict(),
        n=n,
        exact=None if exact is None else [float(v) for v in exact],
        rows=rows,
        aggregates=aggregate_rows(rows, [m.label for m in config.methods]),
    )
    if write and config.out:
        report.write(config.out)
    return report


def pareto_sweep(config: ExperimentConfig, gamma_grid) -> list[dict]:
    """Mean error, time and evaluations per (method, gamma), sorted by gamma.

    Only sampling methods are allowed.  ``tmc`` receives
    ``max(1, gamma // n)`` permutation rounds so its evaluation count is of
    the same order as the budget.
    """
    bad = [m.name for m in config.methods if m.name not in SAMPLING_METHODS]
    if bad:
        raise ConfigError(f"pareto sweeps take sampling methods only, got {', '.join(bad)}")
    grid = sorted({int(g) for g in gamma_grid})
    if not grid:
        raise ConfigError("gamma grid is empty")
    rows = []
    n = config.scenario.n if config.scenario else load_table(config.table).n
    for gamma in grid:
        methods = []
        for m in config.methods:
            params = dict(m.params)
            if m.name == "tmc":
                params["rounds"] = max(1, gamma // n)
            else:
                params.pop("m", None)
                params["gamma"] = gamma
            methods.append(MethodSpec(m.name, params, m.label))
        sub = ExperimentConfig(methods=methods, scenario=config.scenario, table=config.table,
                               repeats=config.repeats, seed=config.seed, exact=True)
        report = run_experiment(sub, write=False)
        for agg in report.aggregates:
            rows.append({
                "method": agg["method"],
                "gamma": gamma,
                "mean_error": agg["mean_relative_error"],
                "mean_time": agg["mean_wall_ms"],
                "mean_evals": agg["mean_evaluations"],
            })
    return rows


def pareto_csv(rows: list[dict]) -> str:
    buf = io.StringIO()
    writer = csv.DictWriter(buf, fieldnames=["method", "gamma", "mean_error", "mean_time", "mean_evals"],
                            lineterminator="\n")
    writer.writeheader()
    writer.writerows(rows)
    return buf.getvalue()
