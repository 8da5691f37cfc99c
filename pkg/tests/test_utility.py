import json
import threading
import time

import numpy as np
import pytest

from shapval import (
    FunctionOracle,
    Memoized,
    MissingCoalitionError,
    ScenarioConfig,
    TableFormatError,
    UtilityTable,
    exact_mc_sv,
    generate,
    load_table,
    ols_fit,
    regression_oracle,
    save_table,
    table_oracle,
)
from shapval.coalition import full_mask, parse_mask
from shapval.errors import DataError
from shapval.theory import expected_mse
from shapval.utility import evaluate_many, full_table

from conftest import TABLE1, random_table


class TestTableOracle:
    def test_lookup(self, table1):
        assert table1.evaluate(parse_mask("{1,2}")) == 0.80
        assert table1.evaluate(0) == 0.10

    def test_missing_names_coalition(self, table1):
        with pytest.raises(MissingCoalitionError, match=r"\{1,2,3,4\}"):
            table1.evaluate(parse_mask("{1,2,3,4}"))

    def test_empty_table_rejected(self):
        with pytest.raises(ValueError):
            table_oracle(UtilityTable(3, {}))

    def test_non_finite_rejected(self):
        with pytest.raises(DataError):
            UtilityTable(1, {0: 0.0, 1: float("nan")})

    def test_oracle_never_leaks_nan(self):
        o = FunctionOracle(2, lambda m: float("inf"))
        with pytest.raises(DataError):
            o.evaluate(1)


class TestOls:
    def test_interpolates_square_system(self):
        rng = np.random.default_rng(0)
        X = rng.standard_normal((5, 5))
        y = X @ rng.standard_normal(5)
        coef = ols_fit(X, y)
        assert np.mean((X @ coef - y) ** 2) < 1e-9

    def test_empty_is_zero_model(self):
        assert np.array_equal(ols_fit(np.zeros((0, 4)), np.zeros(0)), np.zeros(4))

    def test_first_order_optimality(self):
        rng = np.random.default_rng(1)
        X = rng.standard_normal((200, 5))
        y = X @ rng.standard_normal(5) + rng.standard_normal(200)
        coef = ols_fit(X, y)
        grad = X.T @ (X @ coef - y) + 1e-8 * coef
        assert np.linalg.norm(grad) < 1e-6

    def test_rank_deficient_stays_finite(self):
        X = np.ones((2, 5))
        assert np.isfinite(ols_fit(X, np.ones(2))).all()

    def test_non_finite_input(self):
        with pytest.raises(DataError):
            ols_fit(np.array([[np.nan]]), np.array([1.0]))


class TestRegressionOracle:
    def test_noiseless_recovery(self):
        fed = generate(ScenarioConfig(n=3, t=10, d=5, sigma=0.0, seed=4))
        o = regression_oracle(fed)
        assert abs(o.evaluate(0b001)) < 1e-6
        assert abs(o.evaluate(0b111)) < 1e-6

    def test_empty_is_minus_m0(self):
        fed = generate(ScenarioConfig(n=3, seed=2))
        assert regression_oracle(fed).evaluate(0) == -fed.m0
        assert fed.m0 == np.mean(fed.test_targets**2)

    def test_deterministic(self):
        cfg = ScenarioConfig(n=4, seed=9)
        a = full_table(regression_oracle(generate(cfg)))
        b = full_table(regression_oracle(generate(cfg)))
        assert a == b

    def test_out_of_range_mask(self):
        o = regression_oracle(generate(ScenarioConfig(n=3)))
        with pytest.raises(ValueError):
            o.evaluate(0b1000)

    @pytest.mark.slow
    def test_expected_mse_model(self):
        # 100 pooled samples, d=5, unit noise variance
        mses = []
        for seed in range(2000):
            fed = generate(ScenarioConfig(n=4, t=25, d=5, sigma=1.0, seed=seed))
            mses.append(-regression_oracle(fed).evaluate(0b1111))
        assert abs(np.mean(mses) / expected_mse(100, 5, 1.0) - 1) < 0.15

    def test_residual_sum_variance_grows_with_t(self):
        def spread(t):
            sums = []
            for seed in range(500):
                rng = np.random.default_rng([t, seed])
                X = rng.standard_normal((t, 5))
                y = X @ np.ones(5) + rng.standard_normal(t)
                sums.append(np.abs(y - X @ ols_fit(X, y)).sum())
            return np.var(sums)

        assert spread(200) > spread(50)


class TestMemoized:
    def test_single_inner_call(self, table1):
        memo = Memoized(table1)
        assert memo.evaluate(3) == memo.evaluate(3) == 0.80
        assert memo.stats.evaluations == 1 and memo.stats.hits == 1
        memo.evaluate(4)
        assert memo.stats.evaluations == 2 and memo.distinct == 2

    def test_exact_solver_touches_each_coalition_once(self):
        memo = Memoized(table_oracle(random_table(8, np.random.default_rng(0))))
        exact_mc_sv(memo, 8)
        assert memo.stats.evaluations == 256

    def test_errors_not_cached(self):
        calls = []

        def flaky(mask):
            calls.append(mask)
            if len(calls) == 1:
                raise RuntimeError("transient")
            return 1.0

        memo = Memoized(FunctionOracle(2, flaky))
        with pytest.raises(RuntimeError):
            memo.evaluate(1)
        assert not memo.cached(1)
        assert memo.evaluate(1) == 1.0
        assert len(calls) == 2

    def test_concurrent_requests_evaluate_once(self):
        calls = []
        lock = threading.Lock()

        def slow(mask):
            with lock:
                calls.append(mask)
            time.sleep(0.01)
            return float(mask)

        memo = Memoized(FunctionOracle(6, slow))
        out = evaluate_many(memo, [m % 16 for m in range(256)], workers=16)
        assert sorted(calls) == list(range(16))
        assert all(v == float(m) for m, v in out.items())
        assert memo.stats.evaluations == 16 and memo.stats.hits == 240


class TestPersistence:
    def test_roundtrip(self, tmp_path):
        table = UtilityTable.from_array(TABLE1)
        save_table(table, tmp_path / "t.json")
        assert load_table(tmp_path / "t.json") == table

    def test_full_precision(self, tmp_path):
        table = random_table(5, np.random.default_rng(3))
        save_table(table, tmp_path / "t.json")
        assert load_table(tmp_path / "t.json").entries == table.entries

    def test_duplicate_record(self, tmp_path):
        doc = {"n": 2, "entries": [{"coalition": "{1}", "utility": 0.1}, {"coalition": "{1}", "utility": 0.2}]}
        (tmp_path / "d.json").write_text(json.dumps(doc))
        with pytest.raises(TableFormatError, match="entry 1"):
            load_table(tmp_path / "d.json")

    def test_syntax_error_has_position(self, tmp_path):
        (tmp_path / "bad.json").write_text('{"n": 2,\n "entries": [}')
        with pytest.raises(TableFormatError, match="line 2"):
            load_table(tmp_path / "bad.json")

    @pytest.mark.parametrize(
        "doc",
        [
            {"n": 0, "entries": []},
            {"n": 2, "entries": [{"coalition": "{3}", "utility": 0.1}]},
            {"n": 2, "entries": [{"coalition": "{1}", "utility": "x"}]},
            {"n": 2, "entries": [{"coalition": "{1}"}]},
            {"entries": []},
        ],
    )
    def test_malformed_records(self, tmp_path, doc):
        (tmp_path / "m.json").write_text(json.dumps(doc))
        with pytest.raises(TableFormatError):
            load_table(tmp_path / "m.json")

    def test_partial_table(self, tmp_path):
        # ten coalitions of a four-client game: sizes 0 and 1 plus five pairs
        texts = ["{}", "{1}", "{2}", "{3}", "{4}", "{1,2}", "{1,3}", "{1,4}", "{2,4}", "{3,4}"]
        doc = {"n": 4, "entries": [{"coalition": c, "utility": 0.1 * i} for i, c in enumerate(texts)]}
        (tmp_path / "p.json").write_text(json.dumps(doc))
        table = load_table(tmp_path / "p.json")
        assert len(table.entries) == 10
        assert not table.complete
        assert UtilityTable.from_array(TABLE1).complete

    def test_to_array(self):
        assert list(UtilityTable.from_array(TABLE1).to_array()) == TABLE1
        with pytest.raises(ValueError):
            UtilityTable(2, {0: 0.0}).to_array()
        assert full_mask(3) + 1 == len(TABLE1)
