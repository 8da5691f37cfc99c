import numpy as np
import pytest

from shapval import (
    ScenarioConfig,
    cc_shapley,
    exact_perm_sv,
    extended_tmc,
    generate,
    regression_oracle,
    table_oracle,
)
from shapval.utility import Memoized

from conftest import TABLE1_SV, random_table


def test_exhaustive_walk_matches_permutation_sv(table1):
    v = extended_tmc(table1, 3, 1, trunc_tol=0.0, exhaustive=True)
    assert np.allclose(v.values, exact_perm_sv(table1, 3).values, atol=1e-10)
    assert v.meta["rounds"] == 6


@pytest.mark.parametrize("n", [4, 5])
def test_exhaustive_on_random_tables(n):
    oracle = table_oracle(random_table(n, np.random.default_rng(n)))
    v = extended_tmc(oracle, n, 1, trunc_tol=0.0, exhaustive=True)
    assert np.allclose(v.values, exact_perm_sv(oracle, n).values, atol=1e-10)


def test_constant_oracle():
    for rounds in (1, 7):
        v = extended_tmc(lambda m: 0.4, 4, rounds, rng=np.random.default_rng(0))
        assert np.array_equal(v.values, np.zeros(4))


def test_single_client():
    v = extended_tmc(lambda m: [0.2, 0.9][m], 1, 5, trunc_tol=0.0, rng=np.random.default_rng(1))
    assert v.values[0] == pytest.approx(0.7, abs=1e-15)


def test_untruncated_mean_is_unbiased(table1):
    runs = np.array([extended_tmc(table1, 3, 1, 0.0, np.random.default_rng([4, r])).values for r in range(10_000)])
    z = (runs.mean(0) - np.array(TABLE1_SV)) / (runs.std(0, ddof=1) / np.sqrt(len(runs)))
    assert np.max(np.abs(z)) < 4


def test_truncation_saves_evaluations():
    oracle = regression_oracle(generate(ScenarioConfig(n=8, t=60, seed=3)))
    evals = []
    for tol in (0.0, 1e-4, 1e-3, 1e-2, 1e-1):
        v = extended_tmc(Memoized(oracle), 8, 30, tol, np.random.default_rng(11))
        evals.append(v.evaluations)
    assert evals == sorted(evals, reverse=True)
    assert evals[-1] < evals[0]


def test_default_tolerance(table1):
    v = extended_tmc(table1, 3, 3, rng=np.random.default_rng(0))
    assert v.meta["trunc_tol"] == pytest.approx(1e-3 * 0.96)


def test_argument_checks(table1):
    with pytest.raises(ValueError):
        extended_tmc(table1, 3, 0)
    with pytest.raises(ValueError):
        extended_tmc(table1, 3, 2, trunc_tol=-1.0)


def test_tmc_replay(table1):
    a = extended_tmc(table1, 3, 25, rng=np.random.default_rng(8)).values
    b = extended_tmc(table1, 3, 25, rng=np.random.default_rng(8)).values
    assert a.tobytes() == b.tobytes()


class TestCcShapley:
    def test_full_plan(self, table1):
        v = cc_shapley(table1, 3, 7, np.random.default_rng(0))
        assert np.allclose(v.values, TABLE1_SV, atol=1e-10)
        assert v.method == "ccshapley"

    def test_constant_oracle(self):
        assert np.array_equal(cc_shapley(lambda m: 2.0, 5, 10, np.random.default_rng(0)).values, np.zeros(5))

    def test_replay(self):
        oracle = table_oracle(random_table(6, np.random.default_rng(6)))
        a = cc_shapley(oracle, 6, 8, np.random.default_rng(2)).values
        b = cc_shapley(oracle, 6, 8, np.random.default_rng(2)).values
        assert a.tobytes() == b.tobytes()
