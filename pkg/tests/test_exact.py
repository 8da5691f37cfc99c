import itertools
import math

import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from shapval import GuardError, UtilityTable, Valuation, exact_cc_sv, exact_mc_sv, exact_perm_sv, table_oracle
from shapval.utility import FunctionOracle

from conftest import TABLE1, TABLE1_SV, random_table

SOLVERS = [exact_mc_sv, exact_cc_sv, exact_perm_sv]


def brute_force_sv(values, n):
    """Independent reference: average marginal gain over every ordering, via tuples."""
    u = {frozenset(i for i in range(n) if m >> i & 1): v for m, v in enumerate(values)}
    phi = [0.0] * n
    orders = list(itertools.permutations(range(n)))
    for order in orders:
        seen = set()
        for c in order:
            before = u[frozenset(seen)]
            seen.add(c)
            phi[c] += u[frozenset(seen)] - before
    return np.array(phi) / len(orders)


tables = st.integers(1, 6).flatmap(
    lambda n: st.lists(st.floats(-1, 1, allow_nan=False), min_size=2**n, max_size=2**n)
)


@pytest.mark.parametrize("solver", SOLVERS)
def test_table1(solver, table1):
    v = solver(table1, 3)
    assert np.allclose(v.values, TABLE1_SV, atol=1e-12)
    assert v.evaluations == 8
    assert v.seed is None


@pytest.mark.parametrize("solver", SOLVERS)
def test_constant_oracle(solver):
    assert np.array_equal(solver(FunctionOracle(4, lambda m: 0.7), 4).values, np.zeros(4))


@pytest.mark.parametrize("solver", SOLVERS)
def test_single_player(solver):
    assert solver(lambda m: [0.25, 1.0][m], 1).values[0] == 0.75


def test_two_players():
    u = [0.1, 0.4, 0.3, 0.9]
    phi1 = ((u[1] - u[0]) + (u[3] - u[2])) / 2
    assert exact_perm_sv(lambda m: u[m], 2).values[0] == pytest.approx(phi1, abs=1e-15)


@pytest.mark.parametrize("seed", range(5))
def test_against_brute_force(seed):
    rng = np.random.default_rng(seed)
    n = 6
    table = random_table(n, rng)
    ref = brute_force_sv(table.to_array(), n)
    for solver in SOLVERS:
        assert np.allclose(solver(table_oracle(table), n).values, ref, atol=1e-10)


def test_cc_matches_mc_exactly_on_table1(table1):
    assert np.allclose(exact_cc_sv(table1, 3).values, exact_mc_sv(table1, 3).values, atol=1e-12)


@settings(max_examples=60, deadline=None)
@given(tables)
def test_scheme_equivalence_and_efficiency(values):
    n = int(math.log2(len(values)))
    oracle = table_oracle(UtilityTable.from_array(values))
    mc = exact_mc_sv(oracle, n).values
    assert np.allclose(exact_cc_sv(oracle, n).values, mc, atol=1e-10)
    assert np.allclose(exact_perm_sv(oracle, n).values, mc, atol=1e-10)
    assert math.fsum(mc) == pytest.approx(values[-1] - values[0], abs=1e-10)


@settings(max_examples=40, deadline=None)
@given(st.integers(2, 6).flatmap(lambda n: st.tuples(st.just(n), st.integers(0, n - 1), st.integers(0, 2**32 - 1))))
def test_null_player(args):
    n, j, seed = args
    base = np.random.default_rng(seed).uniform(-1, 1, 1 << n)
    # utility only depends on the other clients
    values = [base[m & ~(1 << j)] for m in range(1 << n)]
    for solver in SOLVERS:
        assert solver(lambda m: values[m], n).values[j] == 0.0


@settings(max_examples=40, deadline=None)
@given(st.integers(2, 6).flatmap(lambda n: st.tuples(st.just(n), st.integers(0, 2**32 - 1))))
def test_symmetry(args):
    n, seed = args
    base = np.random.default_rng(seed).uniform(-1, 1, 1 << n)

    def swap01(m):
        b0, b1 = m & 1, m >> 1 & 1
        return (m & ~3) | (b0 << 1) | b1

    # symmetrise clients 0 and 1
    values = [base[m] + base[swap01(m)] for m in range(1 << n)]
    for solver in SOLVERS:
        v = solver(lambda m: values[m], n).values
        assert abs(v[0] - v[1]) < 1e-12


@settings(max_examples=40, deadline=None)
@given(st.integers(1, 6).flatmap(lambda n: st.tuples(st.just(n), st.integers(0, 2**32 - 1))))
def test_linearity(args):
    n, seed = args
    rng = np.random.default_rng(seed)
    a, b = rng.uniform(-1, 1, (2, 1 << n))
    for solver in SOLVERS:
        va = solver(lambda m: a[m], n).values
        vb = solver(lambda m: b[m], n).values
        vab = solver(lambda m: a[m] + b[m], n).values
        assert np.allclose(vab, va + vb, atol=1e-10)


def test_deterministic_bitwise():
    table = random_table(7, np.random.default_rng(11))
    for solver in SOLVERS:
        assert solver(table_oracle(table), 7).values.tobytes() == solver(table_oracle(table), 7).values.tobytes()


def test_workers_do_not_change_result():
    table = random_table(7, np.random.default_rng(12))
    serial = exact_mc_sv(table_oracle(table), 7).values
    threaded = exact_mc_sv(table_oracle(table), 7, workers=8).values
    assert serial.tobytes() == threaded.tobytes()


def test_guards():
    with pytest.raises(GuardError, match=str(2**21)):
        exact_mc_sv(lambda m: 0.0, 21)
    with pytest.raises(GuardError, match="force=True"):
        exact_perm_sv(lambda m: 0.0, 11)


def test_missing_coalition_propagates():
    partial = table_oracle(UtilityTable(3, {0: 0.1, 1: 0.5}))
    with pytest.raises(KeyError):
        exact_mc_sv(partial, 3)


def test_valuation_json(table1):
    v = exact_mc_sv(table1, 3)
    doc = v.to_dict()
    assert {"method", "n", "values", "evaluations", "wall_ms"} <= set(doc)
    assert "seed" not in doc
    back = Valuation.from_dict(doc)
    assert np.array_equal(back.values, v.values)
    assert back.method == "exact_mc"


def test_table1_listing_matches_example():
    # {1,2} -> 0.80, {1,3} -> 0.90 in the worked example
    assert TABLE1[0b011] == 0.80 and TABLE1[0b101] == 0.90
