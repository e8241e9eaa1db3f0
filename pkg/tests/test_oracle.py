import json
import math

import numpy as np
import pytest
from hypothesis import given
from hypothesis import strategies as st

from conftest import FIXTURES, all_routes, flat_tsp, load_fixture
from permqio.errors import CapExceededError, LedgerOverflowError, OracleViolationError
from permqio.oracle import (ExactResult, QueryLedger, brute_force, deviation,
                            performance_vector)
from permqio.perm import make_rng, random_permutations
from permqio.problems import generate_espdp, generate_tsp


class CostOnly:
    """Wraps an instance so only ``cost`` is visible, forcing the generic path."""

    def __init__(self, inst):
        self.inst = inst
        self.n = inst.n

    def cost(self, r):
        return self.inst.cost(r)


def test_single_stop():
    inst = load_fixture("espdp_n1_minimal.json")
    res = brute_force(inst)
    assert res.min_route == (1,) and res.evaluations == 1
    assert res.min_cost == pytest.approx(16.0)


def test_flat_triangle_ties_to_smallest_route():
    res = brute_force(flat_tsp(3))
    assert res.evaluations == 6
    assert res.min_route == (1, 2, 3)
    assert brute_force(CostOnly(flat_tsp(3))).min_route == (1, 2, 3)


def test_symmetric_tsp_keeps_first_of_mirror_pair():
    inst = generate_espdp(5, make_rng(0))
    tsp = generate_tsp(6, make_rng(4))
    res = brute_force(tsp)
    # every tour ties with its reverse; the enumeration must keep the smaller one
    assert res.min_route < tuple(reversed(res.min_route))
    assert brute_force(inst).min_route == brute_force(CostOnly(inst)).min_route


def test_bundled_exact_value(espdp6):
    expected = json.loads((FIXTURES / "espdp_n6_exact.json").read_text())
    res = brute_force(espdp6)
    assert res.to_document() == expected
    assert res.evaluations == 720


@pytest.mark.parametrize("n", [4, 6, 8])
def test_minimum_independent_of_enumeration_order(n):
    inst = generate_espdp(n, make_rng(n, 1))
    routes = np.array(all_routes(n))[::-1]
    costs = inst.batch_cost(routes)
    res = brute_force(inst)
    assert res.evaluations == math.factorial(n)
    assert res.min_cost == pytest.approx(costs.min(), rel=1e-9)
    assert np.all(costs >= res.min_cost * (1 - 1e-9))
    assert brute_force(inst) == res


def test_cap_refusal_carries_estimate():
    inst = generate_espdp(12, make_rng(0))
    with pytest.raises(CapExceededError, match="479001600 routes"):
        brute_force(inst)
    with pytest.raises(CapExceededError):
        brute_force(generate_espdp(5, make_rng(0)), cap=4)


def test_deviation_examples():
    exact = ExactResult((1, 2), 10.0, 2)
    assert deviation(10.0, exact) == 0.0
    assert deviation(11.0, exact) == pytest.approx(0.1)
    assert deviation(10.0 * (1 + 1e-12), exact) == 0.0
    with pytest.raises(OracleViolationError):
        deviation(9.0, exact)


@given(st.floats(0.01, 1e6), st.floats(0, 10))
def test_deviation_non_negative(ref, excess):
    assert deviation(ref * (1 + excess), ExactResult((1,), ref, 1)) >= 0


def test_ledger_counts_total_and_unique():
    ledger = QueryLedger(3, keep_log=True)
    ledger.record(np.array([[1, 2, 3], [3, 2, 1], [1, 2, 3]]))
    ledger.record(np.array([2, 1, 3]))
    assert ledger.total == 4 and ledger.unique == 3
    with pytest.raises(ValueError):
        ledger.record(np.array([[1, 2]]))


def test_ledger_long_routes_use_byte_keys():
    rng = make_rng(1)
    rows = random_permutations(20, 50, rng)
    ledger = QueryLedger(20)
    ledger.record(rows)
    ledger.record(rows[:10])
    assert ledger.total == 60
    assert ledger.unique == len({tuple(r) for r in rows.tolist()})


def test_ledger_memory_cap():
    ledger = QueryLedger(5, max_unique=10)
    with pytest.raises(LedgerOverflowError):
        ledger.record(np.array(all_routes(5)[:11]))


@given(st.integers(1, 15), st.integers(0, 10_000))
def test_ledger_packing_is_injective(n, seed):
    rows = random_permutations(n, 64, make_rng(seed))
    ledger = QueryLedger(n)
    ledger.record(rows)
    assert ledger.unique == len({tuple(r) for r in rows.tolist()})


def test_span_of_brute_force_is_one():
    n = 5
    inst = generate_espdp(n, make_rng(0))
    ledger = QueryLedger(n)
    ledger.record(np.array(all_routes(n)))
    exact = brute_force(inst)
    pv = performance_vector([ledger], [deviation(exact.min_cost, exact)])
    assert pv.as_list() == [1.0, 0.0]


def test_single_query_span():
    ledger = QueryLedger(7)
    ledger.record(random_permutations(7, 1, make_rng(0)))
    assert performance_vector([ledger], [0.3]).span == pytest.approx(1 / 5040)


def test_reference_span_arithmetic():
    assert round(57208 / math.factorial(10), 3) == 0.016


def test_performance_vector_contracts():
    with pytest.raises(ValueError):
        performance_vector([QueryLedger(4), QueryLedger(5)], [0.0, 0.0])
    with pytest.raises(ValueError):
        performance_vector([], [])
    with pytest.raises(ValueError):
        performance_vector([QueryLedger(4)], [0.0, 0.1])
