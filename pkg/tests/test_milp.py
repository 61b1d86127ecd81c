"""Model container, native simplex, branch-and-bound and LP-file export."""
import math

import numpy as np
import pytest
from hypothesis import given, settings, strategies as st
from scipy.optimize import linprog

from conftest import enumerate_milp, random_dag_instance
from vppbid.milp import (MilpModel, ModelError, Status, VarKind, export_lp_file, sanitize_name, solve_lp,
                         solve_milp)
from vppbid.milp.lpfile import parse_lp_file


# 1. model container

def test_add_variable_counts():
    m = MilpModel()
    x = m.add_variable("x", 0, 10)
    assert x.index == 0 and m.num_vars == 1
    b = m.add_binary("b")
    v = m.variables[b.index]
    assert (v.lower, v.upper, v.kind) == (0.0, 1.0, VarKind.BINARY)


def test_malformed_variable():
    with pytest.raises(ModelError):
        MilpModel().add_variable("x", 5, 3)
    with pytest.raises(ModelError):
        MilpModel().add_variable("b", 0, 2, VarKind.BINARY)


def test_foreign_variable_rejected():
    a, b = MilpModel(), MilpModel()
    x = a.add_variable("x")
    with pytest.raises(ModelError):
        b.add_constraint(x, "<=", 1)


def test_duplicate_name_rejected():
    m = MilpModel()
    m.add_variable("x")
    with pytest.raises(ModelError):
        m.add_variable("x")


# 2. LP relaxation

@pytest.mark.parametrize("backend", ["native", "highs"])
def test_lp_single_bound(backend):
    m = MilpModel()
    x = m.add_variable("x", 0, None)
    m.add_constraint(x, "<=", 4)
    m.set_objective(x)
    sol = solve_lp(m, backend)
    assert sol.optimal and sol.objective == pytest.approx(4)


@pytest.mark.parametrize("backend", ["native", "highs"])
def test_lp_two_var_vertex(backend):
    # vertices of {x+y<=4, x<=2}: (0,0) (2,0) (2,2) (0,4) -> 3x+2y = 0, 6, 10, 8
    m = MilpModel()
    x, y = m.add_variable("x"), m.add_variable("y")
    m.add_constraint(x + y, "<=", 4)
    m.add_constraint(x, "<=", 2)
    m.set_objective(3 * x + 2 * y)
    sol = solve_lp(m, backend)
    assert sol.objective == pytest.approx(10)
    assert sol[x] == pytest.approx(2) and sol[y] == pytest.approx(2)


@pytest.mark.parametrize("backend", ["native", "highs"])
def test_lp_infeasible(backend):
    m = MilpModel()
    x = m.add_variable("x", None, None)
    m.add_constraint(x, ">=", 5)
    m.add_constraint(x, "<=", 3)
    m.set_objective(x)
    assert solve_lp(m, backend).status is Status.INFEASIBLE


@pytest.mark.parametrize("backend", ["native", "highs"])
def test_lp_unbounded(backend):
    m = MilpModel()
    x, y = m.add_variable("x"), m.add_variable("y")
    m.add_constraint(x - y, "<=", 1)
    m.set_objective(x + y)
    assert solve_lp(m, backend).status is Status.UNBOUNDED


def _random_lp(data):
    n = data.draw(st.integers(1, 5))
    k = data.draw(st.integers(1, 5))
    ints = st.integers(-5, 5)
    A = np.array(data.draw(st.lists(st.lists(ints, min_size=n, max_size=n), min_size=k, max_size=k)), float)
    b = np.array(data.draw(st.lists(st.integers(0, 10), min_size=k, max_size=k)), float)
    c = np.array(data.draw(st.lists(ints, min_size=n, max_size=n)), float)
    ub = data.draw(st.lists(st.one_of(st.none(), st.integers(0, 8)), min_size=n, max_size=n))
    senses = data.draw(st.lists(st.sampled_from(["<=", ">=", "=="]), min_size=k, max_size=k))
    return A, b, c, ub, senses


@settings(max_examples=150, deadline=None)
@given(st.data())
def test_native_lp_matches_scipy(data):
    A, b, c, ub, senses = _random_lp(data)
    m = MilpModel()
    xs = [m.add_variable(f"x{j}", 0, u) for j, u in enumerate(ub)]
    for row, rhs, s in zip(A, b, senses):
        m.add_constraint(sum((float(a) * x for a, x in zip(row, xs)), 0 * xs[0]), s, float(rhs))
    m.set_objective(sum((float(cj) * x for cj, x in zip(c, xs)), 0 * xs[0]))
    sol = solve_lp(m, "native")
    A_ub = [r if s == "<=" else -r for r, s in zip(A, senses) if s != "=="]
    b_ub = [v if s == "<=" else -v for v, s in zip(b, senses) if s != "=="]
    A_eq = [r for r, s in zip(A, senses) if s == "=="]
    b_eq = [v for v, s in zip(b, senses) if s == "=="]
    ref = linprog(-c, A_ub=A_ub or None, b_ub=b_ub or None, A_eq=A_eq or None, b_eq=b_eq or None,
                  bounds=[(0, u) for u in ub], method="highs", options={"presolve": False})
    # (presolve can label an unbounded LP infeasible, so the reference runs without it)
    expected = {0: Status.OPTIMAL, 2: Status.INFEASIBLE, 3: Status.UNBOUNDED}[ref.status]
    assert sol.status is expected
    if expected is Status.OPTIMAL:
        assert sol.objective == pytest.approx(-ref.fun, rel=1e-7, abs=1e-7)
        assert m.max_violation(sol.values) <= 1e-7


def test_lp_deterministic():
    rng = np.random.default_rng(0)
    _, _, model, _ = random_dag_instance(rng, 4)
    a, b = solve_lp(model, "native"), solve_lp(model, "native")
    assert np.array_equal(a.values, b.values)


# 3. branch and bound

def test_knapsack_toy():
    m = MilpModel()
    a, b = m.add_binary("a"), m.add_binary("b")
    m.add_constraint(a + b, "<=", 1)
    m.set_objective(5 * a + 4 * b)
    sol = solve_milp(m, backend="native")
    assert sol.objective == pytest.approx(5) and sol[a] == 1 and sol[b] == 0


def test_tu_instance_relaxation_tight():
    # assignment problem: totally unimodular, LP optimum is integral
    cost = np.array([[4, 1, 3], [2, 0, 5], [3, 2, 2]], float)
    m = MilpModel()
    x = [[m.add_binary(f"x{i}{j}") for j in range(3)] for i in range(3)]
    for i in range(3):
        m.add_constraint(x[i][0] + x[i][1] + x[i][2], "==", 1)
        m.add_constraint(x[0][i] + x[1][i] + x[2][i], "==", 1)
    m.set_objective(sum((cost[i, j] * x[i][j] for i in range(3) for j in range(3)), 0 * x[0][0]))
    assert solve_milp(m, backend="native").objective == pytest.approx(solve_lp(m, "native").objective)


def test_node_limit_without_incumbent():
    m = MilpModel()
    bs = [m.add_binary(f"b{k}") for k in range(6)]
    m.add_constraint(sum((2 * b for b in bs), 0 * bs[0]), "==", 5)  # odd rhs: integer-infeasible
    m.set_objective(bs[0])
    assert solve_milp(m, backend="native", node_limit=1).status is Status.ITERATION_LIMIT
    assert solve_milp(m, backend="native").status is Status.INFEASIBLE


@settings(max_examples=25, deadline=None)
@given(st.integers(0, 10_000), st.integers(2, 4))
def test_bnb_matches_enumeration(seed, H):
    _, _, model, _ = random_dag_instance(np.random.default_rng(seed), H, max_binaries=12)
    sol = solve_milp(model, gap_tol=0.0, backend="native")
    ref = enumerate_milp(model)
    assert sol.optimal
    assert sol.objective == pytest.approx(ref, rel=1e-6, abs=1e-6)
    assert model.max_violation(sol.values) <= 1e-7
    assert sol.objective <= solve_lp(model, "native").objective + 1e-7


@settings(max_examples=25, deadline=None)
@given(st.integers(0, 10_000), st.integers(3, 8))
def test_backends_agree(seed, H):
    _, _, model, _ = random_dag_instance(np.random.default_rng(seed), H)
    a = solve_milp(model, gap_tol=1e-9, backend="native")
    b = solve_milp(model, gap_tol=1e-9, backend="highs")
    assert a.objective == pytest.approx(b.objective, rel=1e-6, abs=1e-6)
    xb = a.values[model.binaries]
    assert np.array_equal(xb, np.round(xb))


def test_bad_arguments():
    m = MilpModel()
    with pytest.raises(ValueError):
        solve_milp(m, gap_tol=-1)
    with pytest.raises(ValueError):
        solve_milp(m, backend="cplex")


# 4. LP files

def test_export_skeleton():
    m = MilpModel()
    x = m.add_variable("power[1]", 0, 7)
    m.set_objective(2 * x)
    text = export_lp_file(m)
    assert "Maximize" in text and "Bounds" in text and "power_1_" in text


def test_binary_section():
    m = MilpModel()
    b = m.add_binary("on")
    m.set_objective(b)
    text = export_lp_file(m)
    assert "Binaries" in text and "on" in text.split("Binaries")[1]


@pytest.mark.parametrize("raw", ["a b", "1x", "e5", "st", "x-y.z", ""])
def test_sanitized_names_are_identifiers(raw):
    s = sanitize_name(raw)
    assert s and s.replace("_", "a").isalnum() and not s[0].isdigit()


@settings(max_examples=20, deadline=None)
@given(st.integers(0, 10_000), st.integers(2, 6))
def test_lp_roundtrip(seed, H):
    _, _, model, _ = random_dag_instance(np.random.default_rng(seed), H)
    back = parse_lp_file(export_lp_file(model))
    assert back.num_vars == model.num_vars
    assert len(back.binaries) == len(model.binaries)
    a = solve_milp(model, gap_tol=1e-9, backend="highs").objective
    b = solve_milp(back, gap_tol=1e-9, backend="highs").objective
    assert b == pytest.approx(a, rel=1e-9, abs=1e-9)
    assert export_lp_file(back) == export_lp_file(parse_lp_file(export_lp_file(back)))


def test_free_and_negative_bounds_roundtrip():
    m = MilpModel("minimize")
    x = m.add_variable("x", None, None)
    y = m.add_variable("y", -3, 2)
    m.add_constraint(x - y, ">=", -1.5)
    m.set_objective(x + 0.25 * y + 3, maximize=False)
    back = parse_lp_file(export_lp_file(m))
    assert not back.maximize
    assert solve_lp(back, "native").objective == pytest.approx(solve_lp(m, "native").objective)
    assert math.isinf(back.variables[0].lower)
