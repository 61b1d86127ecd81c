"""Scenario tree construction and validation."""
import csv
import dataclasses
import math

import numpy as np
import pytest
from hypothesis import given, settings, strategies as st

from conftest import BUNDLED, random_tree
from vppbid.scenarios import (BalancingBranch, Branch, InvalidMarginals, InvalidRatio, MarginalScenarios,
                              build_symmetric_tree, expand_balancing_ratios, validate_tree)

H = 3
ONES = np.ones(H)


def marg(pw=(1.0,), pd=(1.0,), n3=1, pb=(1.0,)):
    wind = [Branch(np.full(H, 5.0 + k), p) for k, p in enumerate(pw)]
    da = [Branch(np.full(H, 30.0 + k), p) for k, p in enumerate(pd)]
    intraday = [[Branch(np.full(H, 29.0 + d + i), 1.0 / n3) for i in range(n3)] for d in range(len(pd))]
    bal = [BalancingBranch(ONES, ONES, p) for p in pb]
    return MarginalScenarios(wind, da, intraday, bal)


def test_degenerate_tree():
    tree = build_symmetric_tree(marg())
    assert len(tree) == 1 and tree.scenarios[0].probability == 1.0


def test_product_rule():
    tree = build_symmetric_tree(marg(pw=(0.5, 0.5), pd=(0.6, 0.4)))
    assert sorted(tree.probabilities) == pytest.approx([0.2, 0.2, 0.3, 0.3])
    assert tree.shape == (2, 2, 1, 1)
    for s in tree:
        assert s.probability == pytest.approx((0.5, 0.5)[s.w] * (0.6, 0.4)[s.d])


def test_bad_marginals():
    with pytest.raises(InvalidMarginals):
        build_symmetric_tree(marg(pw=(0.5, 0.4)))
    bad = marg()
    bad.balancing = [BalancingBranch(np.full(H, 0.8), np.full(H, 1.2), 1.0)]
    with pytest.raises(InvalidMarginals):
        build_symmetric_tree(bad)


@pytest.mark.parametrize("draw,pair", [(("deficit", 1.25), (1.0, 1.25)), (("excess", 1.25), (0.8, 1.0)),
                                       (("excess", 1.0), (1.0, 1.0)), (("deficit", 1.0), (1.0, 1.0))])
def test_balancing_ratio_regimes(draw, pair):
    assert expand_balancing_ratios([draw]) == [pytest.approx(pair)]


def test_ratio_below_one():
    with pytest.raises(InvalidRatio):
        expand_balancing_ratios([("deficit", 0.9)])
    with pytest.raises(InvalidRatio):
        expand_balancing_ratios([("surplus", 1.1)])


def test_validate_clean_tree():
    assert validate_tree(build_symmetric_tree(marg(pw=(0.3, 0.7), pd=(0.5, 0.5), n3=2))) == []


def test_validate_scaled_probability():
    tree = build_symmetric_tree(marg(pw=(0.5, 0.5)))
    tree.scenarios = [dataclasses.replace(s, probability=0.5 * s.probability) for s in tree]
    msgs = validate_tree(tree)
    assert any("probability sum 0.5" in m for m in msgs)


def test_validate_branch_consistency():
    tree = build_symmetric_tree(marg(pw=(0.5, 0.5)))
    s = tree.scenarios[1]
    assert s.d == tree.scenarios[0].d
    tree.scenarios[1] = dataclasses.replace(s, da_price=s.da_price + 1)
    assert any("day-ahead branch" in m for m in validate_tree(tree))


def test_validate_ratio_violation():
    tree = build_symmetric_tree(marg())
    tree.scenarios[0] = dataclasses.replace(tree.scenarios[0], eta_plus=np.full(H, 0.9), eta_minus=np.full(H, 1.1))
    assert validate_tree(tree)


def test_subtree_renormalizes():
    tree = build_symmetric_tree(marg(pw=(0.25, 0.75), pd=(0.6, 0.4)))
    sub = tree.subtree([1, 3])
    assert math.fsum(sub.probabilities) == pytest.approx(1.0)
    assert [s.index for s in sub] == [0, 1]
    assert tree.single(2).scenarios[0].probability == 1.0


def _csv_marginal_probs(path):
    # independent of the loader: first probability per branch key
    out = {}
    with open(path) as fh:
        for row in csv.DictReader(fh):
            key = tuple(row[k] for k in row if k.endswith("branch"))
            out.setdefault(key, float(row["probability"]))
    return out


def test_bundled_tree(bundled):
    tree = bundled.tree()
    assert validate_tree(tree) == []
    assert len(tree) == 10 and tree.shape == (2, 5, 1, 1)
    d = BUNDLED.parent
    pw = _csv_marginal_probs(d / "wind.csv")
    pd = _csv_marginal_probs(d / "da_price.csv")
    pi = _csv_marginal_probs(d / "id_price.csv")
    pb = _csv_marginal_probs(d / "balancing.csv")
    total = math.fsum(pw[(str(s.w + 1),)] * pd[(str(s.d + 1),)] * pi[(str(s.d + 1), str(s.i + 1))]
                      * pb[(str(s.b + 1),)] for s in tree)
    assert abs(total - 1.0) <= 1e-9
    for s in tree:
        assert s.probability == pytest.approx(pw[(str(s.w + 1),)] * pd[(str(s.d + 1),)], rel=1e-12)


@settings(max_examples=60, deadline=None)
@given(st.integers(0, 100_000), st.integers(1, 6))
def test_tree_invariants(seed, hours):
    tree = random_tree(np.random.default_rng(seed), hours)
    n1, n2, n3, n4 = tree.shape
    assert len(tree) == n1 * n2 * n3 * n4
    assert abs(math.fsum(tree.probabilities) - 1.0) <= 1e-9
    for s in tree:
        assert np.all(s.eta_plus <= 1 + 1e-12) and np.all(s.eta_minus >= 1 - 1e-12)
        assert np.all(np.minimum(1 - s.eta_plus, s.eta_minus - 1) <= 1e-12)
    assert validate_tree(tree) == []
