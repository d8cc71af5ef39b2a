import numpy as np
import pytest
from hypothesis import given, settings, strategies as st

from occupancy_games.errors import CapExceededError, UnreachableHistoryError
from occupancy_games.occupancy import PrivatePlanTimeHistory
from occupancy_games.policies import (
    DecisionRule,
    JointPolicy,
    PrivateHistory,
    decision_at,
    enumerate_pure_policies,
    policy_from_json,
    policy_to_json,
    project_plan_time,
    pure_policy_count,
    tree_to_rules,
)
from occupancy_games.sampling import random_joint_policy, random_posg


def brute_force_count(n_actions: int, n_obs: int, horizon: int) -> int:
    # independent recursive construction of reduced trees
    if horizon == 1:
        return n_actions
    return n_actions * brute_force_count(n_actions, n_obs, horizon - 1) ** n_obs


@pytest.mark.parametrize("n_u", [1, 2, 3])
@pytest.mark.parametrize("n_z", [1, 2, 3])
@pytest.mark.parametrize("h", [1, 2, 3])
def test_pure_policy_count_matches_recursion(n_u, n_z, h):
    assert pure_policy_count(n_u, n_z, h) == brute_force_count(n_u, n_z, h)


def test_tiger_policy_counts(tiger):
    assert len(enumerate_pure_policies(tiger, 0, 1)) == 3
    assert len(enumerate_pure_policies(tiger, 0, 2)) == 27
    assert len(enumerate_pure_policies(tiger, 0, 3)) == 2187


def test_enumeration_cap(tiger):
    with pytest.raises(CapExceededError, match="2187"):
        enumerate_pure_policies(tiger, 0, 3, cap=1000)


def test_enumeration_deterministic_and_lexicographic(tiger):
    a = enumerate_pure_policies(tiger, 0, 2)
    b = enumerate_pure_policies(tiger, 0, 2)
    assert a == b

    def preorder(tree):
        out = [tree.action]
        for child in tree.children:
            out.extend(preorder(child))
        return out

    orders = [preorder(t) for t in a]
    assert orders == sorted(orders)
    assert orders[0] == [0, 0, 0]  # all-lowest-action tree comes first


def test_decision_at(tiger):
    trees = enumerate_pure_policies(tiger, 0, 2)
    listen_then = trees[0]
    assert decision_at(listen_then, PrivateHistory(0)) == {0: 1.0}
    h = PrivateHistory(0, ((0, 0),))  # (listen, hear-left)
    assert decision_at(listen_then, h) == {listen_then.children[0].action: 1.0}
    off_tree = PrivateHistory(0, ((2, 0),))  # open-right never played at root
    with pytest.raises(UnreachableHistoryError):
        decision_at(listen_then, off_tree)


@settings(max_examples=20, deadline=None)
@given(seed=st.integers(0, 10**6))
def test_pure_trees_give_point_masses(seed):
    rng = np.random.default_rng(seed)
    m = random_posg(rng, n_states=2, n_actions=(2, 3), n_obs=(2, 2), horizon=2)
    trees = enumerate_pure_policies(m, 1, 2)
    tree = trees[rng.integers(len(trees))]
    # every on-tree history yields a single full-mass action
    for z in range(m.n_agent_obs(1)):
        h = PrivateHistory(1, ((tree.action, z),))
        dist = decision_at(tree, h)
        assert sum(dist.values()) == 1.0 and len(dist) == 1


def test_tree_to_rules_roundtrip(tiger):
    tree = enumerate_pure_policies(tiger, 0, 2)[13]
    rules = tree_to_rules(tiger, tree)
    assert len(rules) == 2
    for t, rule in enumerate(rules):
        for hist, dist in rule.probs.items():
            assert hist.t == t
            assert decision_at(tree, hist) == {
                int(np.argmax(dist)): 1.0
            }


def test_project_plan_time(tiger):
    rule = DecisionRule(1, 0, {PrivateHistory(1): (1.0, 0.0, 0.0)})
    empty = PrivatePlanTimeHistory(tuple(tiger.start), 0, PrivateHistory(0), ())
    assert project_plan_time(empty) == PrivateHistory(0)
    h = PrivateHistory(0, ((0, 1),))
    y = PrivatePlanTimeHistory(tuple(tiger.start), 0, h, ({1: rule},))
    assert project_plan_time(y) == h
    assert project_plan_time(y).t == y.t == 1


def test_policy_json_roundtrip(tiger):
    rng = np.random.default_rng(5)
    behavioral = random_joint_policy(tiger, rng)
    text = policy_to_json(tiger, behavioral)
    back = policy_from_json(tiger, text)
    assert policy_to_json(tiger, back) == text

    tree_policy = JointPolicy(
        (
            enumerate_pure_policies(tiger, 0, 2)[7],
            enumerate_pure_policies(tiger, 1, 2)[11],
        )
    )
    text = policy_to_json(tiger, tree_policy)
    assert policy_from_json(tiger, text) == tree_policy


def test_decision_rule_validates():
    with pytest.raises(ValueError, match="distribution"):
        DecisionRule(0, 0, {PrivateHistory(0): (0.5, 0.2)})
    with pytest.raises(ValueError, match="time step"):
        DecisionRule(0, 1, {PrivateHistory(0): (1.0,)})
