import numpy as np
import pytest
from hypothesis import given, settings, strategies as st

from occupancy_games.errors import (
    ImpossibleObservationError,
    InconsistentOccupancyError,
    UndefinedDecisionRuleError,
    UnreachableHistoryError,
)
from occupancy_games.model import parse_posg
from occupancy_games.occupancy import (
    OccupancyState,
    decompose,
    expected_reward,
    factorize,
    initial_occupancy,
    occupancy_to_csv,
    occupancy_to_tree_text,
    private_occupancy,
    private_reward,
    private_step,
    recombine,
    recompose,
    step,
)
from occupancy_games.policies import (
    DecisionRule,
    JointHistory,
    PrivateHistory,
    empty_joint_history,
)
from occupancy_games.sampling import (
    random_decision_rule,
    random_joint_policy,
    random_posg,
)


def det_rule(model, agent, t, action, histories):
    n = len(model.actions[agent])
    dist = tuple(1.0 if u == action else 0.0 for u in range(n))
    return DecisionRule(agent, t, {h: dist for h in histories})


def root_rules(model, actions):
    return tuple(
        det_rule(model, i, 0, a, [PrivateHistory(i)]) for i, a in enumerate(actions)
    )


# -- initial occupancy -------------------------------------------------------


def test_initial_occupancy_tiger(tiger):
    s0 = initial_occupancy(tiger)
    empty = empty_joint_history(2)
    assert s0.t == 0
    assert s0.entries == {(0, empty): 0.5, (1, empty): 0.5}


def test_initial_occupancy_point_mass(one_stage):
    s0 = initial_occupancy(one_stage.with_start([1.0, 0.0]))
    assert list(s0.entries.values()) == [1.0]


@settings(max_examples=20, deadline=None)
@given(seed=st.integers(0, 10**6))
def test_initial_occupancy_normalized(seed):
    rng = np.random.default_rng(seed)
    m = random_posg(rng, n_states=4)
    assert sum(initial_occupancy(m).entries.values()) == pytest.approx(1.0, abs=1e-12)


# -- step ---------------------------------------------------------------------


def test_step_listen_listen(tiger):
    (w, p, s1), = step(tiger, initial_occupancy(tiger), root_rules(tiger, (0, 0)))
    assert (w, p) == (0, pytest.approx(1.0, abs=1e-12))
    assert len(s1.entries) == 8
    key = (
        0,
        JointHistory((PrivateHistory(0, ((0, 0),)), PrivateHistory(1, ((0, 0),)))),
    )
    assert s1.entries[key] == pytest.approx(0.36125, abs=1e-15)


def test_step_listen_openleft_occupancy_update(tiger):
    (w, p, s1), = step(tiger, initial_occupancy(tiger), root_rules(tiger, (0, 1)))
    assert p == pytest.approx(1.0, abs=1e-12)
    assert len(s1.entries) == 8
    assert all(v == pytest.approx(0.125, abs=1e-15) for v in s1.entries.values())


def test_step_single_observation_is_belief_update(one_stage):
    # one observation per agent: the next occupancy is the belief update
    # attached to the single possible joint history
    (w, p, s1), = step(one_stage, initial_occupancy(one_stage), root_rules(one_stage, (0, 0)))
    assert p == pytest.approx(1.0, abs=1e-12)
    # manual Bayes filter over states under (listen, listen)
    u = one_stage.joint_action_index((0, 0))
    belief = one_stage.start @ one_stage.transition[u]
    marg = {}
    for (x, o), q in s1.entries.items():
        marg[x] = marg.get(x, 0.0) + q
    assert len({o for (_, o) in s1.entries}) == 1
    for x, b in enumerate(belief):
        assert marg.get(x, 0.0) == pytest.approx(b, abs=1e-12)


def test_step_missing_rule_entry(tiger):
    s0 = initial_occupancy(tiger)
    incomplete = DecisionRule(0, 0, {})
    with pytest.raises(UndefinedDecisionRuleError):
        step(tiger, s0, (incomplete, root_rules(tiger, (0, 0))[1]))


@settings(max_examples=20, deadline=None)
@given(seed=st.integers(0, 10**6))
def test_step_branches_form_distribution(seed):
    rng = np.random.default_rng(seed)
    m = random_posg(rng, n_states=2, n_obs=(2, 2), n_public=2, horizon=2)
    s = initial_occupancy(m)
    rules = tuple(random_decision_rule(m, i, 0, rng) for i in range(2))
    branches = step(m, s, rules)
    assert sum(p for _, p, _ in branches) == pytest.approx(1.0, abs=1e-9)
    for _, _, nxt in branches:
        assert sum(nxt.entries.values()) == pytest.approx(1.0, abs=1e-9)
        assert all(v > 0 for v in nxt.entries.values())
        assert all(o.t == 1 for (_, o) in nxt.entries)


# -- expected reward ----------------------------------------------------------


def test_expected_reward_one_stage(one_stage):
    s0 = initial_occupancy(one_stage)
    assert expected_reward(one_stage, s0, root_rules(one_stage, (0, 0)), 0) == pytest.approx(1.0)
    assert expected_reward(one_stage, s0, root_rules(one_stage, (1, 1)), 0) == pytest.approx(0.0)


def test_expected_reward_zero_table(one_stage):
    import dataclasses

    zero = dataclasses.replace(one_stage, rewards=np.zeros_like(one_stage.rewards))
    s0 = initial_occupancy(zero)
    assert expected_reward(zero, s0, root_rules(zero, (1, 1)), 0) == 0.0


# -- factorize / recompose ----------------------------------------------------


def test_factorize_occupancy_update_marginal(tiger):
    (_, _, s1), = step(tiger, initial_occupancy(tiger), root_rules(tiger, (0, 1)))
    marginal, conditional = factorize(s1, 0)
    assert {h.steps: p for h, p in marginal.probs.items()} == {
        (((0, 0),)): pytest.approx(0.5),
        (((0, 1),)): pytest.approx(0.5),
    }
    for own, sl in conditional.slices.items():
        assert sum(sl.values()) == pytest.approx(1.0, abs=1e-12)


def test_factorize_point_mass(one_stage):
    s0 = initial_occupancy(one_stage.with_start([1.0, 0.0]))
    marginal, conditional = factorize(s0, 0)
    assert list(marginal.probs.values()) == [1.0]
    assert recompose(marginal, conditional, 0).entries == s0.entries


@settings(max_examples=30, deadline=None)
@given(seed=st.integers(0, 10**6))
def test_factorize_recompose_roundtrip(seed):
    rng = np.random.default_rng(seed)
    m = random_posg(rng, n_states=3, horizon=2)
    s = initial_occupancy(m)
    rules = tuple(random_decision_rule(m, i, 0, rng) for i in range(2))
    branches = step(m, s, rules)
    s1 = branches[int(rng.integers(len(branches)))][2]
    for agent in range(2):
        marginal, conditional = factorize(s1, agent)
        back = recompose(marginal, conditional, s1.t)
        assert back.entries.keys() == s1.entries.keys()
        for k, v in s1.entries.items():
            assert back.entries[k] == pytest.approx(v, abs=1e-15)


# -- private occupancy --------------------------------------------------------


def test_private_occupancy_boundary(tiger):
    s = private_occupancy(tiger, tiger.start, [], PrivateHistory(0))
    empty = empty_joint_history(2)
    assert s.entries == {(0, empty): 0.5, (1, empty): 0.5}
    assert s.anchor == PrivateHistory(0)


def test_private_occupancy_basis_decomposition_component(tiger):
    # Calvin listened and heard left while Susie opened the left door
    others = [{1: det_rule(tiger, 1, 0, 1, [PrivateHistory(1)])}]
    s = private_occupancy(tiger, tiger.start, others, PrivateHistory(0, ((0, 0),)))
    assert len(s.entries) == 4
    assert all(v == pytest.approx(0.25, abs=1e-15) for v in s.entries.values())
    assert all(o.privates[0] == s.anchor for (_, o) in s.entries)


def test_private_occupancy_unreachable(tiger):
    others = [{1: det_rule(tiger, 1, 0, 1, [PrivateHistory(1)])}]
    # observation probabilities are full-support in the tiger, so force an
    # unreachable history through an impossible anchor action sequence in a
    # restricted model instead
    one_hot = parse_posg(
        """
agents: 2
horizon: 2
states: s
actions:
a
a
observations:
y n
y n
T: * * : * : * : 1.0
O: * * : * : y y : 1.0
"""
    )
    others = [{1: det_rule(one_hot, 1, 0, 0, [PrivateHistory(1)])}]
    with pytest.raises(UnreachableHistoryError):
        private_occupancy(one_hot, one_hot.start, others, PrivateHistory(0, ((0, 1),)))


def test_one_sided_private_occupancy_collapses_to_belief(one_sided):
    # agent 2's observation reveals agent 1's action and observation, so the
    # conditional over joint histories is a point mass and the state marginal
    # follows the standard Bayes filter
    m = one_sided
    rng = np.random.default_rng(1)
    a1_rule = random_decision_rule(m, 0, 0, rng)
    anchor = PrivateHistory(1, ((0, m.agent_obs_index(1, 0, 0)),))  # (stay, L-hl)
    s = private_occupancy(m, m.start, [{0: a1_rule}], anchor)
    histories = {o for (_, o) in s.entries}
    assert len(histories) == 1  # unique joint history: o1 is revealed
    o1 = next(iter(histories)).privates[0]
    assert o1.steps == ((0, 0),)  # (listen, hear-left)
    # independent belief filter for u=(listen, stay), z1=hear-left
    u = m.joint_action_index((0, 0))
    z1 = 0
    num = np.zeros(m.n_states)
    for x, b in enumerate(m.start):
        for x2 in range(m.n_states):
            p_obs = sum(
                m.observation[u, x2, z]
                for z in range(m.n_joint_obs)
                if m.split_joint_obs(z)[0][0] == z1
            )
            num[x2] += b * m.transition[u, x, x2] * p_obs
    belief = num / num.sum()
    marg = np.zeros(m.n_states)
    for (x, _), p in s.entries.items():
        marg[x] += p
    assert np.allclose(marg, belief, atol=1e-12)


# -- private step / reward ----------------------------------------------------


def test_private_step_observation_probabilities(tiger):
    from occupancy_games.occupancy import initial_private_occupancy

    others = {1: det_rule(tiger, 1, 0, 0, [PrivateHistory(1)])}
    s0 = initial_private_occupancy(tiger, 0)
    omega, _ = private_step(tiger, s0, others, 0, 0)
    assert omega == pytest.approx(0.5 * 0.85 + 0.5 * 0.15, abs=1e-12)

    anchored = initial_private_occupancy(tiger, 0, [1.0, 0.0])
    omega, _ = private_step(tiger, anchored, others, 0, 0)
    assert omega == pytest.approx(0.85, abs=1e-12)


@settings(max_examples=20, deadline=None)
@given(seed=st.integers(0, 10**6))
def test_private_step_probs_sum_to_one(seed):
    from occupancy_games.occupancy import initial_private_occupancy

    rng = np.random.default_rng(seed)
    m = random_posg(rng, n_states=2, n_obs=(2, 3), horizon=2)
    agent = int(rng.integers(0, 2))
    others = {
        j: random_decision_rule(m, j, 0, rng) for j in range(2) if j != agent
    }
    s0 = initial_private_occupancy(m, agent)
    u = int(rng.integers(0, len(m.actions[agent])))
    total = 0.0
    for z in range(m.n_agent_obs(agent)):
        try:
            omega, nxt = private_step(m, s0, others, u, z)
        except ImpossibleObservationError:
            continue
        total += omega
        assert sum(nxt.entries.values()) == pytest.approx(1.0, abs=1e-9)
        assert all(o.privates[agent] == nxt.anchor for (_, o) in nxt.entries)
    assert total == pytest.approx(1.0, abs=1e-9)


def test_private_reward_one_stage(one_stage_zs):
    from occupancy_games.occupancy import initial_private_occupancy

    others = {1: det_rule(one_stage_zs, 1, 0, 0, [PrivateHistory(1)])}
    s0 = initial_private_occupancy(one_stage_zs, 0)
    assert private_reward(one_stage_zs, s0, others, 0) == pytest.approx(1.0)
    assert private_reward(one_stage_zs, s0, others, 1) == pytest.approx(0.0)


def test_private_step_impossible_observation():
    m = parse_posg(
        """
agents: 2
horizon: 2
states: s
actions:
a
a
observations:
y n
y n
T: * * : * : * : 1.0
O: * * : * : y y : 1.0
"""
    )
    from occupancy_games.occupancy import initial_private_occupancy

    others = {1: det_rule(m, 1, 0, 0, [PrivateHistory(1)])}
    with pytest.raises(ImpossibleObservationError):
        private_step(m, initial_private_occupancy(m, 0), others, 0, 1)


# -- decompose / recombine ----------------------------------------------------


def test_decompose_basis_decomposition(tiger):
    rules = root_rules(tiger, (0, 1))
    (_, _, s1), = step(tiger, initial_occupancy(tiger), rules)
    mixture = decompose(s1, tiger, [rules], 0)
    assert [w for w, _ in mixture.components] == [pytest.approx(0.5)] * 2
    for _, comp in mixture.components:
        assert len(comp.entries) == 4
        assert all(v == pytest.approx(0.25, abs=1e-15) for v in comp.entries.values())
    back = recombine(mixture, s1.t)
    assert back.entries.keys() == s1.entries.keys()
    for k, v in s1.entries.items():
        assert back.entries[k] == v  # exact


def test_decompose_t0_trivial(tiger):
    s0 = initial_occupancy(tiger)
    mixture = decompose(s0, tiger, [], 0)
    assert len(mixture.components) == 1
    w, comp = mixture.components[0]
    assert w == pytest.approx(1.0)
    assert comp.anchor == PrivateHistory(0)


def test_decompose_roundtrip_random_policies(tiger):
    for k in range(20):
        rng = np.random.default_rng(1000 + k)
        policy = random_joint_policy(tiger, rng)
        rules = policy.joint_rules(tiger)
        (_, _, s1), = step(tiger, initial_occupancy(tiger), rules[0])
        for agent in range(2):
            mixture = decompose(s1, tiger, rules, agent)
            back = recombine(mixture, s1.t)
            assert back.entries.keys() == s1.entries.keys()
            for key, v in s1.entries.items():
                assert back.entries[key] == pytest.approx(v, abs=1e-12)
            assert sum(w for w, _ in mixture.components) == pytest.approx(1.0, abs=1e-12)


def test_decompose_rejects_inconsistent_occupancy(tiger):
    rules = root_rules(tiger, (0, 1))
    (_, _, s1), = step(tiger, initial_occupancy(tiger), rules)
    # tamper with one entry beyond tolerance
    entries = dict(s1.entries)
    k0 = next(iter(entries))
    entries[k0] += 1e-3
    total = sum(entries.values())
    bad = OccupancyState(1, {k: v / total for k, v in entries.items()})
    with pytest.raises(InconsistentOccupancyError):
        decompose(bad, tiger, [rules], 0)


# -- serialization ------------------------------------------------------------

LISTEN_OPENLEFT_CSV = """state,history_1,history_2,probability
tiger-left,listen:hear-left,open-left:hear-left,0.125
tiger-left,listen:hear-left,open-left:hear-right,0.125
tiger-left,listen:hear-right,open-left:hear-left,0.125
tiger-left,listen:hear-right,open-left:hear-right,0.125
tiger-right,listen:hear-left,open-left:hear-left,0.125
tiger-right,listen:hear-left,open-left:hear-right,0.125
tiger-right,listen:hear-right,open-left:hear-left,0.125
tiger-right,listen:hear-right,open-left:hear-right,0.125
"""


def test_occupancy_csv_golden(tiger):
    (_, _, s1), = step(tiger, initial_occupancy(tiger), root_rules(tiger, (0, 1)))
    assert occupancy_to_csv(tiger, s1) == LISTEN_OPENLEFT_CSV


def test_occupancy_tree_text(tiger):
    (_, _, s1), = step(tiger, initial_occupancy(tiger), root_rules(tiger, (0, 1)))
    text = occupancy_to_tree_text(tiger, s1)
    assert text.count("tiger-left: 0.125") == 4
    assert text.splitlines()[0] == "(listen:hear-left, open-left:hear-left)"


def test_transition_probability_recoverable_from_branches():
    # the implicit occupancy-to-occupancy kernel is the omega-weighted sum of
    # point masses on the per-branch successors, with equality up to pruning
    rng = np.random.default_rng(17)
    m = random_posg(rng, n_states=2, n_public=2, horizon=2)
    rules = tuple(random_decision_rule(m, i, 0, rng) for i in range(2))
    branches = step(m, initial_occupancy(m), rules)
    assert len(branches) == 2
    for w, p, nxt in branches:
        mass = sum(
            q for _, q, other in branches if other.equals(nxt)
        )
        assert mass == pytest.approx(p, abs=1e-12)  # successors are distinct here
    assert not branches[0][2].equals(branches[1][2])


def test_decompose_with_public_observations():
    rng = np.random.default_rng(23)
    m = random_posg(rng, n_states=2, n_public=2, horizon=2)
    rules = tuple(random_decision_rule(m, i, 0, rng) for i in range(2))
    branches = step(m, initial_occupancy(m), rules)
    for _, _, s1 in branches:
        for agent in range(2):
            mixture = decompose(s1, m, [rules], agent)
            back = recombine(mixture, s1.t)
            assert back.entries.keys() == s1.entries.keys()
            for k, v in s1.entries.items():
                assert back.entries[k] == pytest.approx(v, abs=1e-12)


def test_plan_time_history_invariants(tiger):
    from occupancy_games.occupancy import PlanTimeHistory

    rules = root_rules(tiger, (0, 0))
    y1 = PlanTimeHistory(tuple(tiger.start), (rules,), (0,))
    assert y1.t == 1
    with pytest.raises(ValueError, match="public observation"):
        PlanTimeHistory(tuple(tiger.start), (rules,), ())
