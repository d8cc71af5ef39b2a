"""Occupancy states, private occupancy states, and their exact updates.

An occupancy state is the posterior over (hidden state, joint history) given
everything a central planner knows at plan time: the initial belief, the
decision rules issued so far, and the public observation stream.  A private
occupancy state conditions instead on one agent's own history plus the fixed
policy of the others.  Both support exact Bayesian one-step updates, and any
occupancy state reachable under a joint policy splits into a mixture of one
agent's private occupancy states, weighted by the marginal probability of
that agent's histories.

Entries below ``PRUNE_EPS`` are dropped and the remaining mass renormalized;
two states are considered equal when their pruned supports coincide and no
entry differs by more than ``EQUALITY_ATOL``.
"""

from __future__ import annotations

from dataclasses import dataclass
from typing import Mapping, Sequence

import numpy as np

from .errors import (
    ImpossibleObservationError,
    InconsistentOccupancyError,
    UnreachableHistoryError,
)
from .model import PosgModel
from .policies import (
    DecisionRule,
    JointHistory,
    JointPolicy,
    PrivateHistory,
    empty_joint_history,
    joint_action_dist,
)

PRUNE_EPS = 1e-12
EQUALITY_ATOL = 1e-9

Entry = tuple[int, JointHistory]


def _pruned(entries: dict[Entry, float]) -> dict[Entry, float]:
    kept = {k: v for k, v in entries.items() if v > PRUNE_EPS}
    total = sum(kept.values())
    if total <= 0.0:
        raise ValueError("cannot normalize an empty or zero-mass distribution")
    return {k: v / total for k, v in kept.items()}


def _sorted_items(entries: Mapping[Entry, float]):
    return sorted(entries.items(), key=lambda kv: (kv[0][0], kv[0][1].sort_key()))


@dataclass(frozen=True)
class OccupancyState:
    """Sparse posterior over (state, joint history) at one time step."""

    t: int
    entries: Mapping[Entry, float]

    @property
    def support(self):
        return self.entries.keys()

    def prob(self, x: int, o: JointHistory) -> float:
        return self.entries.get((x, o), 0.0)

    def items(self):
        return _sorted_items(self.entries)

    def equals(self, other: "OccupancyState", atol: float = EQUALITY_ATOL) -> bool:
        if self.t != other.t or self.entries.keys() != other.entries.keys():
            return False
        return all(abs(v - other.entries[k]) <= atol for k, v in self.entries.items())


@dataclass(frozen=True)
class MarginalOccupancy:
    """Distribution over one agent's private histories."""

    agent: int
    probs: Mapping[PrivateHistory, float]


@dataclass(frozen=True)
class ConditionalOccupancy:
    """Per private history of one agent, a distribution over (state, others'
    histories)."""

    agent: int
    slices: Mapping[PrivateHistory, Mapping[tuple[int, tuple[PrivateHistory, ...]], float]]


@dataclass(frozen=True)
class PrivateOccupancyState:
    """Posterior over (state, joint history) given one agent's history and the
    others' fixed policy; every support history agrees with the anchor on the
    agent's own component."""

    agent: int
    anchor: PrivateHistory
    entries: Mapping[Entry, float]

    @property
    def t(self) -> int:
        return self.anchor.t

    def items(self):
        return _sorted_items(self.entries)

    def canonical_key(self):
        """Hashable key identifying the state up to 1e-12 rounding."""
        return tuple(
            (x, o.sort_key(), round(p, 12)) for (x, o), p in _sorted_items(self.entries)
        )


@dataclass(frozen=True)
class Mixture:
    """Convex combination of one agent's private occupancy states with
    pairwise distinct anchors."""

    agent: int
    components: tuple[tuple[float, PrivateOccupancyState], ...]

    def __post_init__(self):
        if abs(sum(w for w, _ in self.components) - 1.0) > 1e-9:
            raise ValueError("mixture weights must sum to 1")
        anchors = [c.anchor for _, c in self.components]
        if len(set(anchors)) != len(anchors):
            raise ValueError("mixture anchors must be pairwise distinct")


@dataclass(frozen=True)
class PlanTimeHistory:
    """Central-planner data: initial belief, issued joint decision rules, and
    the public observation stream."""

    start: tuple[float, ...]
    rules: tuple[tuple[DecisionRule, ...], ...]
    public_stream: tuple[int, ...] = ()

    def __post_init__(self):
        if len(self.public_stream) != len(self.rules):
            raise ValueError("one public observation per issued decision rule")

    @property
    def t(self) -> int:
        return len(self.rules)


@dataclass(frozen=True)
class PrivatePlanTimeHistory:
    """One agent's plan-time data: initial belief, own history, others' rules."""

    start: tuple[float, ...]
    agent: int
    history: PrivateHistory
    others_rules: tuple[tuple[DecisionRule, ...], ...]

    def __post_init__(self):
        if len(self.others_rules) != self.history.t:
            raise ValueError("one rule profile per own history step")

    @property
    def t(self) -> int:
        return self.history.t


# ---------------------------------------------------------------------------
# occupancy dynamics
# ---------------------------------------------------------------------------


def initial_occupancy(model: PosgModel) -> OccupancyState:
    """t=0 occupancy: the initial belief over states, histories empty."""
    empty = empty_joint_history(model.n_agents)
    entries = {
        (x, empty): float(p) for x, p in enumerate(model.start) if p > PRUNE_EPS
    }
    return OccupancyState(0, _pruned(entries))


def step(
    model: PosgModel, s: OccupancyState, rules: Sequence[DecisionRule]
) -> list[tuple[int, float, OccupancyState]]:
    """One exact update: returns (public observation, probability, next state)
    for every public branch with positive probability.

    The next state accumulates, for every support pair, action weighted by the
    joint rule and (state, observation) weighted by the model dynamics; each
    public branch is normalized by its own probability.
    """
    if len(rules) != model.n_agents:
        raise ValueError("one decision rule per agent required")
    n_pub = len(model.public_obs)
    buckets: list[dict[Entry, float]] = [dict() for _ in range(n_pub)]
    totals = [0.0] * n_pub
    for (x, o), p in s.entries.items():
        for u, a_p in joint_action_dist(model, rules, o).items():
            us = model.split_joint_action(u)
            dyn = model.transition[u, x][:, None] * model.observation[u]
            for x2, z in zip(*np.nonzero(dyn)):
                weight = p * a_p * dyn[x2, z]
                if weight <= 0.0:
                    continue
                zs, w = model.split_joint_obs(int(z))
                agent_obs = tuple(
                    model.agent_obs_index(i, zs[i], w) for i in range(model.n_agents)
                )
                key = (int(x2), o.child(us, agent_obs))
                buckets[w][key] = buckets[w].get(key, 0.0) + weight
                totals[w] += weight
    out = []
    for w in range(n_pub):
        if totals[w] <= 0.0:
            continue
        entries = {k: v / totals[w] for k, v in buckets[w].items()}
        out.append((w, totals[w], OccupancyState(s.t + 1, _pruned(entries))))
    return out


def expected_reward(
    model: PosgModel, s: OccupancyState, rules: Sequence[DecisionRule], agent: int
) -> float:
    """Immediate expected reward of one agent under a joint decision rule."""
    total = 0.0
    for (x, o), p in s.entries.items():
        for u, a_p in joint_action_dist(model, rules, o).items():
            total += p * a_p * model.rewards[agent, x, u]
    return total


def factorize(
    s: OccupancyState, agent: int
) -> tuple[MarginalOccupancy, ConditionalOccupancy]:
    """Split s into the agent's history marginal and the conditional over
    (state, others' histories); recompose reproduces s exactly on support."""
    marginal: dict[PrivateHistory, float] = {}
    groups: dict[PrivateHistory, dict] = {}
    for (x, o), p in s.entries.items():
        own = o.privates[agent]
        marginal[own] = marginal.get(own, 0.0) + p
        groups.setdefault(own, {})[(x, o.others(agent))] = p
    slices = {
        own: {k: v / marginal[own] for k, v in group.items()}
        for own, group in groups.items()
    }
    return MarginalOccupancy(agent, marginal), ConditionalOccupancy(agent, slices)


def recompose(
    marginal: MarginalOccupancy, conditional: ConditionalOccupancy, t: int
) -> OccupancyState:
    if marginal.agent != conditional.agent:
        raise ValueError("marginal and conditional must describe the same agent")
    entries: dict[Entry, float] = {}
    for own, m in marginal.probs.items():
        for (x, others), c in conditional.slices[own].items():
            joint = _join(own, others, marginal.agent)
            entries[(x, joint)] = m * c
    return OccupancyState(t, entries)


def _join(
    own: PrivateHistory, others: tuple[PrivateHistory, ...], agent: int
) -> JointHistory:
    privates = list(others)
    privates.insert(agent, own)
    return JointHistory(tuple(privates))


# ---------------------------------------------------------------------------
# private occupancy dynamics
# ---------------------------------------------------------------------------


def initial_private_occupancy(model: PosgModel, agent: int, start=None) -> PrivateOccupancyState:
    belief = model.start if start is None else np.asarray(start, dtype=float)
    empty = empty_joint_history(model.n_agents)
    entries = {(x, empty): float(p) for x, p in enumerate(belief) if p > PRUNE_EPS}
    return PrivateOccupancyState(agent, PrivateHistory(agent), _pruned(entries))


def _others_action_dists(
    model: PosgModel,
    agent: int,
    others_rules: Mapping[int, DecisionRule],
    o: JointHistory,
) -> dict[tuple[int, ...], float]:
    """Distribution over the *other* agents' action combinations, as full
    joint action tuples with the anchored agent's slot left as None."""
    idx = [j for j in range(model.n_agents) if j != agent]
    dists = [others_rules[j].dist(o.privates[j]) for j in idx]
    out: dict[tuple[int, ...], float] = {}

    def rec(k: int, acc: list[int | None], p: float):
        if p <= 0.0:
            return
        if k == len(idx):
            out[tuple(acc)] = out.get(tuple(acc), 0.0) + p
            return
        for u, q in enumerate(dists[k]):
            if q > 0.0:
                acc2 = list(acc)
                acc2[idx[k]] = u
                rec(k + 1, acc2, p * q)

    rec(0, [None] * model.n_agents, 1.0)
    return out


def private_step(
    model: PosgModel,
    s_i: PrivateOccupancyState,
    others_rules: Mapping[int, DecisionRule],
    u_i: int,
    z_i: int,
) -> tuple[float, PrivateOccupancyState]:
    """One private update: probability of observing ``z_i`` after playing
    ``u_i``, and the renormalized next private occupancy state.

    ``z_i`` is the agent's flattened observation (private and public parts),
    so only joint observations whose public component matches contribute.
    """
    agent = s_i.agent
    z_priv_i, w_i = divmod(z_i, len(model.public_obs))
    bucket: dict[Entry, float] = {}
    prob = 0.0
    for (x, o), p in s_i.entries.items():
        for partial, a_p in _others_action_dists(model, agent, others_rules, o).items():
            us = tuple(u_i if j == agent else partial[j] for j in range(model.n_agents))
            u = model.joint_action_index(us)
            dyn = model.transition[u, x][:, None] * model.observation[u]
            for x2, z in zip(*np.nonzero(dyn)):
                zs, w = model.split_joint_obs(int(z))
                if zs[agent] != z_priv_i or w != w_i:
                    continue
                weight = p * a_p * dyn[x2, z]
                prob += weight
                agent_obs = tuple(
                    model.agent_obs_index(j, zs[j], w) for j in range(model.n_agents)
                )
                key = (int(x2), o.child(us, agent_obs))
                bucket[key] = bucket.get(key, 0.0) + weight
    if prob <= 0.0:
        raise ImpossibleObservationError(
            f"observation {z_i} has probability 0 after action {u_i} for agent {agent}"
        )
    entries = {k: v / prob for k, v in bucket.items()}
    next_state = PrivateOccupancyState(
        agent, s_i.anchor.child(u_i, z_i), _pruned(entries)
    )
    return prob, next_state


def private_reward(
    model: PosgModel,
    s_i: PrivateOccupancyState,
    others_rules: Mapping[int, DecisionRule],
    u_i: int,
) -> float:
    """Immediate expected reward of the anchored agent for its action, the
    others acting by their rules."""
    agent = s_i.agent
    total = 0.0
    for (x, o), p in s_i.entries.items():
        for partial, a_p in _others_action_dists(model, agent, others_rules, o).items():
            us = tuple(u_i if j == agent else partial[j] for j in range(model.n_agents))
            total += p * a_p * model.rewards[agent, x, model.joint_action_index(us)]
    return total


def private_occupancy(
    model: PosgModel,
    start,
    others_rules_by_step: Sequence[Mapping[int, DecisionRule]],
    o_i: PrivateHistory,
) -> PrivateOccupancyState:
    """Private occupancy state reached by filtering the agent's history
    through the others' fixed policy, starting from ``start``.

    Raises for histories with zero probability under that data.
    """
    s = initial_private_occupancy(model, o_i.agent, start)
    for k, (u, z) in enumerate(o_i.steps):
        try:
            _, s = private_step(model, s, others_rules_by_step[k], u, z)
        except ImpossibleObservationError as exc:
            raise UnreachableHistoryError(
                f"history {o_i.steps[: k + 1]} has probability 0"
            ) from exc
    return s


# ---------------------------------------------------------------------------
# mixtures
# ---------------------------------------------------------------------------


def decompose(
    s: OccupancyState,
    model: PosgModel,
    policy: JointPolicy | Sequence[tuple[DecisionRule, ...]],
    agent: int,
    atol: float = EQUALITY_ATOL,
) -> Mixture:
    """Express ``s`` on the basis of one agent's private occupancy states.

    The generating joint policy pins down both the weights (the marginal
    probability of each of the agent's histories) and the components (the
    filtered private occupancy states).  An occupancy state that recombination
    fails to reproduce within ``atol`` is rejected as inconsistent.
    """
    rules_by_step = (
        policy.joint_rules(model) if isinstance(policy, JointPolicy) else list(policy)
    )
    others_by_step = [
        {j: rules[j] for j in range(model.n_agents) if j != agent}
        for rules in rules_by_step
    ]
    marginal, _ = factorize(s, agent)
    components = []
    for own in sorted(marginal.probs, key=lambda h: h.steps):
        try:
            comp = private_occupancy(model, model.start, others_by_step, own)
        except UnreachableHistoryError as exc:
            raise InconsistentOccupancyError(
                f"support history {own.steps} unreachable under the generating policy"
            ) from exc
        components.append((marginal.probs[own], comp))
    mixture = Mixture(agent, tuple(components))
    recombined = recombine(mixture, s.t)
    for key in set(s.entries) | set(recombined.entries):
        if abs(s.entries.get(key, 0.0) - recombined.entries.get(key, 0.0)) > atol:
            raise InconsistentOccupancyError(
                "occupancy state is inconsistent with the generating policy"
            )
    return mixture


def recombine(mixture: Mixture, t: int | None = None) -> OccupancyState:
    """Pointwise weighted sum of the mixture components."""
    entries: dict[Entry, float] = {}
    for w, comp in mixture.components:
        for key, p in comp.entries.items():
            entries[key] = entries.get(key, 0.0) + w * p
    if t is None:
        t = mixture.components[0][1].t
    return OccupancyState(t, entries)


def mix_occupancies(
    states: Sequence[OccupancyState], weights: Sequence[float]
) -> OccupancyState:
    """Convex combination of occupancy states at a common time step."""
    ts = {s.t for s in states}
    if len(ts) != 1:
        raise ValueError("can only mix occupancy states at one time step")
    entries: dict[Entry, float] = {}
    for s, w in zip(states, weights):
        for key, p in s.entries.items():
            entries[key] = entries.get(key, 0.0) + w * p
    return OccupancyState(ts.pop(), entries)


def occupancy_l1(a: OccupancyState, b: OccupancyState) -> float:
    """1-norm distance in the standard (state, joint history) basis."""
    keys = set(a.entries) | set(b.entries)
    return sum(abs(a.entries.get(k, 0.0) - b.entries.get(k, 0.0)) for k in keys)


# ---------------------------------------------------------------------------
# serialization
# ---------------------------------------------------------------------------


def occupancy_to_csv(model: PosgModel, s: OccupancyState) -> str:
    """CSV rows ``state,history_1..history_n,probability`` in canonical order
    with 10 significant digits."""
    header = (
        "state,"
        + ",".join(f"history_{i + 1}" for i in range(model.n_agents))
        + ",probability"
    )
    rows = [header]
    for (x, o), p in s.items():
        hist = ",".join(h.label(model) for h in o.privates)
        rows.append(f"{model.states[x]},{hist},{p:.10g}")
    return "\n".join(rows) + "\n"


def occupancy_to_tree_text(model: PosgModel, s: OccupancyState) -> str:
    """Deterministic indented rendering grouped by joint history."""
    groups: dict[JointHistory, list[tuple[int, float]]] = {}
    for (x, o), p in s.items():
        groups.setdefault(o, []).append((x, p))
    lines = []
    for o in sorted(groups, key=lambda o: o.sort_key()):
        lines.append("(" + ", ".join(h.label(model) for h in o.privates) + ")")
        for x, p in groups[o]:
            lines.append(f"  {model.states[x]}: {p:.10g}")
    return "\n".join(lines) + "\n"
