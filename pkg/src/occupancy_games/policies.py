"""Histories, decision rules, and policy trees.

Private histories are interleaved (action, observation) id sequences; the
observation component is the flattened per-agent observation (private and
public parts combined).  Policy trees are reduced: a node fixes one action and
branches only on the observation, so decisions exist exactly for histories
reachable under the tree's own past actions.
"""

from __future__ import annotations

import itertools
import json
from dataclasses import dataclass
from typing import Mapping, Sequence, Union

from .errors import (
    CapExceededError,
    UndefinedDecisionRuleError,
    UnreachableHistoryError,
)
from .model import PosgModel


@dataclass(frozen=True)
class PrivateHistory:
    """One agent's (action, observation) stream; the empty tuple at t=0."""

    agent: int
    steps: tuple[tuple[int, int], ...] = ()

    @property
    def t(self) -> int:
        return len(self.steps)

    def child(self, action: int, obs: int) -> "PrivateHistory":
        return PrivateHistory(self.agent, self.steps + ((action, obs),))

    def label(self, model: PosgModel) -> str:
        if not self.steps:
            return "()"
        return "|".join(
            f"{model.actions[self.agent][u]}:{model.agent_obs_label(self.agent, z)}"
            for u, z in self.steps
        )


@dataclass(frozen=True)
class JointHistory:
    """Per-agent private histories of equal length."""

    privates: tuple[PrivateHistory, ...]

    def __post_init__(self):
        lengths = {h.t for h in self.privates}
        if len(lengths) > 1:
            raise ValueError("joint history components must share one length")

    @property
    def t(self) -> int:
        return self.privates[0].t

    def child(self, actions: tuple[int, ...], obs: tuple[int, ...]) -> "JointHistory":
        return JointHistory(
            tuple(h.child(u, z) for h, u, z in zip(self.privates, actions, obs))
        )

    def others(self, agent: int) -> tuple[PrivateHistory, ...]:
        return tuple(h for i, h in enumerate(self.privates) if i != agent)

    def sort_key(self):
        return tuple(h.steps for h in self.privates)


def empty_joint_history(n_agents: int) -> JointHistory:
    return JointHistory(tuple(PrivateHistory(i) for i in range(n_agents)))


@dataclass(frozen=True, eq=False)
class DecisionRule:
    """Map from private histories of one time step to action distributions."""

    agent: int
    t: int
    probs: Mapping[PrivateHistory, tuple[float, ...]]

    def dist(self, history: PrivateHistory) -> tuple[float, ...]:
        try:
            return self.probs[history]
        except KeyError:
            raise UndefinedDecisionRuleError(
                f"undefined decision rule for agent {self.agent} at history "
                f"{history.steps} (t={self.t})"
            ) from None

    def __post_init__(self):
        for hist, dist in self.probs.items():
            if hist.t != self.t:
                raise ValueError("decision rule domain must match its time step")
            if abs(sum(dist) - 1.0) > 1e-9:
                raise ValueError("decision rule image must be a distribution")


@dataclass(frozen=True)
class PolicyTree:
    """Reduced deterministic policy tree; children indexed by observation id."""

    agent: int
    action: int
    children: tuple["PolicyTree", ...] = ()

    @property
    def horizon(self) -> int:
        return 1 if not self.children else 1 + self.children[0].horizon


@dataclass(frozen=True)
class BehavioralPolicy:
    """One decision rule per time step for a single agent."""

    agent: int
    rules: tuple[DecisionRule, ...]

    @property
    def horizon(self) -> int:
        return len(self.rules)


@dataclass(frozen=True)
class PolicyMixture:
    """Weighted pure policies for one agent; weights sum to 1."""

    agent: int
    components: tuple[tuple[float, PolicyTree], ...]

    def __post_init__(self):
        if abs(sum(w for w, _ in self.components) - 1.0) > 1e-9:
            raise ValueError("mixture weights must sum to 1")

    @property
    def horizon(self) -> int:
        return self.components[0][1].horizon


AgentPolicy = Union[PolicyTree, BehavioralPolicy, PolicyMixture]


@dataclass(frozen=True)
class JointPolicy:
    agents: tuple[AgentPolicy, ...]

    @property
    def horizon(self) -> int:
        return self.agents[0].horizon

    @property
    def is_mixed(self) -> bool:
        return any(isinstance(a, PolicyMixture) for a in self.agents)

    def pure_expansions(self):
        """Yield (weight, JointPolicy without mixtures) over mixture supports."""
        choices = []
        for a in self.agents:
            if isinstance(a, PolicyMixture):
                choices.append(list(a.components))
            else:
                choices.append([(1.0, a)])
        for combo in itertools.product(*choices):
            weight = 1.0
            for w, _ in combo:
                weight *= w
            yield weight, JointPolicy(tuple(p for _, p in combo))

    def joint_rules(self, model: PosgModel) -> list[tuple[DecisionRule, ...]]:
        """Per-step tuples of decision rules; undefined for mixtures."""
        if self.is_mixed:
            raise ValueError("mixture policies have no single decision-rule form")
        per_agent = []
        for a in self.agents:
            if isinstance(a, BehavioralPolicy):
                per_agent.append(a.rules)
            else:
                per_agent.append(tree_to_rules(model, a))
        return [tuple(rules[t] for rules in per_agent) for t in range(self.horizon)]


def joint_action_dist(
    model: PosgModel, rules: Sequence[DecisionRule], joint: JointHistory
) -> dict[int, float]:
    """Product distribution over joint action ids at one joint history."""
    dists = [rule.dist(h) for rule, h in zip(rules, joint.privates)]
    out: dict[int, float] = {}
    for combo in itertools.product(*(range(len(d)) for d in dists)):
        p = 1.0
        for d, u in zip(dists, combo):
            p *= d[u]
        if p > 0.0:
            out[model.joint_action_index(combo)] = p
    return out


def pure_policy_count(n_actions: int, n_obs: int, horizon: int) -> int:
    """Number of reduced deterministic trees."""
    nodes = horizon if n_obs == 1 else (n_obs**horizon - 1) // (n_obs - 1)
    return n_actions**nodes


def enumerate_pure_policies(
    model: PosgModel, agent: int, horizon: int, cap: int = 10**6
) -> list[PolicyTree]:
    """All reduced deterministic policy trees for one agent.

    Ordering is lexicographic over preorder action labels (root action varies
    slowest), so indices are stable across runs.
    """
    if horizon < 1:
        raise ValueError("horizon must be >= 1")
    n_u = len(model.actions[agent])
    n_z = model.n_agent_obs(agent)
    count = pure_policy_count(n_u, n_z, horizon)
    if count > cap:
        raise CapExceededError("enumeration", count, cap)

    def build(depth: int) -> list[PolicyTree]:
        if depth == 1:
            return [PolicyTree(agent, a) for a in range(n_u)]
        subs = build(depth - 1)
        out = []
        for a in range(n_u):
            for combo in itertools.product(range(len(subs)), repeat=n_z):
                out.append(PolicyTree(agent, a, tuple(subs[i] for i in combo)))
        return out

    return build(horizon)


def decision_at(policy: PolicyTree, history: PrivateHistory) -> dict[int, float]:
    """Action distribution prescribed at ``history``, as {action id: prob}.

    Deterministic trees return a point mass.  Histories whose actions leave
    the tree's support are rejected: in reduced form the tree makes no
    decision there.
    """
    node = policy
    for u, z in history.steps:
        if u != node.action:
            raise UnreachableHistoryError(
                f"history plays action {u} where the tree plays {node.action}"
            )
        if not node.children:
            raise UnreachableHistoryError("history is longer than the tree horizon")
        node = node.children[z]
    return {node.action: 1.0}


def tree_to_rules(model: PosgModel, tree: PolicyTree) -> tuple[DecisionRule, ...]:
    """Decision rules over the tree's on-support histories."""
    n_u = len(model.actions[tree.agent])
    rules = []
    level = {PrivateHistory(tree.agent): tree}
    for t in range(tree.horizon):
        probs = {}
        nxt = {}
        for hist, node in level.items():
            dist = [0.0] * n_u
            dist[node.action] = 1.0
            probs[hist] = tuple(dist)
            for z, child in enumerate(node.children):
                nxt[hist.child(node.action, z)] = child
        rules.append(DecisionRule(tree.agent, t, probs))
        level = nxt
    return tuple(rules)


def project_plan_time(y_private) -> PrivateHistory:
    """Strip the initial belief and the others' policy from a private
    plan-time history, keeping the agent's own history."""
    return y_private.history


# ---------------------------------------------------------------------------
# serialization
# ---------------------------------------------------------------------------


def _tree_to_obj(model: PosgModel, tree: PolicyTree) -> dict:
    obj: dict = {"action": model.actions[tree.agent][tree.action]}
    if tree.children:
        obj["children"] = {
            model.agent_obs_label(tree.agent, z): _tree_to_obj(model, child)
            for z, child in enumerate(tree.children)
        }
    return obj


def _tree_from_obj(model: PosgModel, agent: int, obj: dict) -> PolicyTree:
    action = model.actions[agent].index(obj["action"])
    children = ()
    if "children" in obj:
        labels = [model.agent_obs_label(agent, z) for z in range(model.n_agent_obs(agent))]
        children = tuple(_tree_from_obj(model, agent, obj["children"][lab]) for lab in labels)
    return PolicyTree(agent, action, children)


def _history_key(model: PosgModel, hist: PrivateHistory) -> str:
    return hist.label(model)


def _history_from_key(model: PosgModel, agent: int, key: str) -> PrivateHistory:
    if key == "()":
        return PrivateHistory(agent)
    steps = []
    for part in key.split("|"):
        u_lab, z_lab = part.split(":", 1)
        u = model.actions[agent].index(u_lab)
        z = [
            model.agent_obs_label(agent, z) for z in range(model.n_agent_obs(agent))
        ].index(z_lab)
        steps.append((u, z))
    return PrivateHistory(agent, tuple(steps))


def policy_to_json(model: PosgModel, policy: JointPolicy) -> str:
    """Deterministic, node-ordered text form of a joint policy."""
    agents = []
    for a in policy.agents:
        if isinstance(a, PolicyTree):
            agents.append({"type": "tree", "tree": _tree_to_obj(model, a)})
        elif isinstance(a, BehavioralPolicy):
            rules = []
            for rule in a.rules:
                entry = {}
                for hist in sorted(rule.probs, key=lambda h: h.steps):
                    dist = rule.probs[hist]
                    entry[_history_key(model, hist)] = {
                        model.actions[a.agent][u]: p for u, p in enumerate(dist) if p > 0
                    }
                rules.append(entry)
            agents.append({"type": "behavioral", "rules": rules})
        else:
            agents.append(
                {
                    "type": "mixture",
                    "components": [
                        {"weight": w, "tree": _tree_to_obj(model, tree)}
                        for w, tree in a.components
                    ],
                }
            )
    return json.dumps({"horizon": policy.horizon, "agents": agents}, indent=2)


def policy_from_json(model: PosgModel, text: str) -> JointPolicy:
    data = json.loads(text)
    agents: list[AgentPolicy] = []
    for i, spec in enumerate(data["agents"]):
        if spec["type"] == "tree":
            agents.append(_tree_from_obj(model, i, spec["tree"]))
        elif spec["type"] == "behavioral":
            n_u = len(model.actions[i])
            rules = []
            for t, entry in enumerate(spec["rules"]):
                probs = {}
                for key, dist_obj in entry.items():
                    dist = [0.0] * n_u
                    for lab, p in dist_obj.items():
                        dist[model.actions[i].index(lab)] = p
                    probs[_history_from_key(model, i, key)] = tuple(dist)
                rules.append(DecisionRule(i, t, probs))
            agents.append(BehavioralPolicy(i, tuple(rules)))
        elif spec["type"] == "mixture":
            comps = tuple(
                (c["weight"], _tree_from_obj(model, i, c["tree"]))
                for c in spec["components"]
            )
            agents.append(PolicyMixture(i, comps))
        else:
            raise ValueError(f"unknown policy type {spec['type']!r}")
    return JointPolicy(tuple(agents))
