"""Exact small-tree enumeration oracles for the entropy recursion.

For a node v with L leaves below it, the boundary law stores, for each spin
j, the probability of every leaf configuration given spin j at v (a
``(q, q**L)`` array), the unconditioned law, and the Bayes posterior of v's
spin per configuration.  Configurations are indexed in mixed radix with the
leftmost leaf most significant.

Two independent algorithms produce the laws: a bottom-up fold that sums out
interior spins one node at a time, and a vectorized sum over all joint spin
assignments of the subtree.  enumeration_cross_check compares them; the
identity checks consume the fold.  Reductions over configurations use
compensated summation so the identity checks resolve 1e-10 gaps reliably.
"""

from __future__ import annotations

import math
from dataclasses import dataclass

import numpy as np
from scipy.special import rel_entr

from .channels import Channel, binary_channel, make_channel
from .entropy import symmetrized_entropy_rows
from .errors import EnumerationTooLarge, TreeError
from .treesim import SampledTree, _one_hot, _upward, tree_from_level_counts
from .variational import OptimizerConfig, compute_c

DEFAULT_BUDGET = 10 ** 6
JOINT_BUDGET = 4_000_000
POINTWISE_TOL = 1e-9

RECURSION_TOL = 1e-10
LEMMA1_TOL = 1e-10
PROPAGATION_TOL = 1e-12
BAYES_TOL = 1e-12
WITNESS_GAP = 1e-3


@dataclass(frozen=True)
class BoundaryLaw:
    node: int
    leaves: np.ndarray
    cond: np.ndarray       # (q, K): row j is the boundary law given spin j at node
    free: np.ndarray       # (K,): unconditioned boundary law
    posterior: np.ndarray  # (K, q): posterior of the node's spin per configuration


@dataclass(frozen=True)
class RecursionCheck:
    lhs: float
    rhs: float
    abs_diff: float
    pointwise_violations: int
    max_pointwise_gap: float
    pointwise_tol: float = POINTWISE_TOL


def _subtree_nodes(tree: SampledTree, v: int) -> np.ndarray:
    out = [int(v)]
    frontier = [int(v)]
    while frontier:
        nxt: list[int] = []
        for u in frontier:
            nxt.extend(tree.children(u))
        out.extend(nxt)
        frontier = nxt
    return np.asarray(out, dtype=np.int64)


def _subtree_leaves(tree: SampledTree, v: int) -> np.ndarray:
    nodes = _subtree_nodes(tree, v)
    return nodes[np.asarray(tree.node_depth)[nodes] == tree.depth]


def _config_count(q: int, n_leaves: int, budget: int) -> int:
    count = q ** n_leaves
    if count > budget:
        raise EnumerationTooLarge(
            f"{q}^{n_leaves} = {count} boundary configurations exceed the "
            f"budget of {budget}")
    return count


def _fold_law(tree: SampledTree, channel: Channel, v: int) -> np.ndarray:
    matrix = channel.matrix
    q = channel.q

    def rec(u: int) -> np.ndarray:
        kids = tree.children(u)
        if len(kids) == 0:
            return np.eye(q)
        acc = np.ones((q, 1))
        for w in kids:
            t = matrix @ rec(w)
            acc = (acc[:, :, None] * t[:, None, :]).reshape(q, -1)
        return acc

    return rec(int(v))


def _law_from_cond(node: int, leaves: np.ndarray, cond: np.ndarray,
                   alpha: np.ndarray) -> BoundaryLaw:
    free = alpha @ cond
    posterior = np.ascontiguousarray((alpha[:, None] * cond / free[None, :]).T)
    return BoundaryLaw(int(node), leaves, cond, free, posterior)


def enumerate_boundary_laws(tree: SampledTree, channel: Channel, node: int = 0,
                            budget: int = DEFAULT_BUDGET) -> BoundaryLaw:
    """Exact boundary law of the subtree below ``node``, by summing out
    interior spins bottom-up."""
    leaves = _subtree_leaves(tree, node)
    _config_count(channel.q, int(leaves.size), budget)
    cond = _fold_law(tree, channel, node)
    return _law_from_cond(node, leaves, cond, channel.stationary)


def brute_force_boundary_laws(tree: SampledTree, channel: Channel, node: int = 0,
                              budget: int = DEFAULT_BUDGET,
                              joint_budget: int = JOINT_BUDGET) -> BoundaryLaw:
    """Same law as enumerate_boundary_laws, but computed by summing the joint
    probability of every full spin assignment of the subtree."""
    nodes = _subtree_nodes(tree, node)
    q = channel.q
    n_sub = int(nodes.size)
    joint = q ** n_sub
    if joint > joint_budget:
        raise EnumerationTooLarge(
            f"{q}^{n_sub} = {joint} joint assignments exceed the budget of "
            f"{joint_budget}")
    leaves = nodes[np.asarray(tree.node_depth)[nodes] == tree.depth]
    n_configs = _config_count(q, int(leaves.size), budget)

    pos = {int(u): t for t, u in enumerate(nodes)}
    ar = np.arange(joint, dtype=np.int64)
    spins = np.empty((joint, n_sub), dtype=np.int8)
    for t in range(n_sub):
        spins[:, t] = (ar // (q ** (n_sub - 1 - t))) % q
    probs = channel.stationary[spins[:, 0]].copy()
    for t in range(1, n_sub):
        parent_col = pos[int(tree.parent[nodes[t]])]
        probs *= channel.matrix[spins[:, parent_col], spins[:, t]]
    xi = np.zeros(joint, dtype=np.int64)
    for leaf in leaves:
        xi = xi * q + spins[:, pos[int(leaf)]]
    mass = np.zeros((q, n_configs))
    np.add.at(mass, (spins[:, 0].astype(np.int64), xi), probs)
    cond = mass / channel.stationary[:, None]
    return _law_from_cond(node, leaves, cond, channel.stationary)


def enumeration_cross_check(tree: SampledTree, channel: Channel, node: int = 0,
                            budget: int = DEFAULT_BUDGET,
                            joint_budget: int = JOINT_BUDGET) -> float:
    """Largest discrepancy between the two enumeration algorithms."""
    a = enumerate_boundary_laws(tree, channel, node, budget)
    b = brute_force_boundary_laws(tree, channel, node, budget, joint_budget)
    return float(max(
        np.max(np.abs(a.cond - b.cond)),
        np.max(np.abs(a.free - b.free)),
        np.max(np.abs(a.posterior - b.posterior)),
    ))


def check_propagation(tree: SampledTree, channel: Channel, node: int = 0,
                      budget: int = DEFAULT_BUDGET,
                      joint_budget: int = JOINT_BUDGET) -> float:
    """Gap in the one-step factorization of the boundary law: the law at a
    node must equal the product over children of the channel applied to each
    child's law.  Both sides come from independent joint enumerations."""
    kids = list(tree.children(int(node)))
    if not kids:
        raise TreeError(f"node {node} has no children")
    law_v = brute_force_boundary_laws(tree, channel, node, budget, joint_budget)
    acc = np.ones((channel.q, 1))
    for w in kids:
        law_w = brute_force_boundary_laws(tree, channel, w, budget, joint_budget)
        t = channel.matrix @ law_w.cond
        acc = (acc[:, :, None] * t[:, None, :]).reshape(channel.q, -1)
    return float(np.max(np.abs(acc - law_v.cond)))


def _expected_root_entropy(law: BoundaryLaw, channel: Channel) -> float:
    rows = symmetrized_entropy_rows(law.posterior, channel.stationary)
    return math.fsum((law.free * rows).tolist())


def check_lemma1(tree: SampledTree, channel: Channel, node: int = 0,
                 budget: int = DEFAULT_BUDGET) -> float:
    """Gap in the pair identity: the expected symmetrized entropy of the
    node's posterior equals the stationary-weighted sum of relative entropies
    between its conditioned boundary laws."""
    law = enumerate_boundary_laws(tree, channel, node, budget)
    lhs = _expected_root_entropy(law, channel)
    alpha = channel.stationary
    terms = []
    for x1 in range(channel.q):
        for x2 in range(channel.q):
            div = math.fsum(rel_entr(law.cond[x2], law.cond[x1]).tolist())
            terms.append(float(alpha[x1]) * float(alpha[x2]) * div)
    rhs = math.fsum(terms)
    return abs(lhs - rhs)


def check_main_recursion(tree: SampledTree, channel: Channel, node: int = 0,
                         budget: int = DEFAULT_BUDGET,
                         pointwise_tol: float = POINTWISE_TOL) -> RecursionCheck:
    """The expected symmetrized entropy at a node equals the sum over its
    children of the expected entropy of the child posterior pushed through
    the reversed channel.  Also counts boundary configurations where the
    identity read pointwise (no expectation) fails."""
    kids = list(tree.children(int(node)))
    if not kids:
        raise TreeError(f"node {node} has no children")
    alpha = channel.stationary
    law_v = enumerate_boundary_laws(tree, channel, node, budget)
    v_rows = symmetrized_entropy_rows(law_v.posterior, alpha)
    lhs = math.fsum((law_v.free * v_rows).tolist())

    child_rows = []
    child_sizes = []
    rhs_terms = []
    for w in kids:
        law_w = enumerate_boundary_laws(tree, channel, w, budget)
        mapped = law_w.posterior @ channel.reversed
        rows = symmetrized_entropy_rows(mapped, alpha)
        child_rows.append(rows)
        child_sizes.append(int(law_w.free.size))
        rhs_terms.append(math.fsum((law_w.free * rows).tolist()))
    rhs = math.fsum(rhs_terms)

    n_configs = int(law_v.free.size)
    ar = np.arange(n_configs, dtype=np.int64)
    pointwise_sum = np.zeros(n_configs)
    block = 1
    for rows, size in zip(reversed(child_rows), reversed(child_sizes)):
        pointwise_sum += rows[(ar // block) % size]
        block *= size
    gaps = np.abs(pointwise_sum - v_rows)
    return RecursionCheck(
        lhs=lhs,
        rhs=rhs,
        abs_diff=abs(lhs - rhs),
        pointwise_violations=int(np.sum(gaps > pointwise_tol)),
        max_pointwise_gap=float(gaps.max()),
        pointwise_tol=float(pointwise_tol),
    )


def check_lyapunov_bound(tree: SampledTree, channel: Channel, node: int = 0,
                         c_value: float | None = None,
                         config: OptimizerConfig | None = None,
                         budget: int = DEFAULT_BUDGET,
                         threads: int | None = 1) -> float:
    """Margin of the contraction step: c * (sum of child expected entropies)
    minus the node's expected entropy.  Nonnegative up to roundoff."""
    kids = list(tree.children(int(node)))
    if not kids:
        raise TreeError(f"node {node} has no children")
    if c_value is None:
        c_value = compute_c(channel, config, threads).value
    lhs = _expected_root_entropy(
        enumerate_boundary_laws(tree, channel, node, budget), channel)
    child_sum = math.fsum(
        _expected_root_entropy(enumerate_boundary_laws(tree, channel, w, budget),
                               channel)
        for w in kids)
    return float(c_value) * child_sum - lhs


def bayes_vs_recursion(tree: SampledTree, channel: Channel,
                       budget: int = 100_000) -> float:
    """Largest gap, over all boundary configurations, between the enumerated
    root posterior and the root belief from the upward recursion."""
    law = enumerate_boundary_laws(tree, channel, 0, budget)
    n_leaves = int(law.leaves.size)
    n_configs = int(law.free.size)
    q = channel.q
    ar = np.arange(n_configs, dtype=np.int64)
    spins = np.empty((n_configs, n_leaves), dtype=np.int64)
    for t in range(n_leaves):
        spins[:, t] = (ar // (q ** (n_leaves - 1 - t))) % q
    roots = _upward(tree, channel, _one_hot(spins, q))
    return float(np.max(np.abs(roots - law.posterior)))


@dataclass(frozen=True)
class SuiteInstance:
    index: int
    channel: Channel
    tree: SampledTree


def _random_small_tree(rng: np.random.Generator, depth: int,
                       max_leaves: int = 6, max_nodes: int = 11) -> SampledTree:
    for _ in range(200):
        counts = []
        width, total, feasible = 1, 1, True
        for _level in range(depth):
            c = rng.integers(1, 4, size=width).astype(np.int64)
            width = int(c.sum())
            total += width
            if total > max_nodes:
                feasible = False
                break
            counts.append(c)
        if feasible and width <= max_leaves:
            return tree_from_level_counts(counts)
    raise TreeError("failed to draw a tree within the size limits")


def random_suite(seed: int = 0, count: int = 50) -> list[SuiteInstance]:
    """Randomized (channel, tree) instances for the identity checks: positive
    channels with 2 or 3 states, trees of depth 1..3 with at most 6 leaves.

    Instance 0 is pinned to an asymmetric two-state channel on the depth-2
    binary tree, a case where the pointwise identity visibly fails.
    """
    if count < 1:
        raise ValueError(f"count must be >= 1, got {count}")
    out = []
    for k in range(count):
        if k == 0:
            ch = binary_channel(0.3, 0.1)
            tr = tree_from_level_counts([[2], [2, 2]])
        else:
            rng = np.random.default_rng([int(seed), k])
            q = 2 + (k % 2)
            rows = rng.dirichlet(np.ones(q), size=q)
            rows = 0.75 * rows + 0.25 / q
            ch = make_channel(rows, label=f"suite[{k}]")
            tr = _random_small_tree(rng, depth=1 + k % 3)
        out.append(SuiteInstance(k, ch, tr))
    return out


def run_suite(seed: int = 0, count: int = 50) -> dict:
    """Run every identity check over the randomized suite and aggregate the
    worst gaps.  The report's "ok" flag requires all tolerances to hold and
    at least one pointwise-failure witness."""
    rows = []
    for inst in random_suite(seed, count):
        tr, ch = inst.tree, inst.channel
        rec = check_main_recursion(tr, ch, 0)
        recursion_diff = rec.abs_diff
        max_gap = rec.max_pointwise_gap
        lemma1_diff = check_lemma1(tr, ch, 0)
        for w in tr.children(0):
            if tr.node_depth[w] < tr.depth:
                rec_w = check_main_recursion(tr, ch, int(w))
                recursion_diff = max(recursion_diff, rec_w.abs_diff)
                max_gap = max(max_gap, rec_w.max_pointwise_gap)
                lemma1_diff = max(lemma1_diff, check_lemma1(tr, ch, int(w)))
        rows.append({
            "index": inst.index,
            "q": int(ch.q),
            "depth": int(tr.depth),
            "nodes": int(tr.n_nodes),
            "leaves": int(tr.n_leaves),
            "recursion_diff": float(recursion_diff),
            "lemma1_diff": float(lemma1_diff),
            "propagation_diff": float(check_propagation(tr, ch, 0)),
            "bayes_diff": float(bayes_vs_recursion(tr, ch)),
            "enumeration_diff": float(enumeration_cross_check(tr, ch, 0)),
            "pointwise_violations": int(rec.pointwise_violations),
            "max_pointwise_gap": float(max_gap),
        })
    report = {
        "seed": int(seed),
        "count": int(count),
        "max_recursion_diff": max(r["recursion_diff"] for r in rows),
        "max_lemma1_diff": max(r["lemma1_diff"] for r in rows),
        "max_propagation_diff": max(r["propagation_diff"] for r in rows),
        "max_bayes_diff": max(r["bayes_diff"] for r in rows),
        "max_enumeration_diff": max(r["enumeration_diff"] for r in rows),
        "witness_instances": sum(
            1 for r in rows if r["max_pointwise_gap"] > WITNESS_GAP),
        "tolerances": {
            "recursion": RECURSION_TOL,
            "lemma1": LEMMA1_TOL,
            "propagation": PROPAGATION_TOL,
            "bayes": BAYES_TOL,
            "witness_gap": WITNESS_GAP,
        },
        "instances": rows,
    }
    report["ok"] = bool(
        report["max_recursion_diff"] <= RECURSION_TOL
        and report["max_lemma1_diff"] <= LEMMA1_TOL
        and report["max_propagation_diff"] <= PROPAGATION_TOL
        and report["max_bayes_diff"] <= BAYES_TOL
        and report["witness_instances"] >= 1
    )
    return report
