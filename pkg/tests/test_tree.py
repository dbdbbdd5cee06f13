import math
import random

import pytest
from hypothesis import given, settings, strategies as st

from clutterplan.tree import (GUIDED, UCB1, UCB_VIRTUAL, UCT_TOP_M, VARIANTS, LazyActions, SearchNode,
                              SelectionPolicy, backpropagate, score_child, select_batch, select_leaf)


def node_with(rewards, n_hat=0, parent=None, prior=0.0):
    n = SearchNode(None, prior=prior)
    for r in rewards:
        n.N += 1
        n.q_sum += r
        n.record(r)
    n.N_hat = n_hat
    if parent is not None:
        parent.add_child(n)
    return n


def oracle(variant, c, m, top_k, parent_n, parent_hat, raw, n_hat, prior):
    """Textbook formulas, written against the raw reward list."""
    n = len(raw)
    if n == 0 and n_hat == 0:
        return math.inf
    best = sorted(raw, reverse=True)
    if variant == UCB1:
        return sum(raw) / n + c * math.sqrt(2 * math.log(parent_n) / n)
    if variant == UCB_VIRTUAL:
        tot = n + n_hat
        q = sum(raw) / tot if top_k is None else sum(best[:top_k]) / (min(n, top_k) + n_hat)
        return q + c * math.sqrt(2 * math.log(parent_n + parent_hat) / tot)
    if variant == UCT_TOP_M:
        k = min(n, m)
        return sum(best[:k]) / k + c * math.sqrt(math.log(parent_n) / n)
    return (prior + sum(best[:m])) / (1 + n)


# ---------------------------------------------------------------- frozen examples

def test_virtual_ucb_example_one():
    parent = node_with([0.0] * 6, n_hat=2)
    child = node_with([0.4, 0.6], parent=parent)
    s = score_child(SelectionPolicy(UCB_VIRTUAL, c=0.3), parent, child)
    assert s == pytest.approx(0.93262, abs=5e-5)
    assert s == pytest.approx(0.5 + 0.3 * math.sqrt(2 * math.log(8) / 2), abs=1e-12)


def test_virtual_ucb_example_with_pending_visit():
    parent = node_with([0.0] * 8, n_hat=1)
    child = node_with([0.2, 0.8], n_hat=1, parent=parent)
    s = score_child(SelectionPolicy(UCB_VIRTUAL, c=0.3), parent, child)
    assert s == pytest.approx(0.69643, abs=5e-5)
    assert s == pytest.approx(1 / 3 + 0.3 * math.sqrt(2 * math.log(9) / 3), abs=1e-12)


def test_unvisited_child_scores_infinity():
    parent = node_with([0.1])
    child = node_with([], parent=parent)
    for v in (UCB1, UCB_VIRTUAL, UCT_TOP_M):
        assert score_child(SelectionPolicy(v), parent, child) == math.inf
    assert score_child(SelectionPolicy(GUIDED), parent, child, prior=0.2) == math.inf


def test_guided_needs_prior():
    parent = node_with([0.1, 0.2])
    child = node_with([0.1], parent=parent)
    with pytest.raises(ValueError):
        score_child(SelectionPolicy(GUIDED), parent, child)


def test_guided_example():
    parent = node_with([0.0] * 4)
    child = node_with([0.9, 0.1, 0.5, 0.7], parent=parent)
    # top-3 of four records plus the prior, over 1 + N
    assert score_child(SelectionPolicy(GUIDED, m=3), parent, child, prior=0.3) == pytest.approx(2.4 / 5)


def test_policy_validation():
    with pytest.raises(ValueError):
        SelectionPolicy("thompson")
    with pytest.raises(ValueError):
        SelectionPolicy(c=-1.0)
    with pytest.raises(ValueError):
        SelectionPolicy(m=0)


def test_record_cap_keeps_best():
    n = SearchNode(None, m_cap=3)
    for r in (0.1, 0.9, 0.5, 0.7, 0.2):
        n.record(r)
    assert n.rewards == [0.9, 0.7, 0.5]
    assert n.top(2) == [0.9, 0.7]


# ---------------------------------------------------------------- random statistics

def test_scores_match_oracle_on_random_statistics():
    rng = random.Random(4)
    for _ in range(10_000):
        v = rng.choice(VARIANTS)
        c = rng.choice([0.0, 0.3, 1.5, 2.0])
        m = rng.randint(1, 5)
        top_k = rng.choice([None, 1, 3]) if v == UCB_VIRTUAL else None
        raw = [rng.random() for _ in range(rng.randint(1, 12))]
        n_hat = rng.randint(0, 3) if v == UCB_VIRTUAL else 0
        p_raw = [0.0] * (len(raw) + rng.randint(0, 20))
        p_hat = rng.randint(0, 3) if v == UCB_VIRTUAL else 0
        prior = rng.random()
        parent = node_with(p_raw, n_hat=p_hat)
        child = node_with(raw, n_hat=n_hat, parent=parent)
        pol = SelectionPolicy(v, c=c, m=m, top_k=top_k)
        got = score_child(pol, parent, child, prior if v == GUIDED else None)
        want = oracle(v, c, m, top_k, parent.N, p_hat, raw, n_hat, prior)
        assert got == pytest.approx(want, abs=1e-12, rel=1e-12)


# ---------------------------------------------------------------- select_leaf

def test_select_leaf_pops_root_action_first():
    root = SearchNode(None, untried=["a", "b"])
    node, action = select_leaf(root, SelectionPolicy(UCB1))
    assert node is root and action == "a"
    assert list(root.untried) == ["b"] and root.pending == 1


def test_select_leaf_prefers_unvisited_child():
    root = node_with([0.5] * 3)
    seen = node_with([0.9, 0.9], parent=root)
    seen.untried = ["x"]
    new = node_with([], parent=root)
    new.untried = ["y"]
    assert select_leaf(root, SelectionPolicy(UCB1)) == (new, "y")


def test_select_leaf_exhausted_tree_returns_none():
    root = node_with([0.5])
    node_with([0.5], parent=root)
    assert select_leaf(root, SelectionPolicy(UCB1)) is None
    assert root.exhausted


def test_select_leaf_respects_max_depth():
    root = node_with([0.5, 0.5])
    kid = node_with([0.5], parent=root)
    kid.untried = ["deep"]
    assert select_leaf(root, SelectionPolicy(UCB1), max_depth=1) is None
    assert select_leaf(node_with([0.1]), SelectionPolicy(UCB1), max_depth=0) is None


def brute_path(root, policy):
    """Argmax descent written from scratch: lowest index wins ties."""
    node = root
    while not node.untried:
        best, best_s = None, -math.inf
        for ch in node.children:
            if not any(True for _ in open_nodes(ch)):
                continue
            s = oracle(policy.variant, policy.c, policy.m, policy.top_k, node.N, node.N_hat,
                       ch.rewards, ch.N_hat, ch.prior)
            if s > best_s:
                best, best_s = ch, s
        node = best
    return node


def open_nodes(n):
    return (x for x in n.iter_nodes() if x.untried)


def random_tree(rng, depth=3, width=3):
    root = node_with([rng.random() for _ in range(rng.randint(5, 30))])

    def grow(parent, d):
        for _ in range(rng.randint(1, width)):
            k = node_with([rng.random() for _ in range(rng.randint(1, 6))], parent=parent, prior=rng.random())
            if d < depth and rng.random() < 0.7:
                grow(k, d + 1)
            else:
                k.untried = [f"a{id(k)}-{j}" for j in range(rng.randint(0, 2))]
    grow(root, 1)
    return root


def test_three_level_descent_matches_brute_force():
    rng = random.Random(9)
    checked = 0
    for _ in range(300):
        root = random_tree(rng)
        if not any(True for _ in open_nodes(root)):
            continue
        for v in (UCB1, UCT_TOP_M, GUIDED):
            pol = SelectionPolicy(v, c=0.5)
            want = brute_path(root, pol)
            node, action = select_leaf(root, pol)
            assert node is want
            node.untried.insert(0, action)
            node.pending = 0
            checked += 1
    assert checked > 500


# ---------------------------------------------------------------- select_batch

def test_batch_spreads_over_five_children():
    root = node_with([0.5] * 5)
    for i in range(5):
        k = node_with([0.5], parent=root)
        k.untried = [f"act{i}"]
    out = select_batch(root, SelectionPolicy(UCB_VIRTUAL), 5)
    assert sorted(a for _, a in out) == [f"act{i}" for i in range(5)]
    assert len({id(n) for n, _ in out}) == 5
    assert all(n.N_hat == 0 for n in root.iter_nodes())


def test_batch_size_must_be_positive():
    with pytest.raises(ValueError):
        select_batch(SearchNode(None, untried=[1]), SelectionPolicy(), 0)


def test_batch_stops_when_tree_runs_dry():
    root = SearchNode(None, untried=[1, 2])
    assert len(select_batch(root, SelectionPolicy(), 8)) == 2


def test_random_batches_are_distinct_and_reset_virtual_visits():
    rng = random.Random(21)
    for _ in range(1000):
        root = random_tree(rng)
        pol = SelectionPolicy(rng.choice(VARIANTS), c=rng.choice([0.3, 1.0]))
        out = select_batch(root, pol, rng.randint(1, 8))
        keys = [(id(n), a) for n, a in out]
        assert len(keys) == len(set(keys))
        assert all(n.N_hat == 0 for n in root.iter_nodes())


# ---------------------------------------------------------------- backpropagation

def chain(rewards):
    nodes = [SearchNode(None, reward=rewards[0])]
    for r in rewards[1:]:
        nodes.append(nodes[-1].add_child(SearchNode(None, reward=r)))
    return nodes


def test_backprop_plain_value():
    nodes = chain([0.0, 0.0, 0.0])
    backpropagate(nodes[-1], 0.8)
    for n in nodes:
        assert (n.N, n.q_sum, n.rewards) == (1, 0.8, [0.8])


def test_backprop_zero_reward_counts_the_visit():
    nodes = chain([0.0, 0.0])
    backpropagate(nodes[-1], 0.0)
    assert [n.N for n in nodes] == [1, 1]
    assert [n.q_sum for n in nodes] == [0.0, 0.0]


def test_backprop_max_mode_switches_to_better_node_reward():
    root, mid, leaf = chain([0.0, 0.9, 0.0])
    backpropagate(leaf, 0.5, gamma=0.9)
    assert leaf.rewards == [0.5]
    assert mid.rewards == [0.9]
    assert root.rewards == pytest.approx([0.81])


def test_backprop_sum_mode_ignores_node_rewards():
    root, mid, leaf = chain([0.0, 0.9, 0.0])
    backpropagate(leaf, 0.5, mode="sum", gamma=0.9)
    assert [n.q_sum for n in (leaf, mid, root)] == pytest.approx([0.5, 0.45, 0.405])


def test_backprop_unknown_mode():
    with pytest.raises(ValueError):
        backpropagate(SearchNode(None), 1.0, mode="mean")


@settings(max_examples=100)
@given(st.lists(st.floats(0, 1), min_size=1, max_size=6), st.floats(0, 1), st.floats(0.5, 1.0))
def test_backprop_values_never_increase_towards_root_beyond_node_rewards(node_rewards, r, gamma):
    nodes = chain(node_rewards)
    backpropagate(nodes[-1], r, gamma=gamma)
    # each recorded value is the max of the discounted child value and the node's reward
    want = r
    for n in reversed(nodes):
        want = max(want, n.reward)
        assert n.rewards[0] == pytest.approx(want, abs=1e-12)
        want *= gamma


def test_lazy_actions_build_once():
    calls = []
    la = LazyActions(lambda: calls.append(1) or [3, 4])
    assert not la.materialized
    assert la.pop(0) == 3 and len(la) == 1 and list(la) == [4]
    assert calls == [1]
