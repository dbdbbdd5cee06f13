"""MCTS node store, selection scores, batched selection and backpropagation."""
from __future__ import annotations

import bisect
import math
from dataclasses import dataclass
from typing import Any, Callable

UCB1 = "ucb1"
UCB_VIRTUAL = "ucb_virtual"
UCT_TOP_M = "uct_top_m"
GUIDED = "guided"
VARIANTS = (UCB1, UCB_VIRTUAL, UCT_TOP_M, GUIDED)

INF = float("inf")
M_CAP = 100


@dataclass(frozen=True)
class SelectionPolicy:
    variant: str = UCB_VIRTUAL
    c: float = 0.3
    m: int = 3
    top_k: int | None = None  # ucb_virtual: use the mean of the top-k records as Q

    def __post_init__(self):
        if self.variant not in VARIANTS:
            raise ValueError(f"unknown variant {self.variant!r}")
        if not self.c >= 0.0:
            raise ValueError("c must be >= 0")
        if self.m < 1 or (self.top_k is not None and self.top_k < 1):
            raise ValueError("m and top_k must be >= 1")


class LazyActions:
    """Untried-action list that is only built when the node is first expanded."""

    __slots__ = ("_fn", "_items")

    def __init__(self, fn: Callable[[], list]):
        self._fn = fn
        self._items: list | None = None

    def _get(self) -> list:
        if self._items is None:
            self._items = list(self._fn())
            self._fn = None
        return self._items

    def __len__(self):
        return len(self._get())

    def __bool__(self):
        return bool(self._get())

    def __iter__(self):
        return iter(self._get())

    def __getitem__(self, i):
        return self._get()[i]

    def pop(self, i: int = -1):
        return self._get().pop(i)

    @property
    def materialized(self) -> bool:
        return self._items is not None


class SearchNode:
    __slots__ = ("state", "parent", "action", "depth", "N", "N_hat", "q_sum", "_neg", "m_cap",
                 "children", "untried", "terminal", "reward", "prior", "exhausted", "pending", "info")

    def __init__(self, state, parent: "SearchNode | None" = None, action=None,
                 untried=None, terminal: bool = False, reward: float = 0.0,
                 prior: float = 0.0, m_cap: int = M_CAP):
        self.state = state
        self.parent = parent
        self.action = action
        self.depth = 0 if parent is None else parent.depth + 1
        self.N = 0
        self.N_hat = 0
        self.q_sum = 0.0
        self._neg: list[float] = []   # negated rewards, ascending => rewards descending
        self.m_cap = m_cap
        self.children: list[SearchNode] = []
        self.untried = untried if isinstance(untried, LazyActions) else list(untried or [])
        self.terminal = terminal
        self.reward = reward          # the node's own (grasp-derived) reward
        self.prior = prior
        self.exhausted = False
        self.pending = 0              # popped actions whose child is not attached yet
        self.info: dict[str, Any] = {}

    @property
    def rewards(self) -> list[float]:
        return [-v for v in self._neg]

    def record(self, value: float) -> None:
        bisect.insort(self._neg, -value)
        if len(self._neg) > self.m_cap:
            self._neg.pop()

    def top(self, m: int) -> list[float]:
        return [-v for v in self._neg[:m]]

    def add_child(self, child: "SearchNode") -> "SearchNode":
        child.parent = self
        child.depth = self.depth + 1
        self.children.append(child)
        self.release()
        return child

    def release(self) -> None:
        """Settle one popped action (its child was attached or it was dropped)."""
        if self.pending > 0:
            self.pending -= 1

    def expandable(self, max_depth: int | None = None) -> bool:
        if self.terminal or not self.untried:
            return False
        return max_depth is None or self.depth < max_depth

    def iter_nodes(self):
        stack = [self]
        while stack:
            n = stack.pop()
            yield n
            stack.extend(reversed(n.children))

    def signature(self):
        """Nested, comparable description of the subtree (for equivalence checks)."""
        return (repr(self.action), self.N, tuple(self.rewards), round(self.q_sum, 15), self.terminal,
                tuple(c.signature() for c in self.children))

    def __repr__(self):
        return f"SearchNode(depth={self.depth}, N={self.N}, children={len(self.children)})"


def score_child(policy: SelectionPolicy, parent: SearchNode, child: SearchNode,
                prior: float | None = None) -> float:
    v = policy.variant
    if v == GUIDED and prior is None:
        raise ValueError("guided scoring needs a prior value")
    if child.N == 0 and child.N_hat == 0:
        return INF
    explore_only = math.isinf(policy.c)
    if v == UCB1:
        if explore_only:
            return math.sqrt(2.0 * math.log(parent.N) / child.N)
        return child.q_sum / child.N + policy.c * math.sqrt(2.0 * math.log(parent.N) / child.N)
    if v == UCB_VIRTUAL:
        n = child.N + child.N_hat
        ln = math.log(parent.N + parent.N_hat)
        if explore_only:
            return math.sqrt(2.0 * ln / n)
        if policy.top_k is None:
            q = child.q_sum / n
        else:
            q = sum(child.top(policy.top_k)) / (min(child.N, policy.top_k) + child.N_hat)
        return q + policy.c * math.sqrt(2.0 * ln / n)
    if v == UCT_TOP_M:
        k = min(child.N, policy.m)
        q = sum(child.top(k)) / k if k else 0.0
        if explore_only:
            return math.sqrt(math.log(parent.N) / child.N)
        return q + policy.c * math.sqrt(math.log(parent.N) / child.N)
    # guided: visit count starts at one, no exploration term
    return (prior + sum(child.top(policy.m))) / (1 + child.N)


def _best_child(policy, node: SearchNode, prior_of, blocked=()) -> SearchNode | None:
    best, best_s = None, -INF
    for ch in node.children:
        if ch.exhausted or ch in blocked:
            continue
        s = score_child(policy, node, ch, prior_of(ch) if prior_of else None)
        if best is None or s > best_s:
            best, best_s = ch, s
    return best


def select_leaf(root: SearchNode, policy: SelectionPolicy, max_depth: int | None = None,
                prior_of: Callable[[SearchNode], float] | None = None, _path: list | None = None):
    """Descend by argmax score to an expandable node and pop its first untried action.

    Returns ``None`` once the tree is fully explored (``root.exhausted``) or,
    inside a batch, when every open branch waits on a pending expansion.
    Subtrees with nothing left to expand are flagged ``exhausted`` on the way.
    """
    if policy.variant == GUIDED and prior_of is None:
        prior_of = lambda n: n.prior
    blocked: set = set()
    while not root.exhausted and root not in blocked:
        node = root
        path = [node]
        while True:
            if node.expandable(max_depth):
                action = node.untried.pop(0)
                node.pending += 1
                if _path is not None:
                    _path[:] = path
                return node, action
            nxt = _best_child(policy, node, prior_of, blocked)
            if nxt is None:
                if node.pending == 0 and not any(c in blocked for c in node.children):
                    node.exhausted = True
                else:
                    blocked.add(node)
                break
            node = nxt
            path.append(node)
    return None


def select_batch(root: SearchNode, policy: SelectionPolicy, batch_size: int,
                 max_depth: int | None = None, prior_of=None) -> list[tuple[SearchNode, Any]]:
    """Up to ``batch_size`` distinct (node, action) pairs using virtual visits."""
    if batch_size < 1:
        raise ValueError("batch_size must be >= 1")
    out = []
    touched: list[SearchNode] = []
    try:
        for _ in range(batch_size):
            path: list[SearchNode] = []
            hit = select_leaf(root, policy, max_depth, prior_of, path)
            if hit is None:
                break
            out.append(hit)
            for n in path:
                n.N_hat += 1
                touched.append(n)
    finally:
        for n in touched:
            n.N_hat = 0
    return out


def backpropagate(leaf: SearchNode, reward: float, mode: str = "max", gamma: float = 1.0) -> None:
    """Walk to the root, recording the discounted running value at each node.

    In ``max`` mode the running value first absorbs the node's own reward, so
    the best reward seen along the path wins over a weaker discounted tail.
    """
    if mode not in ("max", "sum"):
        raise ValueError(f"unknown backprop mode {mode!r}")
    r = reward
    node = leaf
    while node is not None:
        if mode == "max":
            r = max(r, node.reward)
        node.N += 1
        node.q_sum += r
        node.record(r)
        r *= gamma
        node = node.parent
