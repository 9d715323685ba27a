"""Binary label tree that factors P(y | x) into per-node left/right regressions.

Each internal node carries a regressor estimating the probability that the
true label lies in its right subtree; a label's probability is the product of
the per-node estimates along its root-to-leaf path, so both training and
prediction touch O(depth) regressors. New labels are inserted online by
descending the tree with a decision rule that trades regressor agreement
against subtree balance, keeping the depth logarithmic in the label count.
"""

from __future__ import annotations

import math
import random
from dataclasses import dataclass
from typing import Callable, Sequence

from .features import SparseVector
from .regressor import LinearRegressor


class UnknownLabelError(KeyError):
    """Raised when an operation requires a label the tree has not seen."""


class CorruptTreeError(RuntimeError):
    """Raised when stored subtree counts disagree with a fresh recount."""


def insert_objective(p: float, left: int, right: int, alpha: float) -> float:
    """Score for sending a new label to the right of a node.

    Positive means go right. The first term follows the node regressor's
    prediction p, the second pushes toward the smaller subtree; alpha in
    (0, 1] sets how aggressively balance overrides the regressor.
    """
    assert left >= 1 and right >= 1, "internal nodes always have nonempty sides"
    return (1.0 - alpha) * 2.0 * (p - 0.5) + alpha * math.log2(left / right)


def insert_direction(p: float, left: int, right: int, alpha: float) -> int:
    """1 to insert right, 0 to insert left; ties go left."""
    return 1 if insert_objective(p, left, right, alpha) > 0.0 else 0


def max_side_fraction(alpha: float) -> float:
    """Asymptotic cap on the fraction of leaves either side of a node can hold.

    Equals 1/2 at alpha = 1 (perfect balance) and approaches 1 as alpha -> 0.
    """
    if not 0.0 < alpha <= 1.0:
        raise ValueError(f"alpha must be in (0, 1], got {alpha}")
    return 1.0 / (1.0 + 2.0 ** (1.0 - 1.0 / alpha))


def max_depth_bound(n_labels: int, side_fraction: float) -> float:
    """Worst-case tree depth for n labels under the insertion rule."""
    if n_labels < 2:
        raise ValueError("depth bound needs at least 2 labels")
    if not 0.5 <= side_fraction < 1.0:
        raise ValueError(f"side_fraction must be in [1/2, 1), got {side_fraction}")
    return math.log(n_labels) / math.log(1.0 / side_fraction) + 2.0


def total_depth_bound(n_labels: int, side_fraction: float) -> float:
    """Bound on the sum of all leaf depths for an n-leaf tree whose nodes
    split no worse than side_fraction : (1 - side_fraction)."""
    if n_labels < 2:
        raise ValueError("total depth bound needs at least 2 labels")
    if not 0.5 <= side_fraction < 1.0:
        raise ValueError(f"side_fraction must be in [1/2, 1), got {side_fraction}")
    k = side_fraction
    entropy = -(k * math.log(k) + (1.0 - k) * math.log(1.0 - k))
    return n_labels * math.log(n_labels) / entropy


class _Node:
    __slots__ = ("left", "right", "label", "reg", "n_left", "n_right", "parent")

    def __init__(self, label, reg, parent):
        self.left = None
        self.right = None
        self.label = label
        self.reg = reg
        self.n_left = 0
        self.n_right = 0
        self.parent = parent

    @property
    def is_leaf(self) -> bool:
        return self.left is None


@dataclass
class DepthStats:
    """Exact structural summary recomputed by traversal."""

    n_leaves: int
    max_depth: int
    total_leaf_depth: int
    disagreements: int
    depth_histogram: dict[int, int]
    node_counts: list[tuple[int, int, int]]  # (node_id, left leaves, right leaves)


class CondProbTree:
    """Online conditional probability tree over an open-ended label set.

    policy "online" inserts new labels with the balance/agreement objective;
    policy "random" makes a fair coin flip at each node instead, but trains the
    traversed regressors the same way. Training is strictly sequential;
    prediction is read-only and may run concurrently between training phases.
    """

    def __init__(
        self,
        alpha: float = 0.5,
        learning_rate: float = 0.1,
        policy: str = "online",
        seed: int = 0,
        regressor_factory: Callable[[], LinearRegressor] | None = None,
    ):
        if policy not in ("online", "random"):
            raise ValueError(f"unknown policy: {policy}")
        if not 0.0 < alpha <= 1.0:
            raise ValueError(f"alpha must be in (0, 1], got {alpha}")
        self.alpha = alpha
        self.learning_rate = learning_rate
        self.policy = policy
        self.seed = seed
        self._rng = random.Random(seed)
        self._factory = regressor_factory or (lambda: LinearRegressor(learning_rate))
        self.nodes: list[_Node] = []
        self.root: int | None = None
        self.leaf_index: dict[str, int] = {}
        self.disagreement_count = 0
        self.max_depth = 0
        self.updates = 0  # total regressor updates, for complexity accounting
        self.last_example_updates = 0
        self.last_insert_path: list[int] = []

    @classmethod
    def balanced(
        cls,
        labels: Sequence[str],
        alpha: float = 1.0,
        learning_rate: float = 0.1,
        regressor_factory: Callable[[], LinearRegressor] | None = None,
    ) -> "CondProbTree":
        """Build a fixed balanced tree over labels known up front (untrained).

        Labels occupy leaves left to right; later online inserts still work and
        follow the configured objective.
        """
        if len(set(labels)) != len(labels):
            raise ValueError("duplicate labels")
        tree = cls(alpha=alpha, learning_rate=learning_rate,
                   regressor_factory=regressor_factory)
        if not labels:
            return tree

        def build(lo: int, hi: int, parent: int | None, depth: int) -> int:
            node_id = len(tree.nodes)
            node = _Node(None, tree._factory(), parent)
            tree.nodes.append(node)
            count = hi - lo
            if count == 1:
                node.label = labels[lo]
                tree.leaf_index[labels[lo]] = node_id
                tree.max_depth = max(tree.max_depth, depth)
                return node_id
            mid = lo + (count + 1) // 2
            node.left = build(lo, mid, node_id, depth + 1)
            node.right = build(mid, hi, node_id, depth + 1)
            node.n_left = mid - lo
            node.n_right = hi - mid
            return node_id

        tree.root = build(0, len(labels), None, 0)
        return tree

    @property
    def n_labels(self) -> int:
        return len(self.leaf_index)

    def path_to(self, y: str) -> list[tuple[int, int]]:
        """Internal nodes from root toward y's leaf, each with its direction
        bit (0 left, 1 right)."""
        node_id = self.leaf_index.get(y)
        if node_id is None:
            raise UnknownLabelError(y)
        nodes = self.nodes
        steps: list[tuple[int, int]] = []
        cur = node_id
        parent = nodes[cur].parent
        while parent is not None:
            steps.append((parent, 1 if nodes[parent].right == cur else 0))
            cur = parent
            parent = nodes[cur].parent
        steps.reverse()
        return steps

    def predict(self, x: SparseVector, y: str) -> float:
        """Estimated P(y | x); labels never seen score 0."""
        if y not in self.leaf_index:
            return 0.0
        q = 1.0
        nodes = self.nodes
        for node_id, go_right in self.path_to(y):
            f = nodes[node_id].reg.predict(x)
            q *= f if go_right else 1.0 - f
        return q

    # Estimator interface used by the evaluation harness.
    def score(self, x: SparseVector, y: str) -> float:
        return self.predict(x, y)

    def learn(self, x: SparseVector, y: str) -> None:
        self.train_online(x, y)

    def train_online(self, x: SparseVector, y: str) -> None:
        if y in self.leaf_index:
            self.train_known(x, y)
        else:
            self.insert_label(x, y)

    def train_known(self, x: SparseVector, y: str) -> None:
        """Update the regressors along y's path; y must already be a leaf."""
        if y not in self.leaf_index:
            raise UnknownLabelError(y)
        count = 0
        nodes = self.nodes
        for node_id, go_right in self.path_to(y):
            nodes[node_id].reg.update(x, 1.0 if go_right else 0.0)
            count += 1
        nodes[self.leaf_index[y]].reg.update(x, 0.0)
        count += 1
        self.updates += count
        self.last_example_updates = count

    def insert_label(self, x: SparseVector, y: str) -> int:
        """Add a new leaf for y, training every regressor passed on the way.

        Returns the new leaf's node id.
        """
        if y in self.leaf_index:
            raise ValueError(f"label already present: {y}")
        count = 0
        path: list[int] = []
        nodes = self.nodes

        if self.root is None:
            reg = self._factory()
            node = _Node(y, reg, None)
            self.nodes.append(node)
            self.root = 0
            self.leaf_index[y] = 0
            reg.update(x, 0.0)
            self.updates += 1
            self.last_example_updates = 1
            self.last_insert_path = []
            return 0

        cur = self.root
        node = nodes[cur]
        while not node.is_leaf:
            p = node.reg.predict(x)
            if self.policy == "random":
                go_right = 1 if self._rng.random() < 0.5 else 0
            else:
                go_right = insert_direction(p, node.n_left, node.n_right, self.alpha)
            # p == 1/2 counts as preferring left, matching the tie-break.
            prefers_right = 1 if p > 0.5 else 0
            if go_right != prefers_right:
                self.disagreement_count += 1
            node.reg.update(x, float(go_right))
            count += 1
            path.append(cur)
            if go_right:
                node.n_right += 1
                cur = node.right
            else:
                node.n_left += 1
                cur = node.left
            node = nodes[cur]

        # Split the reached leaf: old label moves left with a copy of the
        # regressor taken before this node's final update, new label goes right.
        old_label = node.label
        left_id = len(nodes)
        nodes.append(_Node(old_label, node.reg.copy(), cur))
        right_id = len(nodes)
        new_reg = self._factory()
        nodes.append(_Node(y, new_reg, cur))
        node.label = None
        node.left = left_id
        node.right = right_id
        node.n_left = 1
        node.n_right = 1
        self.leaf_index[old_label] = left_id
        self.leaf_index[y] = right_id
        new_reg.update(x, 0.0)
        node.reg.update(x, 1.0)
        count += 2
        path.append(cur)

        self.max_depth = max(self.max_depth, len(path))
        self.updates += count
        self.last_example_updates = count
        self.last_insert_path = path
        return right_id

    def depth_stats(self) -> DepthStats:
        """Recount leaves and depths by traversal, cross-checking stored counts."""
        if self.root is None:
            return DepthStats(0, 0, 0, self.disagreement_count, {}, [])
        nodes = self.nodes
        histogram: dict[int, int] = {}
        node_counts: list[tuple[int, int, int]] = []
        total = 0
        deepest = 0
        leaves = 0

        # Post-order with an explicit stack; returns leaf counts per node.
        counts: dict[int, int] = {}
        stack: list[tuple[int, int, bool]] = [(self.root, 0, False)]
        while stack:
            node_id, depth, expanded = stack.pop()
            node = nodes[node_id]
            if node.is_leaf:
                counts[node_id] = 1
                leaves += 1
                total += depth
                deepest = max(deepest, depth)
                histogram[depth] = histogram.get(depth, 0) + 1
                continue
            if not expanded:
                stack.append((node_id, depth, True))
                stack.append((node.left, depth + 1, False))
                stack.append((node.right, depth + 1, False))
                continue
            left_count = counts.pop(node.left)
            right_count = counts.pop(node.right)
            if left_count != node.n_left or right_count != node.n_right:
                raise CorruptTreeError(
                    f"node {node_id}: stored counts ({node.n_left}, {node.n_right})"
                    f" != recount ({left_count}, {right_count})"
                )
            counts[node_id] = left_count + right_count
            node_counts.append((node_id, left_count, right_count))
        if leaves != len(self.leaf_index):
            raise CorruptTreeError(
                f"{leaves} leaves found but {len(self.leaf_index)} labels indexed"
            )
        return DepthStats(
            n_leaves=leaves,
            max_depth=deepest,
            total_leaf_depth=total,
            disagreements=self.disagreement_count,
            depth_histogram=histogram,
            node_counts=node_counts,
        )

    def structure_signature(self) -> tuple:
        """Preorder shape-and-label fingerprint, regressor state excluded."""
        if self.root is None:
            return ()
        out = []
        stack = [self.root]
        nodes = self.nodes
        while stack:
            node = nodes[stack.pop()]
            if node.is_leaf:
                out.append(("leaf", node.label))
            else:
                out.append(("internal", node.n_left, node.n_right))
                stack.append(node.right)
                stack.append(node.left)
        return tuple(out)
