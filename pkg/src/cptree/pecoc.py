"""Probability estimation with Hadamard subset codes.

A code matrix turns an n-label problem into one subset-membership regression
per row; a label's probability is decoded as a shifted average of the row
predictions. The flat decoder uses one code over all labels; the k-way tree
arranges smaller codes at the nodes of a balanced k-ary tree, interpolating
between the binary label tree (k = 2) and the flat decoder (k = n).
"""

from __future__ import annotations

from collections import deque
from typing import Sequence

import numpy as np

from .features import SparseVector, clip01
from .regressor import LinearRegressor
from .tree import UnknownLabelError

MAX_CODE_EXPONENT = 16  # practical cap: codes up to 65536 columns


def hadamard_code(t: int) -> np.ndarray:
    """Binary 2^t x 2^t code: all-ones first row, every other row half ones,
    and any two distinct non-first rows agreeing on exactly half the columns.

    Built by the doubling recursion [[C, C], [C, 1-C]] from [[1, 1], [1, 0]].
    """
    if not 1 <= t <= MAX_CODE_EXPONENT:
        raise ValueError(f"code exponent must be in [1, {MAX_CODE_EXPONENT}], got {t}")
    code = np.array([[1, 1], [1, 0]], dtype=np.uint8)
    for _ in range(t - 1):
        code = np.block([[code, code], [code, 1 - code]])
    return code


def decode_probability(code: np.ndarray, row_values: Sequence[float], column: int) -> float:
    """Decode one label's probability estimate from per-row subset predictions.

    row_values[i] estimates P(label in subset of row i | x); row 0 is the
    trivial all-labels subset and is conventionally pinned to 1. The result is
    exact when the row values are exact, but may fall outside [0, 1] otherwise;
    callers clip as needed.
    """
    bits = code[:, column].astype(np.float64)
    vals = np.asarray(row_values, dtype=np.float64)
    agree = bits * vals + (1.0 - bits) * (1.0 - vals)
    return 2.0 * float(agree.mean()) - 1.0


def decode_loss_bound(row_errors: Sequence[float]) -> float:
    """Worst-case squared decode error given per-row estimation errors.

    row_errors[0] belongs to the trivial row and must be 0; the bound averages
    the squared errors of the remaining n - 1 rows and is tight when they are
    all equal (in the label's subset orientation).
    """
    errors = np.asarray(row_errors, dtype=np.float64)
    n = errors.size
    if n < 2:
        raise ValueError("need at least two rows")
    if errors[0] != 0.0:
        raise ValueError("the trivial row has no estimation error; errors[0] must be 0")
    return 4.0 * ((n - 1) / n) ** 2 * float(np.mean(errors[1:] ** 2))


def loss_multiplier(n: int, k: int) -> float:
    """Squared-loss multiplier of a k-way code tree over n labels.

    At k = 2 this is (log2 n)^2, matching the binary tree's depth-squared
    factor; at k = n it is 4((n-1)/n)^2, the flat decoder's constant.
    """
    exponent = _exact_log(n, k)
    return 4.0 * exponent**2 * ((k - 1) / k) ** 2


def _exact_log(n: int, k: int) -> int:
    if k < 2 or k & (k - 1):
        raise ValueError(f"k must be a power of two >= 2, got {k}")
    if n < k:
        raise ValueError(f"need k <= n, got k={k}, n={n}")
    e, cap = 1, k
    while cap < n:
        cap *= k
        e += 1
    if cap != n:
        raise ValueError(f"n must be a power of k, got n={n}, k={k}")
    return e


def _padded_exponent(n: int) -> int:
    """Smallest t with 2^t >= max(n, 2)."""
    t = 1
    while (1 << t) < n:
        t += 1
    return t


class PecocModel:
    """Flat subset-code estimator over a label set known up front.

    The code is padded to the next power of two; spare columns act as dummy
    labels that never receive training data and are never predicted. One
    regressor is trained per non-trivial row (the all-ones row is pinned to
    probability 1 and excluded from training).
    """

    def __init__(self, labels: Sequence[str], learning_rate: float = 0.1):
        ordered = list(labels)
        if len(set(ordered)) != len(ordered):
            raise ValueError("duplicate labels")
        if not ordered:
            raise ValueError("need at least one label")
        self.t = _padded_exponent(len(ordered))
        self.code = hadamard_code(self.t)
        self.size = 1 << self.t
        self.label_map: dict[str, int] = {y: c for c, y in enumerate(ordered)}
        self._free_columns = deque(range(len(ordered), self.size))
        self.learning_rate = learning_rate
        self.row_regressors = [LinearRegressor(learning_rate) for _ in range(self.size - 1)]
        self.updates = 0

    @property
    def n_labels(self) -> int:
        return len(self.label_map)

    def _column_of(self, y: str, create: bool) -> int | None:
        col = self.label_map.get(y)
        if col is None and create:
            if not self._free_columns:
                raise ValueError(
                    f"label capacity {self.size} exhausted; cannot add {y!r}"
                )
            col = self._free_columns.popleft()
            self.label_map[y] = col
        return col

    def learn(self, x: SparseVector, y: str) -> None:
        col = self._column_of(y, create=True)
        column_bits = self.code[1:, col]
        for reg, bit in zip(self.row_regressors, column_bits):
            reg.update(x, float(bit))
        self.updates += self.size - 1

    def decode(self, x: SparseVector, y: str) -> float:
        """Raw decoded estimate; may lie outside [0, 1]."""
        col = self.label_map.get(y)
        if col is None:
            raise UnknownLabelError(y)
        row_values = np.empty(self.size, dtype=np.float64)
        row_values[0] = 1.0
        for i, reg in enumerate(self.row_regressors):
            row_values[i + 1] = reg.predict(x)
        return decode_probability(self.code, row_values, col)

    def score(self, x: SparseVector, y: str) -> float:
        """Clipped probability estimate; labels never seen score 0."""
        if y not in self.label_map:
            return 0.0
        return clip01(self.decode(x, y))


class KWayTree:
    """Balanced k-ary tree with a size-k code and k - 1 regressors per node.

    Labels occupy leaf slots in arrival order; slots are padded up to a power
    of k with dummies that never train or predict. Each node estimates the
    probability of each of its children conditioned on reaching the node, and
    a label's estimate is the product of the clipped per-node child estimates
    along its path, costing (k - 1) * depth regressor touches per example.
    """

    def __init__(self, labels: Sequence[str], k: int, learning_rate: float = 0.1):
        if k < 2 or k & (k - 1):
            raise ValueError(f"k must be a power of two >= 2, got {k}")
        ordered = list(labels)
        if len(set(ordered)) != len(ordered):
            raise ValueError("duplicate labels")
        if len(ordered) < 2:
            raise ValueError("need at least two labels")
        self.k = k
        self.t = k.bit_length() - 1
        self.code = hadamard_code(self.t)
        self.depth = 1
        capacity = k
        while capacity < len(ordered):
            capacity *= k
            self.depth += 1
        self.capacity = capacity
        self.label_map: dict[str, int] = {y: s for s, y in enumerate(ordered)}
        self._free_slots = deque(range(len(ordered), capacity))
        self.learning_rate = learning_rate
        # Regressors per internal node, keyed by (level, node index), created
        # lazily so dummy-only subtrees cost nothing.
        self._node_regs: dict[tuple[int, int], list[LinearRegressor]] = {}
        self.updates = 0

    @property
    def n_labels(self) -> int:
        return len(self.label_map)

    def regressors_at(self, level: int, index: int) -> list[LinearRegressor]:
        key = (level, index)
        regs = self._node_regs.get(key)
        if regs is None:
            regs = [LinearRegressor(self.learning_rate) for _ in range(self.k - 1)]
            self._node_regs[key] = regs
        return regs

    def _path(self, slot: int) -> list[tuple[int, int, int]]:
        """(level, node index, child digit) from the root to the slot's leaf."""
        steps = []
        block = self.capacity
        index = 0
        for level in range(self.depth):
            block //= self.k
            digit = (slot // block) % self.k
            steps.append((level, index, digit))
            index = index * self.k + digit
        return steps

    # Children are mapped to code columns in reverse order so that at k = 2
    # the single trained row targets the later child, the same convention as
    # the binary tree's right-subtree regressor. Any fixed mapping would do.
    def _column(self, digit: int) -> int:
        return self.k - 1 - digit

    def learn(self, x: SparseVector, y: str) -> None:
        slot = self.label_map.get(y)
        if slot is None:
            if not self._free_slots:
                raise ValueError(f"label capacity {self.capacity} exhausted; cannot add {y!r}")
            slot = self._free_slots.popleft()
            self.label_map[y] = slot
        for level, index, digit in self._path(slot):
            column_bits = self.code[1:, self._column(digit)]
            for reg, bit in zip(self.regressors_at(level, index), column_bits):
                reg.update(x, float(bit))
        self.updates += (self.k - 1) * self.depth

    def _child_estimate(
        self, regs: list[LinearRegressor] | None, digit: int, x: SparseVector
    ) -> float:
        # An untouched node behaves like fresh regressors, which predict 0.
        if self.k == 2:
            # With one trained row the decode reduces exactly to that row's
            # prediction (or its complement), so compute it directly.
            r = regs[0].predict(x) if regs else 0.0
            return r if digit == 1 else 1.0 - r
        row_values = np.zeros(self.k, dtype=np.float64)
        row_values[0] = 1.0
        if regs:
            for i, reg in enumerate(regs):
                row_values[i + 1] = reg.predict(x)
        return clip01(decode_probability(self.code, row_values, self._column(digit)))

    def score(self, x: SparseVector, y: str) -> float:
        """Product of per-node child estimates; labels never seen score 0."""
        slot = self.label_map.get(y)
        if slot is None:
            return 0.0
        q = 1.0
        for level, index, digit in self._path(slot):
            q *= self._child_estimate(self._node_regs.get((level, index)), digit, x)
        return q
