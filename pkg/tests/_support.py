"""Shared fakes and builders for the test suite."""

from __future__ import annotations

import numpy as np

from cptree import SparseVector, SyntheticTask, from_tokens

# One line per acceptance criterion, echoed in the terminal summary.
ACCEPTANCE_LINES: list[str] = []


class ConstantRegressor:
    """Always predicts the same value; updates are recorded but inert."""

    def __init__(self, value: float):
        self.value = value
        self.update_count = 0
        self.targets: list[float] = []

    def predict(self, x) -> float:
        return self.value

    def update(self, x, target: float) -> None:
        self.targets.append(target)
        self.update_count += 1

    def copy(self) -> "ConstantRegressor":
        return ConstantRegressor(self.value)


class ContextRegressor:
    """Predicts a fixed value per exact input vector; updates are inert."""

    def __init__(self, by_key: dict[bytes, float]):
        self.by_key = by_key
        self.update_count = 0

    def predict(self, x: SparseVector) -> float:
        return self.by_key[x.key_bytes()]

    def update(self, x, target: float) -> None:
        pass

    def copy(self) -> "ContextRegressor":
        return ContextRegressor(self.by_key)


class CallRecorder:
    """Estimator that records the order of score/learn calls."""

    def __init__(self, score_value: float = 0.5):
        self.calls: list[str] = []
        self.score_value = score_value
        self.updates = 0

    def score(self, x, y) -> float:
        self.calls.append("score")
        return self.score_value

    def learn(self, x, y) -> None:
        self.calls.append("learn")


def vec(*pairs: tuple[str, float], hash_bits: int = 18) -> SparseVector:
    return from_tokens(list(pairs), hash_bits)


def tiny_task(contexts: int = 4, labels: int = 8, seed: int = 0) -> SyntheticTask:
    return SyntheticTask.random(contexts=contexts, labels=labels, seed=seed)


def product_bounds(p: np.ndarray, q: np.ndarray) -> tuple[float, float, float]:
    """(|prod q - prod p|, tight slab bound, loose additive bound)."""
    gap = abs(float(np.prod(q)) - float(np.prod(p)))
    mx = np.maximum(p, q)
    tight = 0.0
    for i in range(p.size):
        rest = np.prod(np.delete(mx, i))
        tight += abs(q[i] - p[i]) * rest
    loose = float(np.abs(q - p).sum())
    return gap, float(tight), loose
