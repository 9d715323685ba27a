"""Versioned binary model files with bit-exact round trips.

Layout: magic, format version, mode tag, config echo, then two length-prefixed
sections (structure, weights). All integers are fixed-width little-endian and
all reals are 8-byte IEEE floats, so identical runs produce identical bytes
and a reload reproduces predictions exactly.
"""

from __future__ import annotations

import struct
from dataclasses import dataclass
from io import BytesIO
from typing import BinaryIO

from .evaluation import OneAgainstAll, TableBaseline
from .pecoc import KWayTree, PecocModel
from .regressor import LinearRegressor
from .tree import CondProbTree, _Node

MAGIC = b"CPTM"
FORMAT_VERSION = 1

MODES = ("cpt-online", "cpt-random", "cpt-fixed", "oaa", "pecoc", "kway", "table")


@dataclass
class ModelConfig:
    """Run parameters echoed into every model file."""

    alpha: float = 0.5
    eta: float = 0.1
    hash_bits: int = 18
    passes: int = 1
    k: int = 0
    delta: float = 0.05
    seed: int = 0


@dataclass
class LoadedModel:
    mode: str
    config: ModelConfig
    estimator: object


class ModelFormatError(ValueError):
    """Raised when a model file fails validation."""


def _w_u8(out: BinaryIO, v: int) -> None:
    out.write(struct.pack("<B", v))


def _w_u32(out: BinaryIO, v: int) -> None:
    out.write(struct.pack("<I", v))


def _w_u64(out: BinaryIO, v: int) -> None:
    out.write(struct.pack("<Q", v))


def _w_f64(out: BinaryIO, v: float) -> None:
    out.write(struct.pack("<d", v))


def _w_str(out: BinaryIO, s: str) -> None:
    raw = s.encode("utf-8")
    _w_u32(out, len(raw))
    out.write(raw)


def _w_bytes(out: BinaryIO, raw: bytes) -> None:
    _w_u32(out, len(raw))
    out.write(raw)


class _Reader:
    def __init__(self, raw: bytes):
        self._raw = raw
        self._pos = 0

    def take(self, n: int) -> bytes:
        if self._pos + n > len(self._raw):
            raise ModelFormatError("truncated model file")
        chunk = self._raw[self._pos : self._pos + n]
        self._pos += n
        return chunk

    def u8(self) -> int:
        return struct.unpack("<B", self.take(1))[0]

    def u32(self) -> int:
        return struct.unpack("<I", self.take(4))[0]

    def u64(self) -> int:
        return struct.unpack("<Q", self.take(8))[0]

    def f64(self) -> float:
        return struct.unpack("<d", self.take(8))[0]

    def string(self) -> str:
        return self.take(self.u32()).decode("utf-8")

    def raw_bytes(self) -> bytes:
        return self.take(self.u32())

    def done(self) -> bool:
        return self._pos == len(self._raw)


def _write_regressor(out: BinaryIO, reg: LinearRegressor) -> None:
    _w_f64(out, reg.learning_rate)
    _w_u64(out, reg.update_count)
    _w_f64(out, reg.bias)
    items = sorted(reg.weights.items())
    _w_u32(out, len(items))
    for index, value in items:
        _w_u32(out, index)
        _w_f64(out, value)


def _read_regressor(r: _Reader) -> LinearRegressor:
    reg = LinearRegressor(r.f64())
    reg.update_count = r.u64()
    reg.bias = r.f64()
    nnz = r.u32()
    for _ in range(nnz):
        index = r.u32()
        reg.weights[index] = r.f64()
    return reg


def _tree_preorder(tree: CondProbTree) -> list[int]:
    if tree.root is None:
        return []
    order = []
    stack = [tree.root]
    while stack:
        node_id = stack.pop()
        order.append(node_id)
        node = tree.nodes[node_id]
        if not node.is_leaf:
            stack.append(node.right)
            stack.append(node.left)
    return order


def _encode_tree(tree: CondProbTree) -> tuple[bytes, bytes]:
    structure = BytesIO()
    weights = BytesIO()
    order = _tree_preorder(tree)
    _w_u32(structure, len(tree.nodes))
    _w_u32(structure, len(order))
    _w_u64(structure, tree.disagreement_count)
    # The update counter is training state, not shape; keeping it in the
    # weights section lets structure sections compare byte-for-byte across
    # retraining passes.
    _w_u64(weights, tree.updates)
    for node_id in order:
        node = tree.nodes[node_id]
        _w_u32(structure, node_id)
        if node.is_leaf:
            _w_u8(structure, 1)
            _w_str(structure, node.label)
        else:
            _w_u8(structure, 0)
            _w_u32(structure, node.left)
            _w_u32(structure, node.right)
            _w_u64(structure, node.n_left)
            _w_u64(structure, node.n_right)
        _write_regressor(weights, node.reg)
    return structure.getvalue(), weights.getvalue()


def _decode_tree(mode: str, cfg: ModelConfig, structure: bytes, weights: bytes) -> CondProbTree:
    policy = "random" if mode == "cpt-random" else "online"
    tree = CondProbTree(
        alpha=cfg.alpha, learning_rate=cfg.eta, policy=policy, seed=cfg.seed
    )
    s = _Reader(structure)
    w = _Reader(weights)
    n_nodes = s.u32()
    n_order = s.u32()
    tree.disagreement_count = s.u64()
    tree.updates = w.u64()
    if n_nodes == 0:
        return tree
    if n_order != n_nodes:
        raise ModelFormatError("node record count mismatch")
    tree.nodes = [_Node(None, None, None) for _ in range(n_nodes)]
    seen_root = False
    for _ in range(n_order):
        node_id = s.u32()
        if not 0 <= node_id < n_nodes:
            raise ModelFormatError(f"node id out of range: {node_id}")
        node = tree.nodes[node_id]
        kind = s.u8()
        if kind == 1:
            node.label = s.string()
            tree.leaf_index[node.label] = node_id
        elif kind == 0:
            node.left = s.u32()
            node.right = s.u32()
            node.n_left = s.u64()
            node.n_right = s.u64()
        else:
            raise ModelFormatError(f"unknown node kind {kind}")
        node.reg = _read_regressor(w)
        if not seen_root:
            tree.root = node_id
            seen_root = True
    for node_id, node in enumerate(tree.nodes):
        if not node.is_leaf:
            tree.nodes[node.left].parent = node_id
            tree.nodes[node.right].parent = node_id
    stats = tree.depth_stats()  # validates counts against a recount
    tree.max_depth = stats.max_depth
    return tree


def _encode_oaa(est: OneAgainstAll) -> tuple[bytes, bytes]:
    structure = BytesIO()
    weights = BytesIO()
    _w_u32(structure, len(est.regressors))
    _w_u64(weights, est.updates)
    for label, reg in est.regressors.items():
        _w_str(structure, label)
        _write_regressor(weights, reg)
    return structure.getvalue(), weights.getvalue()


def _decode_oaa(cfg: ModelConfig, structure: bytes, weights: bytes) -> OneAgainstAll:
    est = OneAgainstAll(cfg.eta)
    s = _Reader(structure)
    w = _Reader(weights)
    count = s.u32()
    est.updates = w.u64()
    for _ in range(count):
        est.regressors[s.string()] = _read_regressor(w)
    return est


def _encode_pecoc(est: PecocModel) -> tuple[bytes, bytes]:
    structure = BytesIO()
    weights = BytesIO()
    _w_u32(structure, est.t)
    _w_u32(structure, est.n_labels)
    _w_u64(weights, est.updates)
    for label, _col in sorted(est.label_map.items(), key=lambda kv: kv[1]):
        _w_str(structure, label)
    for reg in est.row_regressors:
        _write_regressor(weights, reg)
    return structure.getvalue(), weights.getvalue()


def _decode_pecoc(cfg: ModelConfig, structure: bytes, weights: bytes) -> PecocModel:
    s = _Reader(structure)
    w = _Reader(weights)
    t = s.u32()
    n = s.u32()
    labels = [s.string() for _ in range(n)]
    est = PecocModel(labels, cfg.eta)
    if est.t != t:
        raise ModelFormatError("code size does not match label count")
    est.updates = w.u64()
    est.row_regressors = [_read_regressor(w) for _ in range(est.size - 1)]
    return est


def _encode_kway(est: KWayTree) -> tuple[bytes, bytes]:
    structure = BytesIO()
    weights = BytesIO()
    _w_u32(structure, est.k)
    _w_u32(structure, est.depth)
    _w_u32(structure, est.n_labels)
    _w_u64(weights, est.updates)
    for label, _slot in sorted(est.label_map.items(), key=lambda kv: kv[1]):
        _w_str(structure, label)
    keys = sorted(est._node_regs)
    _w_u32(structure, len(keys))
    for level, index in keys:
        _w_u32(structure, level)
        _w_u64(structure, index)
        for reg in est._node_regs[(level, index)]:
            _write_regressor(weights, reg)
    return structure.getvalue(), weights.getvalue()


def _decode_kway(cfg: ModelConfig, structure: bytes, weights: bytes) -> KWayTree:
    s = _Reader(structure)
    w = _Reader(weights)
    k = s.u32()
    depth = s.u32()
    n = s.u32()
    labels = [s.string() for _ in range(n)]
    est = KWayTree(labels, k, cfg.eta)
    if est.depth != depth:
        raise ModelFormatError("tree depth does not match label count")
    est.updates = w.u64()
    node_count = s.u32()
    for _ in range(node_count):
        key = (s.u32(), s.u64())
        est._node_regs[key] = [_read_regressor(w) for _ in range(k - 1)]
    return est


def _encode_table(est: TableBaseline) -> tuple[bytes, bytes]:
    structure = BytesIO()
    weights = BytesIO()
    by_context: dict[bytes, list[tuple[str, int]]] = {}
    for (key, label), count in est.counts.items():
        by_context.setdefault(key, []).append((label, count))
    _w_u64(structure, len(by_context))
    _w_u64(weights, est.updates)
    for key in sorted(by_context):
        _w_bytes(structure, key)
        _w_u64(structure, est.context_totals[key])
        entries = sorted(by_context[key])
        _w_u32(structure, len(entries))
        for label, count in entries:
            _w_str(structure, label)
            _w_u64(weights, count)
    return structure.getvalue(), weights.getvalue()


def _decode_table(cfg: ModelConfig, structure: bytes, weights: bytes) -> TableBaseline:
    est = TableBaseline()
    s = _Reader(structure)
    w = _Reader(weights)
    n_contexts = s.u64()
    est.updates = w.u64()
    for _ in range(n_contexts):
        key = s.raw_bytes()
        est.context_totals[key] = s.u64()
        n_labels = s.u32()
        for _ in range(n_labels):
            label = s.string()
            est.counts[(key, label)] = w.u64()
    return est


_ENCODERS = {
    "cpt-online": _encode_tree,
    "cpt-random": _encode_tree,
    "cpt-fixed": _encode_tree,
    "oaa": _encode_oaa,
    "pecoc": _encode_pecoc,
    "kway": _encode_kway,
    "table": _encode_table,
}


def save_model(path, mode: str, config: ModelConfig, estimator) -> None:
    if mode not in MODES:
        raise ValueError(f"unknown mode: {mode}")
    structure, weights = _ENCODERS[mode](estimator)
    with open(path, "wb") as out:
        out.write(MAGIC)
        _w_u32(out, FORMAT_VERSION)
        _w_str(out, mode)
        _w_f64(out, config.alpha)
        _w_f64(out, config.eta)
        _w_u32(out, config.hash_bits)
        _w_u32(out, config.passes)
        _w_u32(out, config.k)
        _w_f64(out, config.delta)
        _w_u64(out, config.seed)
        _w_u64(out, len(structure))
        out.write(structure)
        _w_u64(out, len(weights))
        out.write(weights)


def read_sections(path) -> tuple[str, ModelConfig, bytes, bytes]:
    """Parse the framing only; returns (mode, config, structure, weights)."""
    with open(path, "rb") as handle:
        raw = handle.read()
    r = _Reader(raw)
    if r.take(4) != MAGIC:
        raise ModelFormatError("bad magic; not a model file")
    version = r.u32()
    if version != FORMAT_VERSION:
        raise ModelFormatError(f"unsupported format version {version}")
    mode = r.string()
    if mode not in MODES:
        raise ModelFormatError(f"unknown mode tag {mode!r}")
    config = ModelConfig(
        alpha=r.f64(),
        eta=r.f64(),
        hash_bits=r.u32(),
        passes=r.u32(),
        k=r.u32(),
        delta=r.f64(),
        seed=r.u64(),
    )
    structure = r.take(r.u64())
    weights = r.take(r.u64())
    if not r.done():
        raise ModelFormatError("trailing bytes after weights section")
    return mode, config, structure, weights


def load_model(path) -> LoadedModel:
    mode, config, structure, weights = read_sections(path)
    if mode in ("cpt-online", "cpt-random", "cpt-fixed"):
        est = _decode_tree(mode, config, structure, weights)
    elif mode == "oaa":
        est = _decode_oaa(config, structure, weights)
    elif mode == "pecoc":
        est = _decode_pecoc(config, structure, weights)
    elif mode == "kway":
        est = _decode_kway(config, structure, weights)
    else:
        est = _decode_table(config, structure, weights)
    return LoadedModel(mode=mode, config=config, estimator=est)
