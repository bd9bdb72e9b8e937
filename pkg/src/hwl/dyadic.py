"""Finite-depth dyadic tree on [0,1): intervals, leaf-constant functions, weights, Haar bases.

Every interval of the tree is addressed either by (level, pos) or by its "heap"
node id ``k = 2**level - 1 + pos``.  Node ids enumerate intervals level by level,
left to right; children of node ``k`` are ``2k+1`` (left half) and ``2k+2``
(right half).  For a model of depth ``N`` the internal nodes (the ones carrying
Haar functions) are ids ``0 .. 2**N - 2`` and the leaves are the level-``N``
nodes ``2**N - 1 .. 2**(N+1) - 2``.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from .errors import DomainError, InvalidIndexError, ModelMismatchError

EPS_WEIGHT = 1e-9  # weights must be >= this at construction


@dataclass(frozen=True)
class DyadicIndex:
    """Address of the dyadic interval [pos*2^-level, (pos+1)*2^-level)."""

    level: int
    pos: int

    def __post_init__(self):
        if self.level < 0 or not 0 <= self.pos < (1 << self.level):
            raise InvalidIndexError(f"invalid dyadic index (level={self.level}, pos={self.pos})")

    @property
    def length(self) -> float:
        return 2.0 ** (-self.level)

    @property
    def node(self) -> int:
        return (1 << self.level) - 1 + self.pos

    @staticmethod
    def from_node(k) -> "DyadicIndex":
        k = int(k)
        level = (k + 1).bit_length() - 1
        return DyadicIndex(level, k + 1 - (1 << level))

    def left(self) -> "DyadicIndex":
        return DyadicIndex(self.level + 1, 2 * self.pos)

    def right(self) -> "DyadicIndex":
        return DyadicIndex(self.level + 1, 2 * self.pos + 1)


class DyadicModel:
    """Dyadic tree of depth N on [0,1); leaves are the 2^N level-N intervals."""

    def __init__(self, depth: int):
        if depth < 1:
            raise InvalidIndexError("depth must be >= 1")
        self.depth = depth
        self.n_leaves = 1 << depth
        self.n_internal = (1 << depth) - 1
        self.n_nodes = (1 << (depth + 1)) - 1
        ks = np.arange(self.n_nodes)
        self.node_level = np.zeros(self.n_nodes, dtype=np.int64)
        for level in range(depth + 1):
            self.node_level[(1 << level) - 1 : (1 << (level + 1)) - 1] = level
        self.node_pos = ks + 1 - (1 << self.node_level)
        self.node_size = np.ldexp(1.0, -self.node_level)  # |I| = 2^-level
        # leaf range [leaf_start, leaf_stop) covered by each node
        span = 1 << (depth - self.node_level)
        self.leaf_start = self.node_pos * span
        self.leaf_stop = self.leaf_start + span

    def __eq__(self, other):
        return isinstance(other, DyadicModel) and other.depth == self.depth

    def __hash__(self):
        return hash(("DyadicModel", self.depth))

    def __repr__(self):
        return f"DyadicModel(depth={self.depth})"

    def index(self, k: int) -> DyadicIndex:
        return DyadicIndex.from_node(k)

    def internal_nodes_at(self, level: int) -> slice:
        return slice((1 << level) - 1, (1 << (level + 1)) - 1)

    def is_internal(self, idx: DyadicIndex) -> bool:
        return idx.level < self.depth

    def check_same(self, other: "DyadicModel"):
        if self.depth != other.depth:
            raise ModelMismatchError(f"models differ: depth {self.depth} vs {other.depth}")

    def descendants(self, k: int, internal_only: bool = True) -> np.ndarray:
        """Node ids of the subtree rooted at k (k included), level-major order."""
        out = []
        frontier = [k]
        top = self.n_internal if internal_only else self.n_nodes
        while frontier:
            out.extend(frontier)
            frontier = [c for p in frontier for c in (2 * p + 1, 2 * p + 2) if c < top]
        return np.array(sorted(out), dtype=np.int64)


class LeafFunction:
    """Real function on [0,1), constant on each leaf of a dyadic model."""

    def __init__(self, model: DyadicModel, values):
        values = np.asarray(values, dtype=np.float64)
        if values.shape != (model.n_leaves,):
            raise ModelMismatchError(
                f"expected {model.n_leaves} leaf values, got shape {values.shape}"
            )
        self.model = model
        self.values = values.copy()
        self.values.setflags(write=False)

    def integral(self) -> float:
        return float(self.values.sum()) * self.model.node_size[-1]

    def inner(self, other: "LeafFunction") -> float:
        self.model.check_same(other.model)
        return float(self.values @ other.values) * self.model.node_size[-1]

    def norm2(self) -> float:
        return float(np.sqrt(self.inner(self)))

    def __add__(self, other):
        self.model.check_same(other.model)
        return LeafFunction(self.model, self.values + other.values)

    def __sub__(self, other):
        self.model.check_same(other.model)
        return LeafFunction(self.model, self.values - other.values)

    def __mul__(self, scalar):
        return LeafFunction(self.model, self.values * scalar)

    __rmul__ = __mul__

    def __repr__(self):
        return f"LeafFunction(depth={self.model.depth}, values={self.values!r})"


def averages(f: LeafFunction) -> np.ndarray:
    """Per-node averages <f>_I for all nodes (levels 0..N), heap order.

    Built bottom-up; midpoint consistency avg[k] = (avg[2k+1]+avg[2k+2])/2
    holds by construction.
    """
    m = f.model
    avg = np.empty(m.n_nodes)
    avg[m.n_internal:] = f.values
    for level in range(m.depth - 1, -1, -1):
        sl = m.internal_nodes_at(level)
        child = avg[2 * sl.start + 1 : 2 * sl.stop + 1]
        avg[sl] = 0.5 * (child[0::2] + child[1::2])
    return avg


def subtree_sums(model: DyadicModel, beta: np.ndarray) -> np.ndarray:
    """S[J] = sum of beta[I] over internal I contained in J, for every internal J.

    beta is indexed by internal node id.
    """
    if beta.shape != (model.n_internal,):
        raise ModelMismatchError("beta must be defined on internal nodes")
    s = np.zeros(model.n_internal)
    for level in range(model.depth - 1, -1, -1):
        sl = model.internal_nodes_at(level)
        s[sl] += beta[sl]
        if level + 1 < model.depth:
            child = s[2 * sl.start + 1 : 2 * sl.stop + 1]
            s[sl] += child[0::2] + child[1::2]
    return s


class Weight:
    """Strictly positive leaf-constant function with cached per-interval averages."""

    def __init__(self, base: LeafFunction):
        if np.any(base.values < EPS_WEIGHT):
            raise DomainError(f"weight values must be >= {EPS_WEIGHT}")
        self.base = base
        self.model = base.model
        self.avg = averages(base)
        self.avg.setflags(write=False)
        if np.any(self.avg <= 0.0):
            raise DomainError("weight averages must be positive")

    @staticmethod
    def from_values(model: DyadicModel, values) -> "Weight":
        return Weight(LeafFunction(model, values))

    @property
    def values(self) -> np.ndarray:
        return self.base.values

    def sqrt_values(self) -> np.ndarray:
        return np.sqrt(self.base.values)

    def scaled(self, factor: float) -> "Weight":
        if factor <= 0:
            raise DomainError("scaling factor must be positive")
        return Weight(LeafFunction(self.model, self.base.values * factor))

    def reciprocal(self) -> "Weight":
        return Weight(LeafFunction(self.model, 1.0 / self.base.values))

    def __repr__(self):
        return f"Weight(depth={self.model.depth})"


def haar_function(idx: DyadicIndex, model: DyadicModel) -> LeafFunction:
    """L2-normalized Haar function: +|I|^{-1/2} on the left half, -|I|^{-1/2} on the right."""
    if not model.is_internal(idx):
        raise InvalidIndexError(f"no Haar function at leaf level (level={idx.level})")
    vals = np.zeros(model.n_leaves)
    k = idx.node
    mid = (model.leaf_start[k] + model.leaf_stop[k]) // 2
    amp = 2.0 ** (idx.level / 2.0)  # |I|^{-1/2}
    vals[model.leaf_start[k] : mid] = amp
    vals[mid : model.leaf_stop[k]] = -amp
    return LeafFunction(model, vals)


def haar_coefficients(f: LeafFunction, avg: np.ndarray | None = None) -> np.ndarray:
    """(f, h_I) for all internal I, heap order.

    Uses (f, h_I) = (sqrt|I|/2) * (<f>_{I-} - <f>_{I+}).
    """
    m = f.model
    if avg is None:
        avg = averages(f)
    ks = np.arange(m.n_internal)
    diff = avg[2 * ks + 1] - avg[2 * ks + 2]
    return 0.5 * np.sqrt(m.node_size[:m.n_internal]) * diff


@dataclass(frozen=True)
class DisbalancedHaar:
    """Weighted analogue h^w_I of the Haar function: two constants on the halves of I,
    w-mean zero, unit L2(w) norm; satisfies x_I * h_I = h^w_I + A_I * chi_I.
    """

    index: DyadicIndex
    x_I: float
    A_I: float
    left_value: float
    right_value: float

    def as_leaf_function(self, model: DyadicModel) -> LeafFunction:
        vals = np.zeros(model.n_leaves)
        k = self.index.node
        mid = (model.leaf_start[k] + model.leaf_stop[k]) // 2
        vals[model.leaf_start[k] : mid] = self.left_value
        vals[mid : model.leaf_stop[k]] = self.right_value
        return LeafFunction(model, vals)


def disbalanced_arrays(w: Weight) -> tuple[np.ndarray, np.ndarray]:
    """Vectors (x_I, A_I) of the disbalanced-Haar constants over all internal I."""
    m = w.model
    ks = np.arange(m.n_internal)
    a, al, ar = w.avg[ks], w.avg[2 * ks + 1], w.avg[2 * ks + 2]
    if np.any(a <= 0) or np.any(al <= 0) or np.any(ar <= 0):
        raise DomainError("disbalanced Haar requires positive averages")
    size = m.node_size[:m.n_internal]
    x = np.sqrt(a / (al * ar))
    A = x / (2.0 * np.sqrt(size)) * (al - ar) / a
    return x, A


def disbalanced_haar(w: Weight, idx: DyadicIndex) -> DisbalancedHaar:
    """Disbalanced Haar data for one interval; see `disbalanced_arrays` for all at once."""
    if not w.model.is_internal(idx):
        raise InvalidIndexError(f"no disbalanced Haar at leaf level (level={idx.level})")
    x, A = disbalanced_arrays(w)
    k = idx.node
    amp = 2.0 ** (idx.level / 2.0)
    # h^w = x * h_I - A * chi_I
    return DisbalancedHaar(
        index=idx,
        x_I=float(x[k]),
        A_I=float(A[k]),
        left_value=float(x[k] * amp - A[k]),
        right_value=float(-x[k] * amp - A[k]),
    )


def disbalanced_coefficients(u: LeafFunction, w: Weight) -> np.ndarray:
    """(u, h^w_I) (plain L2 pairing) for all internal I.

    (u, h^w_I) = x_I (u, h_I) - A_I |I| <u>_I.
    """
    u.model.check_same(w.model)
    m = u.model
    avg = averages(u)
    c = haar_coefficients(u, avg)
    x, A = disbalanced_arrays(w)
    size = m.node_size[:m.n_internal]
    return x * c - A * size * avg[:m.n_internal]


class AlphaCoefficients:
    """Nonnegative per-internal-interval sequence alpha_I, heap order."""

    def __init__(self, model: DyadicModel, values):
        values = np.asarray(values, dtype=np.float64)
        if values.shape != (model.n_internal,):
            raise ModelMismatchError(
                f"expected {model.n_internal} internal values, got shape {values.shape}"
            )
        if np.any(values < 0):
            raise DomainError("alpha coefficients must be nonnegative")
        self.model = model
        self.values = values.copy()
        self.values.setflags(write=False)

    def __repr__(self):
        return f"AlphaCoefficients(depth={self.model.depth})"


def alpha_coefficients(v: Weight, w: Weight) -> AlphaCoefficients:
    """alpha_I = |Delta v / <v>_I| * |Delta w / <w>_I| * |I| over internal I,

    where Delta u = <u>_{I-} - <u>_{I+}.
    """
    v.model.check_same(w.model)
    m = v.model
    ks = np.arange(m.n_internal)
    dv = np.abs(v.avg[2 * ks + 1] - v.avg[2 * ks + 2]) / v.avg[ks]
    dw = np.abs(w.avg[2 * ks + 1] - w.avg[2 * ks + 2]) / w.avg[ks]
    return AlphaCoefficients(m, dv * dw * m.node_size[:m.n_internal])
