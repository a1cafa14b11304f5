"""Hilbert ordering of nested binary cells in ``d`` dimensions.

A curve parameter ``t`` in [0, 1) is read as a binary expansion. Every
block of ``d`` consecutive bits forms one base-``2**d`` digit, which picks
one of the ``2**d`` sub-cells of the current cell in Hilbert order. Inside
a block the bits are consumed one at a time, one logical axis per bit, so a
depth-``L`` address corresponds to ``L`` binary splits of the mass tree.

Orientation is tracked by :class:`HilbertState`, an axis permutation plus a
per-axis reflection. Child transitions follow the Gray-code construction
(Butz, Hamilton): the sub-cell visited at digit ``w`` sits at ``gray(w)``,
and its interior is re-oriented so that the sub-curve enters at the corner
where the previous sub-curve left. For ``d == 2`` this gives the familiar
order lower-left, upper-left, upper-right, lower-right, with the lower-left
quadrant transposed and the lower-right quadrant reflected across its
anti-diagonal.
"""

from dataclasses import dataclass
from functools import lru_cache
import math

import numpy as np

from .errors import DomainError

__all__ = [
    "HilbertState",
    "CellAddress",
    "StateTable",
    "address_of",
    "hilbert_index",
    "base_digits",
    "child_state",
    "geometric_axis",
    "path_splits",
]


def _gray(i):
    return i ^ (i >> 1)


def _trailing_ones(i):
    n = 0
    while i & 1:
        i >>= 1
        n += 1
    return n


@dataclass(frozen=True)
class HilbertState:
    """Orientation of a cell relative to the global frame.

    ``axis_perm[i]`` is the geometric axis that logical axis ``i`` maps to
    and ``flip[i]`` tells whether that logical axis runs backwards.
    """

    dim: int
    axis_perm: tuple
    flip: tuple

    def __post_init__(self):
        if self.dim < 1:
            raise DomainError(f"dimension must be positive, got {self.dim}")
        if sorted(self.axis_perm) != list(range(self.dim)):
            raise DomainError(f"axis_perm {self.axis_perm} is not a permutation")
        if len(self.flip) != self.dim:
            raise DomainError("flip must have one entry per axis")

    @classmethod
    def root(cls, dim):
        return cls(dim, tuple(range(dim)), (False,) * dim)

    def to_dict(self):
        return {"perm": list(self.axis_perm), "flip": [int(f) for f in self.flip]}

    @classmethod
    def from_dict(cls, obj):
        perm = tuple(int(a) for a in obj["perm"])
        return cls(len(perm), perm, tuple(bool(f) for f in obj["flip"]))


@lru_cache(maxsize=None)
def _canonical_children(dim):
    """Child transforms of the canonically oriented cell, one per digit.

    The canonical sub-curve enters at the origin corner and leaves at the
    corner one step along logical axis 0. Entry corners and exit directions
    follow Hamilton's closed form; his bit ``k`` is our logical axis
    ``dim - 1 - k``.
    """
    out = []
    for w in range(1 << dim):
        entry = 0 if w == 0 else _gray(2 * ((w - 1) // 2))
        if w == 0:
            direction = 0
        elif w % 2 == 0:
            direction = _trailing_ones(w - 1) % dim
        else:
            direction = _trailing_ones(w) % dim
        corner = [(entry >> (dim - 1 - j)) & 1 for j in range(dim)]
        lead = dim - 1 - direction
        perm = tuple((lead + i) % dim for i in range(dim))
        flip = tuple(bool(corner[perm[i]]) for i in range(dim))
        out.append((perm, flip))
    return tuple(out)


def child_state(state, child_digit):
    """Orientation inside the sub-cell selected by one base-``2**d`` digit."""
    n_children = 1 << state.dim
    if not 0 <= child_digit < n_children:
        raise DomainError(f"digit {child_digit} outside [0, {n_children})")
    tperm, tflip = _canonical_children(state.dim)[child_digit]
    perm = tuple(state.axis_perm[p] for p in tperm)
    flip = tuple(f != state.flip[p] for f, p in zip(tflip, tperm))
    return HilbertState(state.dim, perm, flip)


def geometric_axis(state, schedule_pos, prefix=0):
    """Geometric split axis and direction at depth ``schedule_pos``.

    ``schedule_pos`` is the 1-based depth ``l`` of the split; the logical
    axis is ``(l - 1) mod d``. ``prefix`` holds the bits already chosen in
    the current digit block (most significant first); only its last bit
    matters, because the Gray code reverses a split whenever the previous
    bit of the same block was 1.

    Returns ``(axis, reversed)``. When ``reversed`` is true, the half that
    comes first along the curve is the geometrically upper one.
    """
    if schedule_pos < 1:
        raise DomainError(f"schedule position must be >= 1, got {schedule_pos}")
    j = (schedule_pos - 1) % state.dim
    rev = state.flip[j]
    if j > 0 and prefix & 1:
        rev = not rev
    return state.axis_perm[j], bool(rev)


@dataclass(frozen=True)
class CellAddress:
    """Binary child choices identifying one cell of a depth-``L`` partition.

    Bit ``i`` is 0 when the path takes the child that comes first along the
    curve. The address of depth ``L`` covers ``[index, index + 1) / 2**L``.
    """

    bits: tuple = ()

    def __post_init__(self):
        if any(b not in (0, 1) for b in self.bits):
            raise DomainError("address bits must be 0 or 1")

    @property
    def depth(self):
        return len(self.bits)

    @property
    def index(self):
        out = 0
        for b in self.bits:
            out = (out << 1) | b
        return out

    @classmethod
    def from_index(cls, index, depth):
        if not 0 <= index < (1 << depth):
            raise DomainError(f"index {index} outside depth-{depth} range")
        return cls(tuple((index >> (depth - 1 - i)) & 1 for i in range(depth)))

    def interval(self):
        scale = 2.0 ** -self.depth
        return self.index * scale, (self.index + 1) * scale

    def prefix(self, depth):
        return CellAddress(self.bits[:depth])

    def digits(self, dim):
        """Base-``2**dim`` digits of the complete blocks of the address."""
        k = self.depth // dim
        return base_digits(CellAddress(self.bits[: k * dim]).index, k, dim)


def _check_t(t):
    t = float(t)
    if not math.isfinite(t) or t < 0.0 or t > 1.0:
        raise DomainError(f"curve parameter {t!r} outside [0, 1]")
    return t


def _floor_scaled(t, bits):
    # Scaling by a power of two is exact in binary floating point.
    if t == 1.0:
        return (1 << bits) - 1
    return int(math.floor(math.ldexp(t, bits)))


def address_of(t, depth):
    """Address of the depth-``depth`` cell whose interval contains ``t``.

    Intervals are half open, so dyadic points belong to the cell on their
    right; ``t == 1`` is assigned to the last cell.
    """
    if depth < 0:
        raise DomainError(f"depth must be >= 0, got {depth}")
    t = _check_t(t)
    return CellAddress.from_index(_floor_scaled(t, depth), depth)


def hilbert_index(t, order, dim):
    """Discrete Hilbert index ``floor(t * 2**(dim * order))``."""
    if order < 0 or dim < 1:
        raise DomainError("order must be >= 0 and dim >= 1")
    return _floor_scaled(_check_t(t), dim * order)


def base_digits(index, order, dim):
    """Base-``2**dim`` digits of ``index``, most significant first."""
    mask = (1 << dim) - 1
    return tuple((index >> (dim * (order - 1 - r))) & mask for r in range(order))


def path_splits(address, dim):
    """Yield ``(axis, reversed, state)`` for every split along ``address``.

    ``state`` is the orientation of the macro cell containing that split.
    """
    state = HilbertState.root(dim)
    prefix = 0
    for level, bit in enumerate(address.bits, start=1):
        axis, rev = geometric_axis(state, level, prefix)
        yield axis, rev, state
        prefix = (prefix << 1) | bit
        if level % dim == 0:
            state = child_state(state, prefix)
            prefix = 0


class StateTable:
    """Interned orientation states with array lookups for vectorized code.

    State ids are dense integers; id 0 is the root orientation.
    """

    def __init__(self, dim):
        self.dim = dim
        self._states = []
        self._ids = {}
        self._transitions = {}
        self.intern(HilbertState.root(dim))

    def __len__(self):
        return len(self._states)

    def __getitem__(self, sid):
        return self._states[sid]

    def intern(self, state):
        sid = self._ids.get(state)
        if sid is None:
            sid = len(self._states)
            self._states.append(state)
            self._ids[state] = sid
        return sid

    def perm_array(self):
        return np.array([s.axis_perm for s in self._states], dtype=np.int64).reshape(-1, self.dim)

    def flip_array(self):
        return np.array([s.flip for s in self._states], dtype=bool).reshape(-1, self.dim)

    def child(self, sid, digit):
        key = (sid, digit)
        out = self._transitions.get(key)
        if out is None:
            out = self.intern(child_state(self._states[sid], digit))
            self._transitions[key] = out
        return out

    def children(self, sids, digits):
        """Vectorized :meth:`child` over integer arrays."""
        sids = np.asarray(sids, dtype=np.int64)
        digits = np.asarray(digits, dtype=np.int64)
        if sids.size == 0:
            return sids.copy()
        width = 1 << self.dim
        keys = sids * width + digits
        uniq, inverse = np.unique(keys, return_inverse=True)
        mapped = np.array([self.child(int(k // width), int(k % width)) for k in uniq], dtype=np.int64)
        return mapped[inverse]
