"""Mass-aligned binary tree built from recursive conditional-median splits.

The tree is stored as flat per-node arrays, level by level (breadth first),
which keeps construction vectorized: every level costs one integer sort of
the points still being split, so a depth-``L`` build is ``O(L n log n)``
with a small constant.

Conventions
-----------
* The cut of a node holding ``k`` points is the lower median, the
  ``ceil(k/2)``-th order statistic along the split axis.
* The geometrically lower child receives the first ``ceil(k/2)`` points in
  ``(coordinate, original index)`` order. Without ties this is exactly the
  set ``coordinate <= cut``; ties at the cut are broken by index so the two
  children never differ by more than one point.
* Children are stored as (lower, upper). A node's ``reversed`` flag says
  whether the upper child comes first along the curve.
* A node with fewer than two points is a leaf.
"""

from dataclasses import dataclass

import numpy as np

from .cloud import PointCloud
from .errors import ConfigError, DataError, DomainError
from .hilbert_address import CellAddress, HilbertState, StateTable

__all__ = [
    "MAX_DEPTH",
    "HimapTree",
    "TreeNode",
    "build_tree",
    "default_depth",
    "node_at",
    "select_median",
]

MAX_DEPTH = 62
_DEFAULT_DEPTH_CAP = 30


def default_depth(n):
    """``max(1, floor(log2 n))`` capped at 30."""
    if n < 1:
        raise DataError("cannot choose a depth for an empty sample")
    return min(_DEFAULT_DEPTH_CAP, max(1, int(n).bit_length() - 1))


def select_median(values, take_lower=True):
    """Lower (``ceil(k/2)``-th) or upper (``floor(k/2)+1``-th) order statistic.

    Uses introselect, so the expected cost is linear in ``k``.
    """
    arr = np.asarray(values, dtype=np.float64).ravel()
    k = arr.size
    if k == 0:
        raise DataError("median of an empty sequence")
    pos = (k + 1) // 2 - 1 if take_lower else k // 2
    return float(np.partition(arr, pos)[pos])


@dataclass(frozen=True)
class TreeNode:
    """Read-only view of one node.

    ``children`` holds the node ids of the (lower, upper) children, or
    ``None`` for a leaf. ``box`` is a ``(d, 2)`` array of interval bounds.
    """

    node_id: int
    depth: int
    size: int
    index_set: np.ndarray
    split_axis: object
    cut: object
    reversed: bool
    children: object
    state: HilbertState
    prefix: int
    box: np.ndarray

    @property
    def is_leaf(self):
        return self.children is None


class HimapTree:
    """Depth-``L`` mass-aligned tree. Build with :func:`build_tree`."""

    def __init__(self, *, depth, dim, n, root_box, parent, node_depth, size, axis, cut,
                 reversed_, lower, state, prefix, states, leaf_row, leaf_points,
                 start=None, order=None, cloud=None):
        self.depth = int(depth)
        self.dim = int(dim)
        self.n = int(n)
        self.root_box = np.asarray(root_box, dtype=np.float64)
        self.parent = parent
        self.node_depth = node_depth
        self.size = size
        self.axis = axis
        self.cut = cut
        self.reversed = reversed_
        self.lower = lower
        self.state = state
        self.prefix = prefix
        self.states = states
        self.leaf_row = leaf_row
        self.leaf_points = leaf_points
        self.start = start
        self.order = order
        self.cloud = cloud
        for arr in (parent, node_depth, size, axis, cut, reversed_, lower, state, prefix, leaf_row):
            arr.setflags(write=False)

    schedule = "cyclic"

    @property
    def n_nodes(self):
        return self.parent.size

    @property
    def root(self):
        return self.node(0)

    def __repr__(self):
        return f"HimapTree(depth={self.depth}, dim={self.dim}, n={self.n}, nodes={self.n_nodes})"

    def is_leaf(self, node_id):
        return self.lower[node_id] < 0

    def index_set(self, node_id):
        if self.order is None:
            raise DataError("index sets are unavailable for a tree loaded without its sample")
        s = self.start[node_id]
        return self.order[s:s + self.size[node_id]]

    def box(self, node_id):
        """Cell of ``node_id``: the root box narrowed by every ancestor cut."""
        lo = self.root_box[:, 0].copy()
        hi = self.root_box[:, 1].copy()
        done_lo = np.zeros(self.dim, dtype=bool)
        done_hi = np.zeros(self.dim, dtype=bool)
        child = node_id
        par = self.parent[child]
        while par >= 0:
            a = self.axis[par]
            if child == self.lower[par]:
                if not done_hi[a]:
                    hi[a] = self.cut[par]
                    done_hi[a] = True
            elif not done_lo[a]:
                lo[a] = self.cut[par]
                done_lo[a] = True
            child, par = par, self.parent[par]
        return np.stack([lo, hi], axis=1)

    def node(self, node_id):
        node_id = int(node_id)
        if not 0 <= node_id < self.n_nodes:
            raise DomainError(f"node id {node_id} out of range")
        leaf = self.is_leaf(node_id)
        index_set = self.index_set(node_id) if self.order is not None else None
        return TreeNode(
            node_id=node_id,
            depth=int(self.node_depth[node_id]),
            size=int(self.size[node_id]),
            index_set=index_set,
            split_axis=None if leaf else int(self.axis[node_id]),
            cut=None if leaf else float(self.cut[node_id]),
            reversed=bool(self.reversed[node_id]),
            children=None if leaf else (int(self.lower[node_id]), int(self.lower[node_id]) + 1),
            state=self.states[int(self.state[node_id])],
            prefix=int(self.prefix[node_id]),
            box=self.box(node_id),
        )

    def internal_nodes(self):
        return np.flatnonzero(self.lower >= 0)

    def to_dict(self):
        nodes = []
        for i in range(self.n_nodes):
            leaf = self.is_leaf(i)
            rec = {
                "id": i,
                "depth": int(self.node_depth[i]),
                "axis": None if leaf else int(self.axis[i]),
                "cut": None if leaf else float(self.cut[i]),
                "size": int(self.size[i]),
                "reversed": bool(self.reversed[i]),
                "state": dict(self.states[int(self.state[i])].to_dict(), prefix=int(self.prefix[i])),
                "children": None if leaf else [int(self.lower[i]), int(self.lower[i]) + 1],
            }
            if self.leaf_row[i] >= 0:
                rec["point"] = [float(v) for v in self.leaf_points[self.leaf_row[i]]]
            nodes.append(rec)
        return {
            "format": "himap-tree",
            "version": 1,
            "depth": self.depth,
            "dim": self.dim,
            "n": self.n,
            "schedule": self.schedule,
            "root_box": self.root_box.tolist(),
            "nodes": nodes,
        }

    @classmethod
    def from_dict(cls, obj):
        try:
            if obj.get("format") != "himap-tree":
                raise DataError("not a serialized himap tree")
            dim = int(obj["dim"])
            recs = obj["nodes"]
            m = len(recs)
            parent = np.full(m, -1, dtype=np.int64)
            node_depth = np.empty(m, dtype=np.int64)
            size = np.empty(m, dtype=np.int64)
            axis = np.full(m, -1, dtype=np.int64)
            cut = np.full(m, np.nan)
            rev = np.zeros(m, dtype=bool)
            lower = np.full(m, -1, dtype=np.int64)
            state = np.empty(m, dtype=np.int64)
            prefix = np.empty(m, dtype=np.int64)
            leaf_row = np.full(m, -1, dtype=np.int64)
            leaf_points = []
            states = StateTable(dim)
            for i, rec in enumerate(recs):
                if int(rec.get("id", i)) != i:
                    raise DataError("node ids must be consecutive")
                node_depth[i] = rec["depth"]
                size[i] = rec["size"]
                rev[i] = bool(rec["reversed"])
                st = rec["state"]
                state[i] = states.intern(HilbertState.from_dict(st))
                prefix[i] = int(st.get("prefix", 0))
                if rec["children"] is not None:
                    lo_id, up_id = (int(c) for c in rec["children"])
                    if up_id != lo_id + 1 or not i < lo_id < m - 1:
                        raise DataError(f"bad children for node {i}")
                    axis[i] = rec["axis"]
                    cut[i] = rec["cut"]
                    lower[i] = lo_id
                    parent[lo_id] = parent[up_id] = i
                if "point" in rec:
                    leaf_row[i] = len(leaf_points)
                    leaf_points.append([float(v) for v in rec["point"]])
            leaf_arr = np.array(leaf_points, dtype=np.float64).reshape(-1, dim)
            return cls(
                depth=obj["depth"], dim=dim, n=obj["n"], root_box=obj["root_box"], parent=parent,
                node_depth=node_depth, size=size, axis=axis, cut=cut, reversed_=rev, lower=lower,
                state=state, prefix=prefix, states=states, leaf_row=leaf_row, leaf_points=leaf_arr,
            )
        except (KeyError, TypeError, ValueError) as exc:
            if isinstance(exc, DataError):
                raise
            raise DataError(f"malformed tree document: {exc}") from exc


def _check_depth(depth):
    if isinstance(depth, bool) or not isinstance(depth, (int, np.integer)):
        raise ConfigError(f"depth must be an integer, got {depth!r}")
    if depth < 1:
        raise ConfigError(f"depth must be >= 1, got {depth}")
    if depth > MAX_DEPTH:
        raise ConfigError(f"depth {depth} exceeds the maximum {MAX_DEPTH}")
    return int(depth)


def build_tree(cloud, depth=None):
    """Build the depth-``depth`` mass-aligned tree of ``cloud``.

    Parameters
    ----------
    cloud : PointCloud or array_like
        Sample of shape ``(n, d)``.
    depth : int, optional
        Number of binary split levels ``L``; defaults to
        :func:`default_depth` of ``n``.

    Returns
    -------
    HimapTree
    """
    if not isinstance(cloud, PointCloud):
        cloud = PointCloud(cloud)
    pts = cloud.points
    n, d = pts.shape
    L = default_depth(n) if depth is None else _check_depth(depth)

    ranks = np.empty((d, n), dtype=np.int64)
    for a in range(d):
        ranks[a, np.argsort(pts[:, a], kind="stable")] = np.arange(n)
    order = np.arange(n, dtype=np.int64)
    states = StateTable(d)

    chunks = []
    start = np.zeros(1, dtype=np.int64)
    stop = np.full(1, n, dtype=np.int64)
    state = np.zeros(1, dtype=np.int64)
    prefix = np.zeros(1, dtype=np.int64)
    parent = np.full(1, -1, dtype=np.int64)
    base = 0
    for level in range(L + 1):
        m = start.size
        size = stop - start
        axis = np.full(m, -1, dtype=np.int64)
        cut = np.full(m, np.nan)
        rev = np.zeros(m, dtype=bool)
        lower = np.full(m, -1, dtype=np.int64)
        split = np.flatnonzero(size >= 2) if level < L else np.empty(0, dtype=np.int64)
        chunks.append((parent, np.full(m, level), start, size, axis, cut, rev, lower, state, prefix))
        if split.size == 0:
            break

        j = level % d
        st = state[split]
        ax = states.perm_array()[st, j]
        rv = states.flip_array()[st, j]
        if j > 0:
            rv = rv ^ (prefix[split] & 1).astype(bool)

        lens = size[split]
        offsets = np.cumsum(lens) - lens
        seg = np.repeat(np.arange(split.size), lens)
        pos = np.repeat(start[split] - offsets, lens) + np.arange(lens.sum())
        elems = order[pos]
        keys = seg * n + ranks[ax[seg], elems]
        order[pos] = elems[np.argsort(keys)]

        half = (lens + 1) // 2
        first = start[split]
        mid = first + half
        axis[split] = ax
        cut[split] = pts[order[mid - 1], ax]
        rev[split] = rv
        lower[split] = base + m + 2 * np.arange(split.size)

        k2 = 2 * split.size
        start = np.empty(k2, dtype=np.int64)
        stop = np.empty(k2, dtype=np.int64)
        start[0::2], start[1::2] = first, mid
        stop[0::2], stop[1::2] = mid, first + lens
        bits = np.empty(k2, dtype=np.int64)
        bits[0::2] = rv
        bits[1::2] = ~rv
        pre = (np.repeat(prefix[split], 2) << 1) | bits
        st2 = np.repeat(st, 2)
        if j == d - 1:
            state = states.children(st2, pre)
            prefix = np.zeros(k2, dtype=np.int64)
        else:
            state = st2
            prefix = pre
        parent = np.repeat(base + split, 2)
        base += m

    cols = list(zip(*chunks))
    parent, node_depth, starts, size, axis, cut, rev, lower, state, prefix = (np.concatenate(c) for c in cols)
    node_depth = node_depth.astype(np.int64)
    early = np.flatnonzero((size == 1) & (node_depth < L))
    leaf_row = np.full(parent.size, -1, dtype=np.int64)
    leaf_row[early] = np.arange(early.size)
    leaf_points = pts[order[starts[early]]]
    order.setflags(write=False)
    starts.setflags(write=False)
    return HimapTree(
        depth=L, dim=d, n=n, root_box=cloud.bounding_box(), parent=parent, node_depth=node_depth,
        size=size, axis=axis, cut=cut, reversed_=rev, lower=lower, state=state, prefix=prefix,
        states=states, leaf_row=leaf_row, leaf_points=leaf_points, start=starts, order=order,
        cloud=cloud,
    )


def node_at(tree, address):
    """Node reached by following ``address`` from the root.

    Stops early at a leaf when the address is deeper than the branch.
    """
    if not isinstance(address, CellAddress):
        address = CellAddress(tuple(address))
    if address.depth > tree.depth:
        raise DomainError(f"address depth {address.depth} exceeds tree depth {tree.depth}")
    node = 0
    for bit in address.bits:
        if tree.is_leaf(node):
            break
        node = int(tree.lower[node]) + (bit ^ int(tree.reversed[node]))
    return tree.node(node)
