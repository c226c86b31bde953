"""Leaf-path partitioning of the calibration set, with sparse-region merging.

Regions are built by descending the calibration leaf paths tree by tree:
a group with enough members whose rows occupy more than one leaf splits by
leaf index; a group whose rows all share one leaf gains a tunneling
(pass-through) branch, excluding that tree from the group's defining
prefix; a group that falls below the density threshold (or runs out of
trees) becomes a terminal region. Undersized regions are then merged into
their nearest neighbor under a weighted Hamming distance on representative
prefixes.
"""

from __future__ import annotations

from dataclasses import dataclass, field

import numpy as np

from .exceptions import ConfigError, DimensionError, EmptyInputError

DEFAULT_MIN_REGION_SIZE = 200


class PartitionNode:
    """Trie node at a given tree depth.

    Exactly one of: terminal (region id set), split (children by leaf
    index), or tunneled (single pass-through child).
    """

    __slots__ = ("depth", "children", "tunneled", "child", "region_id",
                 "member_count")

    def __init__(self, depth):
        self.depth = depth
        self.children = {}
        self.tunneled = False
        self.child = None
        self.region_id = None
        self.member_count = 0


@dataclass
class Region:
    region_id: int
    prefix: np.ndarray          # (T,) leaf index per tree, -1 where invalid
    valid: np.ndarray           # (T,) bool: tree participates in the prefix
    member_indices: np.ndarray  # calibration row ids
    source_id: int = None       # pre-merge id this region descends from

    def __post_init__(self):
        if self.source_id is None:
            self.source_id = self.region_id

    @property
    def member_count(self) -> int:
        return self.member_indices.size


@dataclass
class PartitionModel:
    root: PartitionNode
    regions: list                       # final regions (post-merge if merged)
    n_part: int
    path_length: int
    tree_weights: np.ndarray | None = None
    pre_merge_count: int = 0
    merged_from: dict = field(default_factory=dict)  # pre-merge id -> final id
    n_merged: int = 0

    @property
    def n_regions(self) -> int:
        return len(self.regions)

    def locate(self, path) -> int:
        """Region id for a leaf path; total by nearest-prefix fallback.

        Descends the trie, skipping tunneled trees. A path whose leaf has no
        child (unseen at calibration time) falls back to the terminal region
        minimizing the weighted Hamming distance to its representative
        prefix, ties to the lower region id.
        """
        path = np.asarray(path)
        if path.shape != (self.path_length,):
            raise DimensionError(
                f"path length {path.shape} != {self.path_length}")
        node = self.root
        while node.region_id is None:
            if node.tunneled:
                node = node.child
                continue
            child = node.children.get(int(path[node.depth]))
            if child is None:
                return self._nearest_region(path)
            node = child
        return self.merged_from.get(node.region_id, node.region_id)

    def locate_many(self, paths) -> np.ndarray:
        paths = np.asarray(paths)
        return np.array([self.locate(p) for p in paths], dtype=np.intp)

    def _nearest_region(self, path) -> int:
        weights = self.tree_weights
        if weights is None:
            weights = np.ones(self.path_length)
        best_id, best_d = None, np.inf
        for i, region in enumerate(self.regions):
            d = float(weights[:self.path_length][
                region.valid & (region.prefix != path)].sum())
            if d < best_d:
                best_id, best_d = i, d
        return best_id

    def dump(self) -> str:
        """One line per region: id, prefix ('*' for excluded trees), size."""
        lines = []
        for i, region in enumerate(self.regions):
            rendered = ",".join(
                str(region.prefix[t]) if region.valid[t] else "*"
                for t in range(self.path_length))
            absorbed = sorted(pre for pre, fin in self.merged_from.items()
                              if fin == i and pre != region.source_id)
            lines.append(
                f"region {i} prefix {rendered} members {region.member_count}"
                f" absorbed {','.join(map(str, absorbed)) if absorbed else '-'}")
        return "\n".join(lines) + "\n"


def build_partition(paths, n_part=DEFAULT_MIN_REGION_SIZE) -> PartitionModel:
    """Pre-merge partition of calibration leaf paths.

    At each tree, in breadth order: groups below ``n_part`` members become
    terminal; single-leaf groups tunnel through; the rest split by leaf
    index (children visited in ascending leaf order). Region ids follow
    creation order.
    """
    paths = np.asarray(paths)
    if paths.ndim != 2 or paths.shape[0] == 0:
        raise EmptyInputError("need a non-empty (m, T) array of leaf paths")
    if n_part < 1:
        raise ConfigError("n_part must be >= 1")
    m, T = paths.shape
    if T < 1:
        raise EmptyInputError("paths must cover at least one tree")

    root = PartitionNode(0)
    regions = []

    def finalize(node, idx, prefix, valid):
        node.region_id = len(regions)
        node.member_count = idx.size
        regions.append(Region(node.region_id, prefix, valid, idx))

    active = [(root, np.arange(m),
               np.full(T, -1, dtype=np.intp), np.zeros(T, dtype=bool))]
    for t in range(T):
        nxt = []
        for node, idx, prefix, valid in active:
            node.member_count = idx.size
            if idx.size < n_part:
                finalize(node, idx, prefix, valid)
                continue
            leaves = paths[idx, t]
            unique = np.unique(leaves)
            if unique.size == 1:
                node.tunneled = True
                node.child = PartitionNode(t + 1)
                nxt.append((node.child, idx, prefix, valid))
            else:
                for leaf in unique:
                    child = PartitionNode(t + 1)
                    node.children[int(leaf)] = child
                    c_prefix = prefix.copy()
                    c_valid = valid.copy()
                    c_prefix[t] = leaf
                    c_valid[t] = True
                    nxt.append((child, idx[leaves == leaf], c_prefix, c_valid))
        active = nxt
    for node, idx, prefix, valid in active:
        node.member_count = idx.size
        finalize(node, idx, prefix, valid)

    return PartitionModel(root=root, regions=regions, n_part=n_part,
                          path_length=T, pre_merge_count=len(regions))


def weighted_hamming(a, b, weights) -> float:
    """Sum of weights over positions where both prefixes are valid and differ.

    Prefixes use -1 to mark tunneled/undetermined positions, which never
    contribute. Symmetric and nonnegative by construction.
    """
    a = np.asarray(a)
    b = np.asarray(b)
    weights = np.asarray(weights, dtype=np.float64)
    if a.shape != b.shape:
        raise DimensionError("prefixes must have equal length")
    if weights.size < a.size:
        raise DimensionError("weights shorter than prefixes")
    mask = (a >= 0) & (b >= 0) & (a != b)
    return float(weights[:a.size][mask].sum())


def compute_tree_weights(model, X_cal, scheme="variance", rho=None) -> np.ndarray:
    """Per-tree weights for the merge distance.

    ``variance``: population (1/n) variance of each tree's raw contribution
    over the calibration rows. ``exponential``: rho**t for t = 1..T.
    """
    T = model.n_trees_
    if scheme == "variance":
        X_cal = np.asarray(X_cal, dtype=np.float64)
        if X_cal.shape[0] < 2:
            raise ConfigError("variance weights need at least 2 calibration rows")
        return np.array([
            float(np.var(model.tree_contribution(t, X_cal)))
            for t in range(1, T + 1)])
    if scheme == "exponential":
        if rho is None or not 0.0 < rho < 1.0:
            raise ConfigError("exponential weights need rho in (0, 1)")
        return rho ** np.arange(1, T + 1, dtype=np.float64)
    raise ConfigError(f"unknown weight scheme {scheme!r}")


def merge_partition(model: PartitionModel, n_merge, weights) -> PartitionModel:
    """Absorb undersized regions into their nearest neighbors.

    Processes regions with fewer than ``n_merge`` members in ascending size
    (ties by id), merging each into the minimum-distance region among the
    adequately sized ones, or among all others if none qualifies. The
    absorber keeps its representative prefix; absorbed calibration rows move
    over. Stops when every region has >= n_merge members or one remains.
    Chained absorption (an absorber merged later) is permitted.
    """
    weights = np.asarray(weights, dtype=np.float64)
    if weights.size < model.path_length:
        raise DimensionError("weights shorter than the leaf-path length")

    alive = {r.region_id: Region(r.region_id, r.prefix, r.valid,
                                 r.member_indices.copy())
             for r in model.regions}
    absorbed_into = {}  # pre-merge id -> surviving pre-merge id
    n_merged = 0

    while len(alive) > 1:
        undersized = sorted(
            (r for r in alive.values() if r.member_count < n_merge),
            key=lambda r: (r.member_count, r.region_id))
        if not undersized:
            break
        victim = undersized[0]
        adequate = [r for r in alive.values()
                    if r.region_id != victim.region_id
                    and r.member_count >= n_merge]
        candidates = adequate or [r for r in alive.values()
                                  if r.region_id != victim.region_id]
        best, best_d = None, np.inf
        for cand in sorted(candidates, key=lambda r: r.region_id):
            d = weighted_hamming(victim.prefix, cand.prefix, weights)
            if d < best_d:
                best, best_d = cand, d
        best.member_indices = np.concatenate(
            [best.member_indices, victim.member_indices])
        absorbed_into[victim.region_id] = best.region_id
        del alive[victim.region_id]
        n_merged += 1

    def resolve(rid):
        while rid in absorbed_into:
            rid = absorbed_into[rid]
        return rid

    survivors = sorted(alive.values(), key=lambda r: r.region_id)
    final_of_premerge = {r.region_id: i for i, r in enumerate(survivors)}
    merged_from = {r.region_id: final_of_premerge[resolve(r.region_id)]
                   for r in model.regions}
    final_regions = [Region(i, r.prefix, r.valid,
                            np.sort(r.member_indices), source_id=r.region_id)
                     for i, r in enumerate(survivors)]

    return PartitionModel(root=model.root, regions=final_regions,
                          n_part=model.n_part, path_length=model.path_length,
                          tree_weights=weights,
                          pre_merge_count=model.pre_merge_count,
                          merged_from=merged_from, n_merged=n_merged)
