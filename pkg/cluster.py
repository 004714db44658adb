"""Single-linkage hierarchical clustering over a singularity matrix

Merges follow the minimum spanning tree (Prim, O(N^2) on the dense matrix): single-linkage
heights are the MST edge weights in increasing order. Node references follow the scipy
linkage convention, leaves are 0..N-1 and the k-th merge creates cluster N+k.
"""

import logging
from dataclasses import dataclass
from pathlib import Path

import numpy as np
import pandas as pd

from singularity_metric import SingularityMatrix
from utils import group_labels, write_csv, write_json

logger = logging.getLogger(__name__)


class ClusterError(Exception):
    pass


@dataclass(frozen=True)
class Merge:
    left: int
    right: int
    height: float
    size: int


@dataclass(frozen=True)
class Dendrogram:
    leaf_ids: tuple[str, ...]
    merges: tuple[Merge, ...]

    def __post_init__(self):
        n = len(self.leaf_ids)
        if len(self.merges) != n - 1:
            raise ClusterError(f"{n} leaves need {n - 1} merges, got {len(self.merges)}")

    @property
    def n_leaves(self) -> int:
        return len(self.leaf_ids)

    @property
    def heights(self) -> np.ndarray:
        return np.asarray([m.height for m in self.merges], dtype=float)

    def linkage_matrix(self) -> np.ndarray:
        """(N-1) x 4 array [left, right, height, size] as scipy.cluster.hierarchy uses"""
        return np.asarray(
            [[m.left, m.right, m.height, m.size] for m in self.merges], dtype=float
        ).reshape(-1, 4)


@dataclass(frozen=True)
class BranchCluster:
    label: str
    leaf_ids: tuple[str, ...]
    percentage: float


class _DisjointSet:
    def __init__(self, n: int):
        self.parent = list(range(n))

    def find(self, x: int) -> int:
        root = x
        while self.parent[root] != root:
            root = self.parent[root]
        while self.parent[x] != root:
            self.parent[x], x = root, self.parent[x]
        return root

    def union(self, x: int, y: int) -> int:
        rx, ry = self.find(x), self.find(y)
        self.parent[ry] = rx
        return rx


def minimum_spanning_edges(rho: np.ndarray) -> list[tuple[int, int, float]]:
    """Prim's algorithm on a dense matrix; ties go to the lowest index"""
    n = rho.shape[0]
    in_tree = np.zeros(n, dtype=bool)
    best = np.full(n, np.inf)
    parent = np.zeros(n, dtype=int)

    edges = []
    current = 0
    in_tree[0] = True
    for _ in range(n - 1):
        closer = ~in_tree & (rho[current] < best)
        best[closer] = rho[current][closer]
        parent[closer] = current

        candidates = np.where(in_tree, np.inf, best)
        nxt = int(np.argmin(candidates))
        edges.append((int(parent[nxt]), nxt, float(best[nxt])))
        in_tree[nxt] = True
        current = nxt
    return edges


def single_linkage(matrix: SingularityMatrix) -> Dendrogram:
    """Agglomerate by minimum cross-pair distance

    Equal heights merge in order of the lexicographically smallest (min leaf, max leaf)
    pair of the joining edge.
    """
    n = matrix.size
    if n < 2:
        raise ClusterError("At least 2 leaves are required")

    edges = minimum_spanning_edges(matrix.rho)
    edges.sort(key=lambda e: (e[2], min(e[0], e[1]), max(e[0], e[1])))

    sets = _DisjointSet(n)
    cluster_of = list(range(n))
    size_of = [1] * n
    merges = []
    for k, (u, v, height) in enumerate(edges):
        ru, rv = sets.find(u), sets.find(v)
        left, right = sorted((cluster_of[ru], cluster_of[rv]))
        size = size_of[ru] + size_of[rv]
        root = sets.union(ru, rv)
        cluster_of[root] = n + k
        size_of[root] = size
        merges.append(Merge(left=left, right=right, height=height, size=size))

    logger.info(f"Single linkage over {n} leaves, top merge at {merges[-1].height:.4g}")
    return Dendrogram(leaf_ids=matrix.ids, merges=tuple(merges))


def cut_top_branches(dend: Dendrogram, k: int) -> list[BranchCluster]:
    """Undo the k - 1 highest merges and report the k clusters with leaf percentages"""
    n = dend.n_leaves
    if not 1 <= k <= n:
        raise ClusterError(f"k must lie in [1, {n}], got {k}")

    members = {i: [i] for i in range(n)}
    for step, merge in enumerate(dend.merges[: n - k]):
        members[n + step] = members.pop(merge.left) + members.pop(merge.right)
    ordered = sorted((sorted(leaves) for leaves in members.values()), key=min)

    labels = group_labels(len(ordered))
    return [
        BranchCluster(
            label=label,
            leaf_ids=tuple(dend.leaf_ids[i] for i in leaves),
            percentage=100.0 * len(leaves) / n,
        )
        for label, leaves in zip(labels, ordered)
    ]


def leaf_order(dend: Dendrogram) -> list[str]:
    """Display order: at every merge the smaller subtree goes first"""
    n = dend.n_leaves
    order = {i: [i] for i in range(n)}
    for k, merge in enumerate(dend.merges):
        first, second = order.pop(merge.left), order.pop(merge.right)
        if len(second) < len(first):
            first, second = second, first
        order[n + k] = first + second
    (root,) = order.values()
    return [dend.leaf_ids[i] for i in root]


def _newick_label(name: str) -> str:
    if any(ch in name for ch in " ():;,[]'"):
        return "'" + name.replace("'", "''") + "'"
    return name


def to_newick(dend: Dendrogram) -> str:
    """Newick text with branch length = parent height - child height"""
    n = dend.n_leaves
    text = {i: _newick_label(leaf) for i, leaf in enumerate(dend.leaf_ids)}
    height = {i: 0.0 for i in range(n)}
    size = {i: 1 for i in range(n)}
    for k, merge in enumerate(dend.merges):
        children = [merge.left, merge.right]
        if size[merge.right] < size[merge.left]:
            children.reverse()
        parts = [f"{text.pop(c)}:{merge.height - height[c]:.12g}" for c in children]
        text[n + k] = "(" + ",".join(parts) + ")"
        height[n + k] = merge.height
        size[n + k] = merge.size
    return text[2 * n - 2] + ";"


def cophenetic_matrix(dend: Dendrogram) -> np.ndarray:
    """Merge height at which each pair of leaves first shares a cluster"""
    n = dend.n_leaves
    coph = np.zeros((n, n))
    members = {i: [i] for i in range(n)}
    for k, merge in enumerate(dend.merges):
        left, right = members.pop(merge.left), members.pop(merge.right)
        coph[np.ix_(left, right)] = merge.height
        coph[np.ix_(right, left)] = merge.height
        members[n + k] = left + right
    return coph


def dendrogram_dict(dend: Dendrogram) -> dict:
    return {
        "leaf_ids": list(dend.leaf_ids),
        "merges": [
            {"left": m.left, "right": m.right, "height": m.height, "size": m.size}
            for m in dend.merges
        ],
        "leaf_order": leaf_order(dend),
    }


def write_dendrogram(
    dend: Dendrogram, newick_path: Path, json_path: Path, run_hash: str | None = None
) -> None:
    """Newick (hash as a leading `[&config_hash=...]` comment) and JSON exports"""
    newick_path = Path(newick_path)
    newick_path.parent.mkdir(exist_ok=True, parents=True)
    prefix = "" if run_hash is None else f"[&config_hash={run_hash}]"
    newick_path.write_text(prefix + to_newick(dend) + "\n", encoding="utf-8")

    data = dendrogram_dict(dend)
    if run_hash is not None:
        data["config_hash"] = run_hash
    write_json(data, json_path)


def clusters_frame(clusters: list[BranchCluster]) -> pd.DataFrame:
    rows = [
        {"cluster_label": c.label, "leaf_id": leaf, "cluster_pct": c.percentage}
        for c in clusters
        for leaf in c.leaf_ids
    ]
    return pd.DataFrame(rows, columns=["cluster_label", "leaf_id", "cluster_pct"])


def write_clusters_csv(
    clusters: list[BranchCluster], path: Path, run_hash: str | None = None
) -> Path:
    return write_csv(clusters_frame(clusters), path, run_hash)
