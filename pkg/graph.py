"""Threshold graphs A_ij(xi) = [rho_ij < xi] and their observables over a xi sweep"""

import logging
from dataclasses import dataclass
from pathlib import Path

import networkx as nx
import numpy as np
import pandas as pd

from config import DEFAULT_SWEEP_POINTS
from singularity_metric import SingularityMatrix
from utils import write_csv

logger = logging.getLogger(__name__)

# Recorded beside every sweep so readers know how disconnected graphs were handled
OBSERVABLE_CONVENTIONS = {
    "avg_degree": "edge density sum(A) / (N(N-1))",
    "path_length": "mean geodesic over reachable ordered pairs, 0 when none are reachable",
    "efficiency": "sum of 1/d over all ordered pairs / (N(N-1)), 1/inf = 0",
    "clustering": "mean local clustering over all nodes, C_i = 0 when k_i < 2",
    "betweenness": "ordered pairs, endpoints excluded, unnormalized, fractional over shortest paths",
    "threshold": "strict rho < xi",
}


class GraphError(Exception):
    pass


@dataclass(frozen=True)
class ThresholdGraph:
    xi: float
    adjacency: np.ndarray
    ids: tuple[str, ...]

    @property
    def size(self) -> int:
        return len(self.ids)

    @property
    def edge_count(self) -> int:
        return int(self.adjacency.sum() // 2)

    def to_networkx(self) -> nx.Graph:
        return nx.from_numpy_array(self.adjacency.astype(int))


@dataclass(frozen=True)
class GraphObservables:
    xi: float
    edge_count: int
    avg_degree: float
    path_length: float
    efficiency: float
    clustering: float
    betweenness: tuple[float, ...]
    betweenness_avg: float
    betweenness_total: float
    reachable_pair_fraction: float


@dataclass(frozen=True)
class SweepResult:
    xi_grid: tuple[float, ...]
    observables: tuple[GraphObservables, ...]
    clustering_maxima: tuple[float, ...]
    betweenness_maxima: tuple[float, ...]
    betweenness_peak: float
    betweenness_peak_value: float

    def to_frame(self) -> pd.DataFrame:
        return pd.DataFrame(
            {
                "xi": [o.xi for o in self.observables],
                "edge_count": [o.edge_count for o in self.observables],
                "avg_degree": [o.avg_degree for o in self.observables],
                "L": [o.path_length for o in self.observables],
                "E": [o.efficiency for o in self.observables],
                "C": [o.clustering for o in self.observables],
                "B_avg": [o.betweenness_avg for o in self.observables],
                "reachable_fraction": [o.reachable_pair_fraction for o in self.observables],
            }
        )

    def critical(self) -> dict:
        return {
            "clustering_local_maxima": list(self.clustering_maxima),
            "betweenness_local_maxima": list(self.betweenness_maxima),
            "betweenness_global_maximum": {
                "xi": self.betweenness_peak,
                "B_avg": self.betweenness_peak_value,
            },
            "conventions": OBSERVABLE_CONVENTIONS,
        }


def build_graph(matrix: SingularityMatrix, xi: float) -> ThresholdGraph:
    if not np.isfinite(xi):
        raise GraphError(f"Threshold must be finite, got {xi}")
    adjacency = matrix.rho < xi
    np.fill_diagonal(adjacency, False)
    adjacency.setflags(write=False)
    return ThresholdGraph(xi=float(xi), adjacency=adjacency, ids=matrix.ids)


def observables(graph: ThresholdGraph) -> GraphObservables:
    n = graph.size
    if n < 2:
        raise GraphError("At least 2 nodes are required")
    g = graph.to_networkx()
    pairs = n * (n - 1)

    distance_sum = 0.0
    inverse_sum = 0.0
    reachable = 0
    for source in range(n):
        lengths = nx.single_source_shortest_path_length(g, source)
        for target in sorted(lengths):
            if target == source:
                continue
            d = lengths[target]
            distance_sum += d
            inverse_sum += 1.0 / d
            reachable += 1

    local_clustering = nx.clustering(g)
    clustering = float(np.mean([local_clustering[i] for i in range(n)]))

    # networkx halves unnormalized counts on undirected graphs (unordered pairs)
    centrality = nx.betweenness_centrality(g, normalized=False)
    betweenness = tuple(2.0 * centrality[i] for i in range(n))

    return GraphObservables(
        xi=graph.xi,
        edge_count=graph.edge_count,
        avg_degree=float(graph.adjacency.sum()) / pairs,
        path_length=distance_sum / reachable if reachable else 0.0,
        efficiency=inverse_sum / pairs,
        clustering=clustering,
        betweenness=betweenness,
        betweenness_avg=float(np.mean(betweenness)),
        betweenness_total=float(np.sum(betweenness)),
        reachable_pair_fraction=reachable / pairs,
    )


def default_grid(matrix: SingularityMatrix, points: int = DEFAULT_SWEEP_POINTS) -> np.ndarray:
    """Evenly spaced over [min rho, max rho] of the off-diagonal entries

    When every entry is equal the grid runs over [rho, rho + 1] so the sweep still
    passes from the empty graph to the complete one.
    """
    entries = matrix.upper_entries()
    lo, hi = float(entries.min()), float(entries.max())
    if hi <= lo:
        hi = lo + 1.0
    return np.linspace(lo, hi, points)


def _local_maxima(values: np.ndarray) -> list[int]:
    return [
        i
        for i in range(1, values.size - 1)
        if values[i - 1] < values[i] and values[i] >= values[i + 1]
    ]


def sweep(matrix: SingularityMatrix, grid: np.ndarray | None = None) -> SweepResult:
    """Observables at each threshold plus critical-threshold candidates"""
    grid = default_grid(matrix) if grid is None else np.asarray(grid, dtype=float)
    if grid.size == 0:
        raise GraphError("Sweep grid is empty")
    if np.any(np.diff(grid) <= 0):
        raise GraphError("Sweep grid must be strictly increasing")

    results = tuple(observables(build_graph(matrix, xi)) for xi in grid)

    clustering = np.asarray([o.clustering for o in results])
    betweenness = np.asarray([o.betweenness_avg for o in results])
    peak = int(np.argmax(betweenness))

    result = SweepResult(
        xi_grid=tuple(float(x) for x in grid),
        observables=results,
        clustering_maxima=tuple(float(grid[i]) for i in _local_maxima(clustering)),
        betweenness_maxima=tuple(float(grid[i]) for i in _local_maxima(betweenness)),
        betweenness_peak=float(grid[peak]),
        betweenness_peak_value=float(betweenness[peak]),
    )
    logger.info(
        f"Swept {grid.size} thresholds: {len(result.clustering_maxima)} clustering maxima, "
        + f"betweenness peak at xi={result.betweenness_peak:.4g}"
    )
    return result


def adjacency_edges(graph: ThresholdGraph) -> list[tuple[str, str]]:
    """Edge list (i, j) with i < j in id order"""
    rows, cols = np.nonzero(np.triu(graph.adjacency, k=1))
    return [(graph.ids[i], graph.ids[j]) for i, j in zip(rows, cols)]


def write_edges_csv(graph: ThresholdGraph, path: Path, run_hash: str | None = None) -> Path:
    df = pd.DataFrame(adjacency_edges(graph), columns=["source", "target"])
    return write_csv(df, path, run_hash)


def write_adjacency_csv(graph: ThresholdGraph, path: Path, run_hash: str | None = None) -> Path:
    df = pd.DataFrame(graph.adjacency.astype(int), columns=list(graph.ids))
    return write_csv(df, path, run_hash)


def write_sweep_csv(result: SweepResult, path: Path, run_hash: str | None = None) -> Path:
    return write_csv(result.to_frame(), path, run_hash)
