import itertools

import numpy as np
import pytest

from graph import (
    GraphError,
    ThresholdGraph,
    adjacency_edges,
    build_graph,
    observables,
    sweep,
)
from singularity_metric import matrix_from_widths


def graph_from_edges(n: int, edges: list[tuple[int, int]]) -> ThresholdGraph:
    adjacency = np.zeros((n, n), dtype=bool)
    for i, j in edges:
        adjacency[i, j] = adjacency[j, i] = True
    return ThresholdGraph(xi=1.0, adjacency=adjacency, ids=tuple(str(i) for i in range(n)))


def exhaustive_observables(adjacency: np.ndarray) -> dict:
    """Floyd-Warshall distances plus shortest-path counts, no graph library"""
    n = adjacency.shape[0]
    dist = np.where(adjacency, 1.0, np.inf)
    np.fill_diagonal(dist, 0.0)
    for k in range(n):
        dist = np.minimum(dist, dist[:, [k]] + dist[[k], :])

    sigma = np.zeros((n, n))
    for j in range(n):
        sigma[j, j] = 1.0
        for d in range(1, n):
            for k in range(n):
                if dist[j, k] == d:
                    sigma[j, k] = sum(
                        sigma[j, m] for m in range(n) if adjacency[m, k] and dist[j, m] == d - 1
                    )

    pairs = n * (n - 1)
    reachable = [(j, k) for j, k in itertools.permutations(range(n), 2) if np.isfinite(dist[j, k])]
    path_length = np.mean([dist[j, k] for j, k in reachable]) if reachable else 0.0
    efficiency = sum(1.0 / dist[j, k] for j, k in reachable) / pairs

    clustering = []
    for i in range(n):
        neighbors = np.flatnonzero(adjacency[i])
        k = neighbors.size
        links = sum(adjacency[a, b] for a, b in itertools.combinations(neighbors, 2))
        clustering.append(2.0 * links / (k * (k - 1)) if k >= 2 else 0.0)

    betweenness = np.zeros(n)
    for j, k in reachable:
        for i in range(n):
            if i not in (j, k) and dist[j, i] + dist[i, k] == dist[j, k]:
                betweenness[i] += sigma[j, i] * sigma[i, k] / sigma[j, k]

    return {
        "path_length": path_length,
        "efficiency": efficiency,
        "clustering": float(np.mean(clustering)),
        "betweenness": betweenness,
        "interior_total": sum(dist[j, k] - 1 for j, k in reachable),
        "reachable_fraction": len(reachable) / pairs,
    }


class TestBuildGraph:
    def test_example(self, example_matrix):
        graph = build_graph(example_matrix, 1.0)
        assert adjacency_edges(graph) == [("s0", "s2")]

    def test_strict_threshold(self, example_matrix):
        assert adjacency_edges(build_graph(example_matrix, 0.5)) == []

    def test_empty_and_complete(self, example_matrix):
        assert build_graph(example_matrix, 0.0).edge_count == 0
        assert build_graph(example_matrix, -1.0).edge_count == 0
        complete = build_graph(example_matrix, 2.01)
        assert complete.edge_count == 3
        assert not complete.adjacency.diagonal().any()
        np.testing.assert_array_equal(complete.adjacency, complete.adjacency.T)

    def test_non_finite(self, example_matrix):
        with pytest.raises(GraphError):
            build_graph(example_matrix, np.inf)


class TestObservables:
    def test_path_graph(self):
        obs = observables(graph_from_edges(3, [(0, 1), (1, 2)]))
        assert obs.path_length == pytest.approx(4 / 3)
        assert obs.efficiency == pytest.approx(5 / 6)
        assert obs.clustering == 0.0
        assert obs.betweenness == pytest.approx((0.0, 2.0, 0.0))
        assert obs.avg_degree == pytest.approx(4 / 6)

    def test_complete_graph(self):
        obs = observables(graph_from_edges(4, list(itertools.combinations(range(4), 2))))
        assert obs.avg_degree == 1.0
        assert obs.path_length == 1.0
        assert obs.efficiency == 1.0
        assert obs.clustering == 1.0
        assert obs.betweenness == (0.0, 0.0, 0.0, 0.0)

    def test_two_disconnected_edges(self):
        obs = observables(graph_from_edges(4, [(0, 1), (2, 3)]))
        assert obs.efficiency == pytest.approx(1 / 3)
        assert obs.path_length == 1.0
        assert obs.reachable_pair_fraction == pytest.approx(1 / 3)

    def test_empty_graph(self):
        obs = observables(graph_from_edges(5, []))
        assert obs.path_length == 0.0
        assert obs.reachable_pair_fraction == 0.0
        assert obs.efficiency == 0.0
        assert obs.clustering == 0.0
        assert obs.betweenness_total == 0.0

    def test_star(self):
        obs = observables(graph_from_edges(5, [(0, i) for i in range(1, 5)]))
        assert obs.betweenness[0] == pytest.approx(12.0)
        assert obs.betweenness_avg == pytest.approx(12.0 / 5)

    def test_matches_exhaustive_enumeration(self, rng):
        for _ in range(200):
            n = int(rng.integers(2, 9))
            p = rng.uniform(0.1, 0.9)
            edges = [e for e in itertools.combinations(range(n), 2) if rng.random() < p]
            graph = graph_from_edges(n, edges)

            obs = observables(graph)
            oracle = exhaustive_observables(graph.adjacency)
            assert obs.path_length == pytest.approx(oracle["path_length"], abs=1e-12)
            assert obs.efficiency == pytest.approx(oracle["efficiency"], abs=1e-12)
            assert obs.clustering == pytest.approx(oracle["clustering"], abs=1e-12)
            assert obs.reachable_pair_fraction == pytest.approx(oracle["reachable_fraction"])
            np.testing.assert_allclose(obs.betweenness, oracle["betweenness"], atol=1e-12)
            assert obs.betweenness_total == pytest.approx(oracle["interior_total"], abs=1e-9)


class TestSweep:
    def test_example_edge_counts(self, example_matrix):
        result = sweep(example_matrix, [0.4, 1.0, 1.6, 2.1])
        assert [o.edge_count for o in result.observables] == [0, 1, 2, 3]

    def test_monotone_and_nested(self, rng):
        for _ in range(10):
            matrix = matrix_from_widths([str(i) for i in range(15)], rng.random(15))
            result = sweep(matrix, np.linspace(0.0, 1.0, 25))
            frame = result.to_frame()
            assert np.all(np.diff(frame["avg_degree"]) >= 0)
            assert np.all(np.diff(frame["E"]) >= -1e-12)

            previous = set()
            for xi in result.xi_grid:
                edges = set(adjacency_edges(build_graph(matrix, xi)))
                assert previous <= edges
                previous = edges

    def test_default_grid(self, example_matrix):
        result = sweep(example_matrix)
        assert len(result.xi_grid) == 200
        assert result.xi_grid[0] == 0.5
        assert result.xi_grid[-1] == 2.0

    def test_default_grid_two_nodes(self):
        matrix = matrix_from_widths(["a", "b"], [0.3, 0.8])
        result = sweep(matrix)
        assert len(result.xi_grid) == 200
        assert result.xi_grid[0] == pytest.approx(0.5)
        assert result.xi_grid[-1] == pytest.approx(1.5)
        edge_counts = [o.edge_count for o in result.observables]
        assert edge_counts[0] == 0
        assert edge_counts[-1] == 1

    def test_default_grid_equal_widths(self):
        matrix = matrix_from_widths(["a", "b", "c"], [0.5, 0.5, 0.5])
        result = sweep(matrix)
        assert np.all(np.diff(result.xi_grid) > 0)
        assert result.observables[0].edge_count == 0
        assert result.observables[-1].edge_count == 3
        assert result.observables[-1].clustering == 1.0

    def test_clustering_local_maximum(self):
        matrix = matrix_from_widths(["a", "b", "c", "d"], [0.0, 0.1, 0.2, 1.15])
        result = sweep(matrix, [0.05, 0.25, 1.0, 1.2])
        assert [o.clustering for o in result.observables] == pytest.approx(
            [0.0, 0.75, 7 / 12, 1.0]
        )
        assert result.clustering_maxima == (0.25,)

    def test_betweenness_peak(self):
        matrix = matrix_from_widths(["a", "b", "c"], [0.0, 1.0, 2.0])
        result = sweep(matrix, [0.5, 1.5, 2.5])
        assert result.betweenness_peak == 1.5
        assert result.betweenness_peak_value == pytest.approx(2.0 / 3)
        assert result.betweenness_maxima == (1.5,)
        assert "conventions" in result.critical()

    def test_bad_grid(self, example_matrix):
        with pytest.raises(GraphError):
            sweep(example_matrix, [])
        with pytest.raises(GraphError):
            sweep(example_matrix, [1.0, 0.5])
