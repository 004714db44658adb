"""Pairwise singularity pseudometric rho_ij = |gamma_i - gamma_j| and its value histogram

rho is a pseudometric on series: distinct series with equal width sit at distance 0 and
are never merged or deduplicated.
"""

import logging
from dataclasses import dataclass
from pathlib import Path

import numpy as np
import pandas as pd

from mfdfa import ScalingSpectrum
from utils import group_labels, write_csv, write_json

logger = logging.getLogger(__name__)


class MatrixError(Exception):
    pass


class BreakpointError(Exception):
    pass


@dataclass(frozen=True)
class SingularityMatrix:
    ids: tuple[str, ...]
    rho: np.ndarray
    gamma: np.ndarray | None = None

    def __post_init__(self):
        rho = np.array(self.rho, dtype=float)
        n = len(self.ids)
        if rho.shape != (n, n):
            raise MatrixError(f"Matrix shape {rho.shape} does not match {n} ids")
        if n < 2:
            raise MatrixError("At least 2 series are required")
        if not np.all(np.isfinite(rho)):
            raise MatrixError("Matrix has non-finite entries")
        if np.any(rho < 0):
            raise MatrixError("Matrix has negative entries")
        if np.any(np.diag(rho) != 0):
            raise MatrixError("Matrix diagonal is not zero")
        if not np.array_equal(rho, rho.T):
            raise MatrixError("Matrix is not symmetric")
        rho.setflags(write=False)
        object.__setattr__(self, "ids", tuple(self.ids))
        object.__setattr__(self, "rho", rho)
        if self.gamma is not None:
            gamma = np.array(self.gamma, dtype=float)
            gamma.setflags(write=False)
            object.__setattr__(self, "gamma", gamma)

    @property
    def size(self) -> int:
        return len(self.ids)

    def upper_entries(self) -> np.ndarray:
        return self.rho[np.triu_indices(self.size, k=1)]


def matrix_from_widths(ids: list[str], gamma: np.ndarray) -> SingularityMatrix:
    gamma = np.asarray(gamma, dtype=float)
    if len(ids) != gamma.size:
        raise MatrixError(f"{len(ids)} ids for {gamma.size} widths")
    if not np.all(np.isfinite(gamma)):
        bad = [i for i, g in zip(ids, gamma) if not np.isfinite(g)]
        raise MatrixError(f"Non-finite spectrum width for {bad}")
    rho = np.abs(gamma[:, None] - gamma[None, :])
    return SingularityMatrix(ids=tuple(ids), rho=rho, gamma=gamma)


def build_matrix(spectra: list[ScalingSpectrum]) -> SingularityMatrix:
    """rho_ij = |gamma_i - gamma_j| in input order"""
    if len(spectra) < 2:
        raise MatrixError(f"At least 2 spectra are required, got {len(spectra)}")
    matrix = matrix_from_widths([s.id for s in spectra], [s.gamma for s in spectra])
    logger.info(f"Built {matrix.size}x{matrix.size} singularity matrix")
    return matrix


@dataclass(frozen=True)
class RhoHistogram:
    breakpoints: tuple[float, ...]
    group_labels: tuple[str, ...]
    lo: tuple[float, ...]
    hi: tuple[float, ...]
    node_counts: tuple[int, ...]
    node_pct: tuple[float, ...]
    entry_counts: tuple[int, ...]
    entry_pct: tuple[float, ...]
    node_members: tuple[tuple[str, ...], ...] = ()

    def to_frame(self) -> pd.DataFrame:
        return pd.DataFrame(
            {
                "group": self.group_labels,
                "lo": self.lo,
                "hi": self.hi,
                "node_count": self.node_counts,
                "node_pct": self.node_pct,
                "entry_count": self.entry_counts,
                "entry_pct": self.entry_pct,
            }
        )


def _percentages(counts: np.ndarray) -> tuple[float, ...]:
    total = counts.sum()
    if total == 0:
        return tuple(0.0 for _ in counts)
    return tuple(float(c) for c in 100.0 * counts / total)


def segment_distribution(
    matrix: SingularityMatrix, breakpoints: list[float] | None = None
) -> RhoHistogram:
    """Split rho values into groups [b_k, b_k+1); the last group is closed at max rho

    Entry tally counts upper-triangle entries. Node tally places each node by its
    distance gamma_i - min(gamma) from the narrowest spectrum, so it needs widths.
    Without breakpoints the Freedman-Diaconis rule on the entries picks the bins.
    """
    entries = matrix.upper_entries()

    if breakpoints is None:
        edges = np.histogram_bin_edges(entries, bins="fd")
        breakpoints = [float(b) for b in edges[1:-1]]
        logger.info(f"Freedman-Diaconis rule gives {len(breakpoints) + 1} groups")
    cuts = np.asarray(breakpoints, dtype=float)
    if cuts.size and (not np.all(np.isfinite(cuts)) or np.any(np.diff(cuts) <= 0)):
        raise BreakpointError(f"Breakpoints must be finite and strictly increasing: {breakpoints}")

    rho_min, rho_max = float(entries.min()), float(entries.max())
    outside = [float(b) for b in cuts if b < rho_min or b > rho_max]
    if outside:
        logger.warning(f"Breakpoints {outside} lie outside [{rho_min:.4g}, {rho_max:.4g}]")

    n_groups = cuts.size + 1
    entry_groups = np.searchsorted(cuts, entries, side="right")
    entry_counts = np.bincount(entry_groups, minlength=n_groups)

    if matrix.gamma is not None:
        positions = matrix.gamma - matrix.gamma.min()
        node_groups = np.searchsorted(cuts, positions, side="right")
    else:
        node_groups = np.zeros(matrix.size, dtype=int)
        logger.warning("No widths attached to the matrix, node tally puts every node in one group")
    node_counts = np.bincount(node_groups, minlength=n_groups)

    labels = group_labels(n_groups)
    empty = [label for label, c in zip(labels, entry_counts) if c == 0]
    if empty:
        logger.warning(f"Histogram groups without entries: {empty}")

    members = tuple(
        tuple(i for i, g in zip(matrix.ids, node_groups) if g == k) for k in range(n_groups)
    )
    return RhoHistogram(
        breakpoints=tuple(float(b) for b in cuts),
        group_labels=tuple(labels),
        lo=tuple([rho_min] + [float(b) for b in cuts]),
        hi=tuple([float(b) for b in cuts] + [rho_max]),
        node_counts=tuple(int(c) for c in node_counts),
        node_pct=_percentages(node_counts),
        entry_counts=tuple(int(c) for c in entry_counts),
        entry_pct=_percentages(entry_counts),
        node_members=members,
    )


def matrix_frame(matrix: SingularityMatrix) -> pd.DataFrame:
    return pd.DataFrame(matrix.rho, columns=list(matrix.ids))


def write_matrix_csv(matrix: SingularityMatrix, path: Path, run_hash: str | None = None) -> Path:
    """Dense CSV, header = ids, rows in the same order"""
    return write_csv(matrix_frame(matrix), path, run_hash)


def upper_triangle_dict(matrix: SingularityMatrix) -> dict:
    return {
        "ids": list(matrix.ids),
        "gamma": None if matrix.gamma is None else matrix.gamma.tolist(),
        "upper": [matrix.rho[i, i + 1 :].tolist() for i in range(matrix.size - 1)],
    }


def write_upper_triangle_json(
    matrix: SingularityMatrix, path: Path, run_hash: str | None = None
) -> Path:
    data = upper_triangle_dict(matrix)
    if run_hash is not None:
        data["config_hash"] = run_hash
    return write_json(data, path)


def matrix_from_upper_triangle(data: dict) -> SingularityMatrix:
    ids = data["ids"]
    n = len(ids)
    rho = np.zeros((n, n))
    for i, row in enumerate(data["upper"]):
        rho[i, i + 1 :] = row
    rho = rho + rho.T
    return SingularityMatrix(ids=tuple(ids), rho=rho, gamma=data.get("gamma"))
