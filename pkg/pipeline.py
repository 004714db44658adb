import json
import logging
import re
from concurrent.futures import ProcessPoolExecutor, as_completed
from dataclasses import asdict, dataclass, field, fields
from pathlib import Path

import numpy as np
import pandas as pd
from tqdm import tqdm

from cluster import cut_top_branches, single_linkage, write_clusters_csv, write_dendrogram
from config import (
    DEFAULT_BOUNDARY,
    DEFAULT_BREAKPOINTS,
    DEFAULT_EPS_FLOOR,
    DEFAULT_FILTER,
    DEFAULT_MIN_LEVEL,
    DEFAULT_R_GRID,
    DEFAULT_REVERSAL_AVERAGE,
    DEFAULT_SWEEP_POINTS,
    DEFAULT_TOP_K,
    DEFAULT_WORKERS,
    PATH_TO_OUTPUT,
)
from graph import (
    build_graph,
    default_grid,
    sweep,
    write_adjacency_csv,
    write_edges_csv,
    write_sweep_csv,
)
from ingest import load_bundle, save_bundle, to_profile, to_returns
from mfdfa import (
    AnalysisConfig,
    ScalingSpectrum,
    SeriesAnalysisError,
    analyze_series,
    hurst_summary,
    spectrum_from_dict,
    spectrum_to_dict,
)
from singularity_metric import (
    build_matrix,
    segment_distribution,
    write_matrix_csv,
    write_upper_triangle_json,
)
from synth import synth_bundle
from utils import config_hash, write_csv, write_json
from wavelet import coefficient_rows, dwt_forward, pad_to_multiple

logger = logging.getLogger(__name__)

# Fields that never change the numbers in the outputs
UNHASHED_FIELDS = ("output_dir", "workers")
# Fields read by the network step; the analysis side enters through the spectra
NETWORK_HASH_FIELDS = ("breakpoints", "top_k", "xi_points", "xi_min", "xi_max", "xi")


class MissingSpectraError(Exception):
    pass


@dataclass
class RunConfig:
    input_path: str | None = None
    input_format: str = "wide_csv"
    r_grid: list[float] = field(default_factory=lambda: list(DEFAULT_R_GRID))
    min_level: int = DEFAULT_MIN_LEVEL
    max_level: int | None = None
    filter: str = DEFAULT_FILTER
    boundary: str = DEFAULT_BOUNDARY
    eps_floor: float = DEFAULT_EPS_FLOOR
    reversal_average: str = DEFAULT_REVERSAL_AVERAGE
    breakpoints: list[float] | None = field(default_factory=lambda: list(DEFAULT_BREAKPOINTS))
    top_k: int = DEFAULT_TOP_K
    xi_points: int = DEFAULT_SWEEP_POINTS
    xi_min: float | None = None
    xi_max: float | None = None
    xi: float | None = None
    spectra_dir: str | None = None
    output_dir: str = str(PATH_TO_OUTPUT)
    workers: int = DEFAULT_WORKERS

    @classmethod
    def from_dict(cls, data: dict) -> "RunConfig":
        known = {f.name for f in fields(cls)}
        unknown = sorted(set(data) - known)
        if unknown:
            raise ValueError(f"Unknown config fields: {unknown}")
        return cls(**data)

    @classmethod
    def from_json(cls, path: str | Path) -> "RunConfig":
        with open(path, "r", encoding="utf-8") as f:
            return cls.from_dict(json.load(f))

    def to_dict(self) -> dict:
        return asdict(self)

    def hash(self) -> str:
        data = {k: v for k, v in self.to_dict().items() if k not in UNHASHED_FIELDS}
        return config_hash(data)

    def network_hash(self, spectra: list[ScalingSpectrum]) -> str:
        """Network parameters plus the analysis configs echoed by the spectra"""
        data = {k: getattr(self, k) for k in NETWORK_HASH_FIELDS}
        data["analysis"] = sorted({config_hash(s.config_echo) for s in spectra})
        return config_hash(data)

    def analysis_config(self) -> AnalysisConfig:
        return AnalysisConfig(
            r_grid=tuple(self.r_grid),
            min_level=self.min_level,
            max_level=self.max_level,
            filter=self.filter,
            boundary=self.boundary,
            eps_floor=self.eps_floor,
            reversal_average=self.reversal_average,
        )

    @property
    def output_path(self) -> Path:
        return Path(self.output_dir)

    @property
    def spectra_path(self) -> Path:
        return Path(self.spectra_dir) if self.spectra_dir else Path(self.output_dir, "spectra")


@dataclass
class AnalysisReport:
    spectra: list[ScalingSpectrum]
    failures: list[dict]
    run_hash: str


@dataclass
class NetworkReport:
    ids: list[str]
    n_clusters: int
    critical: dict
    run_hash: str


def _file_stem(series_id: str) -> str:
    return re.sub(r"[^\w.-]", "_", series_id)


def _failure_record(series_id: str, error: Exception) -> dict:
    if isinstance(error, SeriesAnalysisError):
        return {
            "id": series_id,
            "stage": error.stage,
            "error_type": type(error.cause).__name__,
            "message": str(error.cause),
        }
    return {
        "id": series_id,
        "stage": "worker",
        "error_type": type(error).__name__,
        "message": str(error),
    }


def _write_run_config(config: RunConfig, name: str, run_hash: str) -> Path:
    return write_json(
        {"config": config.to_dict(), "config_hash": run_hash},
        Path(config.output_path, name),
    )


def run_analysis(config: RunConfig) -> AnalysisReport:
    """Analyze every series of the bundle; per-series failures are recorded, not raised"""

    logger.info("Starting analysis")
    if config.input_path is None:
        raise ValueError("input_path is required for analysis")

    analysis_config = config.analysis_config()
    run_hash = config.hash()
    bundle = load_bundle(config.input_path, config.input_format)

    results: dict[str, ScalingSpectrum] = {}
    failures: dict[str, dict] = {}

    if config.workers <= 1:
        for entry in tqdm(bundle, total=len(bundle), desc="series"):
            try:
                results[entry.id] = analyze_series(entry, analysis_config)
            except SeriesAnalysisError as e:
                logger.error(f"Series {entry.id} failed: {e}")
                failures[entry.id] = _failure_record(entry.id, e)
    else:
        logger.info(f"Processing {len(bundle)} series with {config.workers} workers")
        with ProcessPoolExecutor(max_workers=config.workers) as executor:
            future_to_id = {
                executor.submit(analyze_series, entry, analysis_config): entry.id
                for entry in bundle
            }
            for future in tqdm(as_completed(future_to_id), total=len(future_to_id), desc="series"):
                series_id = future_to_id[future]
                try:
                    results[series_id] = future.result()
                except Exception as e:
                    logger.error(f"Series {series_id} failed: {e}")
                    failures[series_id] = _failure_record(series_id, e)

    spectra = [results[i] for i in sorted(results)]
    failure_list = [failures[i] for i in sorted(failures)]

    # File writes are serialized and id-sorted so the outputs do not depend on scheduling
    for spectrum in spectra:
        data = spectrum_to_dict(spectrum)
        data["config_hash"] = run_hash
        write_json(data, Path(config.spectra_path, f"{_file_stem(spectrum.id)}.json"))

    summary = pd.DataFrame(
        {
            "id": [s.id for s in spectra],
            "gamma": [s.gamma for s in spectra],
            "hurst": [s.hurst for s in spectra],
        },
        columns=["id", "gamma", "hurst"],
    )
    write_csv(summary, Path(config.output_path, "summary.csv"), run_hash)
    write_json(
        {"config_hash": run_hash, "failures": failure_list},
        Path(config.output_path, "failures.json"),
    )
    write_json(
        {"config_hash": run_hash, **hurst_summary(spectra)},
        Path(config.output_path, "hurst_summary.json"),
    )
    _write_run_config(config, "run_config.json", run_hash)

    logger.info(f"Finished analysis: {len(spectra)} spectra, {len(failure_list)} failures")
    return AnalysisReport(spectra=spectra, failures=failure_list, run_hash=run_hash)


def load_spectra(spectra_dir: Path) -> list[ScalingSpectrum]:
    spectra_dir = Path(spectra_dir)
    files = sorted(spectra_dir.glob("*.json")) if spectra_dir.is_dir() else []
    if not files:
        raise MissingSpectraError(f"No spectrum files found in {spectra_dir}")

    spectra = []
    for path in files:
        with open(path, "r", encoding="utf-8") as f:
            spectra.append(spectrum_from_dict(json.load(f)))
    return sorted(spectra, key=lambda s: s.id)


def run_network(config: RunConfig) -> NetworkReport:
    """Matrix, dendrogram, top-k cut, histogram and threshold sweep from saved spectra"""

    logger.info("Starting network construction")
    out = config.output_path

    spectra = load_spectra(config.spectra_path)
    if len(spectra) < 2:
        raise MissingSpectraError(f"At least 2 spectra are required, found {len(spectra)}")
    run_hash = config.network_hash(spectra)

    matrix = build_matrix(spectra)
    write_matrix_csv(matrix, Path(out, "rho.csv"), run_hash)
    write_upper_triangle_json(matrix, Path(out, "rho_upper.json"), run_hash)

    dend = single_linkage(matrix)
    write_dendrogram(
        dend, Path(out, "dendrogram.nwk"), Path(out, "dendrogram.json"), run_hash
    )

    k = config.top_k
    if k > matrix.size:
        logger.warning(f"top_k={k} exceeds {matrix.size} leaves, cutting into singletons")
        k = matrix.size
    clusters = cut_top_branches(dend, k)
    write_clusters_csv(clusters, Path(out, "clusters.csv"), run_hash)

    histogram = segment_distribution(matrix, config.breakpoints)
    write_csv(histogram.to_frame(), Path(out, "histogram.csv"), run_hash)

    if config.xi_min is not None or config.xi_max is not None:
        entries = matrix.upper_entries()
        lo = entries.min() if config.xi_min is None else config.xi_min
        hi = entries.max() if config.xi_max is None else config.xi_max
        grid = np.linspace(lo, hi, config.xi_points)
    else:
        grid = default_grid(matrix, config.xi_points)
    result = sweep(matrix, grid)
    write_sweep_csv(result, Path(out, "sweep.csv"), run_hash)
    critical = {"config_hash": run_hash, **result.critical()}
    write_json(critical, Path(out, "critical.json"))

    if config.xi is not None:
        graph = build_graph(matrix, config.xi)
        write_edges_csv(graph, Path(out, "edges.csv"), run_hash)
        write_adjacency_csv(graph, Path(out, "adjacency.csv"), run_hash)
        logger.info(f"Threshold graph at xi={config.xi} has {graph.edge_count} edges")

    _write_run_config(config, "network_config.json", run_hash)
    logger.info(f"Finished network construction for {matrix.size} series")
    return NetworkReport(
        ids=list(matrix.ids), n_clusters=len(clusters), critical=critical, run_hash=run_hash
    )


def run_synth(
    kind: str,
    path: str | Path,
    count: int = 1,
    seed: int = 0,
    a: float = 0.75,
    levels: int = 12,
    length: int | None = None,
) -> Path:
    """Generate a synthetic bundle and save it in wide raw_signal layout"""
    params = {
        "kind": kind,
        "count": count,
        "seed": seed,
        "a": a,
        "levels": levels,
        "length": length,
    }
    run_hash = config_hash(params)
    bundle = synth_bundle(**params)
    path = save_bundle(bundle, path, run_hash)
    write_json({"config_hash": run_hash, **bundle.metadata}, path.with_suffix(".meta.json"))
    return path


def run_dwt_dump(
    input_path: str | Path,
    series_id: str,
    path: str | Path,
    input_format: str = "wide_csv",
    wfilter: str = DEFAULT_FILTER,
    levels: int = 1,
    boundary: str = DEFAULT_BOUNDARY,
) -> Path:
    """Decompose the profile of one series and write its coefficients"""
    run_hash = config_hash(
        {
            "input_path": str(input_path),
            "input_format": input_format,
            "series_id": series_id,
            "filter": wfilter,
            "levels": levels,
            "boundary": boundary,
        }
    )
    bundle = load_bundle(input_path, input_format)
    profile = to_profile(to_returns(bundle.get(series_id)))
    multiple = 2**levels if boundary == "periodic" else 2 ** (levels - 1)
    decomp = dwt_forward(pad_to_multiple(profile.values, multiple), wfilter, levels, boundary)
    df = pd.DataFrame(coefficient_rows(decomp), columns=["level", "band", "index", "value"])
    return write_csv(df, Path(path), run_hash)
