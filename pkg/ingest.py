"""Series loading and the return/profile transforms that feed the fluctuation analysis"""

import logging
from dataclasses import dataclass, field
from pathlib import Path
from typing import Literal

import numpy as np
import pandas as pd

from config import MIN_SERIES_LENGTH

logger = logging.getLogger(__name__)

BundleFormat = Literal["wide_csv", "long_csv", "raw_signal"]
SeriesMode = Literal["price", "raw"]

DATE_COLUMN = "date"
LONG_COLUMNS = ["id", "value"]


class BundleLoadError(Exception):
    pass


class DuplicateIdError(BundleLoadError):
    pass


class SeriesTooShortError(BundleLoadError):
    pass


class NonPositivePriceError(BundleLoadError):
    pass


class DegenerateSeriesError(Exception):
    pass


def _frozen(values) -> np.ndarray:
    arr = np.array(values, dtype=float)
    arr.setflags(write=False)
    return arr


@dataclass(frozen=True)
class SeriesEntry:
    id: str
    values: np.ndarray
    mode: SeriesMode = "price"

    def __post_init__(self):
        object.__setattr__(self, "values", _frozen(self.values))

    def __len__(self) -> int:
        return self.values.size


@dataclass(frozen=True)
class SeriesBundle:
    entries: tuple[SeriesEntry, ...]
    mode: SeriesMode = "price"
    metadata: dict = field(default_factory=dict)

    def __post_init__(self):
        ids = [entry.id for entry in self.entries]
        duplicates = sorted({i for i in ids if ids.count(i) > 1})
        if duplicates:
            raise DuplicateIdError(f"Duplicate series ids: {duplicates}")

    @property
    def ids(self) -> list[str]:
        return [entry.id for entry in self.entries]

    def __len__(self) -> int:
        return len(self.entries)

    def __iter__(self):
        return iter(self.entries)

    def get(self, series_id: str) -> SeriesEntry:
        for entry in self.entries:
            if entry.id == series_id:
                return entry
        raise KeyError(series_id)


@dataclass(frozen=True)
class ReturnSeries:
    id: str
    returns: np.ndarray
    volatility: float
    raw_mean: float

    def __post_init__(self):
        object.__setattr__(self, "returns", _frozen(self.returns))


@dataclass(frozen=True)
class Profile:
    id: str
    values: np.ndarray

    def __post_init__(self):
        object.__setattr__(self, "values", _frozen(self.values))

    def __len__(self) -> int:
        return self.values.size


def _leading_comments(path: Path) -> list[str]:
    """`#` lines before the header, such as the `# config_hash: ...` line"""
    comments = []
    with open(path, "r", encoding="utf-8") as f:
        for line in f:
            if not line.startswith("#"):
                break
            comments.append(line[1:].strip())
    return comments


def _read_header(path: Path, skip: int = 0) -> list[str]:
    header = pd.read_csv(
        path, header=None, nrows=1, skiprows=skip, dtype=str, keep_default_na=False
    )
    return [str(v).strip() for v in header.iloc[0].tolist()]


def _parse_cells(cells: pd.Series) -> np.ndarray:
    """Correctly rounded float parse of string cells; empty or non-numeric cells become NaN"""

    def parse(cell: str) -> float:
        try:
            return float(cell)
        except ValueError:
            return np.nan

    return np.fromiter((parse(c) for c in cells), dtype=float, count=len(cells))


def _parse_wide(
    path: Path, header: list[str], skip: int = 0
) -> tuple[dict[str, np.ndarray], dict]:
    df = pd.read_csv(path, skiprows=skip, dtype=str, keep_default_na=False)
    df.columns = header

    metadata = {}
    columns = list(header)
    dates = None
    if columns and columns[0].lower() == DATE_COLUMN:
        dates = df[columns[0]].to_numpy()
        columns = columns[1:]
        metadata["dates"] = {}

    series = {}
    for column in columns:
        values = _parse_cells(df[column])
        keep = np.isfinite(values)
        series[column] = values[keep]
        if dates is not None:
            metadata["dates"][column] = [str(d) for d in dates[keep]]
        skipped = int((~keep).sum())
        if skipped:
            logger.info(f"Skipped {skipped} missing rows for {column}")

    return series, metadata


def _parse_long(path: Path, skip: int = 0) -> dict[str, np.ndarray]:
    df = pd.read_csv(
        path, skiprows=skip, dtype={"id": str, "value": str}, keep_default_na=False
    )
    df["value"] = _parse_cells(df["value"])

    series = {}
    for series_id, group in df.groupby("id", sort=False):
        values = group["value"].to_numpy(dtype=float)
        keep = np.isfinite(values)
        skipped = int((~keep).sum())
        if skipped:
            logger.info(f"Skipped {skipped} missing rows for {series_id}")
        series[str(series_id)] = values[keep]

    return series


def load_bundle(path: str | Path, format: BundleFormat = "wide_csv") -> SeriesBundle:
    """Load a bundle of series from CSV

    wide_csv: one column per series, optional leading `date` column.
    long_csv: columns `id,value` in row order.
    raw_signal: either shape; values enter the pipeline as returns directly.
    Leading `#` comment lines are skipped.
    """
    path = Path(path)
    logger.info(f"Loading {format} bundle from {path}")

    if not path.is_file():
        raise BundleLoadError(f"Input file not found: {path}")

    try:
        comments = _leading_comments(path)
        header = _read_header(path, len(comments))
    except Exception as e:
        raise BundleLoadError(f"Could not read {path}: {e}") from e

    if format == "long_csv" or (format == "raw_signal" and header == LONG_COLUMNS):
        if header != LONG_COLUMNS:
            raise BundleLoadError(f"Long format expects columns {LONG_COLUMNS}, got {header}")
        series = _parse_long(path, len(comments))
        metadata = {}
    elif format in ("wide_csv", "raw_signal"):
        value_columns = header[1:] if header and header[0].lower() == DATE_COLUMN else header
        duplicates = sorted({c for c in value_columns if value_columns.count(c) > 1})
        if duplicates:
            raise DuplicateIdError(f"Duplicate series ids in {path}: {duplicates}")
        series, metadata = _parse_wide(path, header, len(comments))
    else:
        raise BundleLoadError(f"Unknown bundle format: {format}")

    mode: SeriesMode = "raw" if format == "raw_signal" else "price"

    for series_id, values in series.items():
        if values.size < MIN_SERIES_LENGTH:
            raise SeriesTooShortError(
                f"Series {series_id} has {values.size} samples, "
                + f"at least {MIN_SERIES_LENGTH} required"
            )
        if mode == "price" and np.any(values <= 0):
            raise NonPositivePriceError(f"Series {series_id} has non-positive prices")

    metadata.update({"source": str(path), "format": format})
    for comment in comments:
        key, _, value = comment.partition(":")
        if key.strip() == "config_hash":
            metadata["config_hash"] = value.strip()
    bundle = SeriesBundle(
        entries=tuple(
            SeriesEntry(id=series_id, values=values, mode=mode)
            for series_id, values in series.items()
        ),
        mode=mode,
        metadata=metadata,
    )
    logger.info(f"Loaded {len(bundle)} series from {path}")
    return bundle


def save_bundle(bundle: SeriesBundle, path: str | Path, run_hash: str | None = None) -> Path:
    """Write a bundle in wide layout; shorter series are padded with empty cells"""
    path = Path(path)
    path.parent.mkdir(exist_ok=True, parents=True)
    df = pd.DataFrame(
        {entry.id: pd.Series(entry.values, dtype=float) for entry in bundle.entries}
    )
    with open(path, "w", encoding="utf-8", newline="") as f:
        if run_hash is not None:
            f.write(f"# config_hash: {run_hash}\n")
        df.to_csv(f, index=False, lineterminator="\n", float_format="%.17g")
    logger.info(f"Saved bundle with {len(bundle)} series to {path}")
    return path


def to_returns(series: SeriesEntry) -> ReturnSeries:
    """Normalized returns R(t) = (r(t) - <r>) / sigma_r with population sigma

    Price mode uses log returns r(t) = log x(t+1) - log x(t); raw mode takes the values as r(t).
    """
    values = np.asarray(series.values, dtype=float)

    if series.mode == "price":
        if values.size < 2:
            raise BundleLoadError(f"Series {series.id} needs at least 2 prices")
        if np.any(values <= 0):
            raise NonPositivePriceError(f"Series {series.id} has non-positive prices")
        raw_returns = np.diff(np.log(values))
    else:
        raw_returns = values.copy()

    raw_mean = float(np.mean(raw_returns))
    centered = raw_returns - raw_mean
    sigma = float(np.sqrt(np.mean(centered**2)))

    scale = float(np.max(np.abs(raw_returns)))
    if not np.isfinite(sigma) or sigma <= 1e-12 * scale:
        raise DegenerateSeriesError(
            f"Series {series.id} has zero volatility, spectrum is undefined"
        )

    return ReturnSeries(
        id=series.id,
        returns=centered / sigma,
        volatility=sigma,
        raw_mean=raw_mean,
    )


def to_profile(returns: ReturnSeries) -> Profile:
    """Y(n) = sum_{t<=n} R(t)"""
    return Profile(id=returns.id, values=np.cumsum(returns.returns))
