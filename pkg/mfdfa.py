"""Wavelet-based multifractal detrended fluctuation analysis

Profile -> per-level fluctuations (wavelet trend removal, forward/reversed average)
-> order-r fluctuation functions F_r(w) -> h(r) -> tau(r), beta(r), f(beta), width, Hurst.
"""

import logging
from dataclasses import asdict, dataclass, field, replace
from typing import Literal

import numpy as np
from scipy.special import logsumexp

from config import (
    DEFAULT_BOUNDARY,
    DEFAULT_EPS_FLOOR,
    DEFAULT_FILTER,
    DEFAULT_MIN_LEVEL,
    DEFAULT_R_GRID,
    DEFAULT_REVERSAL_AVERAGE,
    H_MONOTONE_TOLERANCE,
    MIN_FIT_SCALES,
)
from ingest import Profile, SeriesEntry, to_profile, to_returns
from wavelet import FILTER_NAMES, lowpass_trend

logger = logging.getLogger(__name__)

ReversalAverage = Literal["fluctuation", "variance"]

WINDOW_MAPPING = "dyadic"
FIT_METHOD = "ols_log2"


class AnalysisConfigError(Exception):
    pass


class ProfileTooShortError(Exception):
    pass


class SpectrumUndefinedError(Exception):
    pass


class ScalingFitError(Exception):
    pass


class SeriesAnalysisError(Exception):
    def __init__(self, series_id: str, stage: str, cause: Exception):
        self.series_id = series_id
        self.stage = stage
        self.cause = cause
        super().__init__(f"[{series_id}] {stage}: {type(cause).__name__}: {cause}")

    def __reduce__(self):
        # Crosses process boundaries from pool workers
        return (type(self), (self.series_id, self.stage, self.cause))


@dataclass(frozen=True)
class AnalysisConfig:
    r_grid: tuple[float, ...] = DEFAULT_R_GRID
    min_level: int = DEFAULT_MIN_LEVEL
    max_level: int | None = None
    filter: str = DEFAULT_FILTER
    boundary: str = DEFAULT_BOUNDARY
    eps_floor: float = DEFAULT_EPS_FLOOR
    reversal_average: ReversalAverage = DEFAULT_REVERSAL_AVERAGE
    fit_method: str = FIT_METHOD

    def __post_init__(self):
        object.__setattr__(self, "r_grid", tuple(float(r) for r in self.r_grid))
        self.validate()

    def validate(self):
        grid = np.asarray(self.r_grid, dtype=float)
        if grid.size < 2 or np.any(np.diff(grid) <= 0):
            raise AnalysisConfigError("r_grid must be strictly increasing with at least 2 orders")
        if 2.0 not in self.r_grid:
            raise AnalysisConfigError("r_grid must contain r=2 for the Hurst exponent")
        if self.min_level < 1:
            raise AnalysisConfigError(f"min_level must be >= 1, got {self.min_level}")
        if self.max_level is not None and self.min_level >= self.max_level:
            raise AnalysisConfigError(
                f"min_level ({self.min_level}) must be below max_level ({self.max_level})"
            )
        if self.filter not in FILTER_NAMES:
            raise AnalysisConfigError(f"Unknown filter {self.filter}")
        if self.boundary not in ("periodic", "symmetric"):
            raise AnalysisConfigError(f"Unknown boundary {self.boundary}")
        if self.reversal_average not in ("fluctuation", "variance"):
            raise AnalysisConfigError(f"Unknown reversal_average {self.reversal_average}")
        if self.fit_method != FIT_METHOD:
            raise AnalysisConfigError(f"Unsupported fit_method {self.fit_method}")
        if not self.eps_floor > 0:
            raise AnalysisConfigError("eps_floor must be positive")

    def resolve(self, n: int) -> "AnalysisConfig":
        """Fill max_level from the profile length: floor(log2(n / 4))"""
        if self.max_level is not None:
            if 4 * 2**self.max_level > n:
                raise ProfileTooShortError(
                    f"Profile of length {n} is too short for max_level {self.max_level}"
                )
            return self
        max_level = int(np.floor(np.log2(n / 4))) if n >= 4 else 0
        if max_level <= self.min_level:
            raise ProfileTooShortError(
                f"Profile of length {n} admits levels up to {max_level}, "
                + f"min_level is {self.min_level}"
            )
        return replace(self, max_level=max_level)

    @property
    def levels(self) -> tuple[int, ...]:
        if self.max_level is None:
            raise AnalysisConfigError("max_level is unresolved")
        return tuple(range(self.min_level, self.max_level + 1))

    def echo(self) -> dict:
        echo = asdict(self)
        echo["r_grid"] = list(self.r_grid)
        echo["window_mapping"] = WINDOW_MAPPING
        echo["trend_convention"] = "zero details at levels <= j, invert"
        echo["r0_form"] = "exp(mean(ln F^2) / 2)"
        echo["beta_derivative"] = "central differences, one-sided at grid ends"
        return echo


@dataclass(frozen=True)
class LevelFluctuations:
    id: str
    levels: tuple[int, ...]
    arrays: dict[int, np.ndarray]
    reversed_arrays: dict[int, np.ndarray] | None = None


@dataclass(frozen=True)
class FluctuationTable:
    id: str
    windows: tuple[int, ...]
    orders: tuple[float, ...]
    values: np.ndarray  # shape (len(orders), len(windows))
    dropped_segments: np.ndarray  # same shape

    def column(self, r: float) -> np.ndarray:
        return self.values[self.orders.index(float(r))]


@dataclass(frozen=True)
class ScalingSpectrum:
    id: str
    orders: tuple[float, ...]
    h: dict[float, float]
    tau: dict[float, float]
    beta: dict[float, float]
    f_beta: list[tuple[float, float]]
    gamma: float
    hurst: float
    fit_r2: dict[float, float]
    warnings: list[str] = field(default_factory=list)
    table: FluctuationTable | None = None
    config_echo: dict = field(default_factory=dict)


def extract_fluctuations(profile: Profile, config: AnalysisConfig) -> LevelFluctuations:
    """f_j = Y - trend_j(Y), averaged with the same extraction on the reversed profile"""
    y = np.asarray(profile.values, dtype=float)
    n = y.size

    minimum = 4 * 2**config.min_level
    if n < minimum:
        raise ProfileTooShortError(
            f"Profile {profile.id} has length {n}, at least {minimum} required "
            + f"for min_level {config.min_level}"
        )
    config = config.resolve(n)

    y_rev = y[::-1]
    arrays, reversed_arrays = {}, {}
    for level in config.levels:
        forward = y - lowpass_trend(y, config.filter, level, config.boundary)
        backward = (y_rev - lowpass_trend(y_rev, config.filter, level, config.boundary))[::-1]
        if config.reversal_average == "fluctuation":
            arrays[level] = 0.5 * (forward + backward)
        else:
            arrays[level] = forward
            reversed_arrays[level] = backward
        logger.debug(
            f"{profile.id}: level {level} fluctuation rms {np.sqrt(np.mean(arrays[level] ** 2)):.4g}"
        )

    return LevelFluctuations(
        id=profile.id,
        levels=config.levels,
        arrays=arrays,
        reversed_arrays=reversed_arrays or None,
    )


def segment_variances(f: np.ndarray, window: int) -> np.ndarray:
    """F^2(m, w) over M_w segments from the front and M_w from the back"""
    f = np.asarray(f, dtype=float)
    n = f.size
    m = n // window
    if m < 1:
        raise ProfileTooShortError(f"Window {window} exceeds series length {n}")
    front = f[: m * window].reshape(m, window)
    back = f[n - m * window :].reshape(m, window)
    return np.concatenate([np.mean(front**2, axis=1), np.mean(back**2, axis=1)])


def generalized_fluctuation(f2: np.ndarray, r: float) -> float:
    """Order-r generalized mean of segment rms values; log limit at r = 0"""
    log_f2 = np.log(np.asarray(f2, dtype=float))
    if r == 0:
        return float(np.exp(0.5 * np.mean(log_f2)))
    log_mean = logsumexp(0.5 * r * log_f2) - np.log(log_f2.size)
    return float(np.exp(log_mean / r))


def fluctuation_function(
    fluctuations: LevelFluctuations, config: AnalysisConfig
) -> FluctuationTable:
    """F_r(w) for every order in the grid and every window w = 2^j"""
    windows = tuple(2**level for level in fluctuations.levels)
    orders = tuple(config.r_grid)
    values = np.empty((len(orders), len(windows)))
    dropped = np.zeros((len(orders), len(windows)), dtype=int)

    for col, (level, window) in enumerate(zip(fluctuations.levels, windows)):
        f2 = segment_variances(fluctuations.arrays[level], window)
        if fluctuations.reversed_arrays is not None:
            f2 = 0.5 * (f2 + segment_variances(fluctuations.reversed_arrays[level], window))

        keep = f2 >= config.eps_floor
        if not np.any(keep):
            raise SpectrumUndefinedError(
                f"All {f2.size} segments of {fluctuations.id} at w={window} are below "
                + f"eps_floor={config.eps_floor}"
            )
        n_dropped = int(f2.size - keep.sum())
        if n_dropped:
            logger.warning(f"{fluctuations.id}: dropped {n_dropped} segments at w={window}")
        dropped[:, col] = n_dropped

        for row, r in enumerate(orders):
            values[row, col] = generalized_fluctuation(f2[keep], r)

    return FluctuationTable(
        id=fluctuations.id,
        windows=windows,
        orders=orders,
        values=values,
        dropped_segments=dropped,
    )


def fit_scaling(table: FluctuationTable) -> dict[float, tuple[float, float]]:
    """h(r) as the OLS slope of log2 F_r(w) on log2 w, with R^2"""
    if len(table.windows) < MIN_FIT_SCALES:
        raise ScalingFitError(
            f"{table.id}: {len(table.windows)} scales, at least {MIN_FIT_SCALES} required"
        )

    log_w = np.log2(np.asarray(table.windows, dtype=float))
    result = {}
    for r, row in zip(table.orders, table.values):
        log_f = np.log2(row)
        slope, intercept = np.polyfit(log_w, log_f, 1)
        residual = log_f - (slope * log_w + intercept)
        ss_tot = float(np.sum((log_f - log_f.mean()) ** 2))
        ss_res = float(np.sum(residual**2))
        r2 = 1.0 if ss_tot <= 1e-300 else 1.0 - ss_res / ss_tot
        result[float(r)] = (float(slope), float(r2))
    return result


def singularity_spectrum(
    h: dict[float, float], config: AnalysisConfig, series_id: str = ""
) -> ScalingSpectrum:
    """tau(r) = r h(r) - 1, beta = d tau / d r, f(beta) = r beta - tau(r)"""
    orders = tuple(config.r_grid)
    missing = [r for r in orders if r not in h]
    if missing:
        raise SpectrumUndefinedError(f"h(r) missing for orders {missing}")

    fit_r2 = {}
    h_values = []
    for r in orders:
        value = h[r]
        if isinstance(value, tuple):
            value, fit_r2[r] = value
        h_values.append(float(value))

    r_arr = np.asarray(orders, dtype=float)
    h_arr = np.asarray(h_values)
    tau = r_arr * h_arr - 1.0
    beta = np.gradient(tau, r_arr)
    f = r_arr * beta - tau

    warnings = []
    if np.any(np.diff(beta) > 1e-9):
        warnings.append("beta(r) is not monotone: spectrum folds back")
    if np.any(np.diff(h_arr) > H_MONOTONE_TOLERANCE):
        warnings.append(
            f"h(r) increases with r by more than {H_MONOTONE_TOLERANCE} somewhere on the grid"
        )
    for warning in warnings:
        logger.warning(f"{series_id}: {warning}")

    return ScalingSpectrum(
        id=series_id,
        orders=orders,
        h=dict(zip(orders, h_values)),
        tau={r: float(t) for r, t in zip(orders, tau)},
        beta={r: float(b) for r, b in zip(orders, beta)},
        f_beta=[(float(b), float(v)) for b, v in zip(beta, f)],
        gamma=float(beta.max() - beta.min()),
        hurst=float(h_arr[orders.index(2.0)]),
        fit_r2=fit_r2,
        warnings=warnings,
        config_echo=config.echo(),
    )


def analyze_series(series: SeriesEntry, config: AnalysisConfig) -> ScalingSpectrum:
    """Returns -> profile -> fluctuations -> F_r(w) -> h(r) -> spectrum, errors tagged by id"""
    stage = "returns"
    try:
        returns = to_returns(series)
        stage = "profile"
        profile = to_profile(returns)
        stage = "fluctuations"
        resolved = config.resolve(len(profile))
        fluctuations = extract_fluctuations(profile, resolved)
        stage = "fluctuation_function"
        table = fluctuation_function(fluctuations, resolved)
        stage = "fit"
        fits = fit_scaling(table)
        stage = "spectrum"
        spectrum = singularity_spectrum(fits, resolved, series_id=series.id)
    except Exception as e:
        raise SeriesAnalysisError(series.id, stage, e) from e

    logger.debug(f"{series.id}: gamma={spectrum.gamma:.4f}, H={spectrum.hurst:.4f}")
    return replace(spectrum, table=table)


def spectrum_to_dict(spectrum: ScalingSpectrum) -> dict:
    """JSON layout for one spectrum file"""
    data = {
        "id": spectrum.id,
        "config_echo": spectrum.config_echo,
        "h": [[r, spectrum.h[r], spectrum.fit_r2.get(r)] for r in spectrum.orders],
        "tau": [[r, spectrum.tau[r]] for r in spectrum.orders],
        "beta": [[r, spectrum.beta[r]] for r in spectrum.orders],
        "f_beta": [list(pair) for pair in spectrum.f_beta],
        "gamma": spectrum.gamma,
        "hurst": spectrum.hurst,
        "warnings": list(spectrum.warnings),
    }
    if spectrum.table is not None:
        data["windows"] = list(spectrum.table.windows)
        data["orders"] = list(spectrum.table.orders)
        data["log2_fluctuations"] = np.log2(spectrum.table.values).tolist()
        data["dropped_segments"] = spectrum.table.dropped_segments.tolist()
    return data


def spectrum_from_dict(data: dict) -> ScalingSpectrum:
    """Inverse of spectrum_to_dict, without the fluctuation table"""
    orders = tuple(float(row[0]) for row in data["h"])
    return ScalingSpectrum(
        id=data["id"],
        orders=orders,
        h={float(r): float(h) for r, h, _ in data["h"]},
        tau={float(r): float(t) for r, t in data["tau"]},
        beta={float(r): float(b) for r, b in data["beta"]},
        f_beta=[(float(b), float(f)) for b, f in data["f_beta"]],
        gamma=float(data["gamma"]),
        hurst=float(data["hurst"]),
        fit_r2={float(r): float(r2) for r, _, r2 in data["h"] if r2 is not None},
        warnings=list(data.get("warnings", [])),
        config_echo=data.get("config_echo", {}),
    )


def hurst_summary(spectra: list[ScalingSpectrum]) -> dict:
    """Mean and population std of H, plus ids further than one std from the mean"""
    if not spectra:
        return {"count": 0, "mean": None, "std": None, "deviating": []}
    hurst = np.asarray([s.hurst for s in spectra])
    mean = float(hurst.mean())
    std = float(hurst.std())
    deviating = [s.id for s in spectra if abs(s.hurst - mean) > std]
    return {"count": len(spectra), "mean": mean, "std": std, "deviating": deviating}
