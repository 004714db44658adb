"""Daubechies filter bank: forward/inverse discrete wavelet transform and low-pass trends

Filters are named by tap count: Db4 has 4 taps and 2 vanishing moments, Db6 has 6 taps
and 3 vanishing moments, Db8 has 8 taps and 4 vanishing moments. Taps come from
PyWavelets (db2, db3, db4) and are checked against the orthonormality and
vanishing-moment conditions before use.
"""

import logging
import warnings
from dataclasses import dataclass, field, replace
from functools import lru_cache
from typing import Literal

import numpy as np
import pywt

logger = logging.getLogger(__name__)

Boundary = Literal["periodic", "symmetric"]
FILTER_NAMES = ("Db4", "Db6", "Db8")
PYWT_NAMES = {"Db4": "db2", "Db6": "db3", "Db8": "db4"}


class WaveletError(Exception):
    pass


@dataclass(frozen=True)
class WaveletFilter:
    name: str
    lowpass: np.ndarray
    highpass: np.ndarray
    vanishing_moments: int

    @property
    def length(self) -> int:
        return self.lowpass.size

    @property
    def wavelet(self) -> pywt.Wavelet:
        # reconstruction taps are h and g; pywt expects decomposition taps time-reversed
        return pywt.Wavelet(
            self.name,
            filter_bank=(
                self.lowpass[::-1].tolist(),
                self.highpass[::-1].tolist(),
                self.lowpass.tolist(),
                self.highpass.tolist(),
            ),
        )


@dataclass(frozen=True)
class DwtDecomposition:
    filter: WaveletFilter
    levels: int
    approx: np.ndarray
    details: list[np.ndarray] = field(default_factory=list)  # details[0] is level 1
    boundary: Boundary = "periodic"
    original_length: int = 0

    def coefficient_count(self) -> int:
        return self.approx.size + sum(d.size for d in self.details)


def quadrature_mirror(lowpass: np.ndarray) -> np.ndarray:
    """g[k] = (-1)^k h[L-1-k]"""
    signs = np.where(np.arange(lowpass.size) % 2 == 0, 1.0, -1.0)
    return signs * lowpass[::-1]


def _validate_filter(wfilter: WaveletFilter):
    h, g = wfilter.lowpass, wfilter.highpass
    if abs(h.sum() - np.sqrt(2.0)) > 1e-10:
        raise WaveletError(f"{wfilter.name}: low-pass taps do not sum to sqrt(2)")
    if abs(np.sum(h**2) - 1.0) > 1e-10:
        raise WaveletError(f"{wfilter.name}: low-pass taps are not unit norm")
    if not np.allclose(g, quadrature_mirror(h), rtol=0.0, atol=1e-12):
        raise WaveletError(f"{wfilter.name}: high-pass is not the quadrature mirror of low-pass")
    k = np.arange(g.size, dtype=float)
    for moment in range(wfilter.vanishing_moments):
        if abs(np.sum(g * k**moment)) > 1e-8 * max(1.0, float(np.sum(np.abs(g) * k**moment))):
            raise WaveletError(f"{wfilter.name}: moment {moment} of high-pass does not vanish")


@lru_cache(maxsize=None)
def daubechies_filter(name: str = "Db4") -> WaveletFilter:
    """Load and validate a Daubechies filter by name (Db4, Db6, Db8)"""
    if name not in FILTER_NAMES:
        raise WaveletError(f"Unknown filter {name}, expected one of {FILTER_NAMES}")

    wavelet = pywt.Wavelet(PYWT_NAMES[name])
    lowpass = np.array(wavelet.rec_lo, dtype=float)
    lowpass.setflags(write=False)
    highpass = np.array(wavelet.rec_hi, dtype=float)
    highpass.setflags(write=False)

    wfilter = WaveletFilter(
        name=name,
        lowpass=lowpass,
        highpass=highpass,
        vanishing_moments=wavelet.vanishing_moments_psi,
    )
    _validate_filter(wfilter)
    logger.debug(f"Loaded {name} ({wavelet.name}) with {lowpass.size} taps")
    return wfilter


def resolve_filter(wfilter: WaveletFilter | str) -> WaveletFilter:
    return daubechies_filter(wfilter) if isinstance(wfilter, str) else wfilter


def _extend(signal: np.ndarray, boundary: Boundary) -> np.ndarray:
    if boundary == "periodic":
        return signal
    if boundary == "symmetric":
        return np.concatenate([signal, signal[::-1]])
    raise WaveletError(f"Unknown boundary mode: {boundary}")


def dwt_forward(
    signal: np.ndarray,
    wfilter: WaveletFilter | str = "Db4",
    levels: int = 1,
    boundary: Boundary = "periodic",
) -> DwtDecomposition:
    """Pyramid decomposition into `levels` detail bands and one approximation band

    Periodic boundary needs len(signal) divisible by 2**levels. Symmetric boundary
    transforms the half-sample symmetric extension [x, x[::-1]] periodically, so it
    needs len(signal) divisible by 2**(levels - 1).
    """
    wfilter = resolve_filter(wfilter)
    x = np.array(signal, dtype=float)  # pywt rejects read-only buffers

    if x.ndim != 1:
        raise WaveletError("Signal must be one-dimensional")
    if levels < 1:
        raise WaveletError(f"Invalid level count: {levels}")
    if x.size < wfilter.length:
        raise WaveletError(
            f"Signal of length {x.size} is shorter than {wfilter.name} ({wfilter.length} taps)"
        )

    extended = _extend(x, boundary)
    if extended.size % (2**levels) != 0:
        raise WaveletError(
            f"Length {x.size} is not compatible with {levels} levels "
            + f"under {boundary} boundary; pad first"
        )

    # deep levels on short signals wrap the filter more than once; periodization handles it
    with warnings.catch_warnings():
        warnings.simplefilter("ignore", UserWarning)
        coeffs = pywt.wavedec(extended, wfilter.wavelet, mode="periodization", level=levels)

    return DwtDecomposition(
        filter=wfilter,
        levels=levels,
        approx=coeffs[0],
        details=coeffs[:0:-1],
        boundary=boundary,
        original_length=x.size,
    )


def dwt_inverse(decomp: DwtDecomposition) -> np.ndarray:
    """Inverse pyramid; exact for the periodic filter bank"""
    if len(decomp.details) != decomp.levels:
        raise WaveletError(
            f"Expected {decomp.levels} detail bands, got {len(decomp.details)}"
        )

    size = np.asarray(decomp.approx).size
    for level in range(decomp.levels, 0, -1):
        detail_size = np.asarray(decomp.details[level - 1]).size
        if detail_size != size:
            raise WaveletError(
                f"Inconsistent coefficient lengths at level {level}: "
                + f"approx {size}, detail {detail_size}"
            )
        size *= 2

    coeffs = [np.asarray(decomp.approx, dtype=float)]
    coeffs += [np.asarray(d, dtype=float) for d in reversed(decomp.details)]
    signal = pywt.waverec(coeffs, decomp.filter.wavelet, mode="periodization")
    return signal[: decomp.original_length]


def pad_to_multiple(signal: np.ndarray, multiple: int) -> np.ndarray:
    """Pad at the end by symmetric reflection up to the next multiple"""
    x = np.asarray(signal, dtype=float)
    missing = (-x.size) % multiple
    if missing == 0:
        return x
    return np.pad(x, (0, missing), mode="symmetric")


def zero_details(decomp: DwtDecomposition, up_to_level: int) -> DwtDecomposition:
    details = [
        np.zeros_like(d) if level <= up_to_level else d
        for level, d in enumerate(decomp.details, start=1)
    ]
    return replace(decomp, details=details)


def lowpass_trend(
    signal: np.ndarray,
    wfilter: WaveletFilter | str = "Db4",
    level: int = 1,
    boundary: Boundary = "periodic",
) -> np.ndarray:
    """Scale-`level` trend: decompose, zero details at levels <= level, invert

    Arbitrary lengths are padded by symmetric reflection to a multiple of 2**level and
    the reconstruction is truncated back to the original length.
    """
    x = np.asarray(signal, dtype=float)
    multiple = 2**level if boundary == "periodic" else 2 ** max(level - 1, 0)
    padded = pad_to_multiple(x, multiple)

    decomp = dwt_forward(padded, wfilter, level, boundary)
    trend = dwt_inverse(zero_details(decomp, level))
    return trend[: x.size]


def coefficient_rows(decomp: DwtDecomposition) -> list[dict]:
    """Flatten a decomposition into (level, band, index, value) rows"""
    rows = []
    for level, detail in enumerate(decomp.details, start=1):
        rows.extend(
            {"level": level, "band": "detail", "index": i, "value": float(v)}
            for i, v in enumerate(detail)
        )
    rows.extend(
        {"level": decomp.levels, "band": "approx", "index": i, "value": float(v)}
        for i, v in enumerate(decomp.approx)
    )
    return rows
