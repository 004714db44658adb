import numpy as np
import pandas as pd
import pytest

from mfdfa import ScalingSpectrum
from singularity_metric import matrix_from_widths


def make_spectrum(series_id: str, gamma: float, hurst: float = 0.5) -> ScalingSpectrum:
    """Minimal spectrum carrying only what the network layer reads"""
    return ScalingSpectrum(
        id=series_id,
        orders=(2.0,),
        h={2.0: hurst},
        tau={2.0: 2.0 * hurst - 1.0},
        beta={2.0: hurst},
        f_beta=[(hurst, 1.0)],
        gamma=gamma,
        hurst=hurst,
        fit_r2={},
    )


@pytest.fixture
def rng():
    return np.random.default_rng(12345)


@pytest.fixture
def gamma_example():
    return [1.0, 3.0, 1.5]


@pytest.fixture
def example_matrix(gamma_example):
    return matrix_from_widths(["s0", "s1", "s2"], gamma_example)


@pytest.fixture
def spectrum_factory():
    return make_spectrum


@pytest.fixture
def price_csv(tmp_path, rng):
    """Wide CSV with a date column and three positive price series of length 300"""
    n = 300
    df = pd.DataFrame(
        {
            "date": pd.date_range("2000-01-03", periods=n, freq="D").strftime("%Y-%m-%d"),
            "AAA": 100.0 * np.exp(np.cumsum(0.01 * rng.standard_normal(n))),
            "BBB": 50.0 * np.exp(np.cumsum(0.02 * rng.standard_normal(n))),
            "CCC": 10.0 * np.exp(np.cumsum(0.015 * rng.standard_normal(n))),
        }
    )
    path = tmp_path / "prices.csv"
    df.to_csv(path, index=False)
    return path
