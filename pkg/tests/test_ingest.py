import numpy as np
import pandas as pd
import pytest

from ingest import (
    BundleLoadError,
    DegenerateSeriesError,
    DuplicateIdError,
    NonPositivePriceError,
    SeriesBundle,
    SeriesEntry,
    SeriesTooShortError,
    load_bundle,
    save_bundle,
    to_profile,
    to_returns,
)


class TestLoadBundle:
    def test_wide_with_dates(self, price_csv):
        bundle = load_bundle(price_csv)
        assert bundle.ids == ["AAA", "BBB", "CCC"]
        assert bundle.mode == "price"
        assert all(len(entry) == 300 for entry in bundle)
        assert len(bundle.metadata["dates"]["AAA"]) == 300
        assert bundle.metadata["format"] == "wide_csv"

    def test_missing_cells_are_skipped_per_series(self, tmp_path, rng):
        values = 1.0 + rng.random((100, 2))
        df = pd.DataFrame(values, columns=["x", "y"])
        df.loc[10, "x"] = np.nan
        path = tmp_path / "gaps.csv"
        df.to_csv(path, index=False)

        bundle = load_bundle(path)
        assert len(bundle.get("x")) == 99
        assert len(bundle.get("y")) == 100

    def test_long_format_keeps_row_order(self, tmp_path, rng):
        rows = [("b", v) for v in 1.0 + rng.random(80)] + [("a", v) for v in 1.0 + rng.random(70)]
        path = tmp_path / "long.csv"
        pd.DataFrame(rows, columns=["id", "value"]).to_csv(path, index=False)

        bundle = load_bundle(path, format="long_csv")
        assert bundle.ids == ["b", "a"]
        assert len(bundle.get("a")) == 70

    def test_raw_signal_mode(self, tmp_path, rng):
        path = tmp_path / "raw.csv"
        pd.DataFrame({"w": rng.standard_normal(128)}).to_csv(path, index=False)

        bundle = load_bundle(path, format="raw_signal")
        assert bundle.mode == "raw"
        assert bundle.get("w").mode == "raw"

    def test_duplicate_ids(self, tmp_path):
        path = tmp_path / "dup.csv"
        path.write_text("a,a\n" + "1,2\n" * 100)
        with pytest.raises(DuplicateIdError):
            load_bundle(path)

    def test_too_short(self, tmp_path):
        path = tmp_path / "short.csv"
        pd.DataFrame({"a": np.arange(1.0, 64.0)}).to_csv(path, index=False)
        with pytest.raises(SeriesTooShortError):
            load_bundle(path)

    def test_non_positive_price(self, tmp_path):
        values = np.linspace(1.0, 2.0, 100)
        values[50] = 0.0
        path = tmp_path / "zero.csv"
        pd.DataFrame({"a": values}).to_csv(path, index=False)
        with pytest.raises(NonPositivePriceError):
            load_bundle(path)

    def test_missing_file(self, tmp_path):
        with pytest.raises(BundleLoadError):
            load_bundle(tmp_path / "nope.csv")

    def test_duplicate_entries_in_bundle(self):
        entry = SeriesEntry(id="a", values=np.ones(64))
        with pytest.raises(DuplicateIdError):
            SeriesBundle(entries=(entry, entry))

    def test_save_then_load_keeps_values(self, tmp_path, rng):
        entries = (
            SeriesEntry(id="p", values=rng.standard_normal(100), mode="raw"),
            SeriesEntry(id="q", values=rng.standard_normal(80), mode="raw"),
        )
        path = save_bundle(SeriesBundle(entries=entries, mode="raw"), tmp_path / "b.csv")

        loaded = load_bundle(path, format="raw_signal")
        assert loaded.ids == ["p", "q"]
        np.testing.assert_array_equal(loaded.get("p").values, entries[0].values)
        np.testing.assert_array_equal(loaded.get("q").values, entries[1].values)

    def test_save_load_is_byte_stable(self, tmp_path, rng):
        entries = tuple(
            SeriesEntry(id=f"s{i}", values=rng.standard_normal(1000), mode="raw") for i in range(3)
        )
        first = save_bundle(SeriesBundle(entries=entries, mode="raw"), tmp_path / "first.csv")
        again = save_bundle(load_bundle(first, format="raw_signal"), tmp_path / "again.csv")
        assert first.read_bytes() == again.read_bytes()

    def test_load_is_deterministic(self, price_csv, tmp_path):
        first = save_bundle(load_bundle(price_csv), tmp_path / "first.csv")
        second = save_bundle(load_bundle(price_csv), tmp_path / "second.csv")
        assert first.read_bytes() == second.read_bytes()

    def test_hash_header(self, tmp_path, rng):
        entry = SeriesEntry(id="p", values=rng.standard_normal(64), mode="raw")
        path = save_bundle(SeriesBundle(entries=(entry,), mode="raw"), tmp_path / "h.csv", "f00d")
        assert path.read_text().startswith("# config_hash: f00d\np\n")

        loaded = load_bundle(path, format="raw_signal")
        assert loaded.metadata["config_hash"] == "f00d"
        np.testing.assert_array_equal(loaded.get("p").values, entry.values)

    def test_non_numeric_cells_are_skipped(self, tmp_path):
        path = tmp_path / "junk.csv"
        path.write_text("a\n" + "".join(f"{1.0 + i / 100}\n" for i in range(70)) + "n/a\n\n")
        assert len(load_bundle(path).get("a")) == 70


class TestReturnsAndProfile:
    def test_price_returns_are_standardized(self, price_csv):
        returns = to_returns(load_bundle(price_csv).get("AAA"))
        assert returns.returns.size == 299
        assert np.mean(returns.returns) == pytest.approx(0.0, abs=1e-12)
        assert np.std(returns.returns) == pytest.approx(1.0, abs=1e-12)
        assert returns.volatility > 0

    def test_raw_returns_keep_length(self, rng):
        entry = SeriesEntry(id="r", values=rng.standard_normal(200), mode="raw")
        assert to_returns(entry).returns.size == 200

    def test_constant_series_is_degenerate(self):
        with pytest.raises(DegenerateSeriesError):
            to_returns(SeriesEntry(id="c", values=np.full(100, 5.0), mode="raw"))
        with pytest.raises(DegenerateSeriesError):
            to_returns(SeriesEntry(id="c", values=np.full(100, 5.0), mode="price"))

    def test_two_point_example(self):
        returns = to_returns(SeriesEntry(id="e", values=[1.0, np.e, np.e]))
        np.testing.assert_allclose(returns.returns, [1.0, -1.0], atol=1e-12)
        assert returns.raw_mean == pytest.approx(0.5)
        assert returns.volatility == pytest.approx(0.5)
        np.testing.assert_allclose(to_profile(returns).values, [1.0, 0.0], atol=1e-12)

    def test_scale_invariance(self, price_csv):
        entry = load_bundle(price_csv).get("BBB")
        base = to_returns(entry)
        for c in (1e-6, 0.37, 250.0):
            scaled = to_returns(SeriesEntry(id="BBB", values=c * entry.values))
            np.testing.assert_allclose(scaled.returns, base.returns, atol=1e-9)

    def test_small_amplitude_raw_signal_is_not_degenerate(self, rng):
        values = 1e-13 * rng.standard_normal(1024)
        returns = to_returns(SeriesEntry(id="tiny", values=values, mode="raw"))
        assert np.std(returns.returns) == pytest.approx(1.0, abs=1e-9)
        assert returns.volatility == pytest.approx(np.std(values))

    def test_profile_is_cumulative_sum(self, rng):
        returns = to_returns(SeriesEntry(id="r", values=rng.standard_normal(256), mode="raw"))
        profile = to_profile(returns)
        np.testing.assert_allclose(profile.values, np.cumsum(returns.returns))
        assert profile.values[-1] == pytest.approx(0.0, abs=1e-9)

    def test_arrays_are_read_only(self, rng):
        entry = SeriesEntry(id="r", values=rng.standard_normal(64), mode="raw")
        with pytest.raises(ValueError):
            entry.values[0] = 1.0
