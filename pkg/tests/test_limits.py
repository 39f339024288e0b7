import math
import os
import stat

import mpmath
import numpy as np
import pytest
from hypothesis import given, strategies as st

from zchange import limits
from zchange.limits import (
    DimensionMismatch,
    bridge_paths,
    bridge_suprema,
    kolmogorov_cdf,
    kolmogorov_quantile,
    kolmogorov_sf,
    p_value,
    simulate_sup_bridge,
)
from zchange.numerics import RngStream

mpmath.mp.dps = 40


def series_oracle(x):
    """Alternating series at 40 digits with a fixed 200 terms."""
    x = mpmath.mpf(x)
    return 1 - 2 * mpmath.nsum(lambda k: (-1) ** (k - 1) * mpmath.exp(-2 * k * k * x * x), [1, 200])


def oracle_quantile(q):
    lo, hi = mpmath.mpf("0.5"), mpmath.mpf(3)
    for _ in range(80):
        mid = (lo + hi) / 2
        if series_oracle(mid) < q:
            lo = mid
        else:
            hi = mid
    return float(lo)


class TestKolmogorov:
    def test_zero(self):
        assert kolmogorov_cdf(0.0) == 0.0
        assert kolmogorov_cdf(-1.0) == 0.0
        assert kolmogorov_sf(0.0) == 1.0

    def test_half(self):
        assert kolmogorov_cdf(0.5) == pytest.approx(0.0361, abs=5e-4)

    def test_95_point(self):
        assert kolmogorov_cdf(1.3581) == pytest.approx(0.95, abs=5e-4)
        assert kolmogorov_quantile(0.95) == pytest.approx(oracle_quantile(0.95), abs=1e-10)

    @pytest.mark.parametrize("x", np.linspace(0.2, 3.0, 29))
    def test_against_high_precision(self, x):
        assert kolmogorov_cdf(x) == pytest.approx(float(series_oracle(x)), abs=1e-12)

    def test_sf_tail_accuracy(self):
        for x in (2.0, 3.0, 4.0):
            assert kolmogorov_sf(x) == pytest.approx(float(1 - series_oracle(x)), rel=1e-10)

    def test_monotone_and_limits(self):
        grid = np.linspace(0.0, 3.0, 10_000)
        vals = np.array([kolmogorov_cdf(x) for x in grid])
        assert np.all(np.diff(vals) >= 0)
        assert vals[0] == 0.0
        assert vals[-1] > 1 - 1e-6

    def test_matches_scipy(self):
        from scipy.stats import kstwobign

        xs = np.linspace(0.1, 2.5, 25)
        np.testing.assert_allclose([kolmogorov_cdf(x) for x in xs], kstwobign.cdf(xs), atol=1e-12)


class TestBridgeKernel:
    def test_pinning_and_nonnegative(self):
        inc = RngStream(1).generator.standard_normal((20, 1024, 1))
        paths = bridge_paths(inc)
        assert np.all(paths[:, 0] == 0.0)
        # the kernel's own bridge is pinned exactly: its final squared norm is 0
        raw = bridge_suprema(inc, correct=False)
        assert np.all(raw >= 0)
        np.testing.assert_allclose(raw, np.abs(paths[:, :, 0]).max(axis=1), rtol=1e-12)

    def test_norm_in_higher_dimension(self):
        inc = RngStream(3).generator.standard_normal((5, 1024, 3))
        paths = bridge_paths(inc)
        np.testing.assert_allclose(
            bridge_suprema(inc, correct=False), np.linalg.norm(paths, axis=2).max(axis=1), rtol=1e-12
        )

    def test_correction_shift(self):
        inc = RngStream(4).generator.standard_normal((3, 2048, 1))
        diff = bridge_suprema(inc) - bridge_suprema(inc, correct=False)
        np.testing.assert_allclose(diff, limits.BETA / math.sqrt(2048))


class TestTables:
    def test_validation(self):
        with pytest.raises(ValueError):
            simulate_sup_bridge(1, grid_n=512, reps=1000)
        with pytest.raises(ValueError):
            simulate_sup_bridge(1, grid_n=1024, reps=999)
        with pytest.raises(ValueError):
            simulate_sup_bridge(0, grid_n=1024, reps=1000)

    def test_deterministic_and_sorted(self):
        a = simulate_sup_bridge(1, 1024, 1000, seed=5)
        b = simulate_sup_bridge(1, 1024, 1000, seed=5)
        np.testing.assert_array_equal(a.ecdf, b.ecdf)
        assert np.all(np.diff(a.ecdf) >= 0)
        assert np.all(a.ecdf >= 0)
        qs = list(a.quantiles.values())
        assert qs == sorted(qs)

    def test_dimension_dominance(self):
        t1 = simulate_sup_bridge(1, 1024, 2000, seed=6)
        t3 = simulate_sup_bridge(3, 1024, 2000, seed=6)
        for lv in (0.1, 0.25, 0.5, 0.75, 0.9, 0.95, 0.99):
            assert t3.quantile(lv) > t1.quantile(lv)

    def test_p_value_conventions(self, small_table_2d):
        t = small_table_2d
        assert p_value(0.0, 1) == 1.0
        assert p_value(0.0, 2, t) == 1.0
        assert p_value(1.3581, 1) == pytest.approx(0.05, abs=5e-4)
        assert p_value(t.ecdf[-1] + 1, 2, t) == 1 / (t.reps + 1)

    def test_dimension_mismatch(self, small_table_2d):
        with pytest.raises(DimensionMismatch):
            p_value(1.0, 3, small_table_2d)
        with pytest.raises(DimensionMismatch):
            p_value(1.0, 2)

    @given(st.floats(0, 4), st.floats(0, 4))
    def test_p_value_monotone(self, a, b):
        lo, hi = sorted((a, b))
        t = simulate_sup_bridge(2, 1024, 1000, seed=7)
        assert p_value(hi, 1) <= p_value(lo, 1)
        assert p_value(hi, 2, t) <= p_value(lo, 2, t)
        assert 0 < p_value(hi, 2, t) <= 1

    @pytest.mark.parametrize("alpha", [0.10, 0.05, 0.01])
    def test_round_trip(self, small_table_2d, alpha):
        t = small_table_2d
        p = t.p_value(t.critical_value(alpha))
        assert abs(p - alpha) <= 2 / math.sqrt(t.reps)

    @pytest.mark.slow
    def test_grid_doubling(self):
        # common random numbers: the coarse walk sums adjacent fine increments
        reps, g = 20_000, 2**14
        fine, coarse = [], []
        for b in range(reps // 250):
            inc = RngStream(11, b).generator.standard_normal((250, 2 * g, 1))
            fine.append(bridge_suprema(inc))
            coarse.append(bridge_suprema(inc.reshape(250, g, 2, 1).sum(axis=2) / math.sqrt(2)))
        q_fine = np.quantile(np.concatenate(fine), 0.95)
        q_coarse = np.quantile(np.concatenate(coarse), 0.95)
        assert abs(q_fine - q_coarse) < 0.005


class TestCache:
    def test_round_trip(self, tmp_path):
        t = simulate_sup_bridge(2, 1024, 1000, seed=8)
        path = tmp_path / "t.txt"
        limits.write_table(t, path)
        lines = path.read_text().splitlines()
        assert lines[0] == "2,1024,1000,8"
        assert len(lines) == 1001
        back = limits.read_table(path)
        np.testing.assert_array_equal(back.ecdf, t.ecdf)

    def test_load_or_simulate(self, tmp_path):
        a, cached_a = limits.load_or_simulate(1, 1024, 1000, 9, directory=tmp_path)
        b, cached_b = limits.load_or_simulate(1, 1024, 1000, 9, directory=tmp_path)
        assert (cached_a, cached_b) == (False, True)
        np.testing.assert_array_equal(a.ecdf, b.ecdf)

    def test_env_override(self, tmp_path, monkeypatch):
        monkeypatch.setenv(limits.CACHE_ENV, str(tmp_path))
        assert limits.cache_path(1, 1024, 1000, 1).parent == tmp_path

    @pytest.mark.skipif(os.geteuid() == 0, reason="root ignores directory permissions")
    def test_unwritable_directory_warns(self, tmp_path):
        locked = tmp_path / "locked"
        locked.mkdir()
        locked.chmod(stat.S_IRUSR | stat.S_IXUSR)
        with pytest.warns(RuntimeWarning):
            _, cached = limits.load_or_simulate(1, 1024, 1000, 10, directory=locked / "sub")
        assert not cached

    def test_unwritable_file_path_warns(self, tmp_path):
        blocker = tmp_path / "file"
        blocker.write_text("not a directory")
        with pytest.warns(RuntimeWarning):
            table, cached = limits.load_or_simulate(1, 1024, 1000, 10, directory=blocker)
        assert not cached and table.reps == 1000
