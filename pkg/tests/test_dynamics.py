import numpy as np
import pytest

from telespin.analysis import fit_exponential
from telespin.bath import BathSpec
from telespin.dynamics import (
    IntegratorError,
    SystemSpec,
    assemble_generator,
    choose_t2,
    equal_time_initials,
    evolve_single_time,
    evolve_two_time,
)
from telespin.kernels import build_single_time
from telespin.noise import NoiseSpec

from test_kernels import make_grid, make_table


def node_near(table, t):
    i = int(round(t / table.dt))
    i += i % 2
    return float(table.ts[i])

HOT = BathSpec(2.0, 1.0, 0.5, 0.02)
COLD = BathSpec(2.0, 1.0, 0.5, 50.0)


class TestEqualTimeInitials:
    def test_excited(self):
        y = equal_time_initials(1.0, 0.0).y
        assert np.allclose(y, [1, 0, 1, 0, 0, 0])

    def test_mixed(self):
        y = equal_time_initials(0.0, 0.0).y
        assert np.allclose(y, [1, 0, 0.5, 0, 0.5, 0])

    def test_linear(self):
        y = equal_time_initials(0.4, -0.1).y
        assert np.allclose(y, [1, 0, 0.7, -0.05, 0.3, 0.05])

    def test_trace_identities(self):
        y = equal_time_initials(0.23, 0.04).y
        assert y[2] + y[4] == pytest.approx(1.0, abs=1e-15)
        assert y[3] + y[5] == pytest.approx(0.0, abs=1e-15)

    def test_unphysical_rejected(self):
        with pytest.raises(ValueError):
            equal_time_initials(1.5, 0.0)


class TestSingleTime:
    def test_no_tunneling_is_static(self):
        system = SystemSpec(1.0, v=0.0)
        table = make_table(HOT, system, NoiseSpec(0.75, 1.0), 4.0)
        g1, g2 = evolve_single_time(table, 0.7)
        assert np.allclose(g1.real, 0.7, atol=1e-9)
        assert np.allclose(g2.real, 0.0, atol=1e-12)

    def test_no_noise_keeps_g2_zero(self):
        system = SystemSpec(1.0, v=1.0)
        table = make_table(HOT, system, NoiseSpec(0.0, 1.0), 6.0)
        g1, g2 = evolve_single_time(table, 1.0)
        assert np.max(np.abs(g2)) < 1e-12

    def test_physicality(self):
        system = SystemSpec(1.0, v=1.0)
        table = make_table(HOT, system, NoiseSpec(0.75, 1.0), 20.0)
        g1, _ = evolve_single_time(table, 1.0)
        assert np.max(np.abs(g1.real)) <= 1.0 + 1e-6


class TestChooseT2:
    def test_constant_series(self):
        ts = np.linspace(0.0, 10.0, 101)
        assert choose_t2(ts, np.ones_like(ts)) == 0.0

    def test_settled_exponential(self):
        ts = np.linspace(0.0, 40.0, 4001)
        g = np.exp(-0.25 * ts)
        t2 = choose_t2(ts, g)
        # |g - g(end)| < 0.01 |g(0) - g(end)| persistently
        scale = abs(g[0] - g[-1])
        i2 = np.searchsorted(ts, t2)
        assert np.all(np.abs(g[i2:] - g[-1]) < 0.01 * scale)
        assert np.any(np.abs(g[: i2 - 1] - g[-1]) >= 0.01 * scale)

    def test_unsettled_capped(self):
        ts = np.linspace(0.0, 10.0, 101)
        g = np.cos(2.0 * ts)  # never settles
        assert choose_t2(ts, g) <= 0.6 * ts[-1] + 1e-12


class TestGenerator:
    def setup_method(self):
        self.system = SystemSpec(1.0, v=1.0)
        self.noise = NoiseSpec(0.75, 1.0)
        self.table = make_table(HOT, self.system, self.noise, 6.0)
        self.t2 = float(self.table.ts[(len(self.table.ts) // 3 // 2) * 2])

    def test_qrt_zeroes_two_time_blocks(self):
        A, _ = assemble_generator(
            self.t2 + 0.5, self.t2, self.table, 0.5, 0.0, "qrt"
        )
        assert np.all(A[0:2, 2:6] == 0)
        assert np.all(A[2:6, 0:2] == 0)

    def test_zero_anchor_makes_modes_coincide(self):
        for t1 in (0.0, 0.7):
            Aq, bq = assemble_generator(t1, 0.0, self.table, 1.0, 0.0, "qrt")
            Ap, bp = assemble_generator(t1, 0.0, self.table, 1.0, 0.0, "qrt+")
            assert np.allclose(Aq, Ap, atol=1e-15)
            assert np.allclose(bq, bp, atol=1e-15)

    def test_no_noise_decouples_alpha_sector(self):
        table = make_table(HOT, self.system, NoiseSpec(0.0, 1.0), 6.0)
        A, _ = assemble_generator(self.t2 + 0.3, self.t2, table, 0.5, 0.0, "qrt+")
        plain, alpha = [0, 2, 4], [1, 3, 5]
        assert np.max(np.abs(A[np.ix_(plain, alpha)])) < 1e-12
        assert np.max(np.abs(A[np.ix_(alpha, plain)])) < 1e-12

    def test_time_order(self):
        with pytest.raises(ValueError):
            assemble_generator(self.t2 - 0.1, self.t2, self.table, 0.5, 0.0, "qrt")


class TestEvolveTwoTime:
    def test_first_sample_is_equal_time_initials(self):
        system = SystemSpec(1.0, v=1.0)
        table = make_table(HOT, system, NoiseSpec(0.75, 1.0), 8.0)
        t2 = node_near(table, 4.0)
        series = evolve_two_time(table, system, mode="both", t2=t2)
        i2 = int(round(t2 / table.dt))
        expected = equal_time_initials(series.g1[i2], series.g2[i2]).y
        assert np.allclose(series.qrt[0], expected, atol=1e-14)
        assert np.allclose(series.qrt_plus[0], expected, atol=1e-14)
        assert series.qrt[0][2] + series.qrt[0][4] == pytest.approx(1.0, abs=1e-12)
        assert series.qrt[0][3] + series.qrt[0][5] == pytest.approx(0.0, abs=1e-12)

    def test_no_tunneling_zz_constant(self):
        system = SystemSpec(1.0, v=0.0)
        table = make_table(HOT, system, NoiseSpec(0.75, 1.0), 6.0)
        series = evolve_two_time(table, system, mode="qrt", t2=node_near(table, 2.0))
        # with V = 0 every kernel vanishes, so the zz row has no dynamics
        assert np.allclose(np.abs(series.qrt[:, 0]), 1.0, atol=1e-8)

    def test_no_tunneling_no_noise_coherence_modulus(self):
        system = SystemSpec(1.0, v=0.0)
        table = make_table(HOT, system, NoiseSpec(0.0, 1.0), 6.0)
        series = evolve_two_time(table, system, mode="qrt", t2=node_near(table, 2.0))
        assert np.allclose(np.abs(series.qrt[:, 2]), np.abs(series.qrt[0, 2]),
                           atol=1e-8)

    def test_zero_anchor_modes_identical(self):
        system = SystemSpec(1.0, v=1.0)
        table = make_table(HOT, system, NoiseSpec(0.75, 1.0), 6.0)
        series = evolve_two_time(table, system, mode="both", t2=0.0)
        assert np.max(np.abs(series.qrt - series.qrt_plus)) < 1e-10

    def test_no_noise_alpha_components_stay_zero(self):
        system = SystemSpec(1.0, v=1.0)
        table = make_table(HOT, system, NoiseSpec(0.0, 1.0), 8.0)
        series = evolve_two_time(table, system, mode="both")
        for y in (series.qrt, series.qrt_plus):
            assert np.max(np.abs(y[:, [1, 3, 5]])) < 1e-10

    def test_tolerance_halving(self):
        system = SystemSpec(1.0, v=1.0)
        table = make_table(HOT, system, NoiseSpec(0.75, 1.0), 8.0)
        t2 = node_near(table, 2.0)
        a = evolve_two_time(table, system, mode="qrt+", t2=t2)
        b = evolve_two_time(table, system, mode="qrt+", t2=t2,
                            rtol=5e-9, atol=5e-11)
        assert np.max(np.abs(a.qrt_plus[:, 0].real - b.qrt_plus[:, 0].real)) < 1e-5

    def test_exponential_shape_low_temperature(self):
        # slow-noise unbiased cold regime decays near-exponentially
        system = SystemSpec(0.0, v=1.0)
        noise = NoiseSpec(0.75, 0.01)
        table = make_table(COLD, system, noise, 40.0)
        series = evolve_two_time(table, system, mode="qrt+")
        y = series.qrt_plus[:, 0].real
        fit = fit_exponential(series.t1, y)
        rng = np.max(y) - np.min(y)
        assert fit.rms_residual < 0.02 * rng

    def test_mutated_generator_detected(self):
        system = SystemSpec(1.0, v=1.0)
        table = make_table(HOT, system, NoiseSpec(0.75, 1.0), 8.0)

        def flip_decay_sign(A, b):
            A = A.copy()
            A[0, 0] = -A[0, 0]  # growth instead of decay
            return A, b

        with pytest.raises(IntegratorError):
            evolve_two_time(table, system, mode="qrt", t2=node_near(table, 2.0),
                            mutate=flip_decay_sign)
