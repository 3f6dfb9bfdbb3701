import numpy as np
import pytest
from scipy.integrate import quad

from telespin.bath import BathSpec, exponent_fn, reorganization_energy, xi_coefficient
from telespin.dynamics import SystemSpec
from telespin.kernels import (
    GridResolutionError,
    build_single_time,
    elementary,
    resolution_bound,
)
from telespin.noise import NoiseSpec, propagators

HOT = BathSpec(2.0, 1.0, 0.5, 0.02)
WARM = BathSpec(2.0, 1.0, 0.5, 1.0)


def make_grid(bath, system, noise, horizon, refine=1.0):
    dt = resolution_bound(
        xi_coefficient(bath), system.epsilon0, noise.omega_n, noise.nu
    ) / refine
    n = int(np.ceil(horizon / dt))
    n += n % 2
    return np.linspace(0.0, horizon, n + 1)


def make_table(bath, system, noise, horizon, refine=1.0, **kw):
    ts = make_grid(bath, system, noise, horizon, refine)
    return build_single_time(ts, bath, system, noise, **kw)


class TestElementary:
    def test_f_plus_at_zero(self):
        f = exponent_fn(WARM)
        assert elementary("f+", 0.0, f, 1.0) == pytest.approx(1.0, abs=1e-15)
        assert elementary("cc", 0.0, f, 1.0) == pytest.approx(1.0, abs=1e-15)
        assert elementary("ss", 0.0, f, 1.0) == pytest.approx(0.0, abs=1e-15)

    def test_ss_vanishes_without_bias(self):
        f = exponent_fn(WARM)
        ts = np.linspace(0.0, 5.0, 64)
        assert np.allclose(elementary("ss", ts, f, 0.0), 0.0, atol=1e-15)

    def test_cc_value_from_frozen_xi(self):
        xi = xi_coefficient(HOT)
        f = exponent_fn(HOT)
        expected = np.exp(-xi) * np.cos(4.0) * np.cos(1.0)
        assert elementary("cc", 1.0, f, 1.0) == pytest.approx(expected, rel=1e-12)

    def test_unknown_kind(self):
        with pytest.raises(ValueError):
            elementary("xx", 0.0, exponent_fn(WARM), 1.0)


class TestSingleTimeKernels:
    def test_vanish_at_zero(self):
        table = make_table(WARM, SystemSpec(1.0), NoiseSpec(0.75, 1.0), 4.0)
        for name in ("g11", "g12", "g21", "g22", "g51", "g52", "g61", "g62"):
            assert getattr(table, name)[0] == 0.0

    def test_no_noise_kills_s1_kernels(self):
        table = make_table(WARM, SystemSpec(1.0), NoiseSpec(0.0, 1.0), 6.0)
        for name in ("g12", "g22", "g52", "g62"):
            assert np.max(np.abs(getattr(table, name))) < 1e-12

    def test_refinement_oracle(self):
        # A2 parameter point: 10x finer trapezoid agrees to 1e-6 relative
        system = SystemSpec(1.0, v=1.0)
        noise = NoiseSpec(0.75, 1.0)
        coarse = make_table(HOT, system, noise, 2.0)
        fine = make_table(HOT, system, noise, 2.0, refine=10.0)
        val_c = coarse.g11[-1]
        val_f = fine.g11[-1]
        assert val_c == pytest.approx(val_f, rel=1e-6)

    def test_grid_doubling_convergence(self):
        system = SystemSpec(1.0, v=1.0)
        noise = NoiseSpec(0.75, 1.0)
        base = make_table(HOT, system, noise, 2.0)
        double = make_table(HOT, system, noise, 2.0, refine=2.0)
        for name in ("g11", "g12", "g21", "g22", "g51", "g52", "g61", "g62"):
            a = getattr(base, name)[-1]
            b = getattr(double, name)[-1]
            scale = max(abs(b), 1e-6)
            assert abs(a - b) / scale < 1e-4

    def test_boundedness(self):
        table = make_table(WARM, SystemSpec(1.0, v=1.0), NoiseSpec(0.75, 1.0), 6.0)
        q1, q2 = table.exponents(table.ts)
        from scipy.integrate import cumulative_trapezoid

        envelope = cumulative_trapezoid(np.exp(-q2), table.ts, initial=0.0)
        for name, pre in (("g11", 4.0), ("g21", 4.0), ("g51", 2.0), ("g61", 2.0)):
            assert np.all(np.abs(getattr(table, name)) <= pre * envelope + 1e-12)

    def test_resolution_guard(self):
        system = SystemSpec(1.0)
        noise = NoiseSpec(0.75, 1.0)
        ts = np.linspace(0.0, 4.0, 101)  # far too coarse for xi = 200
        with pytest.raises(GridResolutionError):
            build_single_time(ts, HOT, system, noise)


class TestTwoTimeKernels:
    def setup_method(self):
        self.system = SystemSpec(1.0, v=1.0)
        self.noise = NoiseSpec(0.75, 1.0)
        self.table = make_table(WARM, self.system, self.noise, 6.0)

    def test_zero_anchor(self):
        assert self.table.two_time(3, 1, 1.0, 0.0) == 0j

    def test_no_noise_kills_s1_families(self):
        table = make_table(WARM, self.system, NoiseSpec(0.0, 1.0), 6.0)
        t2 = table.ts[len(table.ts) // 2]
        for t1 in (t2, t2 + 0.3, t2 + 1.1):
            assert abs(table.two_time(3, 2, t1, t2)) < 1e-14
            assert abs(table.two_time(4, 2, t1, t2)) < 1e-14

    def test_against_adaptive_quadrature(self):
        # sharp tolerance requires a grid well below the resolution guard
        table = make_table(WARM, self.system, self.noise, 6.0, refine=20.0)
        i2 = (len(table.ts) // 2 // 2) * 2
        t2 = float(table.ts[i2])
        e0 = self.system.epsilon0
        exps = table.exponents

        def integrand(tau, t1, j, part):
            q1, q2 = exps(np.array([t1 - tau]))
            ef = np.exp(-q2[0] + 1j * (q1[0] + e0 * (t1 - tau)))
            s0, s1 = propagators(t2 - tau, self.noise)
            s = s0 if j == 1 else s1
            val = ef * np.exp(1j * e0 * (t2 - tau)) * s
            return val.real if part == "re" else val.imag

        # 1e-6 agreement is measured against the kernel family scale
        scale = float(np.max(np.abs(table.g11)))
        for t1 in (t2, t2 + 0.37):
            for j in (1, 2):
                re, _ = quad(integrand, 0.0, t2, args=(t1, j, "re"), limit=300)
                im, _ = quad(integrand, 0.0, t2, args=(t1, j, "im"), limit=300)
                got = table.two_time(3, j, t1, t2)
                assert got.real == pytest.approx(re, rel=2e-6, abs=1e-6 * scale)
                assert got.imag == pytest.approx(im, rel=2e-6, abs=1e-6 * scale)

    def test_conjugation_with_real_elementary_pair(self):
        # E_f- = conj(E_f+) requires a vanishing Q1 phase; inject synthetic
        # exponents with Q1 = 0 and check G41 = conj(G31) exactly (S0 real).
        xi = xi_coefficient(WARM)

        def synthetic(ts):
            ts = np.asarray(ts, dtype=float)
            return np.zeros_like(ts), xi * ts * ts

        ts = make_grid(WARM, self.system, self.noise, 6.0)
        table = build_single_time(
            ts, WARM, self.system, self.noise, exponents=synthetic
        )
        i2 = (len(ts) // 3 // 2) * 2
        t2 = float(ts[i2])
        for t1 in (t2, t2 + 0.5):
            g31 = table.two_time(3, 1, t1, t2)
            g41 = table.two_time(4, 1, t1, t2)
            assert g41 == pytest.approx(np.conj(g31), abs=1e-12)

    def test_time_order_enforced(self):
        with pytest.raises(ValueError):
            self.table.two_time(3, 1, 1.0, 2.0)

    def test_index_domain(self):
        with pytest.raises(ValueError):
            self.table.two_time(5, 1, 2.0, 1.0)


def test_resolution_bound_scales():
    assert resolution_bound(100.0, 1.0, 1.0, 1.0) == pytest.approx(0.002)
    assert resolution_bound(0.0, 0.0, 0.0, 2.0) == pytest.approx(0.01)
