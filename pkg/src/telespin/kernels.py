"""Noise-averaged memory kernels on a uniform time grid.

Ten single-time kernels are cumulative integrals of an elementary bath
integrand times a dichotomous-noise propagator,

    G_{i,1}(t) = pre_i \\int_0^t E_i(u) S0(u) du,
    G_{i,2}(t) = pre_i (i) \\int_0^t E_i'(u) S1(u) du   (i factor on rows 1-2),

reduced to O(N) total work by the substitution u = t - tau.  The two-time
families G_{3,j}, G_{4,j} keep both time arguments,

    G_{3,j}(t1, t2) = V^2 \\int_0^{t2} E_{f+}(t1 - tau) e^{+i e0 (t2 - tau)}
                      S_j(t2 - tau) dtau,

and are evaluated lazily per (t1, t2) by trapezoid on the shared grid.

Prefactors follow the per-trajectory equations: 4 V^2 on the sigma_z-sector
kernels (families 1 and 2), 2 V^2 on the coherence-damping families 5 and 6,
V^2 on the two-time correction families 3 and 4.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field

import numpy as np
from scipy.integrate import cumulative_trapezoid

from .bath import BathSpec, Q2_SUPPORT_CUT, exponent_fn, xi_coefficient
from .noise import NoiseSpec, propagators

#: grid step must resolve the fastest dynamical scale by this factor
GRID_GUARD_FACTOR = 0.02

ELEMENTARY_KINDS = ("cc", "cs", "ss", "sc", "c+", "c-", "f+", "f-")


class GridResolutionError(ValueError):
    """The grid step does not resolve the fastest dynamical scale."""


def resolution_bound(xi: float, epsilon0: float, omega_n: float, nu: float) -> float:
    """Largest admissible grid step: 0.02 min(1/(e0+Omega), 1/sqrt(xi), 1/nu)."""
    scales = []
    if epsilon0 + omega_n > 0:
        scales.append(1.0 / (epsilon0 + omega_n))
    if xi > 0:
        scales.append(1.0 / math.sqrt(xi))
    scales.append(1.0 / nu)
    return GRID_GUARD_FACTOR * min(scales)


def elementary(kind: str, t, exponents, epsilon0: float):
    """Elementary kernel integrand E_kind(t); vectorized over t.

    cc/cs/ss/sc: e^{-Q2} (c|s)(Q1) (c|s)(e0 t); c+/c-: e^{-Q2} cos(Q1)
    e^{+-i e0 t}; f+/f-: e^{-Q2} e^{i(Q1 +- e0 t)}.
    """
    t = np.asarray(t, dtype=float)
    q1, q2 = exponents(t)
    env = np.exp(-q2)
    if kind == "cc":
        return env * np.cos(q1) * np.cos(epsilon0 * t)
    if kind == "cs":
        return env * np.cos(q1) * np.sin(epsilon0 * t)
    if kind == "ss":
        return env * np.sin(q1) * np.sin(epsilon0 * t)
    if kind == "sc":
        return env * np.sin(q1) * np.cos(epsilon0 * t)
    if kind == "c+":
        return env * np.cos(q1) * np.exp(1j * epsilon0 * t)
    if kind == "c-":
        return env * np.cos(q1) * np.exp(-1j * epsilon0 * t)
    if kind == "f+":
        return env * np.exp(1j * (q1 + epsilon0 * t))
    if kind == "f-":
        return env * np.exp(1j * (q1 - epsilon0 * t))
    raise ValueError(f"unknown elementary kind: {kind!r}")


@dataclass(frozen=True)
class KernelTable:
    """Immutable kernel tables on a uniform grid (shareable across workers)."""

    ts: np.ndarray
    dt: float
    epsilon0: float
    v2: float
    nu: float
    omega_n: float
    s1_denominator: str
    g11: np.ndarray
    g12: np.ndarray
    g21: np.ndarray
    g22: np.ndarray
    g51: np.ndarray
    g52: np.ndarray
    g61: np.ndarray
    g62: np.ndarray
    # e^{+-i e0 u} S_j(u) factors of the two-time integrands
    _ep0: np.ndarray = field(repr=False)
    _ep1: np.ndarray = field(repr=False)
    _em0: np.ndarray = field(repr=False)
    _em1: np.ndarray = field(repr=False)
    exponents: object = field(repr=False)
    support_cut: float = field(repr=False)

    @property
    def horizon(self) -> float:
        return float(self.ts[-1])

    @property
    def inhomogeneity_tables(self):
        """The two sigma_z-equation inhomogeneity series (aliases of row 2)."""
        return self.g21, self.g22

    def single_time_at(self, t: float):
        """Linear interpolation of the eight single-time kernels at t."""
        x = t / self.dt
        j = min(max(int(x), 0), len(self.ts) - 2)
        f = x - j
        g = 1.0 - f
        return (
            g * self.g11[j] + f * self.g11[j + 1],
            g * self.g12[j] + f * self.g12[j + 1],
            g * self.g21[j] + f * self.g21[j + 1],
            g * self.g22[j] + f * self.g22[j + 1],
            g * self.g51[j] + f * self.g51[j + 1],
            g * self.g52[j] + f * self.g52[j + 1],
            g * self.g61[j] + f * self.g61[j + 1],
            g * self.g62[j] + f * self.g62[j + 1],
        )

    def two_time_pair(self, t1: float, t2: float):
        """(G31, G32, G41, G42) at (t1, t2); t2 must lie on the grid."""
        if t1 < t2:
            raise ValueError(f"two-time kernels require t1 >= t2 (got {t1} < {t2})")
        k = int(round(t2 / self.dt))
        if abs(k * self.dt - t2) > 1e-9 * max(1.0, t2):
            raise ValueError("t2 must coincide with a grid node")
        if k == 0:
            return 0j, 0j, 0j, 0j
        s = t1 - t2
        if s >= self.support_cut:
            return 0j, 0j, 0j, 0j
        # integrand support: e^{-Q2(s+u)} alive only for s+u < support_cut
        m = min(k, int(math.ceil((self.support_cut - s) / self.dt)))
        us = self.ts[: m + 1]
        q1, q2 = self.exponents(s + us)
        ef = np.exp(-q2 + 1j * q1)
        rot = np.exp(1j * self.epsilon0 * (s + us))
        fp = ef * rot
        fm = ef / rot
        w = np.full(m + 1, self.dt)
        w[0] *= 0.5
        if m == k:
            w[-1] *= 0.5
        # else: truncated interior where the integrand is numerically dead
        g31 = self.v2 * np.dot(w, fp * self._ep0[: m + 1])
        g32 = self.v2 * np.dot(w, fp * self._ep1[: m + 1])
        g41 = self.v2 * np.dot(w, fm * self._em0[: m + 1])
        g42 = self.v2 * np.dot(w, fm * self._em1[: m + 1])
        return g31, g32, g41, g42

    def two_time(self, i: int, j: int, t1: float, t2: float) -> complex:
        """Single two-time kernel G_{i,j}(t1, t2) for i in {3,4}, j in {1,2}."""
        if i not in (3, 4) or j not in (1, 2):
            raise ValueError("two_time expects i in {3,4}, j in {1,2}")
        pair = self.two_time_pair(t1, t2)
        return pair[{(3, 1): 0, (3, 2): 1, (4, 1): 2, (4, 2): 3}[(i, j)]]

    def dump_rows(self):
        """Column mapping used by the --dump-kernels CSV."""
        return {
            "t": self.ts,
            "g11": self.g11,
            "g12": self.g12,
            "g21": self.g21,
            "g22": self.g22,
            "g51": self.g51,
            "g52": self.g52,
            "g61": self.g61,
            "g62": self.g62,
        }


def _support_cut_from(q2, ts):
    """Smallest grid time where Q2 exceeds the dead-kernel threshold."""
    idx = int(np.argmax(q2 >= Q2_SUPPORT_CUT))
    if q2[idx] < Q2_SUPPORT_CUT:
        return float(ts[-1]) + 1.0  # never dead within the horizon
    return float(ts[max(idx, 1)])


def build_single_time(
    ts: np.ndarray,
    bath: BathSpec,
    system,
    noise: NoiseSpec,
    mode: str = "short-time",
    s1_denominator: str = "eta",
    exponents=None,
) -> KernelTable:
    """Tabulate all single-time kernels and the two-time integrand factors.

    ts must be a uniform grid starting at 0 whose step satisfies the
    resolution guard dt <= 0.02 min(1/(e0+Omega), 1/sqrt(xi), 1/nu).
    An explicit ``exponents`` callable overrides the bath mode (used to
    validate structural identities with synthetic exponents).
    """
    ts = np.asarray(ts, dtype=float)
    if ts[0] != 0.0:
        raise ValueError("kernel grid must start at t=0")
    steps = np.diff(ts)
    dt = float(steps[0])
    if not np.allclose(steps, dt, rtol=1e-9, atol=0.0):
        raise ValueError("kernel grid must be uniform")
    bound = resolution_bound(
        xi_coefficient(bath), system.epsilon0, noise.omega_n, noise.nu
    )
    if dt > bound * (1.0 + 1e-9):
        raise GridResolutionError(
            f"grid step {dt:.3e} exceeds resolution bound {bound:.3e}"
        )
    if exponents is None:
        exponents = exponent_fn(bath, mode)

    e0 = system.epsilon0
    v2 = system.v * system.v
    q1, q2 = exponents(ts)
    env = np.exp(-q2)
    kc = env * np.cos(q1)
    ks = env * np.sin(q1)
    cos_e = np.cos(e0 * ts)
    sin_e = np.sin(e0 * ts)
    rot = np.exp(1j * e0 * ts)
    s0c, s1 = propagators(ts, noise, s1_denominator)
    s0 = s0c.real

    def cum(y):
        return cumulative_trapezoid(y, ts, initial=0.0)

    return KernelTable(
        ts=ts,
        dt=dt,
        epsilon0=e0,
        v2=v2,
        nu=noise.nu,
        omega_n=noise.omega_n,
        s1_denominator=s1_denominator,
        g11=4.0 * v2 * cum(kc * cos_e * s0),
        g12=1j * 4.0 * v2 * cum(kc * sin_e * s1),
        g21=4.0 * v2 * cum(ks * sin_e * s0),
        g22=1j * 4.0 * v2 * cum(ks * cos_e * s1),
        g51=2.0 * v2 * cum(kc * np.conj(rot) * s0),
        g52=2.0 * v2 * cum(kc * np.conj(rot) * s1),
        g61=2.0 * v2 * cum(kc * rot * s0),
        g62=2.0 * v2 * cum(kc * rot * s1),
        _ep0=rot * s0,
        _ep1=rot * s1,
        _em0=np.conj(rot) * s0,
        _em1=np.conj(rot) * s1,
        exponents=exponents,
        support_cut=_support_cut_from(q2, ts),
    )
