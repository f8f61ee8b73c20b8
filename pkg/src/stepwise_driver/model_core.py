"""Closed-form steady-state energy model of a stepwise adiabatic driver.

The driver charges a load capacitor through ``N - 1`` tank capacitors and
the supply rail, one switch closure per step, then discharges it through the
same tanks in reverse order and finally to ground.  In periodic steady state
each tank returns on the falling edge exactly the charge it gave up on the
rising edge.  Writing that balance for every tank gives a small dense linear
system in the average tank voltages; the supply energy per cycle then
follows from the load voltage just before the last rising step.

Typical use::

    cfg = DriverConfig(n_steps=4, c_load=1e-9, v_dd=1.0, c_tank=4e-9,
                       r_sr=10.0, r_sf=10.0, t_sr=50e-9, t_sf=50e-9)
    report = total_energy(cfg, SwitchQuality(rho_r=1e-9, rho_f=1e-9))
"""

from __future__ import annotations

import math
from dataclasses import dataclass
from typing import Optional, Sequence

import numpy as np

from .errors import InvalidConfig, SingularSystem

# 2x above this would overflow expm1 in double precision; coth(x) == 1.0 to
# machine precision well before that.
_COTH_SATURATION = 350.0

_PIVOT_RTOL = 1e-14


def coth(x: float) -> float:
    """Hyperbolic cotangent for ``x > 0``, stable at both small and large ``x``."""
    if x <= 0.0:
        raise ValueError(f"coth argument must be positive, got {x!r}")
    if x > _COTH_SATURATION:
        return 1.0
    return 1.0 + 2.0 / math.expm1(2.0 * x)


@dataclass(frozen=True)
class DriverConfig:
    """Physical parameters of one stepwise driver (SI units).

    ``c_tank``, ``r_sr``, ``r_sf``, ``t_sr`` and ``t_sf`` are only consulted
    when ``n_steps >= 2``; a single-step driver has no tanks and may leave
    them as ``None``.
    """

    n_steps: int
    c_load: float
    v_dd: float
    c_tank: Optional[float] = None
    r_sr: Optional[float] = None
    r_sf: Optional[float] = None
    t_sr: Optional[float] = None
    t_sf: Optional[float] = None

    def __post_init__(self):
        if isinstance(self.n_steps, bool) or int(self.n_steps) != self.n_steps:
            raise InvalidConfig(f"n_steps must be an integer, got {self.n_steps!r}")
        if self.n_steps < 1:
            raise InvalidConfig(f"n_steps must be >= 1, got {self.n_steps}")
        for name in ("c_load", "v_dd"):
            _require_positive(name, getattr(self, name))
        for name in ("c_tank", "r_sr", "r_sf", "t_sr", "t_sf"):
            value = getattr(self, name)
            if value is None:
                if self.n_steps >= 2:
                    raise InvalidConfig(f"{name} is required when n_steps >= 2")
                continue
            _require_positive(name, value)

    @property
    def conventional_energy(self) -> float:
        """Per-cycle energy of a direct (single-step) driver, ``C_load * V_dd**2``."""
        return self.c_load * self.v_dd**2


def _require_positive(name, value):
    if isinstance(value, bool) or not isinstance(value, (int, float)):
        raise InvalidConfig(f"{name} must be a number, got {value!r}")
    if not math.isfinite(value) or value <= 0:
        raise InvalidConfig(f"{name} must be finite and > 0, got {value!r}")


@dataclass(frozen=True)
class StepCoefficients:
    c_series: float
    tau_r: float
    tau_f: float
    r: float
    f: float


@dataclass(frozen=True)
class SwitchQuality:
    """Energy x resistance products of the rising and falling switches.

    A switch of on-resistance ``R`` costs ``rho / R`` joules to toggle once.
    """

    rho_r: float = 0.0
    rho_f: float = 0.0

    def __post_init__(self):
        for name in ("rho_r", "rho_f"):
            value = getattr(self, name)
            if not math.isfinite(value) or value < 0:
                raise InvalidConfig(f"{name} must be finite and >= 0, got {value!r}")


@dataclass(frozen=True)
class LinearSystem:
    a: np.ndarray
    b: np.ndarray

    @property
    def size(self) -> int:
        return len(self.b)


@dataclass(frozen=True)
class SteadyStateSolution:
    """Solved periodic steady state.

    Tank sequences are indexed ``0..N-2`` for tanks ``1..N-1``; load
    trajectories are indexed by step ``0..N``.
    """

    v_tank_avg: np.ndarray
    v_load_rising: np.ndarray
    v_load_falling: np.ndarray
    v_tank_after_rise: np.ndarray
    v_tank_after_fall: np.ndarray

    @property
    def ripple(self) -> np.ndarray:
        return self.v_tank_after_fall - self.v_tank_after_rise


@dataclass(frozen=True)
class EnergyReport:
    e_load_driver: float
    e_switch_driver: float
    e_total: float
    normalized: float


def settling_fraction(c_series: float, c_load: float, on_time: float, tau: float) -> float:
    """Fraction of the gap to a tank's average voltage the load covers per step."""
    return 2.0 * c_series / (c_series + c_load * coth(on_time / (2.0 * tau)))


def derive_coefficients(config: DriverConfig) -> StepCoefficients:
    if config.n_steps < 2:
        raise InvalidConfig("step coefficients are only defined for n_steps >= 2")
    c_series = config.c_tank * config.c_load / (config.c_tank + config.c_load)
    tau_r = c_series * config.r_sr
    tau_f = c_series * config.r_sf
    r = settling_fraction(c_series, config.c_load, config.t_sr, tau_r)
    f = settling_fraction(c_series, config.c_load, config.t_sf, tau_f)
    return StepCoefficients(c_series=c_series, tau_r=tau_r, tau_f=tau_f, r=r, f=f)


def build_system(coeffs: StepCoefficients, n_steps: int, v_dd: float) -> LinearSystem:
    """Assemble the charge-balance system ``A @ V = B`` for the tank averages.

    ``A`` is a Hankel matrix: ``r + f`` on the anti-diagonal ``i + j = N - 2``,
    rising-edge terms ``-r**2 (1-r)**p`` above it and falling-edge terms
    ``-f**2 (1-f)**q`` below it.
    """
    if n_steps < 2:
        raise InvalidConfig("the tank system needs n_steps >= 2")
    r, f = coeffs.r, coeffs.f
    m = n_steps - 1
    a = np.empty((m, m))
    b = np.empty(m)
    for i in range(m):
        b[i] = f * (1.0 - f) ** i * v_dd
        for j in range(m):
            s = i + j
            if s == n_steps - 2:
                a[i, j] = r + f
            elif s < n_steps - 2:
                a[i, j] = -(r**2) * (1.0 - r) ** (n_steps - 3 - s)
            else:
                a[i, j] = -(f**2) * (1.0 - f) ** (s - (n_steps - 1))
    return LinearSystem(a=a, b=b)


def gauss_solve(a: np.ndarray, b: np.ndarray) -> np.ndarray:
    """Solve ``a @ x = b`` by Gaussian elimination with partial pivoting.

    Raises SingularSystem when a pivot falls below ``1e-14`` times the
    largest entry of the original matrix.
    """
    a = np.array(a, dtype=float)
    x = np.array(b, dtype=float)
    n = len(x)
    if a.shape != (n, n):
        raise ValueError(f"shape mismatch: a is {a.shape}, b has length {n}")
    if n == 0:
        return x
    threshold = _PIVOT_RTOL * np.max(np.abs(a))
    for k in range(n):
        p = k + int(np.argmax(np.abs(a[k:, k])))
        if not abs(a[p, k]) > threshold:
            raise SingularSystem(f"pivot {a[p, k]:.3e} in column {k} is effectively zero")
        if p != k:
            a[[k, p]] = a[[p, k]]
            x[[k, p]] = x[[p, k]]
        for i in range(k + 1, n):
            lam = a[i, k] / a[k, k]
            if lam != 0.0:
                a[i, k:] -= lam * a[k, k:]
                x[i] -= lam * x[k]
    for k in range(n - 1, -1, -1):
        x[k] = (x[k] - a[k, k + 1:] @ x[k + 1:]) / a[k, k]
    return x


def solve_tank_voltages(system: LinearSystem) -> np.ndarray:
    return gauss_solve(system.a, system.b)


def rising_trajectory(v_tank_avg: Sequence[float], r: float, n_steps: int, v_dd: float) -> np.ndarray:
    """Load voltage at the end of each rising step, by forward recurrence."""
    _check_tank_count(v_tank_avg, n_steps)
    out = np.empty(n_steps + 1)
    out[0] = 0.0
    for k in range(1, n_steps):
        out[k] = out[k - 1] + r * (v_tank_avg[k - 1] - out[k - 1])
    out[n_steps] = v_dd
    return out


def falling_trajectory(v_tank_avg: Sequence[float], f: float, n_steps: int, v_dd: float) -> np.ndarray:
    """Load voltage at the end of each falling step; step ``k`` uses tank ``N - k``."""
    _check_tank_count(v_tank_avg, n_steps)
    out = np.empty(n_steps + 1)
    out[0] = v_dd
    for k in range(1, n_steps):
        out[k] = out[k - 1] - f * (out[k - 1] - v_tank_avg[n_steps - k - 1])
    out[n_steps] = 0.0
    return out


def rising_trajectory_closed_form(v_tank_avg, r, n_steps, v_dd):
    _check_tank_count(v_tank_avg, n_steps)
    out = np.empty(n_steps + 1)
    out[0] = 0.0
    for k in range(1, n_steps):
        out[k] = sum(r * (1.0 - r) ** (k - i) * v_tank_avg[i - 1] for i in range(1, k + 1))
    out[n_steps] = v_dd
    return out


def falling_trajectory_closed_form(v_tank_avg, f, n_steps, v_dd):
    _check_tank_count(v_tank_avg, n_steps)
    out = np.empty(n_steps + 1)
    out[0] = v_dd
    for k in range(1, n_steps):
        acc = v_dd * (1.0 - f) ** k
        for i in range(k):
            # tank number N - k + i, stored at index N - k + i - 1
            acc += f * (1.0 - f) ** i * v_tank_avg[n_steps - k + i - 1]
        out[k] = acc
    out[n_steps] = 0.0
    return out


def _check_tank_count(v_tank_avg, n_steps):
    if len(v_tank_avg) != n_steps - 1:
        raise ValueError(f"expected {n_steps - 1} tank voltages, got {len(v_tank_avg)}")


def tank_ripple(v_tank_avg, v_load_rising, coeffs: StepCoefficients, config: DriverConfig):
    """Tank voltages right after the rising step and right after the falling step.

    The rising step starts from the after-fall voltage and relaxes toward the
    load; together with the average being the midpoint of the two endpoints
    this pins both endpoints.
    """
    decay = math.exp(-config.t_sr / coeffs.tau_r)
    share = coeffs.c_series / config.c_load
    g = decay + share * (1.0 - decay)
    v_avg = np.asarray(v_tank_avg, dtype=float)
    v_start = np.asarray(v_load_rising[: len(v_avg)], dtype=float)
    after_rise = (2.0 * g * v_avg + (1.0 - g) * v_start) / (1.0 + g)
    after_fall = 2.0 * v_avg - after_rise
    return after_rise, after_fall


def solve_steady_state(config: DriverConfig) -> SteadyStateSolution:
    """Full steady-state solution for a driver with at least two steps."""
    coeffs = derive_coefficients(config)
    n = config.n_steps
    v = solve_tank_voltages(build_system(coeffs, n, config.v_dd))
    rising = rising_trajectory(v, coeffs.r, n, config.v_dd)
    falling = falling_trajectory(v, coeffs.f, n, config.v_dd)
    after_rise, after_fall = tank_ripple(v, rising, coeffs, config)
    return SteadyStateSolution(
        v_tank_avg=v,
        v_load_rising=rising,
        v_load_falling=falling,
        v_tank_after_rise=after_rise,
        v_tank_after_fall=after_fall,
    )


def load_driver_energy(config: DriverConfig) -> EnergyReport:
    """Energy drawn from the supply per cycle, ignoring switch drive cost."""
    if config.n_steps == 1:
        e = config.conventional_energy
    else:
        coeffs = derive_coefficients(config)
        n = config.n_steps
        v = solve_tank_voltages(build_system(coeffs, n, config.v_dd))
        v_before_last = rising_trajectory(v, coeffs.r, n, config.v_dd)[n - 1]
        e = config.c_load * config.v_dd * (config.v_dd - float(v_before_last))
    return EnergyReport(
        e_load_driver=e,
        e_switch_driver=0.0,
        e_total=e,
        normalized=e / config.conventional_energy,
    )


def switch_driver_energy(config: DriverConfig, quality: SwitchQuality) -> float:
    """Gate-drive energy of all ``2N`` switches for one cycle."""
    total = 0.0
    for rho, resistance, label in (
        (quality.rho_r, config.r_sr, "r_sr"),
        (quality.rho_f, config.r_sf, "r_sf"),
    ):
        if rho == 0.0:
            continue
        if resistance is None or resistance <= 0:
            raise InvalidConfig(f"{label} must be > 0 when its switch quality is non-zero")
        total += config.n_steps * rho / resistance
    return total


def total_energy(config: DriverConfig, quality: SwitchQuality = SwitchQuality()) -> EnergyReport:
    load = load_driver_energy(config)
    switch = switch_driver_energy(config, quality)
    return EnergyReport(
        e_load_driver=load.e_load_driver,
        e_switch_driver=switch,
        e_total=load.e_load_driver + switch,
        normalized=load.normalized,
    )
