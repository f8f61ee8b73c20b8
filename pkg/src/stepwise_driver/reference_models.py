"""Earlier approximations of stepwise-driver energy, used as baselines.

* ``svensson_*``: evenly spaced ideal tanks, finite settling time.
* ``dancy_*``: finite tank capacitance, full settling.
* ``combined_load``: the finite-tank formula with the settling factor folded in.

All return joules per full charge/discharge cycle unless noted.
"""

from __future__ import annotations

from dataclasses import dataclass
from typing import Optional

from .errors import InvalidConfig
from .model_core import coth


@dataclass(frozen=True)
class SvenssonParams:
    """Parameters of Svensson's total-energy estimate.

    ``m`` is the switch on-time in time constants.  ``rho_bar`` is an opaque
    switch-technology constant such that ``2 N**2 m rho_bar / t_total`` is
    dimensionless; ``t_total`` is the time over which it is amortized.
    """

    m: float
    rho_bar: float = 0.0
    t_total: Optional[float] = None

    def __post_init__(self):
        if not self.m > 0:
            raise InvalidConfig(f"m must be > 0, got {self.m!r}")
        if self.rho_bar < 0:
            raise InvalidConfig(f"rho_bar must be >= 0, got {self.rho_bar!r}")
        if self.rho_bar > 0 and not (self.t_total and self.t_total > 0):
            raise InvalidConfig("t_total must be > 0 when rho_bar > 0")

    @classmethod
    def from_timing(cls, t_sr, tau_r, rho_bar=0.0, t_total=None):
        return cls(m=t_sr / tau_r, rho_bar=rho_bar, t_total=t_total)


def ideal_energy(n_steps, c_load, v_dd):
    if n_steps < 1:
        raise InvalidConfig("n_steps must be >= 1")
    return c_load * v_dd**2 / n_steps


def svensson_load(n_steps, c_load, v_dd, t_sr, tau_r):
    return coth(t_sr / (2.0 * tau_r)) * c_load * v_dd**2 / n_steps


def svensson_total(n_steps, c_load, v_dd, params: SvenssonParams):
    drive = 0.0
    if params.rho_bar:
        drive = 2.0 * n_steps**2 * params.m * params.rho_bar / params.t_total
    return (coth(params.m / 2.0) / n_steps + drive) * c_load * v_dd**2


def dancy_half_cycle(n_steps, c_load, c_tank, v_dd):
    """Dissipation of the charging half-cycle only."""
    return 0.5 * dancy_load(n_steps, c_load, c_tank, v_dd)


def dancy_load(n_steps, c_load, c_tank, v_dd):
    if c_load <= 0 or c_tank <= 0:
        raise InvalidConfig("capacitances must be > 0")
    return v_dd**2 * c_load * (c_tank + c_load) / (c_load + n_steps * c_tank)


def combined_load(n_steps, c_load, c_tank, v_dd, t_sr, tau_r):
    k = coth(t_sr / (2.0 * tau_r))
    return v_dd**2 * c_load * (c_tank + c_load) / (c_load + n_steps / k * c_tank)
