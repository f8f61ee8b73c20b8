"""Exact cycle-by-cycle simulation of the switched-capacitor driver.

Each switch closure connects two ideal capacitors through one resistor, so
the voltage difference decays exponentially and the step has a closed-form
result.  Chaining the ``2N`` closures of one cycle gives the next state
exactly; repeating cycles until the tank voltages stop moving gives the
periodic steady state, and the supply energy is read off the charge drawn on
the last rising step.

Nothing here uses the settling fractions or the charge-balance matrix of
:mod:`stepwise_driver.model_core`, so the two can check each other.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field
from typing import List, Optional, Sequence, Tuple

import numpy as np

from .errors import InvalidStep, NotConverged, SimulationError
from .model_core import DriverConfig

RISING = "rising"
FALLING = "falling"

ENERGY_RTOL = 1e-9


@dataclass(frozen=True)
class CircuitState:
    v_load: float
    v_tank: Tuple[float, ...]


@dataclass(frozen=True)
class StepRecord:
    """One switch closure.

    ``step_index`` runs ``1..N`` within its edge; ``tank_index`` is the
    1-based tank touched, or ``None`` for the final step to a rail.
    ``charge_transferred`` is the charge delivered into the load.
    """

    edge: str
    step_index: int
    tank_index: Optional[int]
    v_load_before: float
    v_load_after: float
    v_tank_before: Optional[float]
    v_tank_after: Optional[float]
    charge_transferred: float
    dissipation: float


@dataclass
class SteadyStateResult:
    state: CircuitState
    cycles_run: int
    converged: bool
    e_load_driver: float
    last_cycle_trace: List[StepRecord] = field(default_factory=list)
    v_dd: float = 1.0

    @property
    def dissipation(self) -> float:
        return math.fsum(rec.dissipation for rec in self.last_cycle_trace)

    def tank_after(self, edge: str) -> np.ndarray:
        """Tank voltages (tanks ``1..N-1``) right after their ``edge`` step."""
        recs = [rec for rec in self.last_cycle_trace if rec.edge == edge and rec.tank_index]
        out = np.empty(len(recs))
        for rec in recs:
            out[rec.tank_index - 1] = rec.v_tank_after
        return out


def step_exchange(v_a, v_b, c_a, c_b, resistance, duration):
    """Connect two charged capacitors through a resistor for ``duration``.

    Returns ``(v_a_after, v_b_after, dissipation)``.  Total charge is
    conserved; the dissipation is the drop in stored energy.
    """
    if not (c_a > 0 and c_b > 0 and resistance > 0):
        raise InvalidStep(
            f"capacitances and resistance must be > 0 (c_a={c_a}, c_b={c_b}, R={resistance})"
        )
    if duration < 0:
        raise InvalidStep(f"duration must be >= 0, got {duration}")
    c_series = c_a * c_b / (c_a + c_b)
    tau = c_series * resistance
    delta0 = v_b - v_a
    moved = delta0 * -math.expm1(-duration / tau)  # delta0 - delta_T
    delta_t = delta0 - moved
    # charge dq = c_series * moved flows from b into a
    dq = c_series * moved
    v_a_after = v_a + dq / c_a
    v_b_after = v_b - dq / c_b
    dissipation = 0.5 * c_series * moved * (delta0 + delta_t)
    return v_a_after, v_b_after, dissipation


def rail_step(v_load, rail, c_load):
    """Fully settle the load onto an ideal rail: ``(rail, charge, dissipation)``."""
    dv = rail - v_load
    return rail, c_load * dv, 0.5 * c_load * dv * dv


def run_cycle(state: CircuitState, config: DriverConfig):
    """One full rising then falling edge; returns ``(new_state, trace)``."""
    n = config.n_steps
    if len(state.v_tank) != n - 1:
        raise ValueError(f"state has {len(state.v_tank)} tanks, config needs {n - 1}")
    c_load = config.c_load
    v_load = state.v_load
    tanks = list(state.v_tank)
    trace = []

    for k in range(1, n):
        v_t = tanks[k - 1]
        new_load, new_t, diss = step_exchange(v_load, v_t, c_load, config.c_tank, config.r_sr, config.t_sr)
        trace.append(StepRecord(RISING, k, k, v_load, new_load, v_t, new_t, c_load * (new_load - v_load), diss))
        v_load, tanks[k - 1] = new_load, new_t
    new_load, q, diss = rail_step(v_load, config.v_dd, c_load)
    trace.append(StepRecord(RISING, n, None, v_load, new_load, None, None, q, diss))
    v_load = new_load

    for k in range(1, n):
        idx = n - k - 1
        v_t = tanks[idx]
        new_load, new_t, diss = step_exchange(v_load, v_t, c_load, config.c_tank, config.r_sf, config.t_sf)
        trace.append(StepRecord(FALLING, k, idx + 1, v_load, new_load, v_t, new_t, c_load * (new_load - v_load), diss))
        v_load, tanks[idx] = new_load, new_t
    new_load, q, diss = rail_step(v_load, 0.0, c_load)
    trace.append(StepRecord(FALLING, n, None, v_load, new_load, None, None, q, diss))

    return CircuitState(new_load, tuple(tanks)), trace


def _tank_map(config: DriverConfig):
    """Fast tank-only cycle map ``v_tank -> v_tank`` (load starts at 0 V)."""
    n = config.n_steps
    c_load, c_tank = config.c_load, config.c_tank
    c_series = c_load * c_tank / (c_load + c_tank)
    moved_r = -math.expm1(-config.t_sr / (c_series * config.r_sr))
    moved_f = -math.expm1(-config.t_sf / (c_series * config.r_sf))
    load_share = c_series / c_load
    tank_share = c_series / c_tank
    v_dd = config.v_dd

    def cycle(tanks):
        tanks = list(tanks)
        v = 0.0
        for i in range(n - 1):
            m = (tanks[i] - v) * moved_r
            v += m * load_share
            tanks[i] -= m * tank_share
        v = v_dd
        for i in range(n - 2, -1, -1):
            m = (tanks[i] - v) * moved_f
            v += m * load_share
            tanks[i] -= m * tank_share
        return tanks

    return cycle


def _shooting_step(cycle, tanks, v_dd):
    """One Newton step on ``P(v) - v = 0``; the cycle map ``P`` is affine."""
    m = len(tanks)
    base = np.array(cycle(tanks))
    jac = np.empty((m, m))
    for j in range(m):
        probe = list(tanks)
        probe[j] += v_dd
        jac[:, j] = (np.array(cycle(probe)) - base) / v_dd
    resid = base - np.array(tanks)
    delta = np.linalg.solve(np.eye(m) - jac, resid)
    return [float(v) for v in np.array(tanks) + delta], m + 1


def run_to_steady_state(
    config: DriverConfig,
    epsilon: float = 1e-12,
    max_cycles: int = 100_000,
    initial: Optional[Sequence[float]] = None,
    method: str = "shooting",
) -> SteadyStateResult:
    """Drive the circuit to periodic steady state and measure its energy.

    ``method="iterate"`` repeats cycles from ``initial`` (evenly spaced tanks
    by default) until no tank moves more than ``epsilon * v_dd`` over a
    cycle.  ``method="shooting"`` first jumps to the fixed point of the
    (affine) cycle map with Newton steps, probing the map with extra cycles,
    then applies the same convergence test; it reaches the same state far
    faster for large tanks or short on-times.  Every probe counts against
    ``max_cycles``.

    Raises NotConverged (with the partial result) when the budget runs out
    and SimulationError if the final cycle's dissipation does not match the
    supply energy.
    """
    if epsilon <= 0:
        raise ValueError("epsilon must be > 0")
    if max_cycles < 1:
        raise ValueError("max_cycles must be >= 1")
    if method not in ("shooting", "iterate"):
        raise ValueError(f"unknown method {method!r}")
    n = config.n_steps
    v_dd = config.v_dd
    if initial is None:
        tanks = [k * v_dd / n for k in range(1, n)]
    else:
        tanks = [float(v) for v in initial]
        if len(tanks) != n - 1:
            raise ValueError(f"initial has {len(tanks)} tanks, config needs {n - 1}")

    cycles = 0
    converged = False
    tol = epsilon * v_dd
    if n >= 2:
        cycle = _tank_map(config)
        newton_left = 8 if method == "shooting" else 0
        while cycles < max_cycles:
            if newton_left and cycles + n < max_cycles:
                tanks, used = _shooting_step(cycle, tanks, v_dd)
                cycles += used
                newton_left -= 1
            nxt = cycle(tanks)
            cycles += 1
            change = max(abs(a - b) for a, b in zip(nxt, tanks))
            tanks = nxt
            if change <= tol:
                converged = True
                break
            if newton_left and change > 1e3 * tol:
                continue
            newton_left = 0
    else:
        converged = True

    state, trace = run_cycle(CircuitState(0.0, tuple(tanks)), config)
    cycles += 1
    supply_charge = trace[n - 1].charge_transferred
    result = SteadyStateResult(
        state=state,
        cycles_run=cycles,
        converged=converged,
        e_load_driver=v_dd * supply_charge,
        last_cycle_trace=trace,
        v_dd=v_dd,
    )
    if not converged:
        raise NotConverged(f"no steady state after {cycles} cycles", result)
    diss = result.dissipation
    if abs(diss - result.e_load_driver) > ENERGY_RTOL * abs(result.e_load_driver):
        raise SimulationError(
            f"cycle dissipation {diss!r} J does not match supply energy {result.e_load_driver!r} J"
        )
    return result


def measure_charge_balance(result: SteadyStateResult) -> float:
    """Largest mismatch between rising step ``k`` and falling step ``N - k`` (volts).

    Both are the load-voltage step taken against tank ``k``, plus the rail
    steps at each end, which pair rising step ``N`` with falling step ``N``.
    """
    rising = {rec.step_index: rec.v_load_after - rec.v_load_before
              for rec in result.last_cycle_trace if rec.edge == RISING}
    falling = {rec.step_index: rec.v_load_before - rec.v_load_after
               for rec in result.last_cycle_trace if rec.edge == FALLING}
    n = len(rising)
    worst = 0.0
    for k in range(1, n + 1):
        partner = n - k if k < n else n
        worst = max(worst, abs(rising[k] - falling[partner]))
    return worst
