"""Parameter sweeps comparing all energy models, and a small design optimizer."""

from __future__ import annotations

import math
from concurrent.futures import ThreadPoolExecutor
from dataclasses import dataclass, field, replace
from typing import List, Sequence, Tuple

from . import reference_models as ref
from .errors import AllCandidatesInvalid, InvalidConfig, NotConverged, StepwiseError
from .model_core import DriverConfig, EnergyReport, SwitchQuality, derive_coefficients, load_driver_energy, total_energy
from .simulator import run_to_steady_state

TSF_MODES = ("equal", "double")

# 24 points over (0, 6] in steps of 0.25
DEFAULT_T_OVER_TAU = tuple(0.25 * k for k in range(1, 25))

CSV_COLUMNS = (
    "n", "ctank_ratio", "t_over_tau", "tsf_mode",
    "e_model", "e_sim", "e_svensson", "e_dancy", "e_combined",
    "norm_model", "norm_sim", "norm_svensson", "norm_dancy", "norm_combined",
    "sim_converged",
    "err_model", "err_svensson", "err_dancy", "err_combined",
)


@dataclass(frozen=True)
class SweepSpec:
    n_list: Sequence[int]
    ctank_ratio_list: Sequence[float]
    t_over_tau_list: Sequence[float] = DEFAULT_T_OVER_TAU
    tsf_mode: str = "equal"
    c_load: float = 1e-9
    v_dd: float = 1.0
    r_sr: float = 10.0
    r_sf: float = 10.0
    epsilon: float = 1e-12
    max_cycles: int = 100_000

    def __post_init__(self):
        for name in ("n_list", "ctank_ratio_list", "t_over_tau_list"):
            if len(getattr(self, name)) == 0:
                raise InvalidConfig(f"sweep.{name} must not be empty")
        if any(n < 1 for n in self.n_list):
            raise InvalidConfig("sweep.n_list entries must be >= 1")
        if any(not x > 0 for x in self.ctank_ratio_list):
            raise InvalidConfig("sweep.ctank_ratio_list entries must be > 0")
        if any(not x > 0 for x in self.t_over_tau_list):
            raise InvalidConfig("sweep.t_over_tau_list entries must be > 0")
        if self.tsf_mode not in TSF_MODES:
            raise InvalidConfig(f"sweep.tsf_mode must be one of {TSF_MODES}, got {self.tsf_mode!r}")

    def grid(self):
        for n in sorted(set(self.n_list)):
            for ratio in sorted(set(self.ctank_ratio_list)):
                for t in sorted(set(self.t_over_tau_list)):
                    yield n, ratio, t


def driver_at(n, ctank_ratio, t_over_tau, tsf_mode="equal", *, c_load=1e-9, v_dd=1.0, r_sr=10.0, r_sf=10.0):
    """Build a config with on-times given in units of each edge's time constant."""
    c_tank = ctank_ratio * c_load
    c_series = c_tank * c_load / (c_tank + c_load)
    scale = 2.0 if tsf_mode == "double" else 1.0
    return DriverConfig(
        n_steps=n,
        c_load=c_load,
        v_dd=v_dd,
        c_tank=c_tank,
        r_sr=r_sr,
        r_sf=r_sf,
        t_sr=t_over_tau * c_series * r_sr,
        t_sf=scale * t_over_tau * c_series * r_sf,
    )


@dataclass(frozen=True)
class SweepRow:
    n: int
    ctank_ratio: float
    t_over_tau: float
    tsf_mode: str
    e_model: float
    e_sim: float
    e_svensson: float
    e_dancy: float
    e_combined: float
    e_conventional: float
    sim_converged: bool

    def normalized(self, source: str) -> float:
        return getattr(self, f"e_{source}") / self.e_conventional

    def rel_error(self, source: str) -> float:
        return (getattr(self, f"e_{source}") - self.e_sim) / self.e_sim

    def as_record(self) -> dict:
        rec = {
            "n": self.n,
            "ctank_ratio": self.ctank_ratio,
            "t_over_tau": self.t_over_tau,
            "tsf_mode": self.tsf_mode,
        }
        sources = ("model", "sim", "svensson", "dancy", "combined")
        for s in sources:
            rec[f"e_{s}"] = getattr(self, f"e_{s}")
        for s in sources:
            rec[f"norm_{s}"] = self.normalized(s)
        rec["sim_converged"] = self.sim_converged
        for s in ("model", "svensson", "dancy", "combined"):
            rec[f"err_{s}"] = self.rel_error(s)
        return rec


def compare_models(config: DriverConfig, epsilon=1e-12, max_cycles=100_000, tsf_mode=None) -> SweepRow:
    """Evaluate the exact model, the simulator and the three baselines on one driver."""
    model = load_driver_energy(config).e_load_driver
    try:
        sim = run_to_steady_state(config, epsilon=epsilon, max_cycles=max_cycles)
        converged = True
    except NotConverged as exc:
        sim, converged = exc.result, False
    conventional = config.conventional_energy
    n, c_load, v_dd = config.n_steps, config.c_load, config.v_dd
    if n == 1:
        # no intermediate steps: every baseline is the direct driver
        return SweepRow(1, math.nan, math.nan, tsf_mode or "equal", model, sim.e_load_driver,
                        conventional, ref.dancy_load(1, c_load, config.c_tank or c_load, v_dd),
                        conventional, conventional, converged)
    coeffs = derive_coefficients(config)
    t_over_tau = config.t_sr / coeffs.tau_r
    if tsf_mode is None:
        tsf_mode = _infer_tsf_mode(t_over_tau, config.t_sf / coeffs.tau_f)
    return SweepRow(
        n=n,
        ctank_ratio=config.c_tank / c_load,
        t_over_tau=t_over_tau,
        tsf_mode=tsf_mode,
        e_model=model,
        e_sim=sim.e_load_driver,
        e_svensson=ref.svensson_load(n, c_load, v_dd, config.t_sr, coeffs.tau_r),
        e_dancy=ref.dancy_load(n, c_load, config.c_tank, v_dd),
        e_combined=ref.combined_load(n, c_load, config.c_tank, v_dd, config.t_sr, coeffs.tau_r),
        e_conventional=conventional,
        sim_converged=converged,
    )


def _infer_tsf_mode(t_r, t_f):
    if math.isclose(t_f, t_r, rel_tol=1e-9):
        return "equal"
    if math.isclose(t_f, 2.0 * t_r, rel_tol=1e-9):
        return "double"
    return "custom"


def run_sweep(spec: SweepSpec, workers: int = 1) -> List[SweepRow]:
    """One row per grid point, sorted by ``(n, ctank_ratio, t_over_tau)``.

    Grid values are used exactly as given, so ``row.ctank_ratio`` and
    ``row.t_over_tau`` echo the spec rather than a recomputed ratio.
    """

    def point(args):
        n, ratio, t = args
        cfg = driver_at(n, ratio, t, spec.tsf_mode, c_load=spec.c_load, v_dd=spec.v_dd,
                        r_sr=spec.r_sr, r_sf=spec.r_sf)
        row = compare_models(cfg, spec.epsilon, spec.max_cycles, tsf_mode=spec.tsf_mode)
        return _with_grid_values(row, n, ratio, t)

    points = list(spec.grid())
    if workers > 1:
        with ThreadPoolExecutor(max_workers=workers) as pool:
            rows = list(pool.map(point, points))
    else:
        rows = [point(p) for p in points]
    return sorted(rows, key=lambda row: (row.n, row.ctank_ratio, row.t_over_tau))


def _with_grid_values(row, n, ratio, t):
    return replace(row, n=n, ctank_ratio=ratio, t_over_tau=t)


@dataclass(frozen=True)
class OptimizeSpec:
    n_candidates: Sequence[int]
    r_switch_candidates: Sequence[float]
    edge_time_budget: float
    quality: SwitchQuality = SwitchQuality()
    c_load: float = 1e-9
    c_tank_ratio: float = 4.0
    v_dd: float = 1.0

    def __post_init__(self):
        if not self.n_candidates:
            raise InvalidConfig("optimize.n_candidates must not be empty")
        if not self.r_switch_candidates:
            raise InvalidConfig("optimize.r_switch_candidates must not be empty")
        if not self.edge_time_budget > 0:
            raise InvalidConfig("optimize.edge_time_budget must be > 0")


@dataclass(frozen=True)
class Candidate:
    n: int
    r_switch: float
    t_sr: float
    report: EnergyReport

    @property
    def sort_key(self):
        return (self.report.e_total, self.n, -self.r_switch)


@dataclass
class OptimizeResult:
    best: Candidate
    ranking: List[Candidate]
    failures: List[Tuple[int, float, str]] = field(default_factory=list)


def optimize(spec: OptimizeSpec) -> OptimizeResult:
    """Exhaustive search over ``(n, r_switch)`` minimizing total driver energy.

    Each of the ``n`` steps of an edge gets ``edge_time_budget / n`` of
    on-time.  Ties go to fewer steps, then to the larger resistance.
    """
    ranking, failures = [], []
    for n in sorted(set(spec.n_candidates)):
        for r_sw in sorted(set(spec.r_switch_candidates)):
            t_step = spec.edge_time_budget / n
            try:
                cfg = DriverConfig(
                    n_steps=n,
                    c_load=spec.c_load,
                    v_dd=spec.v_dd,
                    c_tank=spec.c_tank_ratio * spec.c_load,
                    r_sr=r_sw,
                    r_sf=r_sw,
                    t_sr=t_step,
                    t_sf=t_step,
                )
                report = total_energy(cfg, spec.quality)
            except StepwiseError as exc:
                failures.append((n, r_sw, str(exc)))
                continue
            ranking.append(Candidate(n, r_sw, t_step, report))
    if not ranking:
        raise AllCandidatesInvalid(f"all {len(failures)} candidates failed")
    ranking.sort(key=lambda c: c.sort_key)
    return OptimizeResult(best=ranking[0], ranking=ranking, failures=failures)

