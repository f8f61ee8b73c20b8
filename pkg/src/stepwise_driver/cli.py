"""Command-line interface.

Usage::

    stepwise-driver energy   --config driver.json [--json report.json]
    stepwise-driver sweep    --config study.json --out sweep.csv [--svg sweep.svg]
    stepwise-driver compare  --config study.json --out compare.csv [--svg compare.svg]
    stepwise-driver optimize --config design.json

Config files are JSON with sections ``driver``, ``quality``, ``sweep``,
``optimize`` and ``sim``; all values are plain SI numbers.  Unknown keys are
rejected so a typo never silently falls back to a default.

Exit codes: 0 ok, 2 config error, 3 singular system, 4 simulator did not
converge, 5 I/O error, 6 no valid optimization candidate.
"""

from __future__ import annotations

import argparse
import csv
import io
import json
import sys
from dataclasses import asdict
from pathlib import Path

import numpy as np

from .errors import AllCandidatesInvalid, InvalidConfig, SingularSystem
from .model_core import DriverConfig, SwitchQuality, solve_steady_state, total_energy
from .svg import line_chart
from .sweep_opt import CSV_COLUMNS, OptimizeSpec, SweepSpec, run_sweep, optimize

EXIT_OK = 0
EXIT_CONFIG = 2
EXIT_SINGULAR = 3
EXIT_NOT_CONVERGED = 4
EXIT_IO = 5
EXIT_EMPTY_OPT = 6

DRIVER_KEYS = ("n_steps", "c_load", "c_tank", "r_sr", "r_sf", "t_sr", "t_sf", "v_dd")
QUALITY_KEYS = ("rho_r", "rho_f")
SWEEP_KEYS = ("n_list", "ctank_ratio_list", "t_over_tau_list", "tsf_mode", "c_load", "v_dd", "r_sr", "r_sf")
OPTIMIZE_KEYS = ("n_candidates", "r_switch_candidates", "edge_time_budget", "c_load", "c_tank_ratio", "v_dd")
SIM_KEYS = ("epsilon", "max_cycles")
SECTIONS = {
    "driver": DRIVER_KEYS,
    "quality": QUALITY_KEYS,
    "sweep": SWEEP_KEYS,
    "optimize": OPTIMIZE_KEYS,
    "sim": SIM_KEYS,
}


class CliError(Exception):
    def __init__(self, message, code):
        super().__init__(message)
        self.code = code


def load_config(path) -> dict:
    try:
        text = Path(path).read_text()
    except OSError as exc:
        raise CliError(f"cannot read config {path}: {exc}", EXIT_CONFIG) from exc
    try:
        doc = json.loads(text)
    except json.JSONDecodeError as exc:
        raise CliError(f"config {path} is not valid JSON: {exc}", EXIT_CONFIG) from exc
    if not isinstance(doc, dict):
        raise CliError("config must be a JSON object", EXIT_CONFIG)
    for section, body in doc.items():
        if section not in SECTIONS:
            raise CliError(f"unknown config section {section!r}", EXIT_CONFIG)
        if not isinstance(body, dict):
            raise CliError(f"config section {section!r} must be an object", EXIT_CONFIG)
        for key in body:
            if key not in SECTIONS[section]:
                raise CliError(f"unknown config key {section}.{key}", EXIT_CONFIG)
    return doc


def _number(section, key, value, integer=False):
    if isinstance(value, bool) or not isinstance(value, (int, float)):
        raise CliError(f"{section}.{key} must be a number, got {value!r}", EXIT_CONFIG)
    if integer and int(value) != value:
        raise CliError(f"{section}.{key} must be an integer, got {value!r}", EXIT_CONFIG)
    return int(value) if integer else float(value)


def _number_list(section, key, value, integer=False):
    if not isinstance(value, list):
        raise CliError(f"{section}.{key} must be a list", EXIT_CONFIG)
    return [_number(section, key, v, integer) for v in value]


def driver_from(doc) -> DriverConfig:
    body = doc.get("driver")
    if body is None:
        raise CliError("missing config section 'driver'", EXIT_CONFIG)
    for key in ("n_steps", "c_load", "v_dd"):
        if key not in body:
            raise CliError(f"missing config key driver.{key}", EXIT_CONFIG)
    kwargs = {k: _number("driver", k, v, integer=(k == "n_steps")) for k, v in body.items()}
    if kwargs["n_steps"] >= 2:
        for key in DRIVER_KEYS:
            if key not in kwargs:
                raise CliError(f"missing config key driver.{key}", EXIT_CONFIG)
    try:
        return DriverConfig(**kwargs)
    except InvalidConfig as exc:
        raise CliError(f"invalid driver: {exc}", EXIT_CONFIG) from exc


def quality_from(doc) -> SwitchQuality:
    body = doc.get("quality", {})
    try:
        return SwitchQuality(**{k: _number("quality", k, v) for k, v in body.items()})
    except InvalidConfig as exc:
        raise CliError(f"invalid quality: {exc}", EXIT_CONFIG) from exc


def sim_from(doc, args):
    body = doc.get("sim", {})
    eps = _number("sim", "epsilon", body["epsilon"]) if "epsilon" in body else 1e-12
    cycles = _number("sim", "max_cycles", body["max_cycles"], integer=True) if "max_cycles" in body else 100_000
    if args.epsilon is not None:
        eps = args.epsilon
    if args.max_cycles is not None:
        cycles = args.max_cycles
    if not eps > 0:
        raise CliError("sim.epsilon must be > 0", EXIT_CONFIG)
    if cycles < 1:
        raise CliError("sim.max_cycles must be >= 1", EXIT_CONFIG)
    return eps, cycles


def sweep_from(doc, args) -> SweepSpec:
    body = doc.get("sweep")
    if body is None:
        raise CliError("missing config section 'sweep'", EXIT_CONFIG)
    kwargs = {}
    for key in ("n_list", "ctank_ratio_list"):
        if key not in body:
            raise CliError(f"missing config key sweep.{key}", EXIT_CONFIG)
    kwargs["n_list"] = _number_list("sweep", "n_list", body["n_list"], integer=True)
    kwargs["ctank_ratio_list"] = _number_list("sweep", "ctank_ratio_list", body["ctank_ratio_list"])
    if "t_over_tau_list" in body:
        kwargs["t_over_tau_list"] = _number_list("sweep", "t_over_tau_list", body["t_over_tau_list"])
    if "tsf_mode" in body:
        kwargs["tsf_mode"] = body["tsf_mode"]
    driver = doc.get("driver", {})
    for key in ("c_load", "v_dd", "r_sr", "r_sf"):
        if key in body:
            kwargs[key] = _number("sweep", key, body[key])
        elif key in driver:
            kwargs[key] = _number("driver", key, driver[key])
    kwargs["epsilon"], kwargs["max_cycles"] = sim_from(doc, args)
    try:
        return SweepSpec(**kwargs)
    except InvalidConfig as exc:
        raise CliError(str(exc), EXIT_CONFIG) from exc


def optimize_from(doc) -> OptimizeSpec:
    body = doc.get("optimize")
    if body is None:
        raise CliError("missing config section 'optimize'", EXIT_CONFIG)
    for key in ("n_candidates", "r_switch_candidates", "edge_time_budget"):
        if key not in body:
            raise CliError(f"missing config key optimize.{key}", EXIT_CONFIG)
    kwargs = {
        "n_candidates": _number_list("optimize", "n_candidates", body["n_candidates"], integer=True),
        "r_switch_candidates": _number_list("optimize", "r_switch_candidates", body["r_switch_candidates"]),
        "edge_time_budget": _number("optimize", "edge_time_budget", body["edge_time_budget"]),
        "quality": quality_from(doc),
    }
    for key in ("c_load", "c_tank_ratio", "v_dd"):
        if key in body:
            kwargs[key] = _number("optimize", key, body[key])
    try:
        return OptimizeSpec(**kwargs)
    except InvalidConfig as exc:
        raise CliError(str(exc), EXIT_CONFIG) from exc


def format_value(value) -> str:
    """CSV cell text; floats use the shortest repr that round-trips."""
    if isinstance(value, bool):
        return "true" if value else "false"
    if isinstance(value, (float, np.floating)):
        return repr(float(value))
    return str(value)


def rows_to_csv(rows) -> str:
    buf = io.StringIO()
    writer = csv.writer(buf, lineterminator="\n")
    writer.writerow(CSV_COLUMNS)
    for row in rows:
        rec = row.as_record()
        writer.writerow([format_value(rec[c]) for c in CSV_COLUMNS])
    return buf.getvalue()


def rows_to_svg(rows, sources, title):
    groups = {}
    for row in rows:
        groups.setdefault((row.n, row.ctank_ratio), []).append(row)
    series = []
    for (n, ratio), members in groups.items():
        xs = [r.t_over_tau for r in members]
        for style, source in enumerate(sources):
            ys = [r.normalized(source) for r in members]
            series.append((f"N={n} Ct/Cl={ratio:g}: {source}", xs, ys, style))
    return line_chart(
        series,
        title=title,
        x_label="T_SR / tau",
        y_label="energy / (C_load V_DD^2)",
    )


def _write(path, text):
    try:
        Path(path).write_text(text)
    except OSError as exc:
        raise CliError(f"cannot write {path}: {exc}", EXIT_IO) from exc


def cmd_energy(args, out) -> int:
    doc = load_config(args.config)
    cfg = driver_from(doc)
    quality = quality_from(doc)
    try:
        report = total_energy(cfg, quality)
    except InvalidConfig as exc:
        raise CliError(str(exc), EXIT_CONFIG) from exc
    staircase = []
    if cfg.n_steps >= 2:
        staircase = [float(v) for v in solve_steady_state(cfg).v_tank_avg]
    lines = [
        ("e_load_driver", f"{report.e_load_driver:.9g} J"),
        ("e_switch_driver", f"{report.e_switch_driver:.9g} J"),
        ("e_total", f"{report.e_total:.9g} J"),
        ("normalized", f"{report.normalized:.9g}"),
    ]
    lines += [(f"V_{k}", f"{v:.9g} V") for k, v in enumerate(staircase, start=1)]
    width = max(len(k) for k, _ in lines)
    for key, val in lines:
        print(f"{key:<{width}}  {val}", file=out)
    if args.json:
        doc_out = dict(asdict(report), v_tank=staircase, config=asdict(cfg))
        _write(args.json, json.dumps(doc_out, indent=2, sort_keys=True) + "\n")
    return EXIT_OK


def _sweep_like(args, out, sources, title) -> int:
    doc = load_config(args.config)
    spec = sweep_from(doc, args)
    if not args.out:
        raise CliError("--out is required", EXIT_CONFIG)
    rows = run_sweep(spec)
    _write(args.out, rows_to_csv(rows))
    if args.svg:
        _write(args.svg, rows_to_svg(rows, sources, title))
    failed = sum(not r.sim_converged for r in rows)
    print(f"wrote {len(rows)} rows to {args.out}", file=out)
    if failed:
        print(f"warning: {failed} rows did not converge", file=out)
        return EXIT_NOT_CONVERGED
    return EXIT_OK


def cmd_sweep(args, out) -> int:
    return _sweep_like(args, out, ("model", "sim"), "Stepwise driver energy: model vs simulator")


def cmd_compare(args, out) -> int:
    return _sweep_like(args, out, ("sim", "model", "svensson", "dancy", "combined"),
                       "Stepwise driver energy: all models")


def cmd_optimize(args, out) -> int:
    doc = load_config(args.config)
    spec = optimize_from(doc)
    result = optimize(spec)
    header = f"{'rank':>4}  {'n':>3}  {'r_switch':>12}  {'t_step':>12}  {'e_load':>12}  {'e_switch':>12}  {'e_total':>12}"
    print(header, file=out)
    for rank, cand in enumerate(result.ranking, start=1):
        rep = cand.report
        print(
            f"{rank:>4}  {cand.n:>3}  {cand.r_switch:>12.6g}  {cand.t_sr:>12.6g}  "
            f"{rep.e_load_driver:>12.6g}  {rep.e_switch_driver:>12.6g}  {rep.e_total:>12.6g}",
            file=out,
        )
    for n, r_sw, msg in result.failures:
        print(f"skipped n={n} r_switch={r_sw:g}: {msg}", file=out)
    best = result.best
    print(
        f"best: n={best.n} r_switch={best.r_switch:g} t_step={best.t_sr:g} "
        f"e_total={best.report.e_total:.6g} J",
        file=out,
    )
    return EXIT_OK


COMMANDS = {
    "energy": cmd_energy,
    "sweep": cmd_sweep,
    "compare": cmd_compare,
    "optimize": cmd_optimize,
}


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(prog="stepwise-driver", description=__doc__.splitlines()[0])
    parser.add_argument("command", choices=sorted(COMMANDS))
    parser.add_argument("--config", required=True, help="JSON config file")
    parser.add_argument("--out", help="CSV output (sweep, compare)")
    parser.add_argument("--svg", help="optional SVG chart output (sweep, compare)")
    parser.add_argument("--json", help="optional JSON report output (energy)")
    parser.add_argument("--epsilon", type=float, help="simulator convergence threshold, fraction of V_DD")
    parser.add_argument("--max-cycles", type=int, help="simulator cycle budget")
    return parser


def main(argv=None, out=None) -> int:
    out = out or sys.stdout
    parser = build_parser()
    try:
        args = parser.parse_args(argv)
    except SystemExit as exc:
        return EXIT_CONFIG if exc.code else EXIT_OK
    try:
        return COMMANDS[args.command](args, out)
    except CliError as exc:
        print(f"error: {exc}", file=sys.stderr)
        return exc.code
    except SingularSystem as exc:
        print(f"error: singular tank system: {exc}", file=sys.stderr)
        return EXIT_SINGULAR
    except AllCandidatesInvalid as exc:
        print(f"error: {exc}", file=sys.stderr)
        return EXIT_EMPTY_OPT
    except InvalidConfig as exc:
        print(f"error: {exc}", file=sys.stderr)
        return EXIT_CONFIG


if __name__ == "__main__":
    sys.exit(main())
