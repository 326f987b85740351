"""Command-line front end: ``lsinv run <config-file> [--out DIR] [--k-max N] [--floor X]``.

Configs are JSON. Every knob has a default; the report echoes the complete
resolved config so that it reproduces the run. Exit codes: 0 ok, 2 config
error, 3 numerical failure, 4 no symmetry found.
"""

from __future__ import annotations

import argparse
import copy
import json
import math
import os
import sys
from importlib import resources
from pathlib import Path

import numpy as np

from . import __version__
from .detect import infer_period, locate_defects, segment_constancy
from .domain import Driving, Grid, Kind, LatticeSpec, NumericalError, SymmetryTransform
from .floquet import lowest_mode
from .hamiltonian import PlaneWaveBasis, stationary_states
from .invariants import (averaged_current, convergence_measure, probability_current,
                         shift_scan, two_point_current)
from .transfer import delta_defect_analytic

EXIT_OK, EXIT_CONFIG, EXIT_NUMERICAL, EXIT_NO_SYMMETRY = 0, 2, 3, 4
OUTPUT_ENV = "LSINV_OUTPUT_DIR"
DEFAULT_OUTPUT = "lsinv-output"
SCENARIOS = ("static-defect", "shift-scan", "driven", "convergence", "delta-oracle")

DEFAULTS = {
    "lattice": {
        "n_barriers": 5, "spacing": 5.0, "strength": 1.0, "width": 0.5,
        "defects": [], "centers": None, "strengths": None, "supercell_R": None,
        "driving": None,
    },
    "basis": {"k_max": 128},
    "grid": {"n_points": None},  # None: spacing 0.05 over the supercell
    "state": {"index": 0},
    "transform": {"kind": "translation", "parameter": None, "scan": None, "trim": None},
    "floquet": {"substeps": 1024, "n_time_samples": 256},
    "detection": {"floor": None, "relative_floor": 1e-9, "median_factor": 5.0,
                  "min_plateau_points": 3, "pair": True},
    "convergence": {"k_max_values": [8, 12, 16, 24, 32, 48, 64, 96, 128],
                    "dx_values": [0.1, 0.05, 0.025], "domain": None},
    "delta_oracle": {"strength_c": 2.5, "L": 5.0, "F0": 1.0,
                     "k_min": 0.05, "k_max": 10.0, "n_k": 400},
    "output": {"directory": None, "formats": ["tsv", "json"]},
}


class ConfigError(ValueError):
    pass


class NoSymmetryError(RuntimeError):
    pass


# ---------------------------------------------------------------- config

def _merge(defaults, given, path=""):
    out = copy.deepcopy(defaults)
    for key, value in given.items():
        if key not in defaults:
            raise ConfigError(f"unknown config key {path}{key!r}")
        if isinstance(defaults[key], dict) and isinstance(value, dict):
            out[key] = _merge(defaults[key], value, f"{path}{key}.")
        else:
            out[key] = value
    return out


def load_config(source) -> dict:
    """Parse a JSON config (path, bundled scenario name or dict) and fill defaults."""
    if isinstance(source, dict):
        raw = source
    else:
        path = Path(source)
        if not path.exists():
            bundled = resources.files("lsinv") / "scenarios" / f"{source}.json"
            if not bundled.is_file():
                raise ConfigError(f"config file {source} not found")
            text = bundled.read_text()
        else:
            text = path.read_text()
        try:
            raw = json.loads(text)
        except json.JSONDecodeError as exc:
            raise ConfigError(f"config is not valid JSON: {exc}") from exc
    if not isinstance(raw, dict):
        raise ConfigError("config must be a JSON object")
    raw = dict(raw)
    scenario = raw.pop("scenario", None)
    if scenario not in SCENARIOS:
        raise ConfigError(f"scenario must be one of {', '.join(SCENARIOS)}; got {scenario!r}")
    cfg = _merge(DEFAULTS, raw)
    cfg["scenario"] = scenario
    return cfg


def _positive(value, name, integer=False):
    kind = int if integer else (int, float)
    if isinstance(value, bool) or not isinstance(value, kind) or not value > 0 \
            or not math.isfinite(value):
        raise ConfigError(f"{name} must be a positive {'integer' if integer else 'number'}, got {value!r}")
    return value


def build_lattice(cfg: dict) -> LatticeSpec:
    lat = cfg["lattice"]
    driving = None
    if lat["driving"] is not None:
        d = lat["driving"]
        driving = Driving(float(d.get("amplitude", 0.0)), float(d.get("omega", 0.0)))
    if lat["centers"] is not None:
        if lat["supercell_R"] is None:
            raise ConfigError("lattice.supercell_R is required with explicit centers")
        strengths = lat["strengths"] if lat["strengths"] is not None else [lat["strength"]] * len(lat["centers"])
        return LatticeSpec(float(lat["supercell_R"]), tuple(lat["centers"]), tuple(strengths),
                           float(lat["width"]), None, driving)
    _positive(lat["n_barriers"], "lattice.n_barriers", integer=True)
    _positive(lat["spacing"], "lattice.spacing")
    defects = {float(p): float(v) for p, v in lat["defects"]}
    return LatticeSpec.regular(lat["n_barriers"], float(lat["spacing"]), float(lat["strength"]),
                               defects, float(lat["width"]), driving)


def validate(cfg: dict) -> dict:
    """Check every field against module preconditions; returns the resolved objects."""
    try:
        lattice = build_lattice(cfg)
    except (TypeError, KeyError) as exc:
        raise ConfigError(f"malformed lattice section: {exc}") from exc
    except ValueError as exc:
        raise ConfigError(str(exc)) from exc
    R = lattice.supercell_R
    _positive(cfg["basis"]["k_max"], "basis.k_max", integer=True)
    n_points = cfg["grid"]["n_points"]
    if n_points is None:
        grid = Grid.supercell(R)
    else:
        _positive(n_points, "grid.n_points", integer=True)
        if n_points < 8:
            raise ConfigError("grid.n_points must be at least 8")
        grid = Grid(-0.5 * R, 0.5 * R, n_points)
    idx = cfg["state"]["index"]
    if isinstance(idx, bool) or not isinstance(idx, int) or idx < 0:
        raise ConfigError(f"state.index must be a non-negative integer, got {idx!r}")

    tr = cfg["transform"]
    if tr["kind"] not in ("translation", "inversion"):
        raise ConfigError(f"transform.kind must be translation or inversion, got {tr['kind']!r}")
    parameter = tr["parameter"]
    if parameter is None:
        parameter = float(cfg["lattice"]["spacing"]) if tr["kind"] == "translation" else 0.0
    if not isinstance(parameter, (int, float)) or not math.isfinite(parameter):
        raise ConfigError(f"transform.parameter must be a number, got {parameter!r}")
    transform = (SymmetryTransform.translation(float(parameter)) if tr["kind"] == "translation"
                 else SymmetryTransform.inversion(float(parameter)))
    scan = None
    if cfg["scenario"] == "shift-scan":
        if tr["kind"] != "translation":
            raise ConfigError("shift-scan needs a translation transform")
        if tr["scan"] is None or len(tr["scan"]) != 3:
            raise ConfigError("transform.scan must be [start, stop, step]")
        start, stop, step = (float(v) for v in tr["scan"])
        _positive(step, "transform.scan step")
        if not stop > start:
            raise ConfigError("transform.scan stop must exceed start")
        n = int(math.floor((stop - start) / step + 1e-9)) + 1
        scan = np.round(start + step * np.arange(n), 12)
    trim = tr["trim"]
    if trim is not None:
        if len(trim) != 2 or not trim[1] > trim[0]:
            raise ConfigError("transform.trim must be [lo, hi] with lo < hi")
        trim = (float(trim[0]), float(trim[1]))

    fl = cfg["floquet"]
    _positive(fl["substeps"], "floquet.substeps", integer=True)
    _positive(fl["n_time_samples"], "floquet.n_time_samples", integer=True)
    if cfg["scenario"] == "driven":
        if lattice.driving is None:
            raise ConfigError("driven scenario needs lattice.driving")
        if fl["substeps"] % fl["n_time_samples"]:
            raise ConfigError("floquet.substeps must be a multiple of floquet.n_time_samples")
    det = cfg["detection"]
    if det["floor"] is not None and (not isinstance(det["floor"], (int, float)) or det["floor"] < 0):
        raise ConfigError(f"detection.floor must be non-negative, got {det['floor']!r}")
    _positive(det["relative_floor"], "detection.relative_floor")
    _positive(det["min_plateau_points"], "detection.min_plateau_points", integer=True)

    if cfg["scenario"] == "convergence":
        cv = cfg["convergence"]
        for k in cv["k_max_values"]:
            _positive(k, "convergence.k_max_values entry", integer=True)
        for dx in cv["dx_values"]:
            _positive(dx, "convergence.dx_values entry")
        if cv["domain"] is None or len(cv["domain"]) != 2 or not cv["domain"][1] > cv["domain"][0]:
            raise ConfigError("convergence.domain must be [lo, hi] with lo < hi")
    if cfg["scenario"] == "delta-oracle":
        do = cfg["delta_oracle"]
        _positive(do["L"], "delta_oracle.L")
        _positive(do["k_min"], "delta_oracle.k_min")
        _positive(do["n_k"], "delta_oracle.n_k", integer=True)
        if not do["k_max"] > do["k_min"]:
            raise ConfigError("delta_oracle.k_max must exceed k_min")
    formats = cfg["output"]["formats"]
    if not set(formats) <= {"tsv", "json"}:
        raise ConfigError(f"output.formats must be drawn from tsv, json; got {formats!r}")
    return {"lattice": lattice, "grid": grid, "transform": transform, "scan": scan, "trim": trim}


# ---------------------------------------------------------------- output

def _num(v) -> str:
    if isinstance(v, (int, np.integer)):
        return str(int(v))
    return repr(float(v))


def write_table(path: Path, header, rows, comments=()):
    with open(path, "w", newline="\n") as fh:
        for line in comments:
            fh.write(f"# {line}\n")
        fh.write("\t".join(header) + "\n")
        for row in rows:
            fh.write("\t".join(_num(v) for v in row) + "\n")


def _complex(z):
    return {"re": float(np.real(z)), "im": float(np.imag(z))}


def _report_segments(report, estimates=()):
    return {
        "floor": report.floor,
        "plateaus": [{"start": p.start, "end": p.end, "value": _complex(p.value), "spread": p.spread}
                     for p in report.plateaus],
        "deviations": [{"start": d.start, "end": d.end, "length": d.length,
                        "peak_slope": d.peak_slope,
                        "inner_plateaus": [{"start": p.start, "end": p.end, "value": _complex(p.value)}
                                           for p in d.inner_plateaus]}
                       for d in report.deviations],
        "defect_estimates": [{"position": e.position, "interval": [e.interval.start, e.interval.end],
                              "expected_length": e.expected_length, "oversized": bool(e.oversized),
                              "unresolved": bool(e.unresolved)} for e in estimates],
    }


def _alignment(transform) -> float:
    return 0.5 * transform.parameter if transform.kind is Kind.TRANSLATION else 0.0


def _write_profile(out: Path, name, profile, cfg):
    if "tsv" not in cfg["output"]["formats"]:
        return
    offset = _alignment(profile.transform)
    q = profile.values
    rows = np.column_stack([profile.x + offset, q.real, q.imag, np.abs(q) ** 2])
    write_table(out / name, ["x", "re_Q", "im_Q", "abs_Q2"], rows,
                [f"transform={profile.transform.kind.value} parameter={_num(profile.transform.parameter)}",
                 f"alignment_offset={_num(offset)} (x column is the grid position plus this offset)"])


def _segment(profile, cfg, resolved):
    det = cfg["detection"]
    T = profile.transform
    pair = T.parameter if det["pair"] and T.kind is Kind.TRANSLATION and T.parameter > 0 else None
    return segment_constancy(profile, det["floor"], wrap=True, pair_length=pair,
                             relative_floor=det["relative_floor"], median_factor=det["median_factor"],
                             min_plateau_points=det["min_plateau_points"])


def _plateau_epsilon(state, transform, report, dx):
    """Convergence measure over the longest plateau, re-sampled so that wrapped plateaus work."""
    if not report.plateaus:
        return None
    longest = max(report.plateaus, key=lambda p: p.length)
    if longest.length < 2 * dx:
        return None
    grid = Grid.with_spacing(longest.start, longest.end, dx)
    profile = two_point_current(state, transform, grid)
    if not np.any(profile.values):
        return None
    return convergence_measure(profile)


# ---------------------------------------------------------------- scenarios

def _run_static(cfg, resolved, out):
    lattice, grid, T = resolved["lattice"], resolved["grid"], resolved["transform"]
    idx = cfg["state"]["index"]
    state = stationary_states(lattice.static(), cfg["basis"]["k_max"], idx + 1, grid)[idx]
    profile = two_point_current(state, T, grid)
    _write_profile(out, "profile.tsv", profile, cfg)
    report = _segment(profile, cfg, resolved)
    estimates = locate_defects(report, T, lattice.support_w) if T.kind is Kind.TRANSLATION else []
    body = {"energy": state.energy_E, **_report_segments(report, estimates),
            "epsilon_longest_plateau": _plateau_epsilon(state, T, report, grid.spacing_dx)}
    if not report.plateaus:
        raise NoSymmetryError("profile has no plateau", body)
    return body


def _run_scan(cfg, resolved, out):
    lattice, grid = resolved["lattice"], resolved["grid"]
    idx = cfg["state"]["index"]
    state = stationary_states(lattice.static(), cfg["basis"]["k_max"], idx + 1, grid)[idx]
    scan = shift_scan(state, resolved["scan"], grid)
    trim = resolved["trim"] or (float(grid.x[0]), float(grid.x[-1]))
    result = infer_period(scan, trim)
    if "tsv" in cfg["output"]["formats"]:
        logq = scan.log10_magnitude2
        rows = [(d, x, logq[i, j]) for i, d in enumerate(scan.parameters) for j, x in enumerate(scan.x)]
        write_table(out / "scan.tsv", ["delta_L", "x", "log10_abs_Q2"], rows)
        write_table(out / "scan_epsilon.tsv", ["delta_L", "epsilon"],
                    zip(result.parameters, result.scores))
    body = {"energy": state.energy_E, "trim": list(trim), "inferred_period": result.period,
            "significant_minima": list(result.minima), "flat": result.flat,
            "epsilon": [{"delta_L": float(d), "epsilon": float(s)}
                        for d, s in zip(result.parameters, result.scores)]}
    if result.period is None:
        raise NoSymmetryError("shift scan shows no significant minimum", body)
    return body


def _run_driven(cfg, resolved, out):
    lattice, grid, T = resolved["lattice"], resolved["grid"], resolved["transform"]
    fl = cfg["floquet"]
    basis = PlaneWaveBasis(cfg["basis"]["k_max"], lattice.supercell_R)
    mode, sol = lowest_mode(lattice, basis, fl["substeps"], fl["n_time_samples"], grid)
    profile = averaged_current(mode, T, grid)
    _write_profile(out, "profile.tsv", profile, cfg)
    J = probability_current(mode, grid)
    if "tsv" in cfg["output"]["formats"]:
        write_table(out / "current.tsv", ["x", "re_J", "im_J"],
                    np.column_stack([grid.x, J.values.real, J.values.imag]))
    report = _segment(profile, cfg, resolved)
    estimates = (locate_defects(report, T, lattice.support_w, lattice.amplitude)
                 if T.kind is Kind.TRANSLATION else [])
    body = {"quasienergy": mode.quasienergy_eps, "mean_energy": mode.mean_energy,
            "unitarity_defect": sol.propagator.unitarity_defect(),
            "averaging": "exact period average of the density matrix",
            "probability_current": {"max_abs": float(np.max(np.abs(J.values))),
                                    "spread": float(np.ptp(J.values.real))},
            **_report_segments(report, estimates)}
    if not report.plateaus:
        raise NoSymmetryError("averaged profile has no plateau", body)
    return body


def _run_convergence(cfg, resolved, out):
    lattice, T = resolved["lattice"].static(), resolved["transform"]
    cv = cfg["convergence"]
    lo, hi = (float(v) for v in cv["domain"])
    idx = cfg["state"]["index"]
    rows = []
    for dx in cv["dx_values"]:
        grid = Grid.with_spacing(lo, hi, float(dx))
        for k in cv["k_max_values"]:
            state = stationary_states(lattice, int(k), idx + 1, grid)[idx]
            eps = convergence_measure(two_point_current(state, T, grid, derivative="grid"))
            rows.append((int(k), grid.spacing_dx, eps))
    if "tsv" in cfg["output"]["formats"]:
        write_table(out / "convergence.tsv", ["k_max", "dx", "epsilon"], rows)
    return {"derivative": "centered differences at the grid spacing",
            "table": [{"k_max": k, "dx": dx, "epsilon": e} for k, dx, e in rows]}


def _run_delta_oracle(cfg, resolved, out):
    do = cfg["delta_oracle"]
    ks = np.linspace(float(do["k_min"]), float(do["k_max"]), int(do["n_k"]))
    rows = []
    for k in ks:
        ql, qc, qr = delta_defect_analytic(float(do["strength_c"]), float(k), float(do["L"]),
                                           complex(do["F0"]))
        scale = max(abs(ql), abs(qc), abs(qr))
        spread = max(abs(ql - qc), abs(qc - qr), abs(ql - qr)) / scale
        rows.append((k, abs(qc / ql) ** 2, abs(qr / ql) ** 2, spread))
    if "tsv" in cfg["output"]["formats"]:
        write_table(out / "delta_oracle.tsv",
                    ["k", "abs_QC_over_QL_2", "abs_QR_over_QL_2", "plateau_discrepancy"], rows)
    return {"min_plateau_discrepancy": float(min(r[3] for r in rows)),
            "globally_constant_at_some_k": bool(min(r[3] for r in rows) < 1e-12)}


RUNNERS = {"static-defect": _run_static, "shift-scan": _run_scan, "driven": _run_driven,
           "convergence": _run_convergence, "delta-oracle": _run_delta_oracle}


def _knobs():
    from . import detect, floquet, hamiltonian
    return {"eigen_residual_rel": hamiltonian.RESIDUAL_TOL,
            "floquet_unitarity_tol": floquet.UNITARITY_TOL,
            "floquet_eigen_residual_tol": floquet.EIGEN_RESIDUAL_TOL,
            "floquet_periodicity_tol": floquet.PERIODICITY_TOL,
            "oversize_factor": detect.OVERSIZE_FACTOR}


def output_directory(cfg, override=None) -> Path:
    return Path(override or cfg["output"]["directory"] or os.environ.get(OUTPUT_ENV) or DEFAULT_OUTPUT)


def run_scenario(cfg: dict, out_dir=None) -> int:
    """Validate, run and write outputs; returns the exit status."""
    try:
        resolved = validate(cfg)
    except ConfigError as exc:
        print(f"lsinv: config error: {exc}", file=sys.stderr)
        return EXIT_CONFIG
    out = output_directory(cfg, out_dir)
    out.mkdir(parents=True, exist_ok=True)
    lattice = resolved["lattice"]
    header = {"lsinv_version": __version__, "config": cfg,
              "resolved": {"supercell_R": lattice.supercell_R, "support_w": lattice.support_w,
                           "grid_dx": resolved["grid"].spacing_dx,
                           "grid_points": resolved["grid"].n_points,
                           "alignment_offset": _alignment(resolved["transform"]),
                           "tolerances": _knobs()}}
    status, body = EXIT_OK, {}
    try:
        body = RUNNERS[cfg["scenario"]](cfg, resolved, out)
    except NoSymmetryError as exc:
        status, body = EXIT_NO_SYMMETRY, exc.args[1]
        body["error"] = {"category": "no-symmetry-found", "message": exc.args[0]}
        print(f"lsinv: no symmetry found: {exc.args[0]}", file=sys.stderr)
    except (NumericalError, np.linalg.LinAlgError) as exc:
        status = EXIT_NUMERICAL
        body = {"error": {"category": "numerical", "module": type(exc).__module__,
                          "type": type(exc).__name__, "message": str(exc)}}
        print(f"lsinv: numerical failure ({type(exc).__name__}): {exc}", file=sys.stderr)
    if "json" in cfg["output"]["formats"]:
        with open(out / "report.json", "w", newline="\n") as fh:
            json.dump({**header, "status": status, "result": body}, fh, indent=2, sort_keys=True)
            fh.write("\n")
    return status


def main(argv=None) -> int:
    parser = argparse.ArgumentParser(prog="lsinv", description="Local-symmetry invariants of 1D lattices.")
    parser.add_argument("--version", action="version", version=f"lsinv {__version__}")
    sub = parser.add_subparsers(dest="command", required=True)
    run = sub.add_parser("run", help="run a scenario config (JSON file or bundled scenario name)")
    run.add_argument("config")
    run.add_argument("--out", help=f"output directory (default: config, then ${OUTPUT_ENV}, then ./{DEFAULT_OUTPUT})")
    run.add_argument("--k-max", type=int, help="override basis.k_max")
    run.add_argument("--floor", type=float, help="override detection.floor")
    sub.add_parser("scenarios", help="list bundled scenario names")
    args = parser.parse_args(argv)

    if args.command == "scenarios":
        folder = resources.files("lsinv") / "scenarios"
        for name in sorted(p.name[:-5] for p in folder.iterdir() if p.name.endswith(".json")):
            print(name)
        return EXIT_OK
    try:
        cfg = load_config(args.config)
    except ConfigError as exc:
        print(f"lsinv: config error: {exc}", file=sys.stderr)
        return EXIT_CONFIG
    if args.k_max is not None:
        cfg["basis"]["k_max"] = args.k_max
    if args.floor is not None:
        cfg["detection"]["floor"] = args.floor
    return run_scenario(cfg, args.out)


if __name__ == "__main__":
    sys.exit(main())
