"""Batch front-end: configuration files, subcommands, deterministic artifacts.

Subcommands:

    simulate        integrate a trajectory ensemble, write records,
                    correlations, spectra, and a JSON summary
    theory          mean-field dipole, thresholds, dispersion roots, and the
                    predicted linewidth for one parameter point
    phase-diagram   classify a (collective_linewidth, doppler_width) grid,
                    resumable through a JSONL manifest
    spectra         recompute correlations and spectra from stored records

Configuration is one JSON file (--config); --seed, --workers, and --out
override the corresponding fields.  Exit codes: 0 success, 2 configuration
error, 3 numerical failure.

Determinism contract: trajectory k of master seed s draws from the stream
seeded by SeedSequence(entropy=s, spawn_key=(k,)), so results are invariant
under worker count and scheduling order.  Every artifact carries the hash of
the resolved physics configuration (paths and worker counts excluded, since
they must not affect numeric content).
"""

from __future__ import annotations

import argparse
import json
import sys
from concurrent.futures import ProcessPoolExecutor, as_completed
from pathlib import Path

import numpy as np

from . import io
from .beamsim import SimConfig, run_ensemble
from .dispersion import (RootNotFoundError, classify_phase, find_higgs_root,
                         find_nsr_root, threshold_nsr)
from .meanfield import (NotSuperradiantError, QuadratureConvergenceError,
                        linewidth_ssr, solve_dipole)
from .model import ModelParams
from .observables import (dipole_correlation, effective_rabi_sq, fit_exponent,
                          g1, g2, spectrum)

EXIT_OK = 0
EXIT_CONFIG = 2
EXIT_NUMERICAL = 3

_NUMERICAL_ERRORS = (QuadratureConvergenceError, RootNotFoundError,
                     NotSuperradiantError, RuntimeError, FloatingPointError,
                     ArithmeticError)

_MISSING = object()


class ConfigError(ValueError):
    """Invalid or incomplete configuration; message names the field."""


def _get(cfg: dict, path: str, default=_MISSING):
    node = cfg
    for part in path.split("."):
        if not isinstance(node, dict) or part not in node:
            if default is _MISSING:
                raise ConfigError(f"missing required config field: {path}")
            return default
        node = node[part]
    return node


def _model_params(cfg: dict) -> ModelParams:
    try:
        return ModelParams(
            n_atoms=_get(cfg, "params.n_atoms"),
            collective_linewidth=_get(cfg, "params.collective_linewidth"),
            doppler_width=_get(cfg, "params.doppler_width"),
            gamma1=_get(cfg, "params.gamma1", 0.0),
            gamma2=_get(cfg, "params.gamma2", 0.0),
        )
    except ValueError as err:
        raise ConfigError(f"invalid params block: {err}") from err


def _sim_config(cfg: dict, seed_override: int | None) -> SimConfig:
    seed = seed_override if seed_override is not None else _get(cfg, "sim.seed", 0)
    try:
        return SimConfig(
            t_sim=_get(cfg, "sim.t_sim"),
            dt=_get(cfg, "sim.dt", 1e-3),
            record_stride=_get(cfg, "sim.record_stride", 10),
            seed=seed,
            warm_start=_get(cfg, "sim.warm_start", True),
        )
    except ValueError as err:
        raise ConfigError(f"invalid sim block: {err}") from err


_ANALYSIS_DEFAULTS = {
    "t0": 10.0,
    "max_lag": 20.0,
    "tf": 20.0,
    "fit_window": [5.0, 15.0],
    "fit_model": "exp_tail",
    "n_offsets": 1,
    "spectra": ["S1", "S2"],
    "omega_max": None,
}


def _analysis(cfg: dict) -> dict:
    block = _get(cfg, "analysis", {})
    if not isinstance(block, dict):
        raise ConfigError("analysis must be a JSON object")
    unknown = set(block) - set(_ANALYSIS_DEFAULTS) - {"threshold_scan"}
    if unknown:
        raise ConfigError(f"unknown analysis fields: {sorted(unknown)}")
    out = {**_ANALYSIS_DEFAULTS, **block}
    if out["fit_model"] not in ("exp_tail", "linewidth"):
        raise ConfigError(f"analysis.fit_model must be 'exp_tail' or "
                          f"'linewidth', got {out['fit_model']!r}")
    bad = [s for s in out["spectra"] if s not in ("S1", "S2")]
    if bad:
        raise ConfigError(f"analysis.spectra entries must be 'S1' or 'S2', got {bad}")
    if out["tf"] > out["max_lag"] + 1e-9:
        raise ConfigError("analysis.tf must not exceed analysis.max_lag")
    window = out["fit_window"]
    if (not isinstance(window, (list, tuple)) or len(window) != 2
            or not window[0] < window[1]):
        raise ConfigError(f"analysis.fit_window must be [t_a, t_b] with "
                          f"t_a < t_b, got {window}")
    if out["max_lag"] < window[1]:
        raise ConfigError("analysis.fit_window must lie inside max_lag")
    return out


def _resolved(command: str, **sections) -> dict:
    """Physics configuration that identifies a run's numeric content."""
    resolved = {"command": command}
    for key, value in sections.items():
        if value is None:
            continue
        resolved[key] = value
    return resolved


def _params_dict(params: ModelParams) -> dict:
    return {"n_atoms": params.n_atoms,
            "collective_linewidth": params.collective_linewidth,
            "doppler_width": params.doppler_width,
            "gamma1": params.gamma1,
            "gamma2": params.gamma2}


def _sim_dict(sim: SimConfig) -> dict:
    return {"t_sim": sim.t_sim, "dt": sim.dt, "record_stride": sim.record_stride,
            "seed": sim.seed, "warm_start": sim.warm_start}


def _out_dir(cfg: dict, args) -> Path:
    out = args.out if args.out is not None else _get(cfg, "output_dir", "out")
    path = Path(out)
    path.mkdir(parents=True, exist_ok=True)
    return path


def _workers(cfg: dict, args) -> int:
    workers = args.workers if args.workers is not None else _get(cfg, "workers", 1)
    if int(workers) != workers or workers < 1:
        raise ConfigError(f"workers must be a positive integer, got {workers}")
    return int(workers)


def _analyze(records, analysis: dict, params: ModelParams, outdir: Path,
             header: dict) -> dict:
    """Correlations, spectra, fits; writes CSVs and returns summary fields."""
    t0 = analysis["t0"]
    series1 = g1(records, t0, analysis["max_lag"], analysis["n_offsets"])
    series2 = g2(records, t0, analysis["max_lag"], analysis["n_offsets"])
    io.write_correlation(outdir / "correlations_g1.csv", series1, header)
    io.write_correlation(outdir / "correlations_g2.csv", series2, header)
    for which in analysis["spectra"]:
        series = series1 if which == "S1" else series2
        result = spectrum(series, analysis["tf"], which,
                          omega_max=analysis["omega_max"])
        io.write_spectrum(outdir / f"spectrum_{which}.csv", result, header)
    rate, stderr = fit_exponent(series1, tuple(analysis["fit_window"]),
                                analysis["fit_model"])
    mean_j2 = dipole_correlation(records, t0)
    return {
        "fit": {"model": analysis["fit_model"], "rate": rate, "stderr": stderr,
                "window": list(analysis["fit_window"])},
        "dipole_correlation": mean_j2,
        "dipole_correlation_per_atom_sq": mean_j2 / params.n_atoms**2,
        "effective_rabi_sq": effective_rabi_sq(records, params, t0),
        "g2_zero": float(series2.values[0].real),
    }


def cmd_simulate(cfg: dict, args) -> int:
    params = _model_params(cfg)
    sim = _sim_config(cfg, args.seed)
    n_traj = _get(cfg, "n_traj")
    if int(n_traj) != n_traj or n_traj < 1:
        raise ConfigError(f"n_traj must be a positive integer, got {n_traj}")
    n_traj = int(n_traj)
    analysis = _analysis(cfg)
    if analysis["t0"] + analysis["max_lag"] > sim.t_sim + 1e-9:
        raise ConfigError("analysis.t0 + analysis.max_lag must not exceed sim.t_sim")
    workers = _workers(cfg, args)
    outdir = _out_dir(cfg, args)

    resolved = _resolved("simulate", params=_params_dict(params),
                         sim=_sim_dict(sim), n_traj=n_traj, analysis=analysis)
    digest = io.config_hash(resolved)
    header = {"artifact_version": io.ARTIFACT_VERSION, "config_hash": digest}

    records = run_ensemble(params, sim, n_traj, workers=workers)
    for record in records:
        k = record.meta["trajectory"]
        io.write_record(outdir / f"trajectory_{k:04d}.csv", record, header)

    summary = {
        "artifact_version": io.ARTIFACT_VERSION,
        "config_hash": digest,
        "config": resolved,
        "n_traj_completed": len(records),
        "failed_trajectories": records[0].meta.get("failed_trajectories", []),
        **_analyze(records, analysis, params, outdir, header),
    }
    io.write_json(outdir / "summary.json", summary)
    return EXIT_OK


def cmd_theory(cfg: dict, args) -> int:
    params = _model_params(cfg)
    analysis = _get(cfg, "analysis", {})
    scan = analysis.get("threshold_scan", [0.0, 1.0, 5.0, 20.0]) \
        if isinstance(analysis, dict) else [0.0, 1.0, 5.0, 20.0]
    outdir = _out_dir(cfg, args)

    resolved = _resolved("theory", params=_params_dict(params),
                         threshold_scan=list(scan))
    digest = io.config_hash(resolved)
    header = {"artifact_version": io.ARTIFACT_VERSION, "config_hash": digest}

    n_gamma_tau = params.collective_linewidth
    delta_tau = params.doppler_width
    scan = np.asarray(scan, dtype=float)
    io.write_table(outdir / "theory_thresholds.csv",
                   {"delta_tau": scan, "threshold": threshold_nsr(scan)},
                   header)

    point = classify_phase(n_gamma_tau, delta_tau, params=params)
    solution = solve_dipole(params)

    def root_payload(root) -> dict | None:
        if root is None:
            return None
        return {"re": root.nu.real, "im": root.nu.imag,
                "residual": root.residual, "converged": root.converged}

    payload = {
        "artifact_version": io.ARTIFACT_VERSION,
        "config_hash": digest,
        "config": resolved,
        "phase": point.phase,
        "j_par0": solution.j_par0,
        "superradiant": solution.superradiant,
        "threshold_at_doppler_width": float(threshold_nsr(delta_tau)),
        "nsr_root": root_payload(point.nsr_root),
        "higgs_root": root_payload(point.higgs_root),
        "linewidth": None,
    }
    if solution.superradiant:
        prediction = linewidth_ssr(params)
        payload["linewidth"] = {"gamma_line": prediction.gamma_line,
                                "t_char": prediction.t_char,
                                "c_perp": prediction.c_perp}
    io.write_json(outdir / "theory.json", payload)
    return EXIT_OK


def _axis(cfg: dict, name: str) -> np.ndarray:
    lo = _get(cfg, f"sweep.{name}.min")
    hi = _get(cfg, f"sweep.{name}.max")
    count = _get(cfg, f"sweep.{name}.count")
    if int(count) != count or count < 1:
        raise ConfigError(f"sweep.{name}.count must be a positive integer")
    if not lo <= hi:
        raise ConfigError(f"sweep.{name}: min must not exceed max")
    return np.linspace(lo, hi, int(count))


def _classify_point(task):
    i, j, n_gamma_tau, delta_tau, n_atoms = task
    row = {"i": i, "j": j, "collective_linewidth": n_gamma_tau,
           "doppler_width": delta_tau}
    try:
        template = ModelParams(n_atoms=n_atoms, collective_linewidth=max(n_gamma_tau, 1e-12),
                               doppler_width=delta_tau)
        point = classify_phase(n_gamma_tau, delta_tau, params=template)
        row["phase"] = point.phase
        row["j_par0"] = point.j_par0
        for tag, root in (("nsr", point.nsr_root), ("higgs", point.higgs_root)):
            row[f"{tag}_re"] = root.nu.real if root is not None else float("nan")
            row[f"{tag}_im"] = root.nu.imag if root is not None else float("nan")
    except Exception:  # noqa: BLE001 - single grid point must not kill the sweep
        row["phase"] = "unclassified"
        row["j_par0"] = float("nan")
        row["nsr_re"] = row["nsr_im"] = float("nan")
        row["higgs_re"] = row["higgs_im"] = float("nan")
    return row


_PHASE_COLUMNS = ["i", "j", "collective_linewidth", "doppler_width", "phase",
                  "j_par0", "nsr_re", "nsr_im", "higgs_re", "higgs_im"]


def cmd_phase_diagram(cfg: dict, args) -> int:
    gammas = _axis(cfg, "collective_linewidth")
    deltas = _axis(cfg, "doppler_width")
    unknown = set(_get(cfg, "sweep")) - {"collective_linewidth", "doppler_width"}
    if unknown:
        raise ConfigError(f"unknown sweep axes: {sorted(unknown)}; expected "
                          f"collective_linewidth and doppler_width")
    n_atoms = _get(cfg, "params.n_atoms", 1000)
    workers = _workers(cfg, args)
    outdir = _out_dir(cfg, args)

    resolved = _resolved(
        "phase-diagram", n_atoms=n_atoms,
        sweep={"collective_linewidth": [float(gammas[0]), float(gammas[-1]), len(gammas)],
               "doppler_width": [float(deltas[0]), float(deltas[-1]), len(deltas)]})
    digest = io.config_hash(resolved)

    manifest = outdir / "phase_manifest.jsonl"
    done: dict[tuple[int, int], dict] = {}
    if manifest.exists():
        for line in manifest.read_text().splitlines():
            if not line.strip():
                continue
            row = json.loads(line)
            if row.pop("config_hash", None) == digest:
                done[(row["i"], row["j"])] = row

    tasks = [(i, j, float(g), float(d), n_atoms)
             for i, g in enumerate(gammas) for j, d in enumerate(deltas)
             if (i, j) not in done]

    with manifest.open("a") as sink:
        def record_row(row: dict) -> None:
            done[(row["i"], row["j"])] = row
            sink.write(json.dumps({**row, "config_hash": digest},
                                  sort_keys=True) + "\n")
            sink.flush()

        if workers > 1 and tasks:
            with ProcessPoolExecutor(max_workers=workers) as pool:
                futures = [pool.submit(_classify_point, t) for t in tasks]
                for future in as_completed(futures):
                    record_row(future.result())
        else:
            for task in tasks:
                record_row(_classify_point(task))

    rows = [done[key] for key in sorted(done)]
    columns = {name: np.array([row[name] for row in rows]) for name in _PHASE_COLUMNS}
    io.write_table(outdir / "phase_diagram.csv", columns,
                   {"artifact_version": io.ARTIFACT_VERSION, "config_hash": digest})
    return EXIT_OK


def cmd_spectra(cfg: dict, args) -> int:
    outdir = _out_dir(cfg, args)
    records_dir = Path(_get(cfg, "records_dir", str(outdir)))
    paths = sorted(records_dir.glob("trajectory_*.csv"))
    if not paths:
        raise ConfigError(f"no trajectory records found in {records_dir}")
    params = _model_params(cfg)
    analysis = _analysis(cfg)

    records = [io.read_record(p) for p in paths]
    resolved = _resolved("spectra", params=_params_dict(params),
                         analysis=analysis, n_records=len(records))
    digest = io.config_hash(resolved)
    header = {"artifact_version": io.ARTIFACT_VERSION, "config_hash": digest}

    summary = {
        "artifact_version": io.ARTIFACT_VERSION,
        "config_hash": digest,
        "config": resolved,
        "n_records": len(records),
        **_analyze(records, analysis, params, outdir, header),
    }
    io.write_json(outdir / "spectra_summary.json", summary)
    return EXIT_OK


_COMMANDS = {
    "simulate": cmd_simulate,
    "theory": cmd_theory,
    "phase-diagram": cmd_phase_diagram,
    "spectra": cmd_spectra,
}


def _build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(
        prog="beamlaser",
        description="Collective-emission beam laser: simulation and theory batch runner.")
    sub = parser.add_subparsers(dest="command", required=True)
    for name, help_text in (
            ("simulate", "integrate a trajectory ensemble and analyze it"),
            ("theory", "mean-field, thresholds, dispersion roots, linewidth"),
            ("phase-diagram", "classify a parameter grid (resumable)"),
            ("spectra", "recompute correlations/spectra from stored records")):
        cmd = sub.add_parser(name, help=help_text)
        cmd.add_argument("--config", required=True, help="JSON configuration file")
        cmd.add_argument("--seed", type=int, default=None,
                         help="override sim.seed from the config")
        cmd.add_argument("--workers", type=int, default=None,
                         help="override workers from the config")
        cmd.add_argument("--out", default=None,
                         help="override output_dir from the config")
    return parser


def main(argv=None) -> int:
    args = _build_parser().parse_args(argv)
    try:
        raw = Path(args.config).read_text()
    except OSError as err:
        print(f"config error: cannot read {args.config}: {err}", file=sys.stderr)
        return EXIT_CONFIG
    try:
        cfg = json.loads(raw)
    except json.JSONDecodeError as err:
        print(f"config error: {args.config} is not valid JSON: {err}",
              file=sys.stderr)
        return EXIT_CONFIG
    if not isinstance(cfg, dict):
        print("config error: top-level JSON value must be an object",
              file=sys.stderr)
        return EXIT_CONFIG

    try:
        return _COMMANDS[args.command](cfg, args)
    except ConfigError as err:
        print(f"config error: {err}", file=sys.stderr)
        return EXIT_CONFIG
    except _NUMERICAL_ERRORS + (ValueError,) as err:
        print(f"numerical failure: {err}", file=sys.stderr)
        return EXIT_NUMERICAL


if __name__ == "__main__":
    sys.exit(main())
