"""Command-line front end: scenario runs, saturation-level sweeps, and
CSV/JSON emission of trajectories, energy traces, spectra, and critical
lengths.

Subcommands
-----------
simulate          one closed-loop run; writes a long-form trajectory CSV
                  (time,x,y) and an energy CSV (time,energy)
sweep             one run per saturation level (token `inf` = unsaturated
                  linear law); per-level energy CSVs plus a summary CSV
                  (level,time_to_1pct)
critical-lengths  the domain lengths carrying undamped modes, as CSV
spectrum          dense spectrum of the discrete generator, as CSV
resolvent         fixed-point solve of the nonlinear resolvent problem

Every flag can also be set through an environment variable with prefix
KDVSAT_ (e.g. KDVSAT_T_FINAL) or through a JSON manifest passed with
--config; explicit flags win over the environment, which wins over the
manifest.  --emit-manifest writes the fully resolved scenario back out,
and re-running from that manifest reproduces the outputs byte for byte.

Exit codes: 0 success, 2 invalid flags/config, 3 simulation divergence,
4 I/O failure, 5 resolvent non-convergence.
"""
from __future__ import annotations

import argparse
import json
import math
import os
import sys
from dataclasses import asdict, dataclass, fields

import numpy as np

from .core import (
    LinearFeedback,
    OpenLoop,
    SaturatedFeedback,
    SaturationLevels,
    State,
    init_profile,
    make_grid,
)
from .diagnostics import energy
from .errors import (
    KdvSatError,
    NoConvergence,
    NonFiniteState,
)
from .integrator import SimConfig, simulate
from .resolvent import ResolventProblem, resolvent_fixed_point
from .spectral import critical_lengths, spectrum

EXIT_OK = 0
EXIT_USAGE = 2
EXIT_DIVERGED = 3
EXIT_IO = 4
EXIT_NO_CONVERGENCE = 5

ENV_PREFIX = "KDVSAT_"
MAX_SPECTRUM_INTERIOR = 2048

TWO_PI = 2.0 * math.pi


@dataclass(frozen=True)
class RunManifest:
    """Fully resolved scenario: grid, profile, feedback, stepping, outputs.

    Serializes to JSON with keys equal to the field names (the snake_case
    form of the CLI flags) and round-trips losslessly.
    """

    length: float = TWO_PI
    cells: int = 256
    dt: float = 1e-3
    t_final: float = 10.0
    snapshot_stride: int = 100
    energy_stride: int = 1
    profile: str = "one-minus-cos"
    amplitude: float = 100.0
    feedback: str = "saturated"
    gain: float = 1.0
    sat_level: float = 1.0
    sat_levels: str | None = None
    traj_out: str | None = None
    energy_out: str | None = None
    out_dir: str | None = None

    def to_json(self) -> str:
        return json.dumps(asdict(self), indent=2, sort_keys=True) + "\n"

    @classmethod
    def from_dict(cls, data: dict) -> "RunManifest":
        known = {f.name for f in fields(cls)}
        unknown = set(data) - known
        if unknown:
            raise ValueError(f"unknown manifest keys: {sorted(unknown)}")
        return cls(**data)


# flag name -> (type, manifest default); shared across scenario commands
_SCENARIO_OPTIONS = {
    "length": float,
    "cells": int,
    "dt": float,
    "t_final": float,
    "snapshot_stride": int,
    "energy_stride": int,
    "profile": str,
    "amplitude": float,
    "feedback": str,
    "gain": float,
    "sat_level": float,
    "sat_levels": str,
    "traj_out": str,
    "energy_out": str,
    "out_dir": str,
}


def _fmt(x: float) -> str:
    """Render a float with 17 significant digits (lossless for float64)."""
    return format(float(x), ".17g")


def _env_value(key: str) -> str | None:
    return os.environ.get(ENV_PREFIX + key.upper())


def _load_config(path: str | None) -> dict:
    if path is None:
        return {}
    with open(path, "r", encoding="utf-8") as fh:
        data = json.load(fh)
    if not isinstance(data, dict):
        raise ValueError(f"config file {path!r} must hold a JSON object")
    return data


def _resolve_scenario(args: argparse.Namespace) -> RunManifest:
    """Merge defaults < config file < environment < explicit flags."""
    config = _load_config(getattr(args, "config", None))
    manifest = RunManifest.from_dict(config) if config else RunManifest()
    resolved = {}
    for key, typ in _SCENARIO_OPTIONS.items():
        value = getattr(args, key, None)
        if value is None:
            env = _env_value(key)
            if env is not None:
                value = typ(env)
        if value is None and config:
            value = getattr(manifest, key)
        if value is None:
            value = getattr(RunManifest(), key)
        resolved[key] = typ(value) if value is not None else None
    return RunManifest(**resolved)


def _build_initial_state(manifest: RunManifest) -> State:
    grid = make_grid(manifest.length, manifest.cells)
    kind, mode = _parse_profile(manifest.profile)
    return init_profile(grid, kind, manifest.amplitude, mode_number=mode)


def _parse_profile(token: str) -> tuple[str, int]:
    token = token.strip().lower().replace("_", "-")
    if token == "one-minus-cos":
        return "one_minus_cos", 1
    if token.startswith("sine"):
        _, _, tail = token.partition(":")
        mode = int(tail) if tail else 1
        return "sine_mode", mode
    raise ValueError(
        f"unknown profile {token!r}; use 'one-minus-cos' or 'sine:<k>'"
    )


def _build_feedback(kind: str, gain: float, sat_level: float):
    kind = kind.strip().lower()
    if kind == "open":
        return OpenLoop()
    if kind == "linear":
        return LinearFeedback(gain)
    if kind == "saturated":
        return SaturatedFeedback(gain, SaturationLevels.symmetric(sat_level))
    raise ValueError(f"unknown feedback {kind!r}; choose open, linear, or saturated")


def _write_rows(path: str, header: str, rows) -> None:
    with open(path, "w", encoding="utf-8", newline="") as fh:
        fh.write(header + "\n")
        for row in rows:
            fh.write(",".join(row) + "\n")


def _trajectory_rows(traj):
    for t, state in traj.snapshots:
        ts = _fmt(t)
        yield (ts, _fmt(0.0), _fmt(0.0))
        for x, y in zip(state.grid.interior_nodes(), state.values):
            yield (ts, _fmt(x), _fmt(y))
        yield (ts, _fmt(state.grid.length), _fmt(0.0))


def _energy_rows(trace):
    for t, e in zip(trace.times, trace.energies):
        yield (_fmt(t), _fmt(e))


def _maybe_emit_manifest(args: argparse.Namespace, manifest: RunManifest) -> None:
    path = getattr(args, "emit_manifest", None)
    if path:
        with open(path, "w", encoding="utf-8") as fh:
            fh.write(manifest.to_json())


def _cmd_simulate(args: argparse.Namespace) -> int:
    manifest = _resolve_scenario(args)
    if not manifest.traj_out or not manifest.energy_out:
        print("error: simulate requires --traj-out and --energy-out", file=sys.stderr)
        return EXIT_USAGE
    y0 = _build_initial_state(manifest)
    feedback = _build_feedback(manifest.feedback, manifest.gain, manifest.sat_level)
    config = SimConfig(
        manifest.dt, manifest.t_final, manifest.snapshot_stride, manifest.energy_stride
    )
    _maybe_emit_manifest(args, manifest)
    traj = simulate(y0, feedback, config)
    _write_rows(manifest.traj_out, "time,x,y", _trajectory_rows(traj))
    _write_rows(manifest.energy_out, "time,energy", _energy_rows(traj.energy_trace))
    return EXIT_OK


def _parse_sat_levels(tokens: str) -> list[str]:
    levels = [tok.strip() for tok in tokens.split(",") if tok.strip()]
    if not levels:
        raise ValueError("--sat-levels needs a non-empty comma-separated list")
    return levels


def _cmd_sweep(args: argparse.Namespace) -> int:
    manifest = _resolve_scenario(args)
    if not manifest.sat_levels or not manifest.out_dir:
        print("error: sweep requires --sat-levels and --out-dir", file=sys.stderr)
        return EXIT_USAGE
    tokens = _parse_sat_levels(manifest.sat_levels)
    y0 = _build_initial_state(manifest)
    config = SimConfig(
        manifest.dt, manifest.t_final, manifest.snapshot_stride, manifest.energy_stride
    )
    _maybe_emit_manifest(args, manifest)
    os.makedirs(manifest.out_dir, exist_ok=True)

    e0 = energy(y0)
    summary = []
    for token in tokens:
        if token.lower() == "inf":
            feedback = _build_feedback("linear", manifest.gain, manifest.sat_level)
        else:
            feedback = _build_feedback("saturated", manifest.gain, float(token))
        traj = simulate(y0, feedback, config)
        out = os.path.join(manifest.out_dir, f"energy_u0_{token}.csv")
        _write_rows(out, "time,energy", _energy_rows(traj.energy_trace))
        summary.append((token, _time_to_fraction(traj.energy_trace, 0.01 * e0)))

    summary_path = os.path.join(manifest.out_dir, "sweep_summary.csv")
    _write_rows(
        summary_path,
        "level,time_to_1pct",
        ((tok, _fmt(t) if t is not None else "nan") for tok, t in summary),
    )
    return EXIT_OK


def _time_to_fraction(trace, threshold: float) -> float | None:
    """First recorded time with E(t) <= threshold, None if never reached."""
    hits = np.nonzero(trace.energies <= threshold)[0]
    if hits.size == 0:
        return None
    return float(trace.times[hits[0]])


def _cmd_critical_lengths(args: argparse.Namespace) -> int:
    entries = critical_lengths(args.max_length)
    rows = ((str(cl.k), str(cl.l), _fmt(cl.length)) for cl in entries)
    if args.out:
        _write_rows(args.out, "k,l,length", rows)
    else:
        print("k,l,length")
        for row in rows:
            print(",".join(row))
    return EXIT_OK


def _cmd_spectrum(args: argparse.Namespace) -> int:
    if args.cells - 1 > MAX_SPECTRUM_INTERIOR:
        print(
            f"error: cells-1 = {args.cells - 1} exceeds the dense eigensolve "
            f"cap {MAX_SPECTRUM_INTERIOR}",
            file=sys.stderr,
        )
        return EXIT_USAGE
    grid = make_grid(args.length, args.cells)
    result = spectrum(grid)
    _write_rows(
        args.out,
        "re,im",
        ((_fmt(ev.real), _fmt(ev.imag)) for ev in result.eigenvalues),
    )
    print(f"min |lambda| = {_fmt(np.min(np.abs(result.eigenvalues)))}")
    print(f"max Re lambda = {_fmt(np.max(result.eigenvalues.real))}")
    return EXIT_OK


def _cmd_resolvent(args: argparse.Namespace) -> int:
    grid = make_grid(args.length, args.cells)
    kind, mode = _parse_profile(args.rhs_profile)
    rhs = init_profile(grid, kind, args.amplitude, mode_number=mode)
    problem = ResolventProblem(
        args.lambda_tilde,
        args.gain,
        SaturationLevels.symmetric(args.sat_level),
        rhs,
    )
    code = EXIT_OK
    try:
        result = resolvent_fixed_point(problem, tol=args.tol, max_iter=args.max_iter)
    except NoConvergence as exc:
        result = exc.result
        code = EXIT_NO_CONVERGENCE
        print(f"warning: {exc}", file=sys.stderr)
    print(f"iterations = {result.iterations}")
    print(f"residual = {_fmt(result.residual_norm)}")
    if args.out:
        sol = result.solution
        _write_rows(
            args.out,
            "x,u_tilde",
            (
                (_fmt(x), _fmt(v))
                for x, v in zip(grid.interior_nodes(), sol.values)
            ),
        )
    return code


def _add_scenario_flags(parser: argparse.ArgumentParser, *, sweep: bool) -> None:
    parser.add_argument("--length", type=float, help="domain length L (default 2*pi)")
    parser.add_argument("--cells", type=int, help="number of mesh cells N (default 256)")
    parser.add_argument("--dt", type=float, help="time step (default 1e-3)")
    parser.add_argument("--t-final", type=float, help="time horizon (default 10)")
    parser.add_argument(
        "--profile", help="initial profile: one-minus-cos | sine:<k> (default one-minus-cos)"
    )
    parser.add_argument("--amplitude", type=float, help="profile amplitude (default 100)")
    parser.add_argument(
        "--snapshot-stride", type=int, help="steps between trajectory snapshots (default 100)"
    )
    parser.add_argument(
        "--energy-stride", type=int, help="steps between energy samples (default 1)"
    )
    parser.add_argument("--gain", type=float, help="feedback gain a (default 1)")
    parser.add_argument("--config", help="JSON manifest; explicit flags override it")
    parser.add_argument(
        "--emit-manifest", help="write the fully resolved scenario to this JSON file"
    )
    if sweep:
        parser.add_argument(
            "--sat-levels",
            help="comma-separated saturation levels; token 'inf' means the linear law",
        )
        parser.add_argument("--out-dir", help="directory for per-level and summary CSVs")
    else:
        parser.add_argument(
            "--feedback", choices=["open", "linear", "saturated"], help="control law"
        )
        parser.add_argument("--sat-level", type=float, help="saturation level u0 (default 1)")
        parser.add_argument("--traj-out", help="trajectory CSV path (time,x,y)")
        parser.add_argument("--energy-out", help="energy CSV path (time,energy)")


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(
        prog="kdvsat",
        description="Linear KdV equation under saturated distributed feedback: "
        "simulation and stability diagnostics",
    )
    sub = parser.add_subparsers(dest="command", required=True)

    p_sim = sub.add_parser("simulate", help="run one closed-loop scenario")
    _add_scenario_flags(p_sim, sweep=False)
    p_sim.set_defaults(func=_cmd_simulate)

    p_sweep = sub.add_parser("sweep", help="run one scenario per saturation level")
    _add_scenario_flags(p_sweep, sweep=True)
    p_sweep.set_defaults(func=_cmd_sweep)

    p_crit = sub.add_parser("critical-lengths", help="enumerate critical domain lengths")
    p_crit.add_argument("--max-length", type=float, required=True)
    p_crit.add_argument("--out", help="CSV path (default: stdout)")
    p_crit.set_defaults(func=_cmd_critical_lengths)

    p_spec = sub.add_parser("spectrum", help="dense spectrum of the discrete generator")
    p_spec.add_argument("--length", type=float, default=TWO_PI)
    p_spec.add_argument("--cells", type=int, default=256)
    p_spec.add_argument("--out", required=True, help="CSV path (re,im rows)")
    p_spec.set_defaults(func=_cmd_spectrum)

    p_res = sub.add_parser("resolvent", help="solve the nonlinear resolvent problem")
    p_res.add_argument("--length", type=float, default=TWO_PI)
    p_res.add_argument("--cells", type=int, default=128)
    p_res.add_argument("--lambda-tilde", type=float, default=10.0)
    p_res.add_argument("--gain", type=float, default=1.0)
    p_res.add_argument("--sat-level", type=float, default=1.0)
    p_res.add_argument("--rhs-profile", default="one-minus-cos")
    p_res.add_argument("--amplitude", type=float, default=1.0)
    p_res.add_argument("--tol", type=float, default=1e-10)
    p_res.add_argument("--max-iter", type=int, default=200)
    p_res.add_argument("--out", help="solution CSV path (x,u_tilde)")
    p_res.set_defaults(func=_cmd_resolvent)

    return parser


def main(argv=None) -> int:
    parser = build_parser()
    try:
        args = parser.parse_args(argv)
    except SystemExit as exc:
        return EXIT_USAGE if exc.code else EXIT_OK
    try:
        return args.func(args)
    except NonFiniteState as exc:
        print(f"simulation diverged: {exc}", file=sys.stderr)
        return EXIT_DIVERGED
    except (KdvSatError, ValueError) as exc:
        print(f"error: {exc}", file=sys.stderr)
        return EXIT_USAGE
    except OSError as exc:
        print(f"I/O failure: {exc}", file=sys.stderr)
        return EXIT_IO


if __name__ == "__main__":
    sys.exit(main())
