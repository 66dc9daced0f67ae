import json
import math
import os

import numpy as np
import pytest

from kdvsat.cli import RunManifest, main

TWO_PI = 2.0 * math.pi


def read_csv(path):
    with open(path) as fh:
        header = fh.readline().strip()
        rows = [line.strip().split(",") for line in fh if line.strip()]
    return header, rows


def tiny_simulate_args(tmp_path, **overrides):
    args = {
        "length": str(TWO_PI),
        "cells": "64",
        "dt": "0.005",
        "t-final": "0.5",
        "profile": "one-minus-cos",
        "amplitude": "100",
        "feedback": "saturated",
        "gain": "1",
        "sat-level": "1",
        "snapshot-stride": "20",
        "energy-stride": "1",
        "traj-out": str(tmp_path / "traj.csv"),
        "energy-out": str(tmp_path / "energy.csv"),
    }
    args.update(overrides)
    argv = ["simulate"]
    for key, val in args.items():
        if val is not None:
            argv.extend([f"--{key}", val])
    return argv, args


class TestSimulateCommand:
    def test_writes_csvs(self, tmp_path):
        argv, args = tiny_simulate_args(tmp_path)
        assert main(argv) == 0
        header, rows = read_csv(args["energy-out"])
        assert header == "time,energy"
        energies = np.array([float(r[1]) for r in rows])
        times = np.array([float(r[0]) for r in rows])
        assert times[0] == 0.0
        assert np.all(np.diff(times) > 0)
        assert np.all(energies[1:] <= energies[:-1] * (1 + 1e-12))

        header, rows = read_csv(args["traj-out"])
        assert header == "time,x,y"
        # each snapshot carries the boundary rows x = 0 and x = L with y = 0
        first_time = rows[0][0]
        block = [r for r in rows if r[0] == first_time]
        assert len(block) == 64 + 1  # N - 1 interior + 2 boundary nodes
        assert float(block[0][1]) == 0.0 and float(block[0][2]) == 0.0
        assert float(block[-1][1]) == pytest.approx(TWO_PI, rel=1e-15)
        assert float(block[-1][2]) == 0.0

    def test_numbers_have_full_precision(self, tmp_path):
        argv, args = tiny_simulate_args(tmp_path)
        assert main(argv) == 0
        _, rows = read_csv(args["energy-out"])
        for token in (rows[3][0], rows[3][1]):
            # %.17g output reparses and reformats to the same token
            assert format(float(token), ".17g") == token

    def test_deterministic_outputs(self, tmp_path):
        argv1, args1 = tiny_simulate_args(tmp_path / "a")
        argv2, args2 = tiny_simulate_args(tmp_path / "b")
        os.makedirs(tmp_path / "a")
        os.makedirs(tmp_path / "b")
        assert main(argv1) == 0
        assert main(argv2) == 0
        for key in ("traj-out", "energy-out"):
            with open(args1[key], "rb") as f1, open(args2[key], "rb") as f2:
                assert f1.read() == f2.read()

    def test_invalid_dt_exits_2(self, tmp_path):
        argv, _ = tiny_simulate_args(tmp_path, **{"dt": "0"})
        assert main(argv) == 2

    def test_unknown_feedback_exits_2(self, tmp_path):
        argv, _ = tiny_simulate_args(tmp_path, **{"feedback": "bang-bang"})
        assert main(argv) == 2

    def test_missing_outputs_exit_2(self, tmp_path):
        argv, _ = tiny_simulate_args(tmp_path, **{"traj-out": None})
        assert main(argv) == 2

    def test_unwritable_output_exits_4(self, tmp_path):
        argv, _ = tiny_simulate_args(
            tmp_path, **{"traj-out": str(tmp_path / "missing" / "traj.csv")}
        )
        assert main(argv) == 4

    def test_gain_dt_guard_exits_2(self, tmp_path):
        argv, _ = tiny_simulate_args(tmp_path, **{"dt": "0.5"})
        assert main(argv) == 2


class TestManifestAndEnvironment:
    def test_manifest_round_trip(self, tmp_path):
        manifest_path = str(tmp_path / "manifest.json")
        argv, args = tiny_simulate_args(tmp_path)
        argv.extend(["--emit-manifest", manifest_path])
        assert main(argv) == 0
        first = {key: open(args[key], "rb").read() for key in ("traj-out", "energy-out")}

        with open(manifest_path) as fh:
            data = json.load(fh)
        assert RunManifest.from_dict(data) == RunManifest(**data)

        # re-run purely from the manifest: byte-identical outputs
        assert main(["simulate", "--config", manifest_path]) == 0
        for key in ("traj-out", "energy-out"):
            with open(args[key], "rb") as fh:
                assert fh.read() == first[key]

    def test_flags_override_config(self, tmp_path):
        manifest_path = str(tmp_path / "manifest.json")
        argv, args = tiny_simulate_args(tmp_path)
        argv.extend(["--emit-manifest", manifest_path])
        assert main(argv) == 0
        energy_before = float(read_csv(args["energy-out"])[1][0][1])

        assert main(["simulate", "--config", manifest_path, "--amplitude", "1"]) == 0
        energy_after = float(read_csv(args["energy-out"])[1][0][1])
        assert energy_after == pytest.approx(energy_before / 1e4, rel=1e-12)

    def test_environment_variables(self, tmp_path, monkeypatch):
        argv, args = tiny_simulate_args(tmp_path, amplitude=None)
        monkeypatch.setenv("KDVSAT_AMPLITUDE", "50")
        assert main(argv) == 0
        e0 = float(read_csv(args["energy-out"])[1][0][1])
        # E scales with amplitude^2: 50^2 * (3 pi / 2)
        assert e0 == pytest.approx(2500 * 1.5 * math.pi, rel=1e-6)

    def test_unknown_manifest_key_exits_2(self, tmp_path):
        bad = tmp_path / "bad.json"
        bad.write_text('{"amplitud": 3}')
        argv, _ = tiny_simulate_args(tmp_path)
        argv.extend(["--config", str(bad)])
        assert main(argv) == 2


class TestSweepCommand:
    def sweep_argv(self, tmp_path, levels="3,inf", t_final="50"):
        return [
            "sweep",
            "--length", str(TWO_PI),
            "--cells", "64",
            "--dt", "0.005",
            "--t-final", t_final,
            "--amplitude", "100",
            "--gain", "1",
            "--snapshot-stride", "100000",
            "--energy-stride", "1",
            "--sat-levels", levels,
            "--out-dir", str(tmp_path / "sweep"),
        ]

    def test_levels_and_summary(self, tmp_path):
        assert main(self.sweep_argv(tmp_path)) == 0
        out = tmp_path / "sweep"
        assert (out / "energy_u0_3.csv").exists()
        assert (out / "energy_u0_inf.csv").exists()
        header, rows = read_csv(out / "sweep_summary.csv")
        assert header == "level,time_to_1pct"
        summary = {r[0]: float(r[1]) for r in rows}
        assert set(summary) == {"3", "inf"}
        # unsaturated feedback drains energy faster than the clipped law
        assert summary["inf"] <= summary["3"]

    def test_single_level(self, tmp_path):
        assert main(self.sweep_argv(tmp_path, levels="2", t_final="1")) == 0
        _, rows = read_csv(tmp_path / "sweep" / "sweep_summary.csv")
        assert len(rows) == 1
        assert rows[0][0] == "2"
        assert rows[0][1] == "nan"  # horizon too short to reach 1%

    def test_empty_levels_exit_2(self, tmp_path):
        assert main(self.sweep_argv(tmp_path, levels=" , ")) == 2


class TestCriticalLengthsCommand:
    def test_stdout_listing(self, capsys):
        assert main(["critical-lengths", "--max-length", "7"]) == 0
        out = capsys.readouterr().out.strip().splitlines()
        assert out[0] == "k,l,length"
        k, l, length = out[1].split(",")
        assert (k, l) == ("1", "1")
        assert float(length) == pytest.approx(TWO_PI, rel=1e-15)

    def test_includes_second_entry(self, capsys):
        assert main(["critical-lengths", "--max-length", "10"]) == 0
        out = capsys.readouterr().out.strip().splitlines()
        assert len(out) == 3
        assert float(out[2].split(",")[2]) == pytest.approx(9.5977, abs=1e-4)

    def test_file_output(self, tmp_path):
        path = tmp_path / "crit.csv"
        assert main(["critical-lengths", "--max-length", "20", "--out", str(path)]) == 0
        header, rows = read_csv(path)
        assert header == "k,l,length"
        lengths = [float(r[2]) for r in rows]
        assert lengths == sorted(lengths)

    def test_too_small_exits_2(self):
        assert main(["critical-lengths", "--max-length", "1"]) == 2


class TestSpectrumCommand:
    def test_writes_spectrum(self, tmp_path, capsys):
        path = tmp_path / "spec.csv"
        argv = ["spectrum", "--length", str(TWO_PI), "--cells", "64", "--out", str(path)]
        assert main(argv) == 0
        printed = capsys.readouterr().out
        assert "min |lambda| =" in printed
        assert "max Re lambda =" in printed
        min_abs = float(printed.splitlines()[0].split("=")[1])
        assert min_abs < 1e-2
        header, rows = read_csv(path)
        assert header == "re,im"
        assert len(rows) == 63
        mags = [math.hypot(float(r[0]), float(r[1])) for r in rows]
        assert mags == sorted(mags)

    def test_size_guard_exits_2(self, tmp_path):
        argv = ["spectrum", "--cells", "2050", "--out", str(tmp_path / "s.csv")]
        assert main(argv) == 2

    def test_missing_out_exits_2(self):
        assert main(["spectrum", "--cells", "64"]) == 2


class TestResolventCommand:
    def test_contractive_defaults(self, tmp_path, capsys):
        path = tmp_path / "res.csv"
        argv = ["resolvent", "--cells", "64", "--out", str(path)]
        assert main(argv) == 0
        printed = capsys.readouterr().out.splitlines()
        iters = int(printed[0].split("=")[1])
        residual = float(printed[1].split("=")[1])
        assert iters < 50
        assert residual < 1e-8
        header, rows = read_csv(path)
        assert header == "x,u_tilde"
        assert len(rows) == 63

    def test_zero_gain_single_iteration(self, capsys):
        assert main(["resolvent", "--cells", "64", "--gain", "0"]) == 0
        printed = capsys.readouterr().out.splitlines()
        assert printed[0] == "iterations = 1"

    def test_non_contractive_exits_5(self, capsys):
        argv = [
            "resolvent", "--cells", "64",
            "--lambda-tilde", "0.01", "--gain", "10", "--max-iter", "5",
        ]
        with pytest.warns(RuntimeWarning):
            assert main(argv) == 5


class TestUsage:
    def test_no_command_exits_2(self):
        assert main([]) == 2

    def test_unknown_flag_exits_2(self):
        assert main(["simulate", "--frobnicate", "1"]) == 2
