"""Config parsing, the experiment runner, and the command-line surface."""

import csv
import hashlib
import json
import math
import os
import subprocess
import sys

import numpy as np
import pytest

import rirsim.cli as cli
import rirsim.runner as runner_mod
from rirsim._version import __version__
from rirsim.config import (
    COMMANDS,
    ParseError,
    config_sha256,
    parse_config,
)
from rirsim.cli import main, preset_text
from rirsim.oracle import StabilityError
from rirsim.params import ValidationError, kelvin_from_uk
from rirsim.runner import run

ALL_PRESETS = tuple(f"fig{n}" for n in range(2, 11)) + ("oracle",)

SMALL_SPECTRUM = """
command: write-spectrum
numerics:
  num_points: 1001
scan:
  delta_min_khz: -10.0
  delta_max_khz: 10.0
  delta_step_khz: 2.0
  times_us: [100.0]
  channels: [transmission, ffwm]
"""


def _read_csv(path):
    with open(path, newline="") as fh:
        rows = list(csv.reader(fh))
    return rows[0], rows[1:]


def _file_bytes(path):
    with open(path, "rb") as fh:
        return fh.read()


class TestParsing:
    def test_transient_spectrum_preset(self):
        cfg = parse_config(preset_text("fig2"))
        assert cfg.command == "write-spectrum"
        assert cfg.params.temperature == pytest.approx(kelvin_from_uk(500.0))
        assert cfg.scan.detunings.size == 201
        assert len(cfg.scan.times) == 2
        assert cfg.scan.channels == ("transmission",)
        assert cfg.output.directory == "out_fig2"

    def test_memory_preset_carries_schedule(self):
        cfg = parse_config(preset_text("fig5"))
        assert cfg.command == "memory-spectrum"
        assert cfg.schedule is not None
        assert cfg.schedule.t1 == pytest.approx(102.0e-6)
        assert cfg.schedule.t2 == pytest.approx(107.0e-6)
        assert cfg.scan.detunings.size == 161

    @pytest.mark.parametrize("name", ALL_PRESETS)
    def test_every_preset_parses(self, name):
        cfg = parse_config(preset_text(name))
        assert cfg.command in COMMANDS

    def test_read_before_write_rejected(self):
        text = "schedule:\n  t1_us: 102.0\n  t2_us: 95.0\n"
        with pytest.raises(ValidationError, match="schedule.t2"):
            parse_config(text)

    def test_unknown_keys_reported_with_path(self):
        with pytest.raises(ValidationError, match="scan.bogus"):
            parse_config("scan:\n  bogus: 1\n")
        with pytest.raises(ValidationError, match="params.mass_kg"):
            parse_config("params:\n  mass_kg: 1.0e-25\n")

    def test_numerics_validation(self):
        with pytest.raises(ValidationError, match="numerics"):
            parse_config("numerics:\n  num_points: 1000\n")
        with pytest.raises(ValidationError, match="oracle_num_samples"):
            parse_config("numerics:\n  oracle_num_samples: 200\n")
        with pytest.raises(ValidationError, match="oracle_dt_safety"):
            parse_config("numerics:\n  oracle_dt_safety: 0.5\n")
        with pytest.raises(ValidationError, match="oracle_max_kicks"):
            parse_config("numerics:\n  oracle_max_kicks: 1\n")

    def test_scan_validation(self):
        with pytest.raises(ValidationError, match="all three"):
            parse_config("scan:\n  delta_min_khz: -1.0\n")
        with pytest.raises(ValidationError, match="delta_step_khz"):
            parse_config(
                "scan:\n  delta_min_khz: -1.0\n  delta_max_khz: 1.0\n"
                "  delta_step_khz: 0.0\n")
        with pytest.raises(ValidationError, match="channels"):
            parse_config("scan:\n  channels: [sideways]\n")
        with pytest.raises(ValidationError, match="temperatures_uk"):
            parse_config("scan:\n  temperatures_uk: [125.0, -4.0]\n")

    def test_malformed_yaml(self):
        with pytest.raises(ParseError):
            parse_config("scan: [unclosed\n")
        with pytest.raises(ValidationError, match="mapping"):
            parse_config("- 1\n- 2\n")

    def test_defaults_from_empty_document(self):
        cfg = parse_config("")
        assert cfg.command is None
        assert cfg.schedule is None
        assert cfg.params.temperature == pytest.approx(kelvin_from_uk(500.0))
        assert cfg.quad.num_points == 4001

    def test_bad_command_choice(self):
        with pytest.raises(ValidationError, match="config.command"):
            parse_config("command: write-everything\n")

    def test_hash_ignores_formatting_but_not_values(self):
        a = "params:\n  temperature_uk: 500.0\n  theta_deg: 1.0\n"
        b = "params:\n  theta_deg: 1.0\n  temperature_uk: 500.0\n"
        c = "params:\n  temperature_uk: 501.0\n  theta_deg: 1.0\n"
        assert config_sha256(parse_config(a)) == config_sha256(parse_config(b))
        assert config_sha256(parse_config(a)) != config_sha256(parse_config(c))


class TestRunner:
    def test_write_spectrum_outputs_and_manifest(self, tmp_path):
        cfg = parse_config(SMALL_SPECTRUM)
        manifest = run(cfg, out_dir=str(tmp_path))
        assert manifest.status == "ok"
        assert manifest.command == "write-spectrum"
        assert manifest.tool_version == __version__
        assert manifest.config_sha256 == config_sha256(cfg)
        for key in ("p_u", "delta_k", "recoil_shift", "doppler_width",
                    "tau_stationary", "omega_eff"):
            assert math.isfinite(manifest.derived[key])

        on_disk = sorted(os.listdir(tmp_path))
        assert "manifest.json" in on_disk
        listed = sorted(o["path"] for o in manifest.outputs)
        assert listed == [n for n in on_disk if n != "manifest.json"]
        assert listed == ["ffwm_spectrum_00.csv", "transmission_spectrum_00.csv"]

        with open(tmp_path / "manifest.json") as fh:
            dumped = json.load(fh)
        assert dumped == manifest.to_dict()

        for entry in manifest.outputs:
            data = _file_bytes(tmp_path / entry["path"])
            assert hashlib.sha256(data).hexdigest() == entry["sha256"]
            header, rows = _read_csv(tmp_path / entry["path"])
            assert header == ["detuning_khz", "value", "channel",
                              "eval_time_us"]
            assert len(rows) == entry["rows"] == 11
            assert all(math.isfinite(float(r[1])) for r in rows)

    def test_missing_scan_sections_rejected(self):
        cfg = parse_config("command: write-spectrum\n")
        with pytest.raises(ValidationError, match="scan"):
            run(cfg, out_dir="unused")

    def test_command_must_come_from_somewhere(self):
        cfg = parse_config("scan:\n  times_us: [100.0]\n")
        with pytest.raises(ValidationError, match="config.command"):
            run(cfg, out_dir="unused")

    def test_linewidth_csv_layout(self, tmp_path):
        text = (
            "command: linewidth-evolution\n"
            "scan:\n  times_us: [105.0, 150.0]\n  channels: [transmission]\n"
        )
        manifest = run(parse_config(text), out_dir=str(tmp_path))
        assert manifest.status == "ok"
        header, rows = _read_csv(tmp_path / "linewidth_transmission.csv")
        assert header == ["time_us", "width_khz", "metric", "channel"]
        assert len(rows) == 2
        widths = [float(r[1]) for r in rows]
        assert rows[0][2] == "gain_absorption_separation"
        assert widths[0] > widths[1] > 0.0

    def test_reruns_are_byte_identical(self, tmp_path):
        cfg = parse_config(preset_text("fig7"))
        run(cfg, out_dir=str(tmp_path / "a"))
        run(cfg, out_dir=str(tmp_path / "b"))
        names = sorted(os.listdir(tmp_path / "a"))
        assert names == sorted(os.listdir(tmp_path / "b"))
        for name in names:
            if name == "manifest.json":
                continue
            assert _file_bytes(tmp_path / "a" / name) == \
                _file_bytes(tmp_path / "b" / name), name

    def test_worker_count_does_not_change_bytes(self, tmp_path):
        cfg = parse_config(SMALL_SPECTRUM)
        run(cfg, out_dir=str(tmp_path / "serial"), workers=1)
        run(cfg, out_dir=str(tmp_path / "pool"), workers=4)
        for name in ("transmission_spectrum_00.csv", "ffwm_spectrum_00.csv"):
            assert _file_bytes(tmp_path / "serial" / name) == \
                _file_bytes(tmp_path / "pool" / name), name

    def test_thermometry_csv(self, tmp_path):
        text = (
            "command: thermometry\n"
            "scan:\n  temperatures_uk: [125.0, 500.0, 1000.0]\n"
        )
        manifest = run(parse_config(text), out_dir=str(tmp_path))
        assert manifest.status == "ok"
        header, rows = _read_csv(tmp_path / "thermometry.csv")
        assert header == ["temperature_uk", "channel", "metric", "width_khz",
                          "recovered_temperature_uk"]
        assert len(rows) == 6  # three temperatures, two channels each
        for r in rows:
            set_uk = float(r[0])
            recovered_uk = float(r[4])
            assert abs(recovered_uk / set_uk - 1.0) < 3e-2


class TestCli:
    def test_reproduce_exit_zero(self, tmp_path):
        assert main(["reproduce", "fig7", "--out", str(tmp_path)]) == 0
        assert (tmp_path / "manifest.json").exists()

    def test_console_script_smoke(self, tmp_path):
        proc = subprocess.run(
            [sys.executable, "-m", "rirsim.cli", "reproduce", "fig3",
             "--out", str(tmp_path)],
            capture_output=True, text=True)
        assert proc.returncode == 0, proc.stderr
        names = sorted(os.listdir(tmp_path))
        assert "single_group_profile_00.csv" in names
        assert "transmission_profile_00.csv" in names

    def test_version_flag(self, capsys):
        with pytest.raises(SystemExit) as exc:
            main(["--version"])
        assert exc.value.code == 0
        assert __version__ in capsys.readouterr().out

    def test_unknown_figure_rejected_by_parser(self):
        with pytest.raises(SystemExit) as exc:
            main(["reproduce", "fig37"])
        assert exc.value.code == 2

    def test_ffwm_line_peaks_at_zero_detuning(self, tmp_path):
        assert main(["reproduce", "fig4", "--out", str(tmp_path)]) == 0
        for name in ("ffwm_spectrum_00.csv", "ffwm_spectrum_01.csv"):
            _, rows = _read_csv(tmp_path / name)
            best = max(rows, key=lambda r: float(r[1]))
            assert best[0] == "0"

    def test_normalize_flag_scales_peak_to_one(self, tmp_path):
        assert main(["reproduce", "fig7", "--out", str(tmp_path),
                     "--normalize"]) == 0
        for name in ("transmission_spectrum_00.csv", "ffwm_spectrum_00.csv"):
            _, rows = _read_csv(tmp_path / name)
            peak = max(abs(float(r[1])) for r in rows)
            assert peak == pytest.approx(1.0, abs=1e-15)

    def test_exit_two_on_config_problems(self, tmp_path, capsys):
        missing = tmp_path / "nope.cfg"
        assert main(["write-spectrum", "--config", str(missing)]) == 2

        bad = tmp_path / "broken.cfg"
        bad.write_text("scan: [unclosed\n")
        assert main(["write-spectrum", "--config", str(bad)]) == 2

        bad.write_text("schedule:\n  t1_us: 102.0\n  t2_us: 95.0\n")
        assert main(["memory-spectrum", "--config", str(bad)]) == 2

        bad.write_text("params:\n  temperature_uk: 500.0\n")
        assert main(["write-spectrum", "--config", str(bad),
                     "--out", str(tmp_path / "o")]) == 2
        assert "config error" in capsys.readouterr().err

    def test_exit_three_on_numerical_failure(self, tmp_path, monkeypatch,
                                             capsys):
        cfg = tmp_path / "ok.cfg"
        cfg.write_text(SMALL_SPECTRUM)

        def blow_up(*args, **kwargs):
            raise StabilityError("injected integrator blow-up")

        monkeypatch.setattr(cli, "run", blow_up)
        assert main(["write-spectrum", "--config", str(cfg),
                     "--out", str(tmp_path / "o")]) == 3
        assert "numerical failure" in capsys.readouterr().err

    def test_exit_four_on_partial_scan(self, tmp_path, monkeypatch, capsys):
        cfg = tmp_path / "ok.cfg"
        cfg.write_text(SMALL_SPECTRUM)
        real = runner_mod._write_point

        def flaky(args):
            delta = args[3]
            if abs(delta) < 1e-9:
                raise ArithmeticError("injected point failure")
            return real(args)

        monkeypatch.setattr(runner_mod, "_write_point", flaky)
        out = tmp_path / "o"
        assert main(["write-spectrum", "--config", str(cfg),
                     "--out", str(out)]) == 4
        assert "partial" in capsys.readouterr().err

        with open(out / "manifest.json") as fh:
            manifest = json.load(fh)
        assert manifest["status"] == "partial"
        assert manifest["failures"]
        assert "injected point failure" in manifest["failures"][0]["error"]
        _, rows = _read_csv(out / "transmission_spectrum_00.csv")
        nan_rows = [r for r in rows if r[1] == "nan"]
        assert len(nan_rows) == 1 and nan_rows[0][0] == "0"

    def test_oracle_check_writes_report(self, tmp_path):
        cfg = tmp_path / "oracle.cfg"
        cfg.write_text(preset_text("oracle"))
        out = tmp_path / "o"
        assert main(["oracle-check", "--config", str(cfg),
                     "--out", str(out)]) == 0
        with open(out / "oracle_report.json") as fh:
            report = json.load(fh)
        for key in ("comparison", "kick_convergence", "step_halving",
                    "trace_drift", "population_imag_max"):
            assert key in report
        for name, entry in report["comparison"].items():
            assert entry["reference_error"] < 2e-2, name
