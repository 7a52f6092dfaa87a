import json

import numpy as np
import pytest

from sqgsphere.cli import main
from sqgsphere.io import (
    TELEMETRY_HEADER,
    RunManifest,
    SnapshotError,
    SnapshotMagicError,
    SnapshotTruncatedError,
    SnapshotVersionError,
    parse_config,
    parse_config_text,
    read_snapshot,
    read_telemetry,
    write_snapshot,
)
from sqgsphere.solver import ConfigError, SimulationState, SolverConfig
from sqgsphere.transform import SpectralField


@pytest.fixture
def snap(tmp_path):
    f = SpectralField.random(10, np.random.default_rng(1), 1, 10)
    st = SimulationState(0.125, f, 7)
    return st, write_snapshot(st, tmp_path / "s.sqg2", alpha=0.8)


def test_snapshot_round_trip_is_exact(snap):
    st, path = snap
    back, alpha = read_snapshot(path, with_alpha=True)
    assert alpha == 0.8
    assert (back.time, back.step_index, back.theta.L_max) == (0.125, 7, 10)
    assert np.array_equal(back.theta.coeffs, st.theta.coeffs)


def test_snapshot_size(snap):
    _, path = snap
    assert path.stat().st_size == 36 + 16 * 11**2


def test_snapshot_bad_magic(snap):
    _, path = snap
    data = bytearray(path.read_bytes())
    data[:4] = b"XXXX"
    path.write_bytes(bytes(data))
    with pytest.raises(SnapshotMagicError):
        read_snapshot(path)


def test_snapshot_bad_version(snap):
    _, path = snap
    data = bytearray(path.read_bytes())
    data[4] = 9
    path.write_bytes(bytes(data))
    with pytest.raises(SnapshotVersionError):
        read_snapshot(path)


@pytest.mark.parametrize("keep", [10, 36, 36 + 16 * 5])
def test_snapshot_truncated(snap, keep):
    _, path = snap
    path.write_bytes(path.read_bytes()[:keep])
    with pytest.raises(SnapshotTruncatedError):
        read_snapshot(path)


def test_snapshot_trailing_bytes(snap):
    _, path = snap
    path.write_bytes(path.read_bytes() + b"\0")
    with pytest.raises(SnapshotError):
        read_snapshot(path)


def test_empty_config_gives_defaults():
    assert parse_config_text("") == {}
    assert parse_config() == SolverConfig()


def test_config_file_and_overrides(tmp_path):
    p = tmp_path / "c.cfg"
    p.write_text("# run\nL_max = 24\ndt=0.002  # step\n\nalpha = 0.5\n")
    c = parse_config(p, dt=0.004, seed=None)
    assert (c.L_max, c.dt, c.alpha) == (24, 0.004, 0.5)


def test_negative_dt_rejected():
    with pytest.raises(ConfigError, match="dt"):
        parse_config(dt=-1.0)


def test_unknown_key_lists_valid_keys():
    with pytest.raises(ConfigError) as exc:
        parse_config_text("Lmax = 3")
    for k in SolverConfig.keys():
        assert k in str(exc.value)


@pytest.mark.parametrize("text", ["L_max", "L_max = x", "dt = 1e-3e"])
def test_malformed_config_lines(text):
    with pytest.raises(ConfigError):
        parse_config_text(text)


def run_cli(tmp_path, name, *extra):
    out = tmp_path / name
    code = main(["run", "--ic", "random:1:6:1.0", "--L-max", "12", "--dt", "0.005", "--t-end", "0.05",
                 "--sample-every", "2", "--out", str(out), *extra])
    return code, out


def test_cli_run_outputs(tmp_path, capsys):
    code, out = run_cli(tmp_path, "a")
    assert code == 0
    tel = read_telemetry(out / "telemetry.csv")
    assert list(tel) == TELEMETRY_HEADER
    assert np.allclose(tel["time"], [0.0, 0.01, 0.02, 0.03, 0.04, 0.05])
    assert np.all(np.diff(tel["linf"]) <= 1e-12)
    m = RunManifest.read(out / "manifest.json")
    assert m.verify(out) == []
    assert {"telemetry.csv", "snapshot_00000000.sqg2", "final.sqg2"} <= set(m.files)
    assert m.config["L_max"] == 12
    final = read_snapshot(out / "final.sqg2")
    assert final.step_index == 10


def test_manifest_detects_tampering(tmp_path):
    _, out = run_cli(tmp_path, "a")
    with (out / "telemetry.csv").open("a") as fh:
        fh.write("0\n")
    assert RunManifest.read(out / "manifest.json").verify(out) == ["telemetry.csv"]


def test_cli_run_is_deterministic(tmp_path):
    _, a = run_cli(tmp_path, "a")
    _, b = run_cli(tmp_path, "b")
    for name in ("telemetry.csv", "final.sqg2", "snapshot_00000000.sqg2"):
        assert (a / name).read_bytes() == (b / name).read_bytes()
    ma, mb = (json.loads((d / "manifest.json").read_text()) for d in (a, b))
    assert ma["files"] == mb["files"]


def test_cli_zonal_reports_error(tmp_path, capsys):
    code = main(["run", "--ic", "zonal:2", "--L-max", "8", "--t-end", "0.1", "--out", str(tmp_path / "z")])
    assert code == 0
    line = next(s for s in capsys.readouterr().out.splitlines() if s.startswith("final-error"))
    assert float(line.split()[-1]) < 1e-10


@pytest.mark.parametrize(
    "argv",
    [
        ["run", "--dt", "-1"],
        ["run", "--ic", "wave:3"],
        ["run", "--config", "/nonexistent/cfg"],
        ["operators", "--degree", "2", "--order", "3"],
    ],
)
def test_cli_usage_errors_exit_2(argv, tmp_path):
    assert main([*argv, *(["--out", str(tmp_path / "o")] if argv[0] == "run" else [])]) == 2


def test_cli_parser_errors_exit_2():
    with pytest.raises(SystemExit) as exc:
        main(["frobnicate"])
    assert exc.value.code == 2


def test_cli_cfl_abort_exits_1(tmp_path, capsys):
    code, out = run_cli(tmp_path, "c", "--dt", "0.5", "--t-end", "1.0")
    assert code == 1
    assert "aborted" in capsys.readouterr().err
    assert (out / "final.sqg2").exists()


def test_cli_operators(capsys):
    assert main(["operators", "--degree", "3", "--order", "1", "--points", "3", "--quads", "64"]) == 0
    out = capsys.readouterr().out
    assert "semigroup" in out and "conformal" in out


def test_cli_verify_single_criterion(capsys):
    assert main(["verify", "--quick", "--only", "2"]) == 0
    assert "[PASS]" in capsys.readouterr().out
