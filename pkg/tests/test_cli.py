import csv
import io
import json
import math
import subprocess
import sys

import pytest

from neutron_ks import cli, dataio
from neutron_ks.algebra import tensor_observable
from neutron_ks.errors import SchemaError
from neutron_ks.interferometer import InstrumentConfig
from neutron_ks.measurement import CountRecord, ExpectationEstimate, evaluate_inequality
from neutron_ks.peres_mermin import MagicSquare, build_magic_square


def run(capsys, *argv):
    code = cli.main(list(argv))
    out = capsys.readouterr()
    return code, out.out, out.err


def test_verify_square_json(capsys):
    code, out, _ = run(capsys, "verify-square")
    data = json.loads(out)
    assert code == 0
    assert data["col_signs"] == [1, 1, -1]
    assert data["row_signs"] == [1, 1, 1]
    assert data["satisfiable"] is False
    assert data["assignments_checked"] == 512


def test_verify_square_csv(capsys):
    code, out, _ = run(capsys, "verify-square", "--format", "csv")
    assert code == 0
    rows = dict(r for r in csv.reader(io.StringIO(out)) if r and not r[0].startswith("#"))
    assert rows["col_sign_2"] == "-1"
    assert rows["satisfiable"] == "False"


def test_verify_square_corrupted(capsys):
    sq = build_magic_square()
    grid = [list(r) for r in sq.grid]
    grid[1][1] = tensor_observable("z", "id")
    args = cli.build_parser().parse_args(["verify-square"])
    with pytest.raises(Exception):
        cli.cmd_verify_square(args, MagicSquare(tuple(tuple(r) for r in grid)))


def test_verify_square_corrupted_exit_code(capsys, monkeypatch):
    sq = build_magic_square()
    grid = [list(r) for r in sq.grid]
    grid[1][1] = tensor_observable("z", "id")
    monkeypatch.setattr(cli, "build_magic_square", lambda: MagicSquare(tuple(tuple(r) for r in grid)))
    code, _, err = run(capsys, "verify-square")
    assert code == cli.EXIT_MISMATCH
    assert "verification failed" in err


def test_bounds(capsys):
    code, out, _ = run(capsys, "bounds")
    data = json.loads(out)
    assert code == 0
    assert data["full_5term"]["classical_max"] == 3
    assert data["full_5term"]["qm_value"] == pytest.approx(5)
    assert data["reduced_3term"]["classical_max"] == 1
    assert data["reduced_3term"]["qm_value"] == pytest.approx(3)
    assert data["full_5term"]["assignments_checked"] == 64
    assert data["reduced_3term"]["assignments_checked"] == 16
    v = data["reduced_3term"]["maximizing_assignments"][0]
    r = evaluate_inequality(
        ExpectationEstimate(v["xs"] * v["xp"], 0.0, "xx"),
        ExpectationEstimate(v["ys"] * v["yp"], 0.0, "yy"),
        ExpectationEstimate(v["xs"] * v["yp"] * v["ys"] * v["xp"], 0.0, "bell"),
    )
    assert r.lhs == 1


def test_ideal_bell(capsys):
    code, out, _ = run(capsys, "ideal", "bell")
    data = json.loads(out)
    assert code == 0
    values = list(data["expectations"].values())
    assert values == pytest.approx([-1, -1, 1, 1, -1], abs=1e-12)
    assert data["lhs"]["full_5term"] == pytest.approx(5, abs=1e-12)
    assert data["lhs"]["reduced_3term"] == pytest.approx(3, abs=1e-12)


def test_ideal_product_state(capsys):
    code, out, _ = run(capsys, "ideal", "1,0,0,0")
    assert code == 0
    assert json.loads(out)["lhs"]["reduced_3term"] <= 1


def test_ideal_complex_amplitudes(capsys):
    a = 1 / math.sqrt(2)
    code, out, _ = run(capsys, "ideal", f"0,{-a},{a},0")
    assert code == 0
    assert json.loads(out)["lhs"]["reduced_3term"] == pytest.approx(3, abs=1e-9)
    code, _, _ = run(capsys, "ideal", f"{a},0,0,{a}j")
    assert code == 0


def test_ideal_not_normalized(capsys):
    code, _, err = run(capsys, "ideal", "1,1,0,0")
    assert code == cli.EXIT_CONFIG
    assert "norm" in err


def test_simulate_requires_seed(capsys):
    with pytest.raises(SystemExit) as exc:
        cli.main(["simulate"])
    assert exc.value.code == 2


def _simulate(tmp_path, capsys, *extra, name="counts.csv"):
    out = tmp_path / name
    code, _, _ = run(capsys, "simulate", "--out", str(out), *extra)
    assert code == 0
    return out


def test_simulate_is_byte_identical(tmp_path, capsys):
    a = _simulate(tmp_path, capsys, "--seed", "42", name="a.csv")
    b = _simulate(tmp_path, capsys, "--seed", "42", name="b.csv")
    assert a.read_bytes() == b.read_bytes()
    assert (tmp_path / "a.fringe.csv").read_bytes() == (tmp_path / "b.fringe.csv").read_bytes()
    assert a.read_text().startswith("# seed=42\n")


def test_simulate_default_bell_contrast(tmp_path, capsys):
    out = _simulate(tmp_path, capsys, "--seed", "42")
    code, text, _ = run(capsys, "fit-fringe", str(out))
    assert code == 0
    fits = json.loads(text)["fits"]
    bell_pi = next(f for f in fits if f["context"] == "bell_discrimination" and f["rotator"] == "pi")
    contrast = bell_pi["amplitude_B"] / bell_pi["offset_A"]
    assert 0.90 <= contrast <= 0.96


def test_simulate_zero_visibility_flat(tmp_path, capsys):
    cfg = tmp_path / "flat.cfg"
    cfg.write_text("visibility_xx = 0\nvisibility_yy = 0\nvisibility_bell = 0\n")
    out = _simulate(tmp_path, capsys, "--seed", "3", "--config", str(cfg))
    code, text, _ = run(capsys, "fit-fringe", str(out))
    for f in json.loads(text)["fits"]:
        sigma_b = math.sqrt(f["covariance"][1][1])
        assert abs(f["amplitude_B"]) < 3 * sigma_b


def test_fringe_csv_columns(tmp_path, capsys):
    _simulate(tmp_path, capsys, "--seed", "1")
    lines = [ln for ln in (tmp_path / "counts.fringe.csv").read_text().splitlines() if not ln.startswith("#")]
    assert lines[0] == ",".join(dataio.FRINGE_HEADER)
    assert len(lines) == 1 + 6 * 16


def test_simulate_to_stdout(capsys):
    code, out, _ = run(capsys, "simulate", "--seed", "5", "--points", "8", "--periods", "1")
    assert code == 0
    recs = dataio.read_counts_csv(io.StringIO(out))
    assert len(recs) == 6 * 8


def test_analyze_defaults(tmp_path, capsys):
    out = _simulate(tmp_path, capsys, "--seed", "42")
    code, text, _ = run(capsys, "analyze", str(out))
    data = json.loads(text)
    assert code == 0
    assert data["seed"] == 42
    ineq = data["inequality"]
    assert 2.24 <= ineq["lhs"] <= 2.34
    assert ineq["violated"] is True
    assert ineq["bound"] == 1.0


def test_analyze_csv_format(tmp_path, capsys):
    out = _simulate(tmp_path, capsys, "--seed", "42")
    code, text, _ = run(capsys, "analyze", str(out), "--format", "csv")
    rows = {r[0]: r[1:] for r in csv.reader(io.StringIO(text)) if r and not r[0].startswith("#")}
    assert code == 0
    assert rows["violated"][0] == "True"


@pytest.mark.filterwarnings("ignore::neutron_ks.measurement.FitWarning")
def test_analyze_full_visibility(tmp_path, capsys):
    cfg = tmp_path / "ideal.cfg"
    cfg.write_text(InstrumentConfig().with_visibility(1.0).to_text())
    out = _simulate(tmp_path, capsys, "--seed", "9", "--config", str(cfg))
    code, text, _ = run(capsys, "analyze", str(out))
    ineq = json.loads(text)["inequality"]
    assert 3 - ineq["lhs"] < max(3 * ineq["lhs_error"], 1e-3)


@pytest.mark.filterwarnings("ignore::neutron_ks.measurement.FitWarning")
def test_analyze_separable_state(tmp_path, capsys):
    h = 1 / math.sqrt(2)
    out = _simulate(tmp_path, capsys, "--seed", "2", "--state", f"{h},{h},0,0")
    code, text, _ = run(capsys, "analyze", str(out))
    ineq = json.loads(text)["inequality"]
    assert code == 0
    assert ineq["lhs"] <= 1 + 3 * ineq["lhs_error"]


def test_analyze_missing_context(tmp_path, capsys):
    out = _simulate(tmp_path, capsys, "--seed", "1")
    kept = [ln for ln in out.read_text().splitlines() if "bell_discrimination" not in ln]
    out.write_text("\n".join(kept) + "\n")
    code, _, err = run(capsys, "analyze", str(out))
    assert code == cli.EXIT_SCHEMA


def test_analyze_bad_schema(tmp_path, capsys):
    bad = tmp_path / "bad.csv"
    bad.write_text("a,b,c\n1,2,3\n")
    code, _, _ = run(capsys, "analyze", str(bad))
    assert code == cli.EXIT_SCHEMA


def test_missing_file_is_io_error(tmp_path, capsys):
    code, _, _ = run(capsys, "analyze", str(tmp_path / "nope.csv"))
    assert code == cli.EXIT_IO


def test_bad_config_exit_code(tmp_path, capsys):
    cfg = tmp_path / "bad.cfg"
    cfg.write_text("visibility_xx = 2\n")
    code, _, _ = run(capsys, "simulate", "--seed", "1", "--config", str(cfg))
    assert code == cli.EXIT_CONFIG


def test_flipper_off_is_config_error(tmp_path, capsys):
    cfg = tmp_path / "off.cfg"
    cfg.write_text("flipper_I = off\n")
    code, _, _ = run(capsys, "simulate", "--seed", "1", "--config", str(cfg))
    assert code == cli.EXIT_CONFIG


def test_round_trip_recovers_visibilities(tmp_path, capsys):
    targets = {"xx": -0.679, "yy": -0.682, "bell": -0.93}
    for seed in range(20):
        out = _simulate(tmp_path, capsys, "--seed", str(seed), name=f"s{seed}.csv")
        _, text, _ = run(capsys, "analyze", str(out))
        terms = json.loads(text)["inequality"]["terms"]
        for k, target in targets.items():
            assert abs(terms[k]["value"] - target) < 3 * terms[k]["std_error"]


def test_module_entry_point():
    proc = subprocess.run([sys.executable, "-m", "neutron_ks", "bounds", "--format", "csv"], capture_output=True, text=True)
    assert proc.returncode == 0
    assert "reduced_3term" in proc.stdout


# Count CSV interchange ----------------------------------------------------


def test_counts_csv_round_trip():
    recs = [
        CountRecord("joint_xx_yy", 0.1, 0.7853981633974483, "pi_half", 123, 1.0),
        CountRecord("bell_discrimination", 0.0, -1.0, "off", 4, 2.5),
    ]
    text = dataio.counts_csv_text(recs, ["seed=1"])
    assert text.splitlines()[1] == ",".join(dataio.COUNT_HEADER)
    assert dataio.read_counts_csv(io.StringIO(text)) == recs
    assert dataio.read_comments(io.StringIO(text)) == {"seed": "1"}


@pytest.mark.parametrize("text", [
    "context,alpha_rad,chi_rad,rotator,counts\njoint_xx_yy,0,0,pi_half,1\n",
    "context,alpha_rad,chi_rad,rotator,counts,exposure\nmystery,0,0,pi_half,1,1\n",
    "context,alpha_rad,chi_rad,rotator,counts,exposure\njoint_xx_yy,0,0,pi_half,-1,1\n",
    "context,alpha_rad,chi_rad,rotator,counts,exposure\njoint_xx_yy,0,0,pi_half,x,1\n",
    "context,alpha_rad,chi_rad,rotator,counts,exposure\njoint_xx_yy,0,0,pi_half,1\n",
])
def test_counts_csv_schema_errors(text):
    with pytest.raises(SchemaError):
        dataio.read_counts_csv(io.StringIO(text))
