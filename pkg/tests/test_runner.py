import math
from pathlib import Path

import numpy as np
import pytest

from spincorr import classical as cl
from spincorr.cli import main
from spincorr.config import ConfigError, build_config, load_config, parse_lines
from spincorr.experiments import default_lambda_cut, run_experiment
from spincorr.output import fmt, read_table

CONFIGS = Path(__file__).resolve().parent.parent / "configs"

# small versions of every experiment, used for CLI and determinism checks
SMALL = {
    "regime_map": ["gamma_values=0,2.835", "samples_per_cell=50", "n_steps=300"],
    "relax": ["s=10", "l=11", "n_traj=3000", "n_kicks=8", "snapshots=0,8", "chunk_size=512"],
    "variance_growth": ["s=10", "l=11", "n_traj=2000", "n_kicks=8", "chunk_size=512",
                        "n_steps=500"],
    "breaktime_scan": ["l_values=11,22", "n_traj=2000", "n_kicks=6", "chunk_size=512"],
    "scaling_scan": ["l_values=11,22", "n_traj=2000", "window=4,6", "chunk_size=512"],
    "ehrenfest_scan": ["l_values=11,22,33", "n_kicks=12"],
    "appendix_a": ["j_values=1/2,3,10"],
}


def run_cli(tmp_path, experiment, extra=(), name="out"):
    args = [experiment, "--config", str(CONFIGS / f"{experiment}.cfg"), "--out", str(tmp_path / name)]
    for item in list(SMALL[experiment]) + list(extra):
        args += ["--set", item]
    return main(args), tmp_path / name


def csv_bytes(d):
    return {p.name: p.read_bytes() for p in sorted(Path(d).glob("*.csv"))}


@pytest.mark.parametrize("experiment", sorted(SMALL))
def test_every_experiment_runs_from_cli(tmp_path, experiment, capsys):
    code, out = run_cli(tmp_path, experiment)
    assert code == 0
    files = csv_bytes(out)
    assert files and (out / "run_info.txt").exists()
    printed = capsys.readouterr().out.split()
    assert all(Path(p).exists() for p in printed)
    for name in files:
        text = (out / name).read_text()
        assert "# config_hash:" in text and "# code_version:" in text


@pytest.mark.parametrize("experiment", ["relax", "breaktime_scan", "regime_map", "ehrenfest_scan"])
def test_outputs_identical_across_worker_counts(tmp_path, monkeypatch, experiment):
    results = []
    for w in (1, 4, 16):
        monkeypatch.setenv("SPINCORR_THREADS", str(w))
        code, out = run_cli(tmp_path, experiment, name=f"w{w}")
        assert code == 0
        results.append(csv_bytes(out))
    assert results[0] == results[1] == results[2]


def test_seed_changes_output(tmp_path):
    _, a = run_cli(tmp_path, "relax", name="a")
    _, b = run_cli(tmp_path, "relax", ["master_seed=99"], name="b")
    assert csv_bytes(a)["relax.csv"] != csv_bytes(b)["relax.csv"]


def test_exit_codes(tmp_path, capsys):
    out = str(tmp_path / "x")
    assert main(["relax", "--out", out]) == 2
    assert main(["relax", "--config", str(CONFIGS / "relax.cfg"), "--set", "bogus=1", "--out", out]) == 2
    assert main(["relax", "--config", str(CONFIGS / "relax.cfg"), "--set", "s=1.3", "--out", out]) == 2
    assert main(["relax", "--config", str(tmp_path / "missing.cfg"), "--out", out]) == 2
    assert main(["nonsense", "--out", out]) == 2
    assert main(["relax", "--config", str(CONFIGS / "relax.cfg"), "--set", "l=300",
                 "--set", "n_traj=10", "--out", out]) == 3
    assert main(["breaktime_scan", "--config", str(CONFIGS / "breaktime_scan.cfg"),
                 "--set", "l_values=11,275", "--out", out]) == 3
    err = capsys.readouterr().err
    assert "config error" in err and "capacity error" in err


def test_config_parsing():
    raw = parse_lines(["# comment", "a = 5 # trailing", "", "gamma=1"])
    assert raw == {"a": "5", "gamma": "1"}
    with pytest.raises(ConfigError):
        parse_lines(["no equals sign"])
    cfg = build_config("regime_map", {"gamma_values": "0:2:5", "r_values": "1.1"})
    assert cfg.gamma_values == (0.0, 0.5, 1.0, 1.5, 2.0)
    assert cfg.digest() == build_config("regime_map", {"gamma_values": "0,0.5,1,1.5,2",
                                                       "r_values": "1.1"}).digest()
    bad = [
        ("regime_map", {"gamma_values": "1", "r_values": "0.9"}),
        ("regime_map", {"gamma_values": "1", "r_values": "1.1", "samples_per_cell": "10"}),
        ("relax", {"gamma": "1", "s": "2", "l": "2", "ic": "1,2,3", "n_kicks": "3", "n_traj": "5"}),
        ("relax", {"gamma": "1", "s": "2", "l": "2", "ic": "1,2,200,3", "n_kicks": "3", "n_traj": "5"}),
        ("relax", {"gamma": "1", "s": "2", "l": "2", "ic": "1,2,3,4", "n_kicks": "3", "n_traj": "0"}),
        ("relax", {"gamma": "nan", "s": "2", "l": "2", "ic": "1,2,3,4", "n_kicks": "3", "n_traj": "5"}),
        ("scaling_scan", {"gamma": "1", "l_values": "11", "ic": "1,2,3,4", "window": "5,2", "n_traj": "5"}),
        ("breaktime_scan", {"gamma": "1", "l_values": "12", "ic": "1,2,3,4", "n_kicks": "3", "n_traj": "5"}),
        ("ehrenfest_scan", {"gamma": "1", "l_values": "11", "ic": "1,2,3,4", "n_kicks": "3", "f": "1.5"}),
        ("relax", {"gamma": "1"}),
    ]
    for exp, raw in bad:
        with pytest.raises(ConfigError):
            build_config(exp, raw)


def test_config_experiment_mismatch(tmp_path):
    p = tmp_path / "c.cfg"
    p.write_text("experiment = relax\nj_values = 1\n")
    with pytest.raises(ConfigError):
        load_config("appendix_a", p)


def test_fmt_round_trips():
    from fractions import Fraction
    for x in (0.1, 1 / 3, 2.835, 1e-300, -7.0):
        assert float(fmt(x)) == x
    assert fmt(Fraction(1, 2)) == "1/2" and fmt(Fraction(4, 1)) == "4"
    assert fmt(None) == "" and fmt(np.int64(3)) == "3" and fmt(float("nan")) == "nan"


def test_single_l_breaktime_scan_has_no_fit(tmp_path):
    code, out = run_cli(tmp_path, "breaktime_scan", ["l_values=11"])
    assert code == 0
    assert "breaktime.csv" in csv_bytes(out) and "breaktime_fit.csv" not in csv_bytes(out)


def test_ehrenfest_f_one_never_breaks(tmp_path):
    code, out = run_cli(tmp_path, "ehrenfest_scan", ["f=1"])
    assert code == 0
    header, rows = read_table(out / "ehrenfest.csv")
    col = header.index("t_ehr")
    assert all(r[col] == "" for r in rows)
    assert "ehrenfest_fit.csv" not in csv_bytes(out)


def test_breaktime_table_contents(tmp_path):
    _, out = run_cli(tmp_path, "breaktime_scan")
    header, rows = read_table(out / "breaktime.csv")
    assert [r[header.index("l")] for r in rows] == ["11", "22"]
    assert [r[header.index("s")] for r in rows] == ["10", "20"]
    assert [r[header.index("N_l")] for r in rows] == ["23", "45"]
    for r in rows:
        g = float(r[header.index("gamma")])
        assert g == pytest.approx(2.835, rel=1e-14)


def test_relax_initial_row_matches_coherent_values(tmp_path):
    _, out = run_cli(tmp_path, "relax")
    header, rows = read_table(out / "relax.csv")
    first = dict(zip(header, rows[0]))
    l = 11
    expected = l * math.cos(math.radians(135)) / math.sqrt(l * (l + 1))
    assert float(first["Lz_q"]) == pytest.approx(expected, abs=1e-12)
    assert abs(float(first["Lz_c"]) - float(first["Lz_q"])) < 0.03
    assert len(rows) == 9


def test_ehrenfest_centroid_matches_map(tmp_path):
    from spincorr.experiments import centroid_trajectory
    from spincorr.quantum import QuantumNumbers
    cfg = load_config("ehrenfest_scan", CONFIGS / "ehrenfest_scan.cfg", SMALL["ehrenfest_scan"])
    qn = QuantumNumbers(10, 11)
    tr = centroid_trajectory(cfg, qn, 12)
    p = cl.angles_to_point(*cfg.ic_radians)
    params = cl.ClassicalParams(cfg.a, cfg.gamma, qn.mag_l / qn.mag_s)
    for n in range(1, 13):
        p = cl.map_step(p, params)
        assert np.array_equal(tr[n], p)


def test_default_lambda_cut():
    assert default_lambda_cut(10_000) == pytest.approx(3 * math.log(1e4) / 1e4)


def test_regime_map_fractions(tmp_path):
    _, out = run_cli(tmp_path, "regime_map")
    header, rows = read_table(out / "regime_map.csv")
    frac = {float(r[header.index("gamma")]): float(r[header.index("chaotic_fraction")]) for r in rows}
    assert frac[0.0] == 0.0 and frac[2.835] > 0.9


def test_run_experiment_api(tmp_path):
    cfg = load_config("appendix_a", None, ["j_values=2,4"])
    tables, paths = run_experiment(cfg, tmp_path / "api", workers=1)
    header, rows = read_table(paths[0])
    assert len(rows) == 2
    row = dict(zip(header, rows[1]))
    assert float(row["Jx2_q"]) == pytest.approx(2.0, abs=1e-12)
    assert float(row["Jx4_c"]) == pytest.approx(6.0, abs=1e-12)
