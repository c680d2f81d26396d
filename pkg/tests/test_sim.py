import io

import numpy as np
import pytest

from uepharq import cli, sim
from uepharq.sim import CSV_HEADER, MetricsRow, MetricsTable, SimConfig

SMALL = SimConfig(schemes=("EEPH", "UEPH_7"), snr_points_db=(0.0, 6.0), trials=60, chunk=25)


def test_high_snr_surrogate_is_error_free():
    cfg = SimConfig(snr_points_db=(0.0,), trials=20, fading="fixed", fixed_gain=1e6)
    table = sim.run_monte_carlo(cfg)
    assert len(table.rows) == 4
    for r in table.rows:
        assert r.m1_bler == 0 and r.m2_ber == 0 and r.mean_retx == 0
        assert r.m1_bler_ci95 == 0 and r.m2_ber_ci95 == 0


def test_trials_guard():
    with pytest.raises(ValueError):
        sim.run_monte_carlo(SimConfig(trials=0))
    table = sim.run_monte_carlo(SimConfig(schemes=("UEPH_7",), snr_points_db=(3.0,), trials=1))
    assert [r.trials for r in table.rows] == [1]


@pytest.mark.parametrize("bad", [
    dict(schemes=("NOPE",)), dict(schemes=()), dict(snr_points_db=()), dict(fading="rician"),
    dict(workers=0), dict(schemes=("UEPH", "UEPH_7")), dict(mother="15,1x"), dict(m1_len=1400),
])
def test_invalid_config_rejected(bad):
    with pytest.raises(ValueError):
        SimConfig(**bad).validate()


def test_half_width():
    assert sim.half_width(0.5, 100) == pytest.approx(1.96 * 0.05)
    assert sim.half_width(0.0, 100) == 0.0


def test_chunking_does_not_change_results():
    a = sim.simulate(SMALL)
    b = sim.simulate(SimConfig(**{**SMALL.__dict__, "chunk": 7}))
    for key in a:
        for f in ("m1_ok", "m2_bit_errors", "channel_uses"):
            assert np.array_equal(getattr(a[key], f), getattr(b[key], f))


def test_prefix_of_trials_is_stable():
    # trial t is keyed by its index, so running fewer trials gives a prefix
    short = sim.simulate(SimConfig(**{**SMALL.__dict__, "trials": 20}))
    full = sim.simulate(SMALL)
    for key in short:
        assert np.array_equal(short[key].m2_bit_errors, full[key].m2_bit_errors[:20])


def test_workers_byte_identical(tmp_path):
    out = []
    for w in (1, 2):
        path = tmp_path / f"w{w}.csv"
        sim.emit_csv(sim.run_monte_carlo(SimConfig(**{**SMALL.__dict__, "workers": w})), path)
        out.append(path.read_bytes())
    assert out[0] == out[1]


def test_csv_empty_table_is_header_only():
    buf = io.StringIO()
    sim.write_csv(MetricsTable(), buf)
    assert buf.getvalue() == ",".join(CSV_HEADER) + "\n"


def test_csv_round_trip(tmp_path):
    table = sim.run_monte_carlo(SMALL)
    assert len(table.rows) == 2 * 2
    assert [(r.scheme, r.snr_db) for r in table.rows] == [
        ("EEPH", 0.0), ("EEPH", 6.0), ("UEPH_7", 0.0), ("UEPH_7", 6.0)]
    path = sim.emit_csv(table, tmp_path / "t.csv")
    assert sim.read_csv(path).rows == table.rows


def test_csv_unwritable_path(tmp_path):
    with pytest.raises(OSError):
        sim.emit_csv(MetricsTable(), tmp_path / "missing" / "t.csv")


def test_csv_precision():
    buf = io.StringIO()
    sim.write_csv(MetricsTable([MetricsRow("X", 2.0, 3, 1 / 3, 0.1, 2 / 3, 0.2, 0.5)]), buf)
    fields = buf.getvalue().splitlines()[1].split(",")
    assert float(fields[3]) == 1 / 3 and fields[2] == "3"


def test_rates_in_unit_interval_and_monotone():
    cfg = SimConfig(snr_points_db=(0.0, 4.0, 8.0, 12.0), trials=300, chunk=300)
    table = sim.run_monte_carlo(cfg)
    for name in cfg.schemes:
        rows = [table.row(name, s) for s in cfg.snr_points_db]
        for r in rows:
            assert 0 <= r.m1_bler <= 1 and 0 <= r.m2_ber <= 1
        for lo, hi in zip(rows, rows[1:]):
            assert hi.m1_bler <= lo.m1_bler + hi.m1_bler_ci95 + lo.m1_bler_ci95
            assert hi.m2_ber <= lo.m2_ber + hi.m2_ber_ci95 + lo.m2_ber_ci95


def test_parse_config():
    cfg = sim.parse_config("""
        # paired sweep
        schemes = EEPH, SEPUEPH
        snr_start = 0
        snr_stop = 4
        snr_step = 2
        trials = 50   # small
        seed = 9
        max_retx = 2
        m3_len = 0
        identical_fades = yes
    """)
    assert cfg.schemes == ("EEPH", "SEPUEPH")
    assert cfg.snr_points_db == (0.0, 2.0, 4.0)
    assert (cfg.trials, cfg.seed, cfg.max_retransmissions, cfg.identical_fades) == (50, 9, 2, True)
    assert sim.parse_config("snr_points = 1, 3.5").snr_points_db == (1.0, 3.5)


@pytest.mark.parametrize("text", ["bogus = 1", "trials", "m3_len = 8", "trials = many", "identical_fades = maybe",
                                  "snr_step = 0"])
def test_parse_config_errors(text):
    with pytest.raises(ValueError):
        sim.parse_config(text)


def test_snr_grid():
    assert sim.snr_grid(0, 12, 2) == (0, 2, 4, 6, 8, 10, 12)
    assert sim.snr_grid(0, 1, 0.3) == (0.0, 0.3, 0.6, 0.9)


# --- CLI -------------------------------------------------------------------

def test_cli_distance(capsys):
    assert cli.main(["distance", "15,17"]) == 0
    out = capsys.readouterr().out
    assert "d_0 = 6" in out and "d_1 = 6" in out
    assert cli.main(["distance", "15,17,13,15,17,13", "--prune", "0"]) == 0
    assert "d_0 = 20" in capsys.readouterr().out


def test_cli_distance_with_scrambler_and_file(capsys, tmp_path):
    spec = tmp_path / "code.txt"
    spec.write_text("generators = 15,17\nscrambler = 001010101\n")
    assert cli.main(["distance", str(spec), "--csv"]) == 0
    lines = capsys.readouterr().out.splitlines()
    assert lines[0] == "code,scrambler,level,free_distance"
    assert [ln.rsplit(",", 1)[1] for ln in lines[1:]] == ["6", "7", "8"]


def test_cli_search(capsys):
    assert cli.main(["search-scrambler", "15,17", "--objective", "1"]) == 0
    assert "d_1 = 7" in capsys.readouterr().out


def test_cli_simulate_rows(tmp_path, capsys):
    out = tmp_path / "r.csv"
    args = ["simulate", "--schemes", "EEPH,UEPH_7", "--snr-start", "0", "--snr-stop", "4", "--snr-step", "2",
            "--trials", "100", "--out", str(out)]
    assert cli.main(args) == 0
    lines = out.read_text().splitlines()
    assert lines[0] == ",".join(CSV_HEADER) and len(lines) == 7
    assert cli.main(args[:-2]) == 0
    assert capsys.readouterr().out == out.read_text()


def test_cli_simulate_config(tmp_path):
    conf = tmp_path / "run.conf"
    conf.write_text("schemes = UEPH_6\nsnr_points = 2\ntrials = 10\n")
    out = tmp_path / "r.csv"
    assert cli.main(["simulate", "--config", str(conf), "--seed", "4", "--out", str(out)]) == 0
    assert len(out.read_text().splitlines()) == 2


def test_cli_selftest(capsys):
    assert cli.main(["selftest"]) == 0
    out = capsys.readouterr().out.splitlines()
    assert len(out) == 4 and all(ln.startswith("PASS") for ln in out)


@pytest.mark.parametrize("argv", [
    ["simulate", "--trials", "0"],
    ["simulate", "--schemes", "FOO"],
    ["simulate", "--config", "/nonexistent/run.conf"],
    ["distance", "15,19"],
    ["distance", "15,17", "--scrambler", "000000000"],
])
def test_cli_rejections(argv, capsys):
    assert cli.main(argv) == 2
    assert capsys.readouterr().err.startswith("uepharq: error:")


def test_cli_usage_errors():
    with pytest.raises(SystemExit) as exc:
        cli.main(["simulate", "--no-such-flag"])
    assert exc.value.code != 0
    with pytest.raises(SystemExit):
        cli.main([])
