import pytest

from tradsim.cli import main
from tradsim.metrics import EventLog, build_report


@pytest.fixture
def small_cfg(tmp_path):
    p = tmp_path / "small.yaml"
    p.write_text("density: 40\nwarmup: 20\nsim_duration: 30\ndrain: 5\n")
    return p


def test_run_writes_outputs(tmp_path, small_cfg):
    out = tmp_path / "out"
    assert main(["run", "--config", str(small_cfg), "--out", str(out), "--trace"]) == 0
    assert (out / "report.csv").exists() and (out / "trace.csv").exists()
    assert list(out.glob("coverage_*.csv"))
    log = EventLog.read_trace(out / "trace.csv")
    assert build_report(log).n_messages == 3


def test_run_multiple_protocols_and_seeds(tmp_path, small_cfg):
    out = tmp_path / "o"
    assert main(["run", "--config", str(small_cfg), "--out", str(out), "--protocol",
                 "flooding,slotted1p", "--seeds", "2"]) == 0
    assert len((out / "report.csv").read_text().splitlines()) == 5


def test_sweep(tmp_path, small_cfg):
    out = tmp_path / "s"
    assert main(["sweep", "--config", str(small_cfg), "--values", "40,60", "--seeds", "1",
                 "--protocol", "flooding", "--out", str(out)]) == 0
    assert (out / "plot_density.csv").exists()


def test_validate_and_exit_codes(tmp_path, small_cfg, capsys):
    assert main(["validate", "--config", str(small_cfg)]) == 0
    assert capsys.readouterr().out.startswith("ok: urban")
    bad = tmp_path / "bad.yaml"
    bad.write_text("bogus: 1\n")
    assert main(["validate", "--config", str(bad)]) == 2
    assert "bogus: unknown field" in capsys.readouterr().err
    assert main(["validate", "--config", str(tmp_path / "missing.yaml")]) == 3
    assert main(["run", "--config", str(small_cfg), "--protocol", "gossip"]) == 2
    with pytest.raises(SystemExit):
        main(["explode"])
