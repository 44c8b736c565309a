import json
import math

import numpy as np
import pytest

from rmtseason import persist
from rmtseason.cli import main
from rmtseason.ingest import Observable

from tests.helpers import JAN1_2020, series

DAY_MS = 86_400_000


@pytest.fixture
def trades_csv(tmp_path):
    g = np.random.Generator(np.random.PCG64(1))
    n = 3 * 86_400 // 7
    ts = JAN1_2020 + np.sort(g.integers(0, 3 * DAY_MS, n))
    px = 100 * np.exp(np.cumsum(g.normal(0, 1e-4, n)))
    qty = g.exponential(0.5, n)
    path = tmp_path / "trades.csv"
    path.write_text("timestamp_ms,price,quantity\n" + "".join(f"{t},{p:.6f},{q:.6f}\n" for t, p, q in zip(ts, px, qty)))
    return path


def test_ingest(tmp_path, trades_csv, capsys):
    out = tmp_path / "series"
    rc = main(["ingest", "--input", str(trades_csv), "--asset", "BTC", "--out", str(out),
               "--start", "2020-01-01", "--end", "2020-01-04", "--csv"])
    assert rc == 0
    for obs in Observable:
        s = persist.read_series(out / f"BTC_{obs.value}.json")
        assert len(s.values) == 3 * 8640 and s.start_ms == JAN1_2020
        assert (out / f"BTC_{obs.value}.csv").exists()
    assert persist.read_series(out / "BTC_tx_count.json").values.sum() == 3 * 86_400 // 7


def test_ingest_errors(tmp_path, trades_csv, capsys):
    assert main(["ingest", "--input", str(trades_csv), "--format", "okx", "--out", str(tmp_path)]) == 2
    assert "okx" in capsys.readouterr().err
    empty = tmp_path / "empty.csv"
    empty.write_text("")
    assert main(["ingest", "--input", str(empty), "--out", str(tmp_path)]) == 2
    assert main(["ingest", "--input", str(tmp_path / "missing.csv"), "--out", str(tmp_path)]) == 2
    assert main(["ingest", "--input", str(trades_csv), "--delta-t", "7", "--out", str(tmp_path)]) == 3


def test_synth_decompose_planted(tmp_path, capsys):
    assert main(["synth", "--seed", "4", "--K", "60", "--T", "1000", "--plant", "300,301:6:0.5",
                 "--out", str(tmp_path), "--name", "planted"]) == 0
    assert main(["synth", "--seed", "4", "--K", "100", "--T", "2000", "--out", str(tmp_path), "--name", "noise"]) == 0
    assert main(["decompose", "--segments", str(tmp_path / "planted"), str(tmp_path / "noise.segments.json"),
                 "--out", str(tmp_path / "dec")]) == 0
    planted = json.loads((tmp_path / "dec" / "planted.spectrum.json").read_text())
    noise = json.loads((tmp_path / "dec" / "noise.spectrum.json").read_text())
    assert planted["outliers_above"] == [1]
    assert len(noise["outliers_above"]) <= 2
    for suffix in (".hist.csv", ".offdiag.json", ".eigvecs.f64", ".segments.json"):
        assert (tmp_path / "dec" / f"planted{suffix}").exists()

    stem = str(tmp_path / "dec" / "planted")
    assert main(["patterns", "--decomposition", stem, "--ranks", "1", "2", "3"]) == 0
    meta = json.loads((tmp_path / "dec" / "planted.eigensignal_k1.json").read_text())
    assert meta["argmax_abs_index"] in (300, 301)
    assert all((tmp_path / "dec" / f"planted.eigensignal_k{k}.csv").exists() for k in (1, 2, 3))
    assert main(["patterns", "--decomposition", stem, "--ranks", "61"]) == 3

    assert main(["rank", "--decomposition", stem, "--top-n", "5"]) == 0
    assert len((tmp_path / "dec" / "planted.ranked.csv").read_text().splitlines()) == 6


def test_synth_spec_file(tmp_path):
    spec = tmp_path / "spec.json"
    spec.write_text(json.dumps({"seed": 1, "K": 5, "T": 20, "plants": [{"index": 3, "amplitude": 5, "fraction": 0.4}]}))
    assert main(["synth", "--spec", str(spec), "--out", str(tmp_path)]) == 0
    assert persist.read_segments(tmp_path / "synthetic").K == 5
    assert main(["synth", "--spec", str(tmp_path / "nope.json"), "--out", str(tmp_path)]) == 2
    assert main(["synth", "--K", "1", "--out", str(tmp_path)]) == 3


def test_per_year_weeks(tmp_path):
    start = JAN1_2020 + 340 * DAY_MS  # Sunday 2020-12-06
    vals = np.random.Generator(np.random.PCG64(8)).exponential(1.0, 8 * 60480)
    persist.write_series_json(series(vals, start_ms=start, obs=Observable.VOLUME, asset="ETH"), tmp_path / "v.json")
    assert main(["decompose", "--series", str(tmp_path / "v.json"), "--period", "week", "--per-year",
                 "--out", str(tmp_path / "dec")]) == 0
    files = sorted(p.name for p in (tmp_path / "dec").glob("*.spectrum.json"))
    assert files == ["ETH_volume_week_raw_2020.spectrum.json", "ETH_volume_week_raw_2021.spectrum.json"]
    assert json.loads((tmp_path / "dec" / files[0]).read_text())["K"] == 4


def test_profile_pipeline(tmp_path):
    vals = np.ones(3 * 8640)
    vals[::360] = 2.0
    persist.write_series_json(series(vals, obs=Observable.VOLUME, asset="S"), tmp_path / "v.json")
    assert main(["patterns", "--series", str(tmp_path / "v.json"), "--out", str(tmp_path)]) == 0
    prof = np.loadtxt(tmp_path / "S_volume_day.profile.csv", delimiter=",", skiprows=1)
    assert np.array_equal(np.flatnonzero(prof[:, 1] == 2.0), np.arange(0, 8640, 360))
    meta = json.loads((tmp_path / "S_volume_day.periodogram.json").read_text())
    assert meta["dominant_period_s"] == 3600.0


def test_determinism_and_config(tmp_path):
    for run in ("a", "b"):
        assert main(["synth", "--seed", "2", "--K", "20", "--T", "300", "--out", str(tmp_path / run)]) == 0
        cfg = tmp_path / f"{run}.cfg"
        cfg.write_text(f"# decompose settings\nbins = 7\nout = {tmp_path / 'ignored'}\n")
        assert main(["decompose", "--config", str(cfg), "--segments", str(tmp_path / run / "synthetic"),
                     "--out", str(tmp_path / run)]) == 0
    assert not (tmp_path / "ignored").exists()  # flag overrides file
    for name in ("synthetic.spectrum.json", "synthetic.hist.csv", "synthetic.offdiag.json", "synthetic.segments.f64"):
        assert (tmp_path / "a" / name).read_bytes() == (tmp_path / "b" / name).read_bytes()
    assert len((tmp_path / "a" / "synthetic.hist.csv").read_text().splitlines()) == 8


def test_missing_decomposition_inputs(tmp_path):
    assert main(["decompose", "--out", str(tmp_path)]) == 2
    assert main(["patterns", "--decomposition", str(tmp_path / "nothing")]) == 2
