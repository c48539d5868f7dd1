import csv

import pytest

from epidemigrid.cli import main
from epidemigrid.engine import Outcome, OutcomeKind
from epidemigrid.errors import ConfigInvalid
from epidemigrid.sweep import SUMMARY_COLUMNS, aggregate, lower_median, parse_rt, parse_sweep_spec, run_sweep

FIG4 = """
map = city.pgm
radius = 3
replications = 20
base_seed = 100
rt = 1:5
rt = 6:10
rt = 11:20
rt = 21:40
rt = 41:80
packets = 3
packets = 6
infected = 20
susceptible = 80
"""


def outcome(kind, peak_step=10, peak=25, ext=50):
    return Outcome(OutcomeKind(kind), ext, None, peak, peak_step)


class TestAggregate:
    def test_fraction(self):
        outs = [outcome("Pandemic")] * 7 + [outcome("Prevented")] * 3
        assert aggregate(outs).pandemic_fraction == 0.7

    def test_all_censored(self):
        s = aggregate([outcome("Censored")] * 4)
        assert s.censored_count == 4
        assert s.peak_step is None and s.extinction_step is None

    def test_median(self):
        s = aggregate([outcome("Prevented", peak_step=k) for k in (80, 60, 70)])
        assert s.peak_step.median == 70
        assert lower_median([1, 2, 3, 4]) == 2

    def test_empty(self):
        with pytest.raises(ValueError):
            aggregate([])


class TestSpec:
    def test_fig4_grid(self, tmp_path):
        spec = parse_sweep_spec(FIG4, base_dir=tmp_path)
        assert len(spec.configurations()) == 10
        runs = spec.runs()
        assert len(runs) == 200
        assert [cfg.seed for _, _, cfg in runs] == list(range(100, 300))
        assert spec.base.map_path == str(tmp_path / "city.pgm")

    def test_single_run(self):
        spec = parse_sweep_spec("map = m.pgm\nreplications = 1\n")
        assert len(spec.runs()) == 1

    @pytest.mark.parametrize(
        "text",
        ["radius = 3\n", "map = m.pgm\nbogus = 1\n", "map = m.pgm\nreplications = 0\n", "map = m.pgm\nrt = 5:2\n", "map = m.pgm\npackets = x\n", "map = m.pgm\njunk\n"],
    )
    def test_bad_spec(self, text):
        with pytest.raises(ConfigInvalid):
            parse_sweep_spec(text)

    def test_parse_rt(self):
        assert parse_rt("41:80") == (41, 80)
        assert parse_rt("7") == (7, 7)
        with pytest.raises(ConfigInvalid):
            parse_rt("0:3")


def read_summary(path):
    with open(path) as fh:
        return list(csv.DictReader(fh))


class TestRunSweep:
    SPEC = """
    map = {map}
    radius = 2.5
    band = 0.1
    replications = 2
    base_seed = 7
    rt = 1:2
    packets = 2
    infected = 40
    infected = 4
    susceptible = 6
    susceptible = 16
    """

    def test_files_and_rows(self, tmp_path, city_file):
        spec = parse_sweep_spec(self.SPEC.format(map=city_file))
        rows = run_sweep(spec, tmp_path / "out")
        assert len(rows) == 4
        assert len(list((tmp_path / "out").glob("rt*.csv"))) == 8
        summary = read_summary(tmp_path / "out" / "summary.csv")
        assert tuple(summary[0]) == SUMMARY_COLUMNS
        assert [r["config"] for r in summary] == ["rt1-2_p2_i40_s6", "rt1-2_p2_i40_s16", "rt1-2_p2_i4_s6", "rt1-2_p2_i4_s16"]
        assert summary[1]["rate_is"] == f"{40 / 17:.6f}"
        for r in summary:
            assert 0 <= float(r["pandemic_fraction"]) <= 1
            assert r["runs"] == "2" and r["failures"] == "0"

    def test_reproducible(self, tmp_path, city_file):
        spec = parse_sweep_spec(self.SPEC.format(map=city_file))
        run_sweep(spec, tmp_path / "a")
        run_sweep(spec, tmp_path / "b", jobs=2)
        for f in sorted((tmp_path / "a").iterdir()):
            assert f.read_bytes() == (tmp_path / "b" / f.name).read_bytes()

    def test_censored_runs_counted(self, tmp_path, city_file):
        text = self.SPEC.format(map=city_file).replace("rt = 1:2", "rt = 50:50\nmax_steps = 3")
        rows = run_sweep(parse_sweep_spec(text), tmp_path / "out")
        for r in rows:
            assert int(r["censored_count"]) + int(r["pandemic_count"]) == 2
            assert r["failures"] == "0"


class TestCli:
    def test_run_smoke(self, tmp_path, city_file, capsys):
        out = tmp_path / "ts.csv"
        args = ["run", "--map", str(city_file), "--infected", "5", "--susceptible", "20", "--packets", "3", "--rt", "1:5", "--radius", "3", "--seed", "7", "--band", "0.1", "--out", str(out)]
        assert main(args) == 0
        lines = out.read_text().splitlines()
        assert lines[1].startswith("step,susceptible")
        assert len(lines) >= 3
        assert "outcome=" in capsys.readouterr().out
        out2 = tmp_path / "ts2.csv"
        assert main(args[:-1] + [str(out2)]) == 0
        assert out.read_bytes() == out2.read_bytes()

    def test_missing_map(self, capsys):
        assert main(["run", "--out", "x.csv"]) == 1
        assert "--map" in capsys.readouterr().err

    def test_bad_map(self, tmp_path, capsys):
        bad = tmp_path / "bad.pgm"
        bad.write_bytes(b"P7\n")
        assert main(["run", "--map", str(bad)]) == 1
        assert "error" in capsys.readouterr().err

    def test_bad_flag_value(self, city_file, capsys):
        assert main(["run", "--map", str(city_file), "--rt", "9:3"]) == 1

    def test_env_seed(self, tmp_path, city_file, monkeypatch):
        monkeypatch.setenv("EPIDEMIGRID_SEED", "42")
        out = tmp_path / "ts.csv"
        assert main(["run", "--map", str(city_file), "--band", "0.1", "--rt", "1:1", "--out", str(out)]) == 0
        assert "seed=42" in out.read_text().splitlines()[0]

    def test_side_outputs(self, tmp_path, city_file):
        ev, tr, gr = tmp_path / "ev.csv", tmp_path / "tr.csv", tmp_path / "g.txt"
        args = ["run", "--map", str(city_file), "--band", "0.1", "--infected", "2", "--susceptible", "3", "--rt", "1:1",
                "--out", str(tmp_path / "ts.csv"), "--events", str(ev), "--trace", str(tr), "--dump-graph", str(gr)]
        assert main(args) == 0
        assert ev.read_text().splitlines()[:3] == ["step,event,device_id", "0,infected,0", "0,infected,1"]
        assert tr.read_text().splitlines()[0] == "step,device_id,row,col"
        u, v, w = gr.read_text().splitlines()[0].split()
        assert int(w) == 19

    def test_sweep_command(self, tmp_path, city_file, capsys):
        spec = tmp_path / "spec.txt"
        spec.write_text(f"map = {city_file.name}\nband = 0.1\nreplications = 1\nrt = 1:1\n")
        assert main(["sweep", "--spec", str(spec), "--out-dir", str(tmp_path / "o")]) == 0
        assert len(read_summary(tmp_path / "o" / "summary.csv")) == 1

    def test_sweep_bad_spec(self, tmp_path):
        spec = tmp_path / "spec.txt"
        spec.write_text("nothing useful\n")
        assert main(["sweep", "--spec", str(spec), "--out-dir", str(tmp_path / "o")]) == 1

    def test_make_map(self, tmp_path):
        out, att = tmp_path / "c.pgm", tmp_path / "a.pgm"
        assert main(["make-map", "--out", str(out), "--attraction-out", str(att), "--height", "40", "--width", "50"]) == 0
        from epidemigrid.mapgrid import binarize, load_attraction, load_gray_image

        grid = binarize(load_gray_image(out))
        assert (grid.width, grid.height) == (50, 40)
        assert set(load_attraction(att, grid).weights[grid.road].tolist()) <= {1, 5, 10}
