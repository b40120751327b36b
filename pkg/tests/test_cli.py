import numpy as np
import pytest
import yaml

from stochpower.cli import main
from stochpower.config import ConfigError, load_config, parse_config
from stochpower.csvio import read_csv, write_csv

BASE = {
    "game": {"K": 2, "R": 0.5, "sigma2": 1.0, "lambda": 0.05},
    "channel": {"type": "markov", "states": [0.25, 1.0], "transition": [[0.9, 0.1], [0.1, 0.9]], "seed": 0},
    "analysis": {"grid": 6, "T": 2000, "seeds": 3, "K_range": [1, 3], "mc_samples": 10000},
    "output": {"directory": "out"},
}


def write_config(tmp_path, name="run.yaml", **blocks):
    data = {k: dict(v) for k, v in BASE.items()}
    for block, values in blocks.items():
        if values is None:
            data.pop(block, None)
        else:
            data.setdefault(block, {}).update(values)
    path = tmp_path / name
    path.write_text(yaml.safe_dump(data, sort_keys=False))
    return path


def run(*args):
    return main([str(a) for a in args])


class TestConfig:
    def test_default_file(self, default_config_path):
        cfg = load_config(default_config_path)
        assert cfg.game.K == 2 and cfg.game.lam == 0.05
        assert cfg.game.p_max == pytest.approx(10 * (np.sqrt(2) - 1) / 0.25)
        assert cfg.analysis.seeds == list(range(16))
        assert cfg.K_values == [2, 3, 4, 5, 6]

    def test_missing_sigma2(self):
        text = "game:\n  K: 2\n  R: 0.5\n  lambda: 0.05\nchannel:\n  type: iid\n  eta_min: 0.25\n  eta_max: 1\n"
        with pytest.raises(ConfigError, match="game.sigma2") as exc:
            parse_config(text)
        assert exc.value.line == 1

    def test_unknown_key_line(self):
        text = "game:\n  K: 2\n  R: 0.5\n  sigma2: 1\n  lambda: 0.05\n  colour: red\n"
        with pytest.raises(ConfigError, match="game.colour") as exc:
            parse_config(text)
        assert exc.value.line == 6

    def test_unknown_block(self):
        with pytest.raises(ConfigError, match="unknown block"):
            parse_config("extras:\n  a: 1\n")

    @pytest.mark.parametrize("block,key,value", [
        ("game", "K", 0), ("game", "K", 2.5), ("game", "sigma2", -1), ("game", "lambda", 1.0),
        ("channel", "type", "fading"), ("analysis", "seeds", []), ("analysis", "K_range", [3, 1]),
        ("output", "trace", "yes"),
    ])
    def test_invalid_values(self, tmp_path, block, key, value):
        path = write_config(tmp_path, **{block: {key: value}})
        with pytest.raises(ConfigError):
            load_config(path)

    def test_bad_transition_is_located(self, tmp_path):
        path = write_config(tmp_path, channel={"transition": [[0.5, 0.4], [0.5, 0.5]]})
        with pytest.raises(ConfigError, match="do not sum to 1") as exc:
            load_config(path)
        assert exc.value.line is not None

    def test_seed_count_starts_at_channel_seed(self, tmp_path):
        cfg = load_config(write_config(tmp_path, channel={"seed": 40}))
        assert cfg.analysis.seeds == [40, 41, 42]


def test_csv_round_trip(tmp_path):
    rows = [(1, "smu", 0.1 + 0.2, 1e-300, True), (2, "op", np.float64(np.pi), -0.0, False)]
    path = write_csv(tmp_path / "x.csv", ["K", "name", "a", "b", "flag"], rows, {"seed": "1,2"})
    meta, cols, back = read_csv(path)
    assert meta == {"seed": "1,2"} and cols == ["K", "name", "a", "b", "flag"]
    assert back[0][2] == 0.1 + 0.2 and back[1][2] == np.pi and back[0][3] == 1e-300
    assert back[0][4] is True and back[1][1] == "op"


class TestSimulate:
    def test_default_run(self, tmp_path):
        path = write_config(tmp_path)
        assert run("simulate", "--config", path, "--out", tmp_path / "o") == 0
        meta, cols, rows = read_csv(tmp_path / "o" / "simulate_episodes.csv")
        assert cols == ["stage_count", "seed", "player", "discounted", "average"]
        assert len(rows) == 3 * 2
        assert meta["seeds"] == "0,1,2" and len(meta["config_sha256"]) == 64
        _, cols, rows = read_csv(tmp_path / "o" / "simulate_summary.csv")
        assert len(rows) == 2

    def test_missing_sigma2_exit_code(self, tmp_path, capsys):
        path = tmp_path / "bad.yaml"
        path.write_text("game:\n  K: 2\n  R: 0.5\n  lambda: 0.05\nchannel:\n  type: iid\n  eta_min: 0.25\n  eta_max: 1\n")
        assert run("simulate", "--config", path, "--out", tmp_path / "o") == 2
        assert "sigma2" in capsys.readouterr().err

    def test_unknown_key_exit_code(self, tmp_path, capsys):
        path = write_config(tmp_path, analysis={"gird": 4})
        assert run("simulate", "--config", path) == 2
        err = capsys.readouterr().err
        assert "analysis.gird" in err and "line " in err

    def test_lambda_warning(self, tmp_path, capsys):
        path = write_config(tmp_path, game={"lambda": 0.5})
        assert run("simulate", "--config", path, "--out", tmp_path / "o", "--quiet") == 0
        assert "WARNING" in capsys.readouterr().err

    def test_no_warning_inside_bound(self, tmp_path, capsys):
        path = write_config(tmp_path)
        run("simulate", "--config", path, "--out", tmp_path / "o", "--quiet")
        assert "WARNING" not in capsys.readouterr().err

    def test_trace_and_seed_override(self, tmp_path):
        path = write_config(tmp_path, output={"trace": True}, strategy={"policy": "grim_smu"})
        assert run("simulate", "--config", path, "--out", tmp_path / "o", "--seeds", 2, "--quiet") == 0
        _, cols, rows = read_csv(tmp_path / "o" / "trace_seed1.csv")
        assert cols == ["stage", "player", "eta", "power", "sinr", "utility"]
        assert len(rows) == 1000 * 2
        assert not (tmp_path / "o" / "trace_seed2.csv").exists()

    def test_numerical_error_exit_code(self, tmp_path):
        path = write_config(tmp_path, channel={"transition": [[1.0, 0.0], [0.0, 1.0]]})
        assert run("lambda-bound", "--config", path, "--out", tmp_path / "o") == 3


@pytest.fixture(scope="module")
def region_dir(tmp_path_factory, default_config_path):
    out = tmp_path_factory.mktemp("region")
    assert main(["region", "--config", str(default_config_path), "--out", str(out), "--quiet"]) == 0
    return out


class TestRegion:
    def test_named_points(self, region_dir):
        _, cols, rows = read_csv(region_dir / "region_points.csv")
        assert cols == ["name", "u1", "u2"]
        assert [r[0] for r in rows] == ["SMU", "OP", "NE"]
        smu, op = np.array(rows[0][1:]), np.array(rows[1][1:])
        assert np.all(smu >= op)

    def test_hull_ccw_no_collinear(self, region_dir):
        for name in ("region_hull.csv", "region_hull_ir.csv"):
            _, _, rows = read_csv(region_dir / name)
            v = np.array([r[1:] for r in rows], dtype=float)
            e1 = np.roll(v, -1, axis=0) - v
            e2 = np.roll(v, -2, axis=0) - np.roll(v, -1, axis=0)
            cross = e1[:, 0] * e2[:, 1] - e1[:, 1] * e2[:, 0]
            assert np.all(cross > 1e-9 * np.linalg.norm(e1, axis=1) * np.linalg.norm(e2, axis=1))

    def test_cloud_and_frontier(self, region_dir):
        meta, cols, _ = read_csv(region_dir / "region_frontier.csv")
        assert cols == ["u1", "u2"] and meta["grid"] == "6"
        with open(region_dir / "region_cloud.csv") as fh:
            n = sum(1 for line in fh if not line.startswith("#")) - 1
        assert n == 6**8

    def test_more_players_gives_named_points_only(self, tmp_path, capsys):
        path = write_config(tmp_path, game={"K": 3})
        assert run("region", "--config", path, "--out", tmp_path / "o", "--quiet") == 0
        assert len(read_csv(tmp_path / "o" / "region_points.csv")[2]) == 3
        assert not (tmp_path / "o" / "region_cloud.csv").exists()
        assert "K <= 2" in capsys.readouterr().err

    def test_budget_exit_code(self, tmp_path):
        path = write_config(tmp_path, analysis={"budget": 1000})
        assert run("region", "--config", path, "--out", tmp_path / "o") == 4

    def test_iid_channel_rejected(self, tmp_path):
        path = write_config(tmp_path, channel={"type": "iid", "eta_min": 0.25, "eta_max": 1.0,
                                               "states": None, "transition": None})
        assert run("region", "--config", path, "--out", tmp_path / "o") == 2


class TestLambdaBound:
    def test_single_state(self, single_config_path, tmp_path, capsys):
        assert run("lambda-bound", "--config", single_config_path, "--out", tmp_path) == 0
        out = capsys.readouterr().out
        assert "lambda_max 0.069831" in out and "satisfies" in out
        meta, _, rows = read_csv(tmp_path / "lambda_bound.csv")
        assert float(meta["lambda_max"]) == pytest.approx(0.0698309215995897, rel=1e-9)

    def test_single_player_has_no_gap(self, tmp_path, capsys):
        path = write_config(tmp_path, game={"K": 1})
        assert run("lambda-bound", "--config", path, "--out", tmp_path / "o") == 0
        assert "lambda_max 0.000000" in capsys.readouterr().out

    def test_stable_across_runs(self, single_config_path, tmp_path):
        run("lambda-bound", "--config", single_config_path, "--out", tmp_path / "a", "--quiet")
        run("lambda-bound", "--config", single_config_path, "--out", tmp_path / "b", "--quiet")
        assert (tmp_path / "a" / "lambda_bound.csv").read_bytes() == (tmp_path / "b" / "lambda_bound.csv").read_bytes()


def test_compare_rows(tmp_path):
    path = write_config(tmp_path)
    assert run("compare", "--config", path, "--out", tmp_path / "o", "--quiet") == 0
    meta, cols, rows = read_csv(tmp_path / "o" / "compare.csv")
    assert cols == ["K", "mechanism", "mean", "stderr", "seeds"]
    assert len(rows) == 3 * 4
    by = {(r[0], r[1]): r[2] for r in rows}
    assert by[1, "smu"] == by[1, "operating_point"]
