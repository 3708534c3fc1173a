import json
import math
import subprocess
import sys

import numpy as np
import pytest

from meanpartition import LabeledPartition, Partition
from meanpartition.cli import main
from meanpartition.errors import LabelOutOfRangeError, ParseError
from meanpartition.files import load_sample, parse_labels, read_soft, write_labels, write_soft


def write(tmp_path, name, text):
    path = tmp_path / name
    path.write_text(text, encoding="utf-8")
    return path


class TestLabelFiles:
    def test_single_row(self, tmp_path):
        sample = parse_labels(write(tmp_path, "a.txt", "2 3\n0 0 1\n"))
        assert sample[0] == Partition.from_labels([0, 0, 1], 2)

    def test_relabelings_equal(self, tmp_path):
        sample = parse_labels(write(tmp_path, "a.txt", "# two runs\n3 4\n0,1,2,2\n\n2 0 1 1  # relabeled\n"))
        assert sample[0] == sample[1]

    def test_round_trip(self, tmp_path, rng):
        rows = rng.integers(3, size=(5, 7))
        src = write(tmp_path, "a.txt", "3 7\n" + "\n".join(" ".join(map(str, r)) for r in rows) + "\n")
        sample = parse_labels(src)
        out = tmp_path / "b.txt"
        write_labels(out, list(sample))
        assert list(parse_labels(out)) == list(sample)

    @pytest.mark.parametrize(
        "text,line",
        [("2 3\n0 1\n", 2), ("2\n", 1), ("2 3\n0 x 1\n", 2), ("", None), ("2 3\n", None)],
    )
    def test_parse_errors(self, tmp_path, text, line):
        with pytest.raises(ParseError) as info:
            parse_labels(write(tmp_path, "bad.txt", text))
        assert info.value.line == line

    def test_label_out_of_range(self, tmp_path):
        with pytest.raises(LabelOutOfRangeError) as info:
            parse_labels(write(tmp_path, "bad.txt", "2 3\n0 0 1\n0 2 1\n"))
        assert info.value.line == 3

    def test_soft_json(self, tmp_path):
        rep = LabeledPartition([[0.25, 1.0], [0.75, 0.0]])
        path = tmp_path / "s.json"
        write_soft(path, [rep, rep])
        assert [r.matrix.tolist() for r in read_soft(path)] == [rep.matrix.tolist()] * 2
        write_soft(path, [rep])
        assert load_sample(path)[0] == Partition(rep)

    def test_soft_json_errors(self, tmp_path):
        with pytest.raises(ParseError):
            read_soft(write(tmp_path, "s.json", "{not json"))
        with pytest.raises(ParseError):
            read_soft(write(tmp_path, "s.json", '{"ell": 3, "m": 1, "rows": [[1.0], [0.0]]}'))


def run_cli(args, capsys):
    code = main(args)
    captured = capsys.readouterr()
    return code, captured.out, captured.err


class TestCommands:
    def test_consensus_identical(self, tmp_path, capsys):
        path = write(tmp_path, "a.txt", "2 4\n0 0 1 1\n1 1 0 0\n0 0 1 1\n")
        code, out, _ = run_cli(["consensus", "--input", str(path)], capsys)
        assert code == 0
        result = json.loads(out)["result"]
        assert result["frechet_value"] == 0.0
        assert Partition.from_matrix(result["mean"]["rows"]) == Partition.from_labels([0, 0, 1, 1], 2)
        assert result["method"] == "exact" and result["minimizer_count"] == 1

    def test_consensus_heuristic(self, tmp_path, capsys):
        path = write(tmp_path, "a.txt", "2 3\n0 0 1\n0 1 1\n")
        code, out, _ = run_cli(["consensus", "--input", str(path), "--heuristic"], capsys)
        result = json.loads(out)["result"]
        assert code == 0 and result["method"] == "heuristic"
        assert result["frechet_value"] == pytest.approx(0.5)
        assert result["fixed_point_residual"] <= 1e-9

    def test_distance(self, tmp_path, capsys):
        path = write(tmp_path, "a.txt", "2 3\n0 0 1\n0 1 1\n")
        code, out, _ = run_cli(["distance", "--input", str(path)], capsys)
        result = json.loads(out)["result"]
        assert code == 0
        assert result["distance"] == pytest.approx(math.sqrt(2))
        assert result["distances"][0][1] == pytest.approx(math.sqrt(2))

    def test_asymmetry(self, tmp_path, capsys):
        path = write(tmp_path, "a.txt", "2 3\n0 0 1\n0 0 0\n")
        code, out, _ = run_cli(["asymmetry", "--input", str(path)], capsys)
        rows = json.loads(out)["result"]["partitions"]
        assert rows[0]["alpha"] == pytest.approx(math.sqrt(6))
        assert rows[1]["alpha"] == pytest.approx(math.sqrt(6))
        assert not rows[0]["symmetric"]

    def test_diversity_with_truth(self, tmp_path, capsys):
        sample = write(tmp_path, "a.txt", "2 4\n0 0 0 0\n0 0 1 1\n")
        truth = write(tmp_path, "t.txt", "2 4\n0 0 0 1\n")
        code, out, _ = run_cli(["diversity", "--input", str(sample), "--truth", str(truth)], capsys)
        result = json.loads(out)["result"]
        assert code == 0
        assert result["mean_set_size"] == 2
        assert result["loss"]["worst"] == pytest.approx(math.sqrt(3))
        assert result["loss"]["estimation"] > 0
        assert result["diversity"]["variation_f"] <= result["diversity"]["pairwise_g"] + 1e-9

    def test_simulate_p_one(self, tmp_path, capsys):
        out_path = tmp_path / "r.json"
        code, _, _ = run_cli(
            ["simulate", "--p", "1", "--m", "8", "--n-grid", "1,3", "--trials", "5", "--output", str(out_path)],
            capsys,
        )
        assert code == 0
        report = json.loads(out_path.read_text())
        assert [g["recovery_rate"] for g in report["result"]["grid"]] == [1.0, 1.0]
        assert out_path.with_suffix(".csv").exists()
        assert report["version"] == "0.1.0"
        assert report["config"]["trials"] == 5

    def test_config_and_override(self, tmp_path, capsys):
        cfg = write(tmp_path, "c.json", json.dumps({"m": 6, "p": 0.9, "n_grid": [1], "trials": 3, "seed": 4}))
        code, out, _ = run_cli(["simulate", "--config", str(cfg), "--seed", "7", "--mode", "ball"], capsys)
        config = json.loads(out)["config"]
        assert code == 0 and config["seed"] == 7 and config["m"] == 6 and config["mode"] == "ball"

    @pytest.mark.parametrize(
        "args,error",
        [
            (["frobnicate"], "unknown-command"),
            (["simulate", "--trials", "0"], "invalid-config"),
            (["simulate", "--p", "1.5"], "invalid-config"),
            (["consensus"], "invalid-config"),
        ],
    )
    def test_errors(self, args, error, capsys):
        code, out, err = run_cli(args, capsys)
        assert code == 1 and out == ""
        assert json.loads(err)["error"] == error

    def test_bad_config_key(self, tmp_path, capsys):
        cfg = write(tmp_path, "c.json", '{"colour": 1}')
        code, _, err = run_cli(["simulate", "--config", str(cfg)], capsys)
        assert code == 1 and json.loads(err)["error"] == "invalid-config"

    def test_parse_error_reported(self, tmp_path, capsys):
        path = write(tmp_path, "a.txt", "2 3\n0 5 1\n")
        code, _, err = run_cli(["distance", "--input", str(path)], capsys)
        payload = json.loads(err)
        assert code == 1 and payload["line"] == 2

    def test_budget_env(self, tmp_path, capsys, monkeypatch):
        monkeypatch.setenv("MEANPARTITION_BUDGET", "1")
        path = write(tmp_path, "a.txt", "2 3\n0 0 1\n0 1 1\n")
        code, out, _ = run_cli(["consensus", "--input", str(path)], capsys)
        assert code == 0 and json.loads(out)["result"]["method"] == "heuristic"
        code, _, err = run_cli(["consensus", "--input", str(path), "--exact"], capsys)
        assert code == 1 and json.loads(err)["error"] == "budget-exceeded"


def test_module_entry_point(tmp_path):
    path = write(tmp_path, "a.txt", "2 3\n0 0 1\n0 1 1\n")
    proc = subprocess.run(
        [sys.executable, "-m", "meanpartition", "distance", "--input", str(path)],
        capture_output=True, text=True, check=False,
    )
    assert proc.returncode == 0
    assert json.loads(proc.stdout)["result"]["distance"] == pytest.approx(math.sqrt(2))


def test_simulate_byte_identical(tmp_path):
    cfg = write(tmp_path, "c.json", json.dumps({"m": 16, "p": 0.9, "n_grid": [1, 3], "trials": 10, "mode": "ball"}))
    outs = []
    for name in ("a.json", "b.json"):
        assert main(["simulate", "--config", str(cfg), "--output", str(tmp_path / name)]) == 0
        outs.append((tmp_path / name).read_bytes())
    assert outs[0] == outs[1]
    assert (tmp_path / "a.csv").read_bytes() == (tmp_path / "b.csv").read_bytes()
    assert np.isfinite(json.loads(outs[0])["result"]["p_hat"]).all()
