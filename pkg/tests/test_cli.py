import csv
import json
import subprocess
import sys

import pytest

from fbmrec.cli import EXIT_IO, EXIT_STATS, EXIT_USAGE, fmt_num, main


def run(*argv) -> int:
    return main([str(a) for a in argv])


def read_csv(path):
    with open(path, newline="") as fh:
        return list(csv.reader(fh))


class TestFormatting:
    @pytest.mark.parametrize(
        "value, text",
        [(0.0, "0"), (1.0, "1"), (0.5, "0.5"), (True, "1"), (7, "7"), (0.1, "0.1"), (1 / 3, "0.3333333333333333")],
    )
    def test_fmt_num(self, value, text):
        assert fmt_num(value) == text

    def test_round_trip(self):
        for x in (1e-300, 2.0**-20, 123456.789012345, -0.6931471805599453):
            assert float(fmt_num(x)) == x


class TestGenerate:
    def test_rows_and_header(self, tmp_path):
        assert run("generate", "--hurst", 0.5, "--size-exp", 10, "--seed", 7, "--out", tmp_path) == 0
        rows = read_csv(tmp_path / "generate.csv")
        assert rows[0] == ["t", "x", "running_max", "is_record"]
        assert len(rows) - 1 == 1025
        assert rows[1] == ["0", "0", "0", "1"]
        assert rows[-1][0] == "1"
        raw = (tmp_path / "generate.csv").read_bytes()
        assert b"\r" not in raw and raw.endswith(b"\n")

    def test_columns_consistent(self, tmp_path):
        run("generate", "--hurst", 0.3, "--size-exp", 8, "--seed", 1, "--out", tmp_path)
        rows = read_csv(tmp_path / "generate.csv")[1:]
        best = float("-inf")
        for t, x, m, rec in rows:
            x, m = float(x), float(m)
            assert (rec == "1") == (x >= best)
            best = max(best, x)
            assert m == best

    def test_byte_identical(self, tmp_path):
        for sub in ("a", "b"):
            run("generate", "--hurst", 0.7, "--size-exp", 9, "--seed", 99, "--out", tmp_path / sub)
        assert (tmp_path / "a" / "generate.csv").read_bytes() == (tmp_path / "b" / "generate.csv").read_bytes()

    @pytest.mark.parametrize("gen", ["durbin-levinson", "cholesky"])
    def test_other_generators(self, tmp_path, gen):
        assert run("generate", "--hurst", 0.6, "--size-exp", 6, "--generator", gen, "--out", tmp_path) == 0
        assert len(read_csv(tmp_path / "generate.csv")) == 66

    def test_json_format(self, tmp_path):
        run("generate", "--hurst", 0.5, "--size-exp", 5, "--format", "json", "--out", tmp_path)
        doc = json.loads((tmp_path / "generate.json").read_text())
        assert len(doc["x"]) == 33 and doc["is_record"][0] == 1
        assert doc["manifest"]["subcommand"] == "generate"

    def test_manifest(self, tmp_path):
        run("generate", "--hurst", 0.5, "--size-exp", 5, "--seed", 3, "--out", tmp_path)
        manifest = json.loads((tmp_path / "generate.manifest.json").read_text())
        assert manifest["master_seed"] == 3
        assert manifest["config"]["hurst"] == 0.5
        assert manifest["outputs"] == ["generate.csv"]
        assert "out" not in manifest["config"]


class TestUsage:
    @pytest.mark.parametrize(
        "argv",
        [
            ["dim", "--hurst", "1.2"],
            ["dim", "--hurst", "abc"],
            ["generate"],
            ["argmax", "--hurst", "0.5", "--seed", "-1"],
            ["survival", "--hurst", "0.5", "--thresholds", "x,y"],
            ["frobnicate"],
        ],
    )
    def test_usage_errors_exit_2(self, argv, capsys):
        with pytest.raises(SystemExit) as exc:
            main(argv)
        assert exc.value.code == EXIT_USAGE

    def test_semantic_usage_error(self, tmp_path):
        # eps window past t = 1 is rejected after parsing
        assert run("recprob", "--hurst", 0.5, "--anchor", 0.9, "--eps-exps", "1,2", "--replicates", 10,
                   "--size-exp", 6, "--out", tmp_path) == EXIT_USAGE

    def test_cholesky_size_limit(self, tmp_path):
        assert run("generate", "--hurst", 0.5, "--size-exp", 10, "--generator", "cholesky", "--out", tmp_path) == EXIT_USAGE


class TestExperimentsCommands:
    def test_dim(self, tmp_path):
        code = run("dim", "--hurst", 0.5, "--size-exp", 12, "--replicates", 4, "--seed", 1, "--out", tmp_path)
        assert code == 0
        rows = read_csv(tmp_path / "dim.csv")
        assert rows[0] == ["k", "eps", "m_eps"]
        assert [r[0] for r in rows[1:]] == [str(k) for k in range(10)]
        doc = json.loads((tmp_path / "dim.json").read_text())
        est = doc["estimate"]
        assert est["dimension"] == -est["slope"]
        assert est["k_range"] == [6, 9]
        assert doc["manifest"]["config"]["replicates"] == 4

    def test_sweep(self, tmp_path):
        code = run("sweep", "--hurst", "0.3,0.6,0.8", "--size-exp", 11, "--replicates", 3, "--out", tmp_path)
        assert code == 0
        rows = read_csv(tmp_path / "sweep.csv")
        assert rows[0] == ["hurst", "dim_mean", "dim_stderr", "replicates"]
        assert [r[0] for r in rows[1:]] == ["0.3", "0.6", "0.8"]
        assert all(r[3] == "3" for r in rows[1:])

    def test_argmax(self, tmp_path):
        code = run("argmax", "--hurst", 0.5, "--size-exp", 8, "--replicates", 2000, "--eps-exps", "1,2",
                   "--out", tmp_path)
        assert code == 0
        rows = read_csv(tmp_path / "argmax.csv")
        assert rows[0] == ["param", "p_hat", "stderr"]
        assert [r[0] for r in rows[1:]] == ["0.5", "0.25"]
        doc = json.loads((tmp_path / "argmax.json").read_text())
        assert doc["experiment"] == "argmax" and doc["replicates"] == 2000

    def test_survival_and_tail(self, tmp_path):
        assert run("survival", "--hurst", 0.5, "--size-exp", 8, "--replicates", 2000, "--thresholds", "0.5,1",
                   "--out", tmp_path) == 0
        assert run("tail", "--hurst", 0.5, "--size-exp", 6, "--replicates", 4000, "--thresholds", "1,1.5",
                   "--out", tmp_path) == 0
        doc = json.loads((tmp_path / "tail.json").read_text())
        assert len(doc["extra"]["ratios"]) == 2

    def test_insufficient_hits_exit_4(self, tmp_path):
        code = run("tail", "--hurst", 0.5, "--size-exp", 6, "--replicates", 100, "--thresholds", "3",
                   "--out", tmp_path)
        assert code == EXIT_STATS

    def test_io_error_exit_5(self, tmp_path):
        blocker = tmp_path / "file"
        blocker.write_text("x")
        assert run("generate", "--hurst", 0.5, "--size-exp", 4, "--out", blocker) == EXIT_IO

    def test_recprob_determinism_across_workers(self, tmp_path):
        args = ["recprob", "--hurst", 0.6, "--size-exp", 13, "--replicates", 600, "--eps-exps", "2,3",
                "--anchor", 0.5]
        run(*args, "--workers", 1, "--out", tmp_path / "w1")
        run(*args, "--workers", 2, "--out", tmp_path / "w2")
        for name in ("recprob.csv", "recprob.json", "recprob.manifest.json"):
            assert (tmp_path / "w1" / name).read_bytes() == (tmp_path / "w2" / name).read_bytes()


class TestReplay:
    @pytest.mark.parametrize(
        "argv, files",
        [
            (["generate", "--hurst", "0.4", "--size-exp", "7", "--seed", "5"], ["generate.csv"]),
            (["argmax", "--hurst", "0.6", "--size-exp", "8", "--replicates", "1000", "--eps-exps", "1,2"],
             ["argmax.csv", "argmax.json"]),
            (["sweep", "--hurst", "0.4,0.7", "--size-exp", "10", "--replicates", "2"], ["sweep.csv", "sweep.json"]),
        ],
    )
    def test_manifest_reproduces_outputs(self, tmp_path, argv, files):
        first, second = tmp_path / "first", tmp_path / "second"
        assert main([*argv, "--out", str(first)]) == 0
        command = argv[0]
        assert main(["replay", str(first / f"{command}.manifest.json"), "--out", str(second)]) == 0
        for name in files + [f"{command}.manifest.json"]:
            assert (first / name).read_bytes() == (second / name).read_bytes(), name

    def test_malformed_manifest(self, tmp_path):
        bad = tmp_path / "m.json"
        bad.write_text("{}")
        assert main(["replay", str(bad)]) == EXIT_USAGE


def test_module_entry_point(tmp_path):
    proc = subprocess.run(
        [sys.executable, "-m", "fbmrec", "generate", "--hurst", "0.5", "--size-exp", "4", "--out", str(tmp_path)],
        capture_output=True,
        text=True,
    )
    assert proc.returncode == 0, proc.stderr
    assert "records" in proc.stdout
