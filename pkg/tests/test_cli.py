"""Integration tests for the command-line interface."""

import json

import pytest

from matchstat.cli import main

BINARY_PAIRS = "stratum,y,x1\n" + "".join(
    f"b{i},1,1\nb{i},0,0\n" for i in range(10)
) + "".join(f"c{i},1,0\nc{i},0,1\n" for i in range(2)) + "".join(
    f"a{i},1,0\na{i},0,0\n" for i in range(3)
) + "".join(f"d{i},1,1\nd{i},0,1\n" for i in range(5))

CONSTANT_DIFFS = "stratum,y,x1\n" + "".join(
    f"s{i},1,{2 + i}\ns{i},0,{i}\n" for i in range(4)
)

SEPARATED = "stratum,y,x1\ns1,1,1\ns1,0,0\ns2,1,1\ns2,0,0\ns3,1,1\ns3,0,0\n"

SYMMETRIC = "stratum,y,x1\ns1,1,1\ns1,0,0\ns2,1,0\ns2,0,1\n"

TRIOS = "stratum,y,x1\n" + "".join(
    f"t{i},1,{0.5 + 0.1 * i}\nt{i},0,{0.1 * i}\nt{i},0,{-0.2 + 0.1 * i}\n"
    for i in range(6)
)

CONTINUOUS_PAIRS = "stratum,y,x1\n" + "".join(
    f"s{i},1,{0.8 + 0.3 * (i % 5) * (-1) ** i}\ns{i},0,{0.4 * (i % 3)}\n"
    for i in range(15)
)


@pytest.fixture
def data_file(tmp_path):
    def write(text, name="data.csv"):
        path = tmp_path / name
        path.write_text(text, encoding="utf-8")
        return str(path)

    return write


class TestTestCommand:
    def test_mcnemar_table(self, data_file, capsys):
        code = main(["test", "mcnemar", "--data", data_file(BINARY_PAIRS)])
        out = capsys.readouterr().out
        assert code == 0
        assert "mcnemar" in out
        assert "5.333333333333333" in out

    def test_mcnemar_json(self, data_file, capsys):
        code = main(["test", "mcnemar", "--data", data_file(BINARY_PAIRS), "--json"])
        assert code == 0
        doc = json.loads(capsys.readouterr().out)
        assert doc["method"] == "mcnemar"
        assert doc["statistic"] == pytest.approx(16.0 / 3.0)
        assert doc["df"] == 1
        assert doc["n"] == 20

    def test_clr_score_json(self, data_file, capsys):
        code = main(
            ["test", "clr-score", "--data", data_file(BINARY_PAIRS), "--json"]
        )
        assert code == 0
        doc = json.loads(capsys.readouterr().out)
        assert doc["method"] == "clr_score"
        assert doc["statistic"] == pytest.approx(16.0 / 3.0)

    def test_hotelling_constant_differences_exit_2(self, data_file, capsys):
        code = main(["test", "hotelling", "--data", data_file(CONSTANT_DIFFS)])
        assert code == 2
        assert "covariance singular" in capsys.readouterr().err

    def test_hotelling_pvalue_modes(self, data_file, capsys):
        path = data_file(CONTINUOUS_PAIRS)
        assert main(["test", "hotelling", "--data", path, "--json"]) == 0
        chisq = json.loads(capsys.readouterr().out)
        assert (
            main(["test", "hotelling", "--data", path, "--pvalue", "exact-f", "--json"])
            == 0
        )
        exact = json.loads(capsys.readouterr().out)
        assert chisq["statistic"] == exact["statistic"]
        assert chisq["p_value"] != exact["p_value"]
        assert 0.0 <= exact["p_value"] <= 1.0

    def test_clr_wald_and_lr(self, data_file, capsys):
        path = data_file(CONTINUOUS_PAIRS)
        for which, tag in (("clr-wald", "clr_wald"), ("clr-lr", "clr_lr")):
            assert main(["test", which, "--data", path, "--json"]) == 0
            doc = json.loads(capsys.readouterr().out)
            assert doc["method"] == tag
            assert doc["statistic"] >= 0.0

    def test_clr_wald_separated_exit_3(self, data_file, capsys):
        code = main(["test", "clr-wald", "--data", data_file(SEPARATED)])
        assert code == 3
        assert "separation" in capsys.readouterr().err

    def test_missing_file_exit_2(self, capsys):
        code = main(["test", "mcnemar", "--data", "/nonexistent/x.csv"])
        assert code == 2
        assert "error" in capsys.readouterr().err

    def test_malformed_data_exit_2(self, data_file, capsys):
        code = main(
            ["test", "mcnemar", "--data", data_file("stratum,y,x1\ns,2,1\n")]
        )
        assert code == 2
        assert "label must be 0 or 1 (line 2)" in capsys.readouterr().err


class TestFitCommand:
    def test_symmetric_pairs(self, data_file, capsys):
        code = main(["fit", "--data", data_file(SYMMETRIC)])
        assert code == 0
        doc = json.loads(capsys.readouterr().out)
        assert doc["beta"] == [0.0]
        assert doc["converged"] is True

    def test_separated_exit_3(self, data_file, capsys):
        code = main(["fit", "--data", data_file(SEPARATED)])
        assert code == 3
        assert "possible separation" in capsys.readouterr().err

    def test_general_strata(self, data_file, capsys):
        code = main(["fit", "--data", data_file(TRIOS), "--strata", "general"])
        assert code == 0
        doc = json.loads(capsys.readouterr().out)
        assert doc["converged"] is True
        assert len(doc["beta"]) == 1

    def test_trios_rejected_in_pairs_mode(self, data_file, capsys):
        code = main(["fit", "--data", data_file(TRIOS), "--strata", "pairs"])
        assert code == 2
        assert "not a 1:1 discordant pair" in capsys.readouterr().err


class TestSampleKCommand:
    def test_line_count(self, capsys):
        code = main(
            ["sample-k", "--p", "1", "--delta", "0", "--sigma", "identity",
             "--reps", "3", "--seed", "7"]
        )
        assert code == 0
        lines = capsys.readouterr().out.strip().splitlines()
        assert len(lines) == 3
        for line in lines:
            float(line)

    def test_quarter_bound(self, capsys):
        code = main(
            ["sample-k", "--p", "1", "--delta", "0", "--reps", "5000", "--seed", "7"]
        )
        assert code == 0
        values = [float(s) for s in capsys.readouterr().out.split()]
        assert max(values) <= 0.25

    def test_shifted_median_strongly_negative(self, capsys):
        code = main(
            ["sample-k", "--p", "1", "--delta", "3", "--reps", "2001", "--seed", "7"]
        )
        assert code == 0
        values = sorted(float(s) for s in capsys.readouterr().out.split())
        assert values[1000] < -10.0

    def test_output_file_and_determinism(self, tmp_path, capsys):
        out1 = tmp_path / "k1.csv"
        out2 = tmp_path / "k2.csv"
        for out in (out1, out2):
            assert main(
                ["sample-k", "--p", "1", "--delta", "1", "--reps", "50",
                 "--seed", "11", "--out", str(out)]
            ) == 0
        assert out1.read_bytes() == out2.read_bytes()

    def test_vector_delta_with_diag_sigma(self, capsys):
        code = main(
            ["sample-k", "--p", "2", "--delta", "1:2", "--sigma", "diag:1,4",
             "--reps", "10", "--seed", "3"]
        )
        assert code == 0
        assert len(capsys.readouterr().out.strip().splitlines()) == 10

    def test_reps_zero_usage_error(self, capsys):
        with pytest.raises(SystemExit) as excinfo:
            main(["sample-k", "--p", "1", "--delta", "0", "--reps", "0", "--seed", "1"])
        assert excinfo.value.code == 2

    def test_non_spd_sigma_exit_2(self, tmp_path, capsys):
        sigma_path = tmp_path / "sigma.csv"
        sigma_path.write_text("1.0,2.0\n2.0,1.0\n", encoding="utf-8")
        code = main(
            ["sample-k", "--p", "2", "--delta", "0", "--sigma", str(sigma_path),
             "--reps", "5", "--seed", "1"]
        )
        assert code == 2


class TestEquivalenceCommand:
    def test_outputs_and_determinism(self, tmp_path, capsys):
        args = [
            "equivalence", "--p", "1", "--delta", "0,1", "--sigma", "identity",
            "--n", "50", "--reps", "60", "--seed", "5", "--bins", "10",
        ]
        out_a = tmp_path / "a"
        out_b = tmp_path / "b"
        assert main(args + ["--out", str(out_a)]) == 0
        stdout_a = capsys.readouterr().out
        assert main(args + ["--out", str(out_b)]) == 0
        expected = [
            "report_delta0.json",
            "emp_hist_delta0.csv",
            "k_hist_delta0.csv",
            "report_delta1.json",
            "emp_hist_delta1.csv",
            "k_hist_delta1.csv",
        ]
        for name in expected:
            assert (out_a / name).exists(), name
            assert (out_a / name).read_bytes() == (out_b / name).read_bytes()
        assert "ks_distance" in stdout_a
        report = json.loads((out_a / "report_delta0.json").read_text())
        assert report["reps"] == 60
        assert 0.0 <= report["ks_distance"] <= 1.0
        hist_lines = (out_a / "k_hist_delta0.csv").read_text().strip().splitlines()
        assert hist_lines[0] == "bin_left,bin_right,count,density"
        assert len(hist_lines) == 11

    def test_unwritable_dir_exit_2(self, capsys):
        code = main(
            ["equivalence", "--p", "1", "--delta", "0", "--n", "50",
             "--reps", "10", "--seed", "1", "--out", "/proc/nope/dir"]
        )
        assert code == 2

    def test_bad_delta_exit_2(self, tmp_path, capsys):
        code = main(
            ["equivalence", "--p", "1", "--delta", "zero", "--n", "50",
             "--reps", "10", "--seed", "1", "--out", str(tmp_path)]
        )
        assert code == 2
