import math

import pytest

from lambdawf.cli import main
from lambdawf.config import parse_header


def run_cli(capsys, *argv):
    code = main(list(argv))
    captured = capsys.readouterr()
    return code, captured.out, captured.err


def first_value(out: str) -> float:
    return float(out.split()[0])


class TestEval:
    def test_stationary_mean(self, capsys):
        code, out, _ = run_cli(
            capsys, "eval", "stationary-mean", "--kingman", "2", "--theta", "2"
        )
        assert code == 0
        assert first_value(out) == pytest.approx(1.0)

    def test_fix_mean_kingman(self, capsys):
        code, out, _ = run_cli(
            capsys, "eval", "fix-mean-kingman", "--x", "0.5", "--k", "1",
            "--kingman", "1",
        )
        assert code == 0
        assert first_value(out) == pytest.approx(2 * math.log(2))

    def test_explosion_beta(self, capsys):
        code, out, _ = run_cli(
            capsys, "eval", "explosion-beta", "--k", "1", "--alpha", "1.5"
        )
        assert code == 0
        assert first_value(out) == pytest.approx(2.25)

    def test_coupon_pmf(self, capsys):
        code, out, _ = run_cli(
            capsys, "eval", "coupon-pmf", "--x", "0.5", "--k", "1", "--p", "2"
        )
        assert code == 0
        assert first_value(out) == pytest.approx(0.5)

    def test_order_prob(self, capsys):
        code, out, _ = run_cli(
            capsys, "eval", "order-prob", "--x", "0.5,0.3", "--order", "1,2,3"
        )
        assert code == 0
        assert first_value(out) == pytest.approx(0.3)

    def test_fixline_rate(self, capsys):
        code, out, _ = run_cli(
            capsys, "eval", "fixline-rate", "--n", "3", "--kingman", "1"
        )
        assert code == 0
        assert first_value(out) == pytest.approx(6.0)

    def test_phi(self, capsys):
        code, out, _ = run_cli(
            capsys, "eval", "phi", "--j", "0", "--s", "0.5", "--alpha", "1.5"
        )
        assert code == 0
        assert first_value(out) == pytest.approx(1 + math.sqrt(0.5))

    def test_missing_arg_usage_error(self, capsys):
        code, _, err = run_cli(capsys, "eval", "coupon-pmf", "--k", "1")
        assert code == 2
        assert "requires" in err

    def test_numeric_failure(self, capsys):
        # the generating function diverges at j = 1
        code, _, err = run_cli(
            capsys, "eval", "phi", "--j", "1", "--s", "0.5", "--alpha", "1.5"
        )
        assert code == 2 or code == 3

    def test_unknown_formula(self, capsys):
        code, _, _ = run_cli(capsys, "eval", "warp-drive")
        assert code == 2

    def test_unknown_flag(self, capsys):
        code, _, _ = run_cli(capsys, "eval", "coupon-pmf", "--bogus", "1")
        assert code == 2


class TestValidate:
    def test_unknown_suite(self, capsys):
        code, _, _ = run_cli(capsys, "validate", "astrology")
        assert code == 2

    def test_stationarity_small(self, capsys, tmp_path):
        out_path = tmp_path / "report.csv"
        code, out, _ = run_cli(
            capsys, "validate", "stationarity", "--scale", "0.02",
            "--out", str(out_path),
        )
        assert code in (0, 1)
        lines = out.strip().split("\n")
        assert lines[0] == "experiment,label,formula,estimate,stderr,z,pass"
        assert out_path.read_text() == out


class TestSimulate:
    def test_lookdown_csv(self, capsys, tmp_path):
        out_csv = tmp_path / "traj.csv"
        cfg = tmp_path / "run.cfg"
        cfg.write_text(
            "[model]\nd = 1\nkingman = 1.0\n\n[run]\nkind = lookdown\n"
            f"seed = 3\nN = 50\nhorizon = 2.0\noutput = {out_csv}\n"
            "ics = [[0.5], [0.2]]\nsample_times = [0.5, 1.0, 2.0]\n"
        )
        code, out, _ = run_cli(capsys, "simulate", str(cfg))
        assert code == 0 and "wrote" in out
        lines = out_csv.read_text().strip().split("\n")
        parsed = parse_header(lines)
        assert parsed.N == 50 and parsed.kind == "lookdown"
        data = [l for l in lines if not l.startswith("#")]
        assert data[0] == "time,ic_index,x1"
        times = [float(r.split(",")[0]) for r in data[1:]]
        assert times == sorted(times)
        assert len(data) == 1 + 3 * 2

    def test_explosion_samples(self, capsys, tmp_path):
        out_csv = tmp_path / "samples.csv"
        cfg = tmp_path / "run.cfg"
        cfg.write_text(
            "[model]\nd = 1\nkingman = 1.0\n\n[run]\nkind = explosion\n"
            f"replicates = 2000\nseed = 5\nk = 1\nM = 2000\noutput = {out_csv}\n"
        )
        code, out, _ = run_cli(capsys, "simulate", str(cfg))
        assert code == 0 and "mean=" in out
        rows = [
            l for l in out_csv.read_text().strip().split("\n")
            if not l.startswith("#")
        ]
        assert rows[0] == "sample"
        vals = [float(v) for v in rows[1:]]
        assert len(vals) == 2000
        mean = sum(vals) / len(vals)
        assert abs(mean - 2.0) < 0.1

    def test_same_seed_identical(self, capsys, tmp_path):
        out_csv = tmp_path / "t.csv"
        cfg = tmp_path / "run.cfg"
        cfg.write_text(
            "[model]\nd = 1\nkingman = 1.0\n\n[run]\nkind = lookdown\n"
            f"seed = 9\nN = 40\nhorizon = 1.0\noutput = {out_csv}\n"
            "ics = [[0.4]]\nsample_times = [0.5, 1.0]\n"
        )
        run_cli(capsys, "simulate", str(cfg))
        first = out_csv.read_text()
        run_cli(capsys, "simulate", str(cfg))
        assert out_csv.read_text() == first

    def test_missing_config_io_error(self, capsys, tmp_path):
        code, _, err = run_cli(capsys, "simulate", str(tmp_path / "nope.cfg"))
        assert code == 4


class TestHeatmap:
    def test_panels(self, capsys, tmp_path):
        code, out, _ = run_cli(
            capsys, "heatmap", "--out-dir", str(tmp_path), "--step", "4"
        )
        assert code == 0
        names = sorted(p.name for p in tmp_path.glob("*.csv"))
        assert names == [
            "heatmap_alpha1.2.csv",
            "heatmap_alpha1.5.csv",
            "heatmap_alpha1.8.csv",
            "heatmap_delta0.csv",
        ]
        lines = (tmp_path / "heatmap_delta0.csv").read_text().strip().split("\n")
        assert lines[0] == "x1,x2,value"
        assert len(lines) == 1 + 5 * 6 // 2

    def test_center_value(self, capsys, tmp_path):
        run_cli(capsys, "heatmap", "--out-dir", str(tmp_path), "--step", "3")
        for line in (tmp_path / "heatmap_delta0.csv").read_text().split("\n"):
            parts = line.split(",")
            if parts[0] == "0.3333333333" and parts[1] == "0.3333333333":
                assert float(parts[2]) == pytest.approx(4 * math.log(1.5), rel=1e-6)
                break
        else:
            pytest.fail("center lattice point missing")


class TestHelp:
    def test_help_lists_subcommands(self, capsys):
        code, out, _ = run_cli(capsys, "--help")
        assert code == 0
        for name in ("eval", "simulate", "validate", "heatmap"):
            assert name in out
