import json
import os

import pytest

from capscale.cli import (main, parse_prediction_spec, parse_weights,
                          parse_workload_spec, run_experiment)
from capscale.workload import make_constant


class TestSpecParsing:
    def test_workload_specs(self):
        lam = parse_workload_spec("sinusoid{500,500,24,24,1}")
        assert lam.n_segments == 24 and lam.max_rate <= 1000.0
        assert parse_workload_spec("constant{2,3,1}").rates == (2.0, 2.0, 2.0)
        step = parse_workload_spec("step{0,10,2,8,1}")
        assert step.rates == (0, 0, 10, 10, 0, 0, 10, 10)

    def test_workload_spec_errors(self):
        with pytest.raises(ValueError):
            parse_workload_spec("sinusoid{1,2}")
        with pytest.raises(ValueError):
            parse_workload_spec("trapezoid{1,2,3,4,5}")

    def test_prediction_specs(self):
        lam = make_constant(4.0, 6, 1)
        assert parse_prediction_spec("zero{}", lam).rates == (0.0,) * 6
        assert parse_prediction_spec("constant{2}", lam).rates == (2.0,) * 6
        assert parse_prediction_spec("opposite{10}", lam).rates == (6.0,) * 6

    def test_weights(self):
        w = parse_weights("paper-dc")
        assert w.theta == pytest.approx(0.1275)
        assert w.beta == pytest.approx(0.51)
        assert w.omega == pytest.approx(0.1)
        custom = parse_weights("1,2,3")
        assert (custom.omega, custom.beta, custom.theta) == (1.0, 2.0, 3.0)
        with pytest.raises(ValueError):
            parse_weights("1,2")


class TestSubcommands:
    def test_simulate_writes_trajectory_and_figure(self, tmp_path, capsys):
        out = tmp_path / "traj.csv"
        code = main(["simulate", "--workload", "constant{5,4,1}",
                     "--policy", "bcs{2,1}", "--h", "0.1",
                     "--out", str(out), "--figures", str(tmp_path / "figs")])
        assert code == 0
        lines = out.read_text().splitlines()
        assert lines[0] == "t,lambda,m,q"
        assert len(lines) == 42
        payload = json.loads(capsys.readouterr().out.strip())
        assert payload["total"] == pytest.approx(
            payload["flow"] + payload["switch"] + payload["power"])
        assert (tmp_path / "figs" / "traj.png").exists()

    def test_optimum_json(self, tmp_path, capsys):
        code = main(["optimum", "--workload", "constant{1,2,1}",
                     "--weights", "10,1,1", "--out", str(tmp_path / "sol.json")])
        assert code == 0
        payload = json.loads((tmp_path / "sol.json").read_text())
        assert payload["objective"] == pytest.approx(3.0, abs=1e-8)
        assert payload["m"] == pytest.approx([1.0, 1.0], abs=1e-9)
        assert "duality_gap" in payload

    def test_constants_subcommand(self, capsys):
        assert main(["constants", "--params", "2,1,2,1"]) == 0
        payload = json.loads(capsys.readouterr().out.strip())
        assert payload["ocr"] == 5.0 and payload["pcr"] == 5.0
        assert payload["desiderata"]["consistency"] == 5.0

    def test_constants_flags_unordered(self, capsys):
        assert main(["constants", "--confidence", "1.1"]) == 1  # rejected
        assert main(["constants", "--confidence", "1.1", "--allow-unordered"]) == 0

    def test_adversary_subcommand(self, tmp_path, capsys):
        out = tmp_path / "report.json"
        inst = tmp_path / "instance.csv"
        code = main(["adversary", "--attack", "online", "--policy", "bcs{2,1}",
                     "--out", str(out), "--instance-out", str(inst)])
        assert code == 0
        payload = json.loads(out.read_text())
        assert payload["satisfied"] is True
        assert payload["ratio"] >= 2.49
        assert inst.read_text().splitlines()[0] == "t,lambda"

    def test_adversary_intgap(self, capsys):
        assert main(["adversary", "--attack", "intgap", "--epsilon", "0.1"]) == 0
        payload = json.loads(capsys.readouterr().out.strip())
        assert payload["ratio"] == 10.0

    def test_diagnose_subcommand(self, tmp_path, capsys):
        out = tmp_path / "drift.csv"
        code = main(["diagnose", "--workload", "sinusoid{100,100,6,12,1}",
                     "--prediction", "moving_average{3}", "--confidence", "3",
                     "--potential", "ocr", "--h", "0.05", "--out", str(out)])
        assert code == 0
        assert out.read_text().splitlines()[0] == "t,phi,drift"
        payload = json.loads(capsys.readouterr().out.strip())
        assert payload["min_phi"] >= -1e-9

    def test_bad_input_exits_nonzero(self, capsys):
        assert main(["simulate", "--workload", "constant{-1,2,1}",
                     "--policy", "bcs{2,1}", "--out", "x.csv"]) == 1


class TestCompare:
    CONFIG = {
        "workloads": [
            {"name": "sin", "kind": "sinusoid", "args": [500, 500, 24, 24, 1]},
            {"name": "step", "kind": "step", "args": [0, 1000, 6, 24, 1]},
        ],
        "prediction": {"kind": "perfect"},
        "weights": "paper-dc",
        "policies": ["bcs{2,1}", "ap{}", "abcs{3}", "timer{}"],
        "h": 0.02,
    }

    def test_rows_in_config_order(self):
        rows = run_experiment(self.CONFIG)
        assert [(r["instance"], r["policy"]) for r in rows] == [
            (w, p) for w in ("sin", "step") for p in self.CONFIG["policies"]]
        for row in rows:
            assert row["total"] == pytest.approx(
                row["flow"] + row["switch"] + row["power"])
            assert row["cr"] >= 0.99
            assert row["eta"] == 0.0  # perfect prediction

    def test_compare_deterministic_and_parallel_safe(self, tmp_path):
        config = dict(self.CONFIG, output=str(tmp_path / "a.csv"))
        cfg_path = tmp_path / "cfg.json"
        cfg_path.write_text(json.dumps(config))
        assert main(["compare", "--config", str(cfg_path)]) == 0
        first = (tmp_path / "a.csv").read_bytes()

        os.environ["CAPSCALE_THREADS"] = "4"
        try:
            assert main(["compare", "--config", str(cfg_path),
                         "--out", str(tmp_path / "b.csv")]) == 0
        finally:
            del os.environ["CAPSCALE_THREADS"]
        second = (tmp_path / "b.csv").read_bytes()
        assert first == second
        header = first.decode().splitlines()[0]
        assert header == "instance,policy,flow,switch,power,total,opt,cr,eta"

    def test_compare_figure(self, tmp_path):
        config = dict(self.CONFIG, output=str(tmp_path / "res.csv"),
                      figures=str(tmp_path / "figs"))
        config["workloads"] = config["workloads"][:1]
        config["policies"] = ["bcs{2,1}", "timer{}"]
        cfg_path = tmp_path / "cfg.json"
        cfg_path.write_text(json.dumps(config))
        assert main(["compare", "--config", str(cfg_path)]) == 0
        assert (tmp_path / "figs" / "res.png").exists()

    def test_trace_workload_in_config(self, tmp_path):
        trace = tmp_path / "trace.csv"
        rows = "\n".join(f"{s},{3}" for s in range(0, 14400, 10))
        trace.write_text("timestamp,requests\n" + rows + "\n")
        config = {
            "workloads": [{"name": "dns", "kind": "trace",
                           "path": str(trace), "delta": 1.0}],
            "weights": "paper-dc",
            "policies": ["bcs{2,1}", "timer{}"],
            "h": 0.05,
            "output": str(tmp_path / "res.csv"),
        }
        cfg_path = tmp_path / "cfg.json"
        cfg_path.write_text(json.dumps(config))
        assert main(["compare", "--config", str(cfg_path)]) == 0
        lines = (tmp_path / "res.csv").read_text().splitlines()
        assert len(lines) == 3
        assert lines[1].startswith("dns,")
        assert lines[1].rstrip().endswith(",")  # no prediction -> empty eta

    def test_unresolvable_config_fails(self, tmp_path, capsys):
        cfg_path = tmp_path / "cfg.json"
        cfg_path.write_text(json.dumps({"workloads": [{"kind": "nope"}],
                                        "policies": ["bcs{2,1}"]}))
        assert main(["compare", "--config", str(cfg_path)]) == 1
