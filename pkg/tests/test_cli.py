import json

import pytest
from click.testing import CliRunner

from corpus import build_ablation, build_dataset_a
from reqfusion.cli import main
from reqfusion.config import config_from_obj, load_config
from reqfusion.errors import ConfigError
from reqfusion.store import RequirementStore


@pytest.fixture
def runner():
    return CliRunner()


def run_cli(runner, args, **kwargs):
    return runner.invoke(main, args, catch_exceptions=False, **kwargs)


class TestConfigValidation:
    def base_obj(self, tmp_path):
        script = tmp_path / "mock.json"
        script.write_text(json.dumps([{"status": 200, "body": "[]"}]))
        return {
            "providers": [
                {"provider_id": "a", "kind": "scripted_mock", "script": str(script)}
            ],
            "auth_token": "t",
        }

    def test_valid_defaults(self, tmp_path):
        config = config_from_obj(self.base_obj(tmp_path), tmp_path)
        assert config.thresholds.dedup == 0.85
        assert config.thresholds.flag == 0.5
        assert config.thresholds.failover == 0.6
        assert config.mode.value == "parallel"

    def test_flag_threshold_out_of_range(self, tmp_path):
        obj = self.base_obj(tmp_path) | {"thresholds": {"flag": 1.5}}
        with pytest.raises(ConfigError):
            config_from_obj(obj, tmp_path)

    def test_no_providers(self, tmp_path):
        with pytest.raises(ConfigError):
            config_from_obj({"providers": []}, tmp_path)

    def test_bad_weight_reported(self, tmp_path):
        obj = self.base_obj(tmp_path)
        obj["providers"][0]["weight"] = 3.0
        with pytest.raises(ConfigError):
            config_from_obj(obj, tmp_path)

    def test_env_store_fallback(self, tmp_path, monkeypatch):
        monkeypatch.setenv("REQFUSION_STORE", str(tmp_path / "env-store.jsonl"))
        config = config_from_obj(self.base_obj(tmp_path), tmp_path)
        assert config.store_path.endswith("env-store.jsonl")

    def test_relative_script_resolved_against_config_dir(self, tmp_path):
        (tmp_path / "mock.json").write_text(json.dumps([{"status": 200, "body": "[]"}]))
        obj = {
            "providers": [
                {"provider_id": "a", "kind": "scripted_mock", "script": "mock.json"}
            ]
        }
        config_path = tmp_path / "config.json"
        config_path.write_text(json.dumps(obj))
        config = load_config(config_path)
        assert config.providers[0].script_path == str(tmp_path / "mock.json")


class TestExtractCommand:
    def test_dataset_a_distribution_replay(self, tmp_path, runner):
        corpus = build_dataset_a(tmp_path)
        result = run_cli(
            runner,
            [
                "extract",
                str(corpus["doc_path"]),
                "--config",
                str(corpus["config_path"]),
            ],
        )
        assert result.exit_code == 0, result.output
        assert "requirements: 226 total" in result.output
        assert "functional 124 (54.9%)" in result.output
        assert "non-functional 102 (45.1%)" in result.output
        assert "flagged for review: 0" in result.output

    def test_invalid_threshold_exits_1(self, tmp_path, runner):
        corpus = build_dataset_a(tmp_path)
        obj = json.loads(corpus["config_path"].read_text())
        obj["thresholds"]["flag"] = 1.5
        bad = tmp_path / "bad.json"
        bad.write_text(json.dumps(obj))
        result = run_cli(runner, ["extract", str(corpus["doc_path"]), "--config", str(bad)])
        assert result.exit_code == 1
        assert "flag" in result.output

    def test_all_providers_erroring_exits_2(self, tmp_path, runner):
        corpus = build_dataset_a(tmp_path)
        obj = json.loads(corpus["config_path"].read_text())
        broken_script = tmp_path / "broken.json"
        broken_script.write_text(json.dumps([{"status": 500, "body": ""}]))
        for provider in obj["providers"]:
            provider["script"] = str(broken_script)
        bad = tmp_path / "all_error.json"
        bad.write_text(json.dumps(obj))
        result = run_cli(runner, ["extract", str(corpus["doc_path"]), "--config", str(bad)])
        assert result.exit_code == 2

    def test_missing_config_exits_1(self, tmp_path, runner, monkeypatch):
        monkeypatch.delenv("REQFUSION_CONFIG", raising=False)
        doc = tmp_path / "doc.md"
        doc.write_text("# A\nbody")
        result = run_cli(runner, ["extract", str(doc)])
        assert result.exit_code == 1


class TestExportAndReview:
    def extract_dataset(self, tmp_path, runner):
        corpus = build_dataset_a(tmp_path)
        result = run_cli(
            runner,
            ["extract", str(corpus["doc_path"]), "--config", str(corpus["config_path"])],
        )
        assert result.exit_code == 0
        run_id = [l for l in result.output.splitlines() if l.startswith("run: ")][0].split(": ")[1]
        return corpus, run_id

    def test_export_deterministic(self, tmp_path, runner):
        corpus, run_id = self.extract_dataset(tmp_path, runner)
        args = ["export", run_id, "--store", str(corpus["store_path"])]
        first = run_cli(runner, args).output
        second = run_cli(runner, args).output
        assert first == second
        header = json.loads(first.splitlines()[0])
        assert header["count"] == 226

    def test_export_csv(self, tmp_path, runner):
        corpus, run_id = self.extract_dataset(tmp_path, runner)
        result = run_cli(
            runner,
            ["export", run_id, "--store", str(corpus["store_path"]), "--format", "csv"],
        )
        lines = result.output.splitlines()
        assert lines[0].startswith("req_id,text,type")
        assert len(lines) == 227  # header + 226 rows

    def test_review_decision_on_pending(self, tmp_path, runner):
        corpus, run_id = self.extract_dataset(tmp_path, runner)
        store = RequirementStore(corpus["store_path"])
        # Dataset A has no flagged items; auto-accepted must refuse review.
        req_id = store.get_run(run_id)[0].requirement.req_id
        result = runner.invoke(
            main,
            ["review", req_id, "accept", "--reviewer", "alice",
             "--store", str(corpus["store_path"])],
        )
        assert result.exit_code == 1
        assert "cannot move" in result.output

    def test_unknown_run_export_exits_1(self, tmp_path, runner):
        corpus, _ = self.extract_dataset(tmp_path, runner)
        result = runner.invoke(
            main, ["export", "run-none", "--store", str(corpus["store_path"])]
        )
        assert result.exit_code == 1


class TestEvalCommand:
    def test_eval_with_ablation_corpus(self, tmp_path, runner):
        corpus = build_ablation(tmp_path)
        guided = run_cli(
            runner,
            ["extract", str(corpus["doc_path"]), "--config", str(corpus["config_guided"])],
        )
        assert guided.exit_code == 0, guided.output
        run_id = [l for l in guided.output.splitlines() if l.startswith("run: ")][0].split(": ")[1]

        report_path = tmp_path / "report.json"
        store_path = json.loads(corpus["config_guided"].read_text())["store"]
        result = run_cli(
            runner,
            [
                "eval",
                run_id,
                "--ground-truth",
                str(corpus["gt_path"]),
                "--store",
                store_path,
                "--report",
                str(report_path),
            ],
        )
        assert result.exit_code == 0, result.output
        report = json.loads(report_path.read_text())
        assert report["overall"]["tp"] == corpus["guided_found"]
        assert report["overall"]["fn"] == corpus["gt_total"] - corpus["guided_found"]
        assert "category coverage: 100.0%" in result.output


class TestSimulateCommand:
    def test_simulate_smoke(self, runner):
        result = run_cli(
            runner,
            ["simulate", "--trials", "50", "--overlap-rate", "0.5", "--seed", "3"],
        )
        assert result.exit_code == 0
        payload = json.loads(result.output)
        assert payload["trials"] == 50
        assert "consensus_confirmed" in payload

    def test_invalid_rate_exits_1(self, runner):
        result = runner.invoke(main, ["simulate", "--fp-rate-single", "1.4"])
        assert result.exit_code == 1


class TestCalibrateCommand:
    def test_weights_from_f1(self, runner):
        result = run_cli(
            runner,
            ["calibrate-weights", "--f1", "alpha=0.81", "--f1", "bravo=0.83", "--f1", "charlie=0.74"],
        )
        assert result.exit_code == 0
        weights = json.loads(result.output)
        assert set(weights) == {"alpha", "bravo", "charlie"}
        assert weights["bravo"] > weights["charlie"]
