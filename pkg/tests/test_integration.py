"""Integration tests for semlogue workflows across the command line."""

import json

import pytest

from semlogue.config.settings import ExitCodes, Paths
from semlogue.main import main
from semlogue.services.checkpoint_service import CheckpointService
from semlogue.services.experiment_service import ExperimentService
from semlogue.services.synthetic import SyntheticCorpusGenerator

from .conftest import TINY_MODEL, tiny_config

TINY_FLAGS = [f"--{key.replace('_', '-')}={value}" for key, value in TINY_MODEL.items()] + [
    "--batch-size=4",
    "--learning-rate=0.01",
    "--min-freq=1",
    "--provider-dim=4096",
    "--bse-hidden=8",
]


def _read_jsonl(path):
    return [json.loads(line) for line in path.read_text(encoding="utf-8").splitlines() if line.strip()]


@pytest.fixture
def corpus_path(temp_dir):
    path = temp_dir / "synth.jsonl"
    assert main(["synth", "--output", str(path), "--count", "12", "--seed", "1"]) == ExitCodes.SUCCESS
    return path


@pytest.mark.integration
class TestTrainingWorkflow:
    """Test the synth, train, generate and evaluate commands end to end."""

    def test_full_workflow(self, temp_dir, corpus_path, capsys):
        """Test a corpus goes through training, generation and evaluation."""
        run_dir = temp_dir / "run"
        code = main(
            ["train", "--corpus", str(corpus_path), "--run-dir", str(run_dir), "--epochs=1", "--loss=semtextuallogue"]
            + TINY_FLAGS
        )
        assert code == ExitCodes.SUCCESS
        for name in (Paths.EFFECTIVE_CONFIG_FILE, Paths.VOCAB_FILE, Paths.SPLIT_FILE, "test_report.json", "train.log"):
            assert (run_dir / name).exists()
        split = json.loads((run_dir / Paths.SPLIT_FILE).read_text(encoding="utf-8"))
        assert [len(split[k]) for k in ("train", "validation", "test")] == [10, 1, 1]

        steps = _read_jsonl(run_dir / Paths.RUN_LOG_FILE)
        assert {"l_ce", "l_scl", "l_bse", "l_total", "contanic"} <= set(steps[0])
        checkpoint = run_dir / Paths.CHECKPOINT_DIR / Paths.FINAL_CHECKPOINT

        generations = temp_dir / "generations.jsonl"
        code = main(["generate", "--checkpoint", str(checkpoint), "--input", str(corpus_path), "--output", str(generations)])
        assert code == ExitCodes.SUCCESS
        records = _read_jsonl(generations)
        assert records and all({"context", "gold", "generated"} <= set(r) for r in records)

        out_dir = temp_dir / "eval"
        code = main(
            ["evaluate", "--generations", str(generations), "--output-dir", str(out_dir), "--provider-dim=4096"]
        )
        assert code == ExitCodes.SUCCESS
        report = json.loads((out_dir / Paths.REPORT_JSON).read_text(encoding="utf-8"))
        assert report["count"] == len(records)
        assert 0.0 <= report["means"]["dialuation"] <= 100.0
        assert "dialuation\t" in capsys.readouterr().out

    def test_resume_from_command_line(self, temp_dir, corpus_path):
        """Test a resumed run continues the step log of the interrupted one."""
        run_dir = temp_dir / "run"
        base = ["train", "--corpus", str(corpus_path), "--run-dir", str(run_dir), "--skip-test", "--loss=ce"] + TINY_FLAGS
        assert main(base + ["--max-steps=2"]) == ExitCodes.SUCCESS

        checkpoint = run_dir / Paths.CHECKPOINT_DIR / Paths.FINAL_CHECKPOINT
        assert main(base + ["--max-steps=4", "--resume", str(checkpoint)]) == ExitCodes.SUCCESS
        assert [r["step"] for r in _read_jsonl(run_dir / Paths.RUN_LOG_FILE)] == [1, 2, 3, 4]
        assert CheckpointService().load(checkpoint).step == 4

    def test_generate_without_gold(self, temp_dir, corpus_path):
        """Test bare contexts are decoded up to the requested length."""
        run_dir = temp_dir / "run"
        train = ["train", "--corpus", str(corpus_path), "--run-dir", str(run_dir), "--skip-test", "--max-steps=1"]
        assert main(train + TINY_FLAGS) == ExitCodes.SUCCESS

        contexts = temp_dir / "contexts.jsonl"
        contexts.write_text(json.dumps({"context": "<domain> taxi <domain> <history> STARTOFDIALOGUE <history> <u> i need a taxi </u>"}) + "\n")
        output = temp_dir / "out.jsonl"
        checkpoint = run_dir / Paths.CHECKPOINT_DIR / Paths.FINAL_CHECKPOINT
        code = main(["generate", "--checkpoint", str(checkpoint), "--input", str(contexts), "--output", str(output), "--max-len", "5"])
        assert code == ExitCodes.SUCCESS
        record = _read_jsonl(output)[0]
        assert record["gold"] == ""
        assert len(record["generated"].split()) <= 5

    def test_generate_bad_input(self, temp_dir, corpus_path, capsys):
        """Test input lines without context or turns are a data error."""
        run_dir = temp_dir / "run"
        train = ["train", "--corpus", str(corpus_path), "--run-dir", str(run_dir), "--skip-test", "--max-steps=1"]
        assert main(train + TINY_FLAGS) == ExitCodes.SUCCESS
        bad = temp_dir / "bad.jsonl"
        bad.write_text(json.dumps({"text": "hi"}) + "\n")
        checkpoint = run_dir / Paths.CHECKPOINT_DIR / Paths.FINAL_CHECKPOINT
        code = main(["generate", "--checkpoint", str(checkpoint), "--input", str(bad), "--output", str(temp_dir / "o.jsonl")])
        assert code == ExitCodes.DATA
        assert "needs 'context' or 'turns'" in capsys.readouterr().err


@pytest.mark.integration
class TestExperimentWorkflow:
    """Test the CE versus SemTextualLogue comparison."""

    def test_service_report(self, temp_dir):
        """Test each seed yields both variants' means and files are written."""
        dialogues = SyntheticCorpusGenerator(seed=4).generate(12)
        report = ExperimentService(tiny_config(), str(temp_dir)).run(dialogues, seeds=[0, 1], steps=2)
        assert report.total == 2
        assert 0 <= report.wins <= 2
        assert all("dialuation" in o.baseline and "dialuation" in o.candidate for o in report.outcomes)
        saved = json.loads((temp_dir / "experiment.json").read_text(encoding="utf-8"))
        assert saved["total"] == 2
        assert (temp_dir / "experiment.csv").read_text(encoding="utf-8").startswith("seed,ce_dialuation")

    def test_step_budget_sets_epochs(self):
        """Test the variant config covers the step budget with whole epochs."""
        service = ExperimentService(tiny_config())
        config = service.variant_config("semtextuallogue", seed=5, steps=10, batches_per_epoch=4)
        assert config.train.max_steps == 10 and config.train.epochs == 3
        assert config.model["seed"] == 5 and config.loss.variant == "semtextuallogue"

    def test_command(self, capsys):
        """Test the experiment command prints one row per seed and a summary."""
        code = main(["experiment", "--synthetic-count", "12", "--seeds", "0", "--steps", "2"] + TINY_FLAGS)
        assert code == ExitCodes.SUCCESS
        out = capsys.readouterr().out.splitlines()
        assert out[0] == "seed\tce_dialuation\tstl_dialuation"
        assert out[-1].endswith("on 0/1 seeds") or out[-1].endswith("on 1/1 seeds")
