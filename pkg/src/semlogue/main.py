"""
Command-line entry point for semlogue.

Subcommands cover the whole workflow: convert raw datasets, train, generate,
evaluate, score a single triple, check gradients, serve the echo embedder,
write a synthetic corpus and run the CE versus SemTextualLogue comparison.
"""

import argparse
import json
import logging
import sys
import traceback
from pathlib import Path
from typing import Any, Dict, List, Optional, Sequence

from .config.loader import add_override_arguments, load_config, overrides_from_args
from .config.messages import AppMessages, CommandHelp, ErrorMessages, ResultMessages
from .config.settings import APP_NAME, APP_VERSION, EmbeddingDefaults, ExitCodes, LossDefaults, Paths, TrainingDefaults
from .models.configs import ExperimentConfig
from .models.dialogue import Dialogue, TrainingExample
from .nn import DialogueTransformer
from .services.checkpoint_service import CheckpointService
from .services.converters import DatasetConverter
from .services.corpus_service import CorpusService
from .services.embedding_service import create_provider
from .services.experiment_service import ExperimentService
from .services.file_service import FileService
from .services.gradcheck_service import check_loss_gradients
from .services.metrics_service import MetricsService
from .services.scoring_service import ScoringService
from .services.synthetic import SyntheticCorpusGenerator
from .services.tokenizer import tokenize
from .services.trainer_service import TrainerService, decode_limits, generate_texts, write_report
from .utils.exceptions import (
    CheckpointError,
    CorpusError,
    EmbeddingError,
    FileOperationError,
    NumericError,
    SemlogueError,
    ValidationError,
)
from .utils.logging_config import LoggingConfig


class CliParser(argparse.ArgumentParser):
    """ArgumentParser that reports usage errors as ValidationError instead of exiting."""

    def error(self, message: str) -> None:  # type: ignore[override]
        raise ValidationError(f"{self.prog}: {message}")


class SemlogueApp:
    """
    Main application class: parses arguments, configures logging and
    dispatches to one handler per subcommand.

    Errors map to exit codes: usage 1, data 2, numeric 3.
    """

    def __init__(self) -> None:
        """Initialize the application."""
        self.logger: logging.Logger = logging.getLogger(__name__)
        self.parser = self._build_parser()

    # ------------------------------------------------------------------
    # Parser
    # ------------------------------------------------------------------
    def _build_parser(self) -> CliParser:
        parser = CliParser(prog=APP_NAME, description=AppMessages.DESCRIPTION)
        parser.add_argument("--version", action="version", version=f"{APP_NAME} {APP_VERSION}")
        parser.add_argument("-d", "--debug", action="store_true", help=AppMessages.DEBUG)
        parser.add_argument("--log-file", default=None, help=AppMessages.LOG_FILE)
        commands = parser.add_subparsers(dest="command", metavar="COMMAND")
        commands.required = True

        convert = commands.add_parser("convert", help=CommandHelp.CONVERT)
        convert.add_argument("--format", required=True, choices=DatasetConverter.FORMATS)
        convert.add_argument("--input", required=True, type=Path)
        convert.add_argument("--output", required=True, type=Path)

        train = commands.add_parser("train", help=CommandHelp.TRAIN)
        train.add_argument("--corpus", required=True, type=Path)
        train.add_argument("--run-dir", required=True, type=Path)
        train.add_argument("--resume", type=Path, default=None, help="checkpoint to continue from")
        train.add_argument("--skip-test", action="store_true", help="do not evaluate the test split")
        train.add_argument("--progress", action="store_true", help="show a progress bar")
        self._add_config_arguments(train)

        generate = commands.add_parser("generate", help=CommandHelp.GENERATE)
        generate.add_argument("--checkpoint", required=True, type=Path)
        generate.add_argument("--input", required=True, type=Path, help="corpus JSONL or {context, gold} JSONL")
        generate.add_argument("--output", required=True, type=Path)
        generate.add_argument("--max-len", type=int, default=TrainingDefaults.GENERATE_MAX_LEN)
        generate.add_argument("--decode-margin", type=int, default=TrainingDefaults.DECODE_MARGIN)
        generate.add_argument("--context-window", type=int, default=None)

        evaluate = commands.add_parser("evaluate", help=CommandHelp.EVALUATE)
        evaluate.add_argument("--generations", required=True, type=Path)
        evaluate.add_argument("--output-dir", required=True, type=Path)
        evaluate.add_argument("--checkpoint", type=Path, default=None, help="needed for the intrinsic provider")
        self._add_config_arguments(evaluate)

        score = commands.add_parser("score", help=CommandHelp.SCORE)
        score.add_argument("--context", required=True)
        score.add_argument("--gold", required=True)
        score.add_argument("--generated", required=True)
        self._add_config_arguments(score)

        gradcheck = commands.add_parser("gradcheck", help=CommandHelp.GRADCHECK)
        gradcheck.add_argument("--loss", choices=LossDefaults.VARIANTS, default=LossDefaults.VARIANT)
        gradcheck.add_argument("--seeds", type=int, nargs="+", default=[0])
        gradcheck.add_argument("--lambda", dest="lambda_", type=float, default=LossDefaults.LAMBDA)
        gradcheck.add_argument("--sigma", type=float, default=LossDefaults.SIGMA)
        gradcheck.add_argument("--entries-per-param", type=int, default=16)
        gradcheck.add_argument("--architecture", choices=("encoder-decoder", "decoder-only"), default="encoder-decoder")

        serve = commands.add_parser("serve-echo-embedder", help=CommandHelp.SERVE)
        serve.add_argument("--host", default=EmbeddingDefaults.ECHO_HOST)
        serve.add_argument("--port", type=int, default=EmbeddingDefaults.ECHO_PORT)
        serve.add_argument("--dim", type=int, default=EmbeddingDefaults.ECHO_DIM)

        synth = commands.add_parser("synth", help=CommandHelp.SYNTH)
        synth.add_argument("--output", required=True, type=Path)
        synth.add_argument("--count", type=int, default=500)
        synth.add_argument("--seed", type=int, default=0)

        experiment = commands.add_parser("experiment", help=CommandHelp.EXPERIMENT)
        experiment.add_argument("--corpus", type=Path, default=None, help="defaults to a synthetic corpus")
        experiment.add_argument("--synthetic-count", type=int, default=500)
        experiment.add_argument("--seeds", type=int, nargs="+", default=[0, 1, 2])
        experiment.add_argument("--steps", type=int, default=200)
        experiment.add_argument("--run-dir", type=Path, default=None)
        self._add_config_arguments(experiment)
        return parser

    @staticmethod
    def _add_config_arguments(parser: argparse.ArgumentParser) -> None:
        parser.add_argument("--config", type=Path, default=None, help=AppMessages.CONFIG)
        add_override_arguments(parser)

    # ------------------------------------------------------------------
    # Running
    # ------------------------------------------------------------------
    def run(self, argv: Optional[Sequence[str]] = None) -> int:
        """
        Run one subcommand.

        Returns:
            Exit code (0 success, 1 usage, 2 data, 3 numeric)
        """
        try:
            args = self.parser.parse_args(argv)
        except ValidationError as e:
            self._report(e)
            return ExitCodes.USAGE
        except SystemExit as e:
            return int(e.code or 0)

        self._setup_logging(args)
        handler = getattr(self, "_cmd_" + args.command.replace("-", "_"))
        try:
            return handler(args)
        except KeyboardInterrupt:
            self.logger.info("Interrupted by user")
            return ExitCodes.USAGE
        except ValidationError as e:
            self._report(e)
            return ExitCodes.USAGE
        except NumericError as e:
            self._report(e)
            return ExitCodes.NUMERIC
        except (CorpusError, FileOperationError, CheckpointError, EmbeddingError) as e:
            self._report(e)
            return ExitCodes.DATA
        except SemlogueError as e:
            self._report(e)
            self.logger.debug(f"Traceback: {traceback.format_exc()}")
            return ExitCodes.DATA

    def _report(self, error: Exception) -> None:
        print(f"error: {error}", file=sys.stderr)
        self.logger.error(str(error))

    def _setup_logging(self, args: argparse.Namespace) -> None:
        """Setup application logging."""
        if args.debug:
            LoggingConfig.setup_dev_logging(args.log_file)
        else:
            LoggingConfig.setup_production_logging(args.log_file)

    def _config(self, args: argparse.Namespace) -> ExperimentConfig:
        return load_config(args.config, overrides_from_args(args), args.preset)

    # ------------------------------------------------------------------
    # Commands
    # ------------------------------------------------------------------
    def _cmd_convert(self, args: argparse.Namespace) -> int:
        if not args.input.exists():
            raise CorpusError(ErrorMessages.MISSING_PATH.format(path=args.input))
        dialogues = DatasetConverter().convert(args.format, args.input)
        count = CorpusService().write_jsonl(args.output, dialogues)
        print(ResultMessages.CONVERTED.format(count=count, path=args.output))
        return ExitCodes.SUCCESS

    def _cmd_train(self, args: argparse.Namespace) -> int:
        config = self._config(args)
        if args.progress:
            config.train.progress = True
        corpus = CorpusService(config.corpus.context_window)
        dialogues, _ = corpus.load_jsonl(args.corpus)
        corpus_split = corpus.split(dialogues, config.corpus.split_seed)
        vocab = corpus.build_vocab(corpus_split.train, config.corpus.vocab_max_size, config.corpus.min_freq)

        files = FileService(str(args.run_dir))
        files.write_json_file(files.path(Paths.EFFECTIVE_CONFIG_FILE), config.to_dict())
        files.write_json_file(files.path(Paths.VOCAB_FILE), vocab.to_dict())
        files.write_json_file(files.path(Paths.SPLIT_FILE), corpus_split.to_dict())

        checkpoints = CheckpointService()
        resume = checkpoints.load(args.resume, expected_vocab_hash=vocab.hash) if args.resume else None
        model_config = resume.model_config if resume is not None else config.model_config(len(vocab))
        model = DialogueTransformer(model_config)
        trainer = TrainerService(config, vocab, str(args.run_dir))
        log_path = LoggingConfig.attach_run_log(args.run_dir)
        self.logger.info(f"Training {config.loss.variant} into {args.run_dir} (log: {log_path})")
        try:
            trainer.train(
                model,
                corpus.build_examples(corpus_split.train),
                corpus.build_examples(corpus_split.validation),
                resume=resume,
            )
            test_examples = corpus.build_examples(corpus_split.test)
            if test_examples and not args.skip_test:
                report = trainer.evaluate(test_examples)
                path = trainer.write_report(report, "test_report")
                print(ResultMessages.EVALUATED.format(count=report.count, path=path))
        finally:
            if trainer.provider is not None:
                trainer.provider.close()
            LoggingConfig.detach_run_log()

        final = files.get_checkpoint_dir() / Paths.FINAL_CHECKPOINT
        print(ResultMessages.TRAINED.format(steps=trainer.optimizer.step_count if trainer.optimizer else 0, path=final))
        return ExitCodes.SUCCESS

    def _generation_inputs(self, path: Path, window: int) -> List[TrainingExample]:
        if not path.exists():
            raise CorpusError(ErrorMessages.MISSING_PATH.format(path=path))
        records = FileService(str(path.parent)).read_jsonl_file(path)
        examples: List[TrainingExample] = []
        corpus = CorpusService(window)
        for number, record in enumerate(records, start=1):
            if not isinstance(record, dict):
                raise CorpusError(f"{path}:{number}: expected a JSON object")
            if "turns" in record:
                examples.extend(corpus.build_examples([Dialogue.from_dict(record)]))
            elif "context" in record:
                examples.append(
                    TrainingExample(
                        context_text=record["context"],
                        gold_text=record.get("gold", ""),
                        dialogue_id=str(record.get("dialogue_id", number)),
                        turn_index=int(record.get("turn_index", 0)),
                    )
                )
            else:
                raise CorpusError(f"{path}:{number}: needs 'context' or 'turns'")
        return examples

    def _cmd_generate(self, args: argparse.Namespace) -> int:
        state = CheckpointService().load(args.checkpoint)
        model = CheckpointService().restore_model(state)
        window = args.context_window
        if window is None:
            window = state.experiment.get("corpus", {}).get("context_window", 3)
        examples = self._generation_inputs(args.input, window)
        limit = min(args.max_len, model.config.max_target_length)

        records: List[Dict[str, Any]] = []
        batch_size = TrainingDefaults.BATCH_SIZE
        for start in range(0, len(examples), batch_size):
            batch = examples[start : start + batch_size]
            sources = [state.vocab.encode(tokenize(e.context_text)) for e in batch]
            golds = [state.vocab.encode(tokenize(e.gold_text)) for e in batch]
            limits = [
                capped if e.gold_text else limit
                for e, capped in zip(batch, decode_limits(golds, args.decode_margin, model.config.max_target_length))
            ]
            for example, text in zip(batch, generate_texts(model, state.vocab, sources, limits)):
                records.append({**example.to_dict(), "generated": text})

        count = FileService(str(args.output.parent)).write_jsonl_file(args.output, records)
        print(ResultMessages.GENERATED.format(count=count, path=args.output))
        return ExitCodes.SUCCESS

    def _cmd_evaluate(self, args: argparse.Namespace) -> int:
        config = self._config(args)
        if not args.generations.exists():
            raise CorpusError(ErrorMessages.MISSING_PATH.format(path=args.generations))
        records = FileService(str(args.generations.parent)).read_jsonl_file(args.generations)
        try:
            triples = [(r["context"], r["gold"], r["generated"]) for r in records]
        except (KeyError, TypeError) as e:
            raise CorpusError(f"{args.generations}: every line needs context, gold and generated ({e})") from e
        if not triples:
            raise CorpusError(f"{args.generations}: no generations to evaluate")

        vocab = model = None
        if config.provider.kind == "intrinsic":
            if args.checkpoint is None:
                raise ValidationError("the intrinsic provider needs --checkpoint")
            state = CheckpointService().load(args.checkpoint)
            vocab, model = state.vocab, CheckpointService().restore_model(state)
        provider = create_provider(config.provider, vocab=vocab, model=model)
        try:
            report = MetricsService(ScoringService(provider, config.loss.weights), config.evaluation).evaluate(triples)
        finally:
            provider.close()

        files = FileService(str(args.output_dir))
        files.write_json_file(files.path(Paths.EFFECTIVE_CONFIG_FILE), config.to_dict())
        path = write_report(files, report)
        for name, value in {**report.means, **report.distinct}.items():
            print(f"{name}\t{value:.6f}")
        print(ResultMessages.EVALUATED.format(count=report.count, path=path))
        return ExitCodes.SUCCESS

    def _cmd_score(self, args: argparse.Namespace) -> int:
        config = self._config(args)
        if config.provider.kind == "intrinsic":
            raise ValidationError("score supports the hashed and remote providers")
        provider = create_provider(config.provider)
        try:
            metrics = MetricsService(ScoringService(provider, config.loss.weights), config.evaluation)
            row = metrics.score_row(0, args.context, args.gold, args.generated)
        finally:
            provider.close()
        for name, value in row.metrics.items():
            print(f"{name}\t{value:.6f}")
        return ExitCodes.SUCCESS

    def _cmd_gradcheck(self, args: argparse.Namespace) -> int:
        passed = True
        for seed in args.seeds:
            report = check_loss_gradients(
                args.loss,
                seed=seed,
                lambda_=args.lambda_,
                sigma=args.sigma,
                entries_per_param=args.entries_per_param,
                architecture=args.architecture,
            )
            template = ResultMessages.GRADCHECK_PASSED if report.passed else ResultMessages.GRADCHECK_FAILED
            print(f"[{args.loss} seed {seed}] " + template.format(error=report.max_rel_diff))
            if not report.passed:
                print(json.dumps(report.to_dict(), indent=2), file=sys.stderr)
            passed = passed and report.passed
        return ExitCodes.SUCCESS if passed else ExitCodes.NUMERIC

    def _cmd_serve_echo_embedder(self, args: argparse.Namespace) -> int:
        from .services.echo_server import serve

        print(ResultMessages.SERVING.format(dim=args.dim, host=args.host, port=args.port))
        serve(host=args.host, port=args.port, dim=args.dim)
        return ExitCodes.SUCCESS

    def _cmd_synth(self, args: argparse.Namespace) -> int:
        dialogues = SyntheticCorpusGenerator(args.seed).generate(args.count)
        count = CorpusService().write_jsonl(args.output, dialogues)
        print(ResultMessages.SYNTHESIZED.format(count=count, path=args.output))
        return ExitCodes.SUCCESS

    def _cmd_experiment(self, args: argparse.Namespace) -> int:
        config = self._config(args)
        if args.corpus is not None:
            dialogues, _ = CorpusService(config.corpus.context_window).load_jsonl(args.corpus)
        else:
            dialogues = SyntheticCorpusGenerator(config.corpus.split_seed).generate(args.synthetic_count)
        run_dir = str(args.run_dir) if args.run_dir else None
        report = ExperimentService(config, run_dir).run(dialogues, args.seeds, args.steps)
        print("seed\tce_dialuation\tstl_dialuation")
        for outcome in report.outcomes:
            print(f"{outcome.seed}\t{outcome.baseline['dialuation']:.4f}\t{outcome.candidate['dialuation']:.4f}")
        print(ResultMessages.EXPERIMENT_SUMMARY.format(wins=report.wins, total=report.total))
        return ExitCodes.SUCCESS


def main(argv: Optional[Sequence[str]] = None) -> int:
    """
    Main entry point for the command line.

    Args:
        argv: Arguments without the program name; defaults to sys.argv[1:]

    Returns:
        Exit code
    """
    return SemlogueApp().run(argv)


if __name__ == "__main__":
    sys.exit(main())
