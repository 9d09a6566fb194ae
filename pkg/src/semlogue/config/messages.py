"""Command-line help texts and user-facing messages."""


# =============================================================================
# Application Messages
# =============================================================================
class AppMessages:
    """Top-level parser messages."""

    DESCRIPTION = (
        "Train and evaluate dialogue generators with semantic and context-aware "
        "objectives (Contanic score, SemTextualLogue loss, Dialuation metric)."
    )
    DEBUG = "Enable debug logging"
    LOG_FILE = "Also write logs to this file"
    CONFIG = "Structured JSON config file; flags override its values"


# =============================================================================
# Subcommand Help
# =============================================================================
class CommandHelp:
    """One-line help for every subcommand."""

    CONVERT = "Convert a raw MultiWoz 2.2 or PersonaChat release into corpus JSONL"
    TRAIN = "Train a model on a corpus JSONL file"
    GENERATE = "Greedy-decode responses for contexts with a checkpoint"
    EVALUATE = "Score generations JSONL and write a report"
    SCORE = "Score a single (context, gold, generated) triple"
    GRADCHECK = "Check analytic gradients of a loss variant on a micro model"
    SERVE = "Serve the deterministic hashed embedder over HTTP"
    SYNTH = "Write a synthetic paraphrase corpus"
    EXPERIMENT = "Compare CE and SemTextualLogue at equal step budget over seeds"


# =============================================================================
# Result Messages
# =============================================================================
class ResultMessages:
    """Messages printed or logged when commands finish."""

    CONVERTED = "Converted {count} dialogues into {path}"
    TRAINED = "Training finished after {steps} steps; checkpoint at {path}"
    GENERATED = "Wrote {count} generations to {path}"
    EVALUATED = "Evaluated {count} examples; report at {path}"
    GRADCHECK_PASSED = "Gradient check passed: max relative error {error:.3e}"
    GRADCHECK_FAILED = "Gradient check FAILED: max relative error {error:.3e}"
    SYNTHESIZED = "Wrote {count} synthetic dialogues to {path}"
    EXPERIMENT_SUMMARY = "SemTextualLogue >= CE on {wins}/{total} seeds"
    SERVING = "Serving hashed embedder (dim={dim}) on http://{host}:{port}/embed"


# =============================================================================
# Error Messages
# =============================================================================
class ErrorMessages:
    """Error strings surfaced by the command-line interface."""

    MISSING_PATH = "Path not found: {path}"
    NO_VALID_DIALOGUES = "No valid dialogues in {path} ({errors} malformed lines)"
    TOO_FEW_DIALOGUES = "Need at least {minimum} dialogues to split, got {count}"
    NON_FINITE_LOSS = "Non-finite loss at step {step}"
    UNKNOWN_FORMAT = "Unknown raw dataset format: {name}"
