"""Application settings and configuration constants."""

from typing import Dict, Tuple

# =============================================================================
# Application Information
# =============================================================================
APP_NAME = "semlogue"
APP_VERSION = "1.0.0"
CHECKPOINT_FORMAT_VERSION = 1


# =============================================================================
# Special Tokens
# =============================================================================
class SpecialTokens:
    """Reserved vocabulary entries and context serialization tags."""

    PAD = "<pad>"
    UNK = "<unk>"
    BOS = "<bos>"
    EOS = "<eos>"

    DOMAIN = "<domain>"
    HISTORY = "<history>"
    USER_OPEN = "<u>"
    USER_CLOSE = "</u>"
    SYSTEM_OPEN = "<s>"
    SYSTEM_CLOSE = "</s>"
    START_OF_DIALOGUE = "STARTOFDIALOGUE"

    # Order fixes the reserved ids 0..k
    RESERVED = (
        PAD,
        UNK,
        BOS,
        EOS,
        DOMAIN,
        HISTORY,
        USER_OPEN,
        USER_CLOSE,
        SYSTEM_OPEN,
        SYSTEM_CLOSE,
        START_OF_DIALOGUE,
    )

    TAGS = (
        DOMAIN,
        HISTORY,
        USER_OPEN,
        USER_CLOSE,
        SYSTEM_OPEN,
        SYSTEM_CLOSE,
        START_OF_DIALOGUE,
    )

    PAD_ID = 0
    UNK_ID = 1
    BOS_ID = 2
    EOS_ID = 3


# =============================================================================
# Model Configuration
# =============================================================================
class ModelDefaults:
    """Micro transformer defaults."""

    EMBED_DIM = 64
    ENCODER_LAYERS = 2
    DECODER_LAYERS = 2
    HEADS = 4
    FF_DIM = 128
    MAX_SOURCE_LENGTH = 256
    MAX_TARGET_LENGTH = 256
    ARCHITECTURE = "encoder-decoder"
    ARCHITECTURES = ("encoder-decoder", "decoder-only")
    INIT_SEED = 0
    DTYPE = "float64"
    DTYPES = ("float64", "float32")


# =============================================================================
# Training Configuration
# =============================================================================
class TrainingDefaults:
    """Optimizer and loop defaults."""

    LEARNING_RATE = 3e-05
    BATCH_SIZE = 32
    EPOCHS = 5
    SEED = 13
    CLIP_NORM = 1.0
    BETAS: Tuple[float, float] = (0.9, 0.999)
    ADAM_EPS = 1e-8
    WEIGHT_DECAY = 0.0

    # Greedy decode used for Contanic is capped at gold length + margin
    DECODE_MARGIN = 8

    # Cap for generation without a gold response (generate command)
    GENERATE_MAX_LEN = 40

    # Estimator init seed is the training seed plus this offset
    ESTIMATOR_SEED_OFFSET = 7919


# =============================================================================
# Loss Configuration
# =============================================================================
class LossDefaults:
    """Loss variant defaults."""

    VARIANT = "semtextuallogue"
    VARIANTS = (
        "ce",
        "additive-ce",
        "weighted-semantic-ce",
        "weighted-semantic-context-ce",
        "semantic-reinforcement",
        "semtextuallogue",
    )
    LAMBDA = 0.5
    SIGMA = 1.0
    ALPHA = 0.3
    BETA = 0.7
    BSE_HIDDEN = 128

    PRESETS: Dict[str, Dict[str, float]] = {
        "multiwoz": {"alpha": 0.3, "beta": 0.7},
        "personachat": {"alpha": 0.2, "beta": 0.8},
    }


# =============================================================================
# Metric Configuration
# =============================================================================
class MetricDefaults:
    """Evaluation defaults."""

    DELTA_C = 0.3
    DELTA_SS = 0.7
    BLEU_MAX_N = 4
    BLEU_FLOOR = 1e-9
    DISTINCT_ORDERS = (1, 2)


# =============================================================================
# Corpus Configuration
# =============================================================================
class CorpusDefaults:
    """Corpus preparation defaults."""

    CONTEXT_WINDOW = 3
    VOCAB_MAX_SIZE = 8000
    MIN_FREQ = 2
    SPLIT_RATIOS: Tuple[int, int, int] = (8, 1, 1)
    MIN_DIALOGUES = 10
    SPEAKERS = ("user", "system")


# =============================================================================
# Embedding Configuration
# =============================================================================
class EmbeddingDefaults:
    """Embedding provider defaults."""

    KIND = "hashed"
    KINDS = ("hashed", "intrinsic", "remote")
    HASHED_DIM = 2**16
    TIMEOUT = 10.0
    MAX_BATCH = 100
    RETRIES = 3
    RETRY_BACKOFF = 0.5
    STRIP_TAGS = True
    ECHO_HOST = "127.0.0.1"
    ECHO_PORT = 8765
    ECHO_DIM = 1024


# =============================================================================
# Numerics
# =============================================================================
class Numerics:
    """Numerical constants shared by tensor-core, losses and checks."""

    LOG_CLAMP = 1e-12
    MASK_VALUE = -1e9
    LAYER_NORM_EPS = 1e-5
    GRADCHECK_EPS = 1e-5
    GRADCHECK_TOLERANCE = 1e-4
    GRADCHECK_ABS_FLOOR = 1e-7
    RELATIVE_FLOOR = 1e-8


# =============================================================================
# Logging
# =============================================================================
class LoggingDefaults:
    """Log record layout, rotation and third-party quieting."""

    FORMAT = "%(asctime)s - %(name)s - %(levelname)s - %(message)s"
    DATE_FORMAT = "%Y-%m-%d %H:%M:%S"
    MAX_BYTES = 10 * 1024 * 1024
    BACKUP_COUNT = 5
    LONG_RUN_MAX_BYTES = 50 * 1024 * 1024
    LONG_RUN_BACKUP_COUNT = 10
    QUIET_LOGGERS = ("httpx", "httpcore", "uvicorn", "uvicorn.access", "uvicorn.error")
    RUN_LOG_NAME = "train.log"


# =============================================================================
# File Paths
# =============================================================================
class Paths:
    """Run directory layout."""

    RUN_LOG_FILE = "run_log.jsonl"
    EPOCH_LOG_FILE = "epochs.jsonl"
    VOCAB_FILE = "vocab.json"
    EFFECTIVE_CONFIG_FILE = "effective_config.json"
    SPLIT_FILE = "split.json"
    CHECKPOINT_DIR = "checkpoints"
    FINAL_CHECKPOINT = "final.npz"
    DIAGNOSTIC_FILE = "nonfinite_batch.json"
    REPORT_JSON = "report.json"
    REPORT_CSV = "report.csv"

    @classmethod
    def checkpoint_name(cls, epoch: int) -> str:
        """Get the checkpoint file name for an epoch."""
        return f"epoch-{epoch:03d}.npz"


# =============================================================================
# Exit Codes
# =============================================================================
class ExitCodes:
    """Process exit codes of the command-line interface."""

    SUCCESS = 0
    USAGE = 1
    DATA = 2
    NUMERIC = 3
