"""evret: late-interaction multimodal evidence retrieval.

Token-level query/document encoding, summed-max-inner-product relevance
scoring with per-token attributions, in-batch contrastive training, exact
and two-stage approximate top-k search, and an MRR/recall evaluation
harness with modality ablations.
"""

from .core import CoreConfig, TokenMatrix, l2_normalize_rows, pad_and_mask, strip_padding
from .corpus import CorpusItem, SynthSpec, generate_synthetic, load_corpus, save_corpus
from .encoder import (
    EncodedItem,
    EncoderParams,
    ModalitySpan,
    encode,
    init_encoder_params,
    load_encoder_params,
    save_encoder_params,
    tokenize,
)
from .evaluation import (
    MetricsReport,
    Qrels,
    apply_modality_filter,
    load_qrels,
    mrr_at_k,
    recall_at_k,
    run_eval,
    save_qrels,
)
from .index import (
    Hit,
    RankedHits,
    RetrievalIndex,
    build_index,
    load_index,
    save_index,
    search_approx,
    search_exact,
)
from .scoring import ScoreResult, batch_score_matrix, maxsim_score, single_vector_score
from .training import (
    EpochStats,
    TrainConfig,
    Trainer,
    TrainPair,
    contrastive_loss,
    loss_gradient,
    pairs_from_qrels,
    train_epoch,
)

__version__ = "0.1.0"

__all__ = [
    "CoreConfig",
    "TokenMatrix",
    "l2_normalize_rows",
    "pad_and_mask",
    "strip_padding",
    "CorpusItem",
    "SynthSpec",
    "generate_synthetic",
    "load_corpus",
    "save_corpus",
    "EncodedItem",
    "EncoderParams",
    "ModalitySpan",
    "encode",
    "init_encoder_params",
    "load_encoder_params",
    "save_encoder_params",
    "tokenize",
    "MetricsReport",
    "Qrels",
    "apply_modality_filter",
    "load_qrels",
    "mrr_at_k",
    "recall_at_k",
    "run_eval",
    "save_qrels",
    "Hit",
    "RankedHits",
    "RetrievalIndex",
    "build_index",
    "load_index",
    "save_index",
    "search_approx",
    "search_exact",
    "ScoreResult",
    "batch_score_matrix",
    "maxsim_score",
    "single_vector_score",
    "EpochStats",
    "TrainConfig",
    "Trainer",
    "TrainPair",
    "contrastive_loss",
    "loss_gradient",
    "pairs_from_qrels",
    "train_epoch",
]
