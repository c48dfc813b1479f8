"""Long-document multi-label classification with label-wise sentence attention.

Pipeline: segment a document into sentences, encode each sentence into an
h-dimensional CLS vector, stack them as the columns of the document matrix
D, attend over sentences per label, and score each label independently.
"""

from .corpus import (
    DatasetSplit,
    LabelVocabulary,
    MalformedIpc,
    PatentRecord,
    build_vocabulary,
    encode_labels,
    label_stats,
    load_corpus,
    parse_ipc,
    split_dataset,
)
from .encoder import (
    MEANPOOL,
    MINITRANSFORMER,
    ModelDims,
    encode_document,
    encode_sentence,
    encoder_backward,
    init_encoder,
)
from .head import (
    HeadParams,
    attention_forward,
    bce_loss,
    head_backward,
    head_forward,
    init_head,
    pool_labels,
    predict,
    score,
)
from .metrics import ConfusionCounts, macro_scores, micro_scores
from .checkpoint import Checkpoint, load_checkpoint, save_checkpoint
from .segmenter import Sentence, segment, tokenize
from .trainer import TrainConfig, evaluate, grad_check, train

__version__ = "0.1.0"

__all__ = [
    "Checkpoint", "ConfusionCounts", "DatasetSplit", "HeadParams",
    "LabelVocabulary", "MalformedIpc", "MEANPOOL", "MINITRANSFORMER",
    "ModelDims", "PatentRecord", "Sentence", "TrainConfig",
    "attention_forward", "bce_loss", "build_vocabulary", "encode_document",
    "encode_labels", "encode_sentence", "encoder_backward", "evaluate",
    "grad_check", "head_backward", "head_forward", "init_encoder",
    "init_head", "label_stats", "load_checkpoint", "load_corpus",
    "macro_scores", "micro_scores", "parse_ipc", "pool_labels", "predict",
    "save_checkpoint", "score", "segment", "split_dataset", "tokenize",
    "train",
]
