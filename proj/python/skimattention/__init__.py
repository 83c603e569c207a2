"""Layout-only attention: score pages from geometry once, reuse everywhere."""

from ._core import (
    AdamWConfig,
    AttentionMask,
    BoundingBox,
    ClassMetrics,
    ComputeBudget,
    CorpusSplit,
    DocumentPage,
    GeneratorConfig,
    LabelingMetrics,
    MaskingPolicy,
    Model,
    ModelConfig,
    NormalizedBox,
    PageInput,
    SplitRatios,
    TrainConfig,
    Vocabulary,
    build_mask,
    build_vocab,
    compute_ratio,
    encode_page,
    evaluate_labeling,
    finetune_labels,
    generate_pages,
    init_model,
    label_names,
    load_jsonl,
    load_model,
    mask_from_json,
    normalize_box,
    perplexity,
    pretrain_mvlm,
    save_jsonl,
    save_model,
    split,
)

__version__ = "0.1.0"

__all__ = [
    "AdamWConfig",
    "AttentionMask",
    "BoundingBox",
    "ClassMetrics",
    "ComputeBudget",
    "CorpusSplit",
    "DocumentPage",
    "GeneratorConfig",
    "LabelingMetrics",
    "MaskingPolicy",
    "Model",
    "ModelConfig",
    "NormalizedBox",
    "PageInput",
    "SplitRatios",
    "TrainConfig",
    "Vocabulary",
    "build_mask",
    "build_vocab",
    "compute_ratio",
    "encode_page",
    "evaluate_labeling",
    "finetune_labels",
    "generate_pages",
    "init_model",
    "label_names",
    "load_jsonl",
    "load_model",
    "mask_from_json",
    "normalize_box",
    "perplexity",
    "pretrain_mvlm",
    "save_jsonl",
    "save_model",
    "split",
]
