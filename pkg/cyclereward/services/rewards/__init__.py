from cyclereward.services.rewards.extractors import (
    extract_binary_edge_soft,
    extract_depth,
    extract_lineart,
    extract_soft_edge,
    sobel_magnitude,
)
from cyclereward.services.rewards.losses import consistency_loss, cross_entropy, mse, one_hot
from cyclereward.services.rewards.segmenter import (
    Segmenter,
    extract_segmentation,
    init_segmenter,
    load_segmenter,
    predict_classes,
    save_segmenter,
    segmenter_accuracy,
    segmenter_forward,
    train_segmenter,
)
from cyclereward.services.rewards.spec import DEFAULT_LAMBDA, RewardSpec, build_reward_spec, loss_form_for


__all__ = [
    "DEFAULT_LAMBDA", "RewardSpec", "Segmenter", "build_reward_spec", "consistency_loss",
    "cross_entropy", "extract_binary_edge_soft", "extract_depth", "extract_lineart",
    "extract_segmentation", "extract_soft_edge", "init_segmenter", "load_segmenter",
    "loss_form_for", "mse", "one_hot", "predict_classes", "save_segmenter",
    "segmenter_accuracy", "segmenter_forward", "sobel_magnitude", "train_segmenter",
]
