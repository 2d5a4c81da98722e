from cyclereward.services.metrics.controllability import (
    METRIC_FOR_KIND,
    EvalExtractor,
    EvalResult,
    caption_for,
    evaluate_controllability,
    model_generator,
    score,
)
from cyclereward.services.metrics.downstream import mean_class_accuracy, train_downstream_segmenter
from cyclereward.services.metrics.kernels import f1_edge, miou, rmse, ssim

__all__ = [
    "METRIC_FOR_KIND", "EvalExtractor", "EvalResult", "caption_for", "evaluate_controllability",
    "f1_edge", "mean_class_accuracy", "miou", "model_generator", "rmse", "score", "ssim",
    "train_downstream_segmenter",
]
