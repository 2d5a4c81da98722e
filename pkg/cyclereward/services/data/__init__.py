from cyclereward.services.data.dataset import (
    ConditionedSample,
    Dataset,
    Split,
    condition_input,
    generate_dataset,
    ground_truth_condition,
    render_sample,
    split,
    split_sizes,
)
from cyclereward.services.data.io import (
    decode_dataset,
    encode_dataset,
    read_dataset,
    read_manifest,
    write_dataset,
    write_manifest,
)
from cyclereward.services.data.scenes import SceneSpec, Shape, ShapeKind, random_scene, rasterize

__all__ = [
    "ConditionedSample", "Dataset", "SceneSpec", "Shape", "ShapeKind", "Split",
    "condition_input", "decode_dataset", "encode_dataset", "generate_dataset",
    "ground_truth_condition", "random_scene", "rasterize", "read_dataset", "read_manifest",
    "render_sample", "split", "split_sizes", "write_dataset", "write_manifest",
]
