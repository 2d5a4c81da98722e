from cyclereward.services.denoiser.checkpoint import (
    decode_tensors,
    encode_tensors,
    load_checkpoint,
    load_tensors,
    save_checkpoint,
    save_tensors,
)
from cyclereward.services.denoiser.embedding import timestep_embedding
from cyclereward.services.denoiser.model import (
    ControlledDenoiser,
    caption_embedding,
    condition_channels,
    denoiser_forward,
    freeze_base,
    init_params,
    unfreeze,
)
from cyclereward.services.denoiser.params import DenoiserParams

__all__ = [
    "ControlledDenoiser", "DenoiserParams", "caption_embedding", "condition_channels",
    "decode_tensors", "denoiser_forward", "encode_tensors", "freeze_base", "init_params",
    "load_checkpoint", "load_tensors", "save_checkpoint", "save_tensors", "timestep_embedding", "unfreeze",
]
