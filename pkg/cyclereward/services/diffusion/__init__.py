from cyclereward.services.diffusion.schedule import NoiseSchedule, make_schedule, respace
from cyclereward.services.diffusion.process import ddpm_step, forward_diffuse, predict_x0_single_step
from cyclereward.services.diffusion.sampler import sample_full
from cyclereward.services.diffusion.noise import keyed_generator, keyed_normal

__all__ = [
    "NoiseSchedule", "make_schedule", "respace", "forward_diffuse", "predict_x0_single_step",
    "ddpm_step", "sample_full", "keyed_generator", "keyed_normal",
]
