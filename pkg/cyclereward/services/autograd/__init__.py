from cyclereward.services.autograd.tensor import Tensor, as_tensor
from cyclereward.services.autograd.tape import GradientMap, Tape, active_tape, tape_stats
from cyclereward.services.autograd import ops
from cyclereward.services.autograd.optim import Adam

__all__ = ["Adam", "Tensor", "as_tensor", "Tape", "GradientMap", "active_tape", "tape_stats", "ops"]
