# cyclereward/services/denoiser/params.py
from __future__ import annotations

from dataclasses import dataclass, field
from typing import Iterator, Mapping

from cyclereward.services.autograd import Tensor

GROUPS = ("base", "control", "zero_proj")


@dataclass(frozen=True)
class DenoiserParams:
    """
    Parameter tensors of the controlled denoiser, split the ControlNet way:
    `base` is the trunk (frozen during reward fine-tuning), `control` the
    condition branch and `zero_proj` the zero-initialised projection that
    gates the branch into the trunk.
    """
    base: dict[str, Tensor] = field(default_factory=dict)
    control: dict[str, Tensor] = field(default_factory=dict)
    zero_proj: dict[str, Tensor] = field(default_factory=dict)

    def named(self) -> Iterator[tuple[str, Tensor]]:
        """Qualified names (`group.name`) in a stable order."""
        for group in GROUPS:
            tensors: dict[str, Tensor] = getattr(self, group)
            for name in sorted(tensors):
                yield f"{group}.{name}", tensors[name]

    def trainable(self) -> dict[str, Tensor]:
        return {name: t for name, t in self.named() if t.requires_grad}

    def replace(self, updates: Mapping[str, Tensor]) -> "DenoiserParams":
        """New params with the qualified-name tensors in `updates` swapped in."""
        groups = {g: dict(getattr(self, g)) for g in GROUPS}
        for qname, tensor in updates.items():
            group, _, name = qname.partition(".")
            if group not in groups or name not in groups[group]:
                raise KeyError(f"unknown parameter '{qname}'")
            groups[group][name] = tensor
        return DenoiserParams(**groups)

    @classmethod
    def from_named(cls, tensors: Mapping[str, Tensor]) -> "DenoiserParams":
        groups: dict[str, dict[str, Tensor]] = {g: {} for g in GROUPS}
        for qname, tensor in tensors.items():
            group, _, name = qname.partition(".")
            if group not in groups or not name:
                raise KeyError(f"parameter name '{qname}' has no known group prefix")
            groups[group][name] = tensor
        return cls(**groups)

    def __len__(self) -> int:
        return len(self.base) + len(self.control) + len(self.zero_proj)
