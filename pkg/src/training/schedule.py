"""Linear warmup followed by linear decay to zero."""

from torch.optim import Optimizer
from torch.optim.lr_scheduler import LambdaLR


def lr_schedule(step: int, base_lr: float, warmup_steps: int, total_steps: int) -> float:
    """Learning rate at ``step``: 0 -> base_lr over warmup, then base_lr -> 0 at total_steps."""
    if step < warmup_steps:
        return base_lr * step / warmup_steps
    if step == warmup_steps:
        return base_lr
    if step >= total_steps:
        return 0.0
    return base_lr * (total_steps - step) / (total_steps - warmup_steps)


def build_scheduler(optimizer: Optimizer, base_lr: float, warmup_steps: int, total_steps: int) -> LambdaLR:
    """Torch scheduler applying ``lr_schedule`` to an optimizer built with ``lr=base_lr``."""
    return LambdaLR(
        optimizer,
        lr_lambda=lambda step: lr_schedule(step, base_lr, warmup_steps, total_steps) / base_lr,
    )
