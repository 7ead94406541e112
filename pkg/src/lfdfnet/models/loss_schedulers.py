import math


class StepDecayLRSchedule:
    """Piecewise constant learning rate decay.

    The learning rate starts at `lr0` and is multiplied by `decay_factor` every `decay_every` epochs::

        lr(epoch) = lr0 * decay_factor ** floor(epoch / decay_every)

    With the defaults (2e-4, halved every 15 epochs, 50 epochs) epochs 0, 15 and 45 train with 2e-4, 1e-4 and
    2.5e-5.
    """

    def __init__(
        self,
        lr0: float = 2e-4,
        decay_factor: float = 0.5,
        decay_every: int = 15,
        total_epochs: int = 50,
    ):
        if lr0 <= 0 or decay_factor <= 0 or decay_every < 1 or total_epochs < 0:
            raise ValueError(
                f"Invalid schedule: lr0={lr0}, decay_factor={decay_factor}, "
                f"decay_every={decay_every}, total_epochs={total_epochs}"
            )
        self._lr0 = lr0
        self._decay_factor = decay_factor
        self._decay_every = decay_every
        self._total_epochs = total_epochs

    def __call__(self, epoch, lr=None):
        return self.get_lr_for_epoch(epoch)

    def get_lr_for_epoch(self, epoch: int) -> float:
        if not 0 <= epoch < self._total_epochs:
            raise ValueError(f"epoch must lie in [0, {self._total_epochs}), got {epoch}")
        return self._lr0 * self._decay_factor ** math.floor(epoch / self._decay_every)

    def breakpoints(self):
        """Epochs at which the learning rate changes."""
        return list(range(self._decay_every, self._total_epochs, self._decay_every))
