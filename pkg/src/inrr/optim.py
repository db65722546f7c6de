"""Adam optimizer over lists of trainable tensors."""

import numpy as np

from . import _kernels
from .errors import ShapeError


class Adam:
    """Standard Adam with bias correction; one moment pair per parameter."""

    def __init__(self, params, lr=1e-4, beta1=0.9, beta2=0.999, eps=1e-8):
        self.params = list(params)
        self.lr = lr
        self.beta1 = beta1
        self.beta2 = beta2
        self.eps = eps
        self.step_count = 0
        self.m = [np.zeros_like(p.value) for p in self.params]
        self.v = [np.zeros_like(p.value) for p in self.params]

    def step(self, active=None):
        """Apply one update using each parameter's .grad.

        `active` optionally restricts the update to a subset of parameters
        (frozen parameters keep their values and moments untouched).
        """
        self.step_count += 1
        active_ids = None if active is None else {id(p) for p in active}
        for p, m, v in zip(self.params, self.m, self.v):
            if active_ids is not None and id(p) not in active_ids:
                continue
            g = p.grad
            if g is None:
                continue
            if g.shape != p.value.shape:
                raise ShapeError(f"gradient shape {g.shape} != parameter shape {p.value.shape}")
            _kernels.adam_update(p.value, np.ascontiguousarray(g), m, v,
                                 self.lr, self.beta1, self.beta2, self.eps,
                                 self.step_count)
