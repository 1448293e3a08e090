"""Additive coupling over channel halves: forward and exact inverse.

For an even-channel tensor x and arbitrary functions F, G on half-channel
tensors::

    lo, hi = split(x)                 y1, y2 = split(y)
    y1 = lo + F(hi)                   hi = y2 - G(y1)
    y2 = hi + G(y1)                   lo = y1 - F(hi)
    y  = concat(y1, y2)               x  = concat(lo, hi)

The inverse reconstructs x from y alone, which is what lets a reversible
block discard both its input and its intermediate activations.
"""

from __future__ import annotations

from typing import Callable

import numpy as np

from ..errors import OddChannels
from .tensor import as_tensor

CouplingFn = Callable[[np.ndarray], np.ndarray]


def _halves(x: np.ndarray) -> tuple[np.ndarray, np.ndarray]:
    if x.shape[0] % 2 != 0:
        raise OddChannels(f"channel extent {x.shape[0]} cannot split evenly")
    half = x.shape[0] // 2
    return x[:half], x[half:]


def rev_forward(x, f: CouplingFn, g: CouplingFn) -> np.ndarray:
    x = as_tensor(x)
    lo, hi = _halves(x)
    y1 = lo + f(hi)
    y2 = hi + g(y1)
    return np.concatenate([y1, y2], axis=0)


def rev_inverse(y, f: CouplingFn, g: CouplingFn) -> np.ndarray:
    y = as_tensor(y)
    y1, y2 = _halves(y)
    hi = y2 - g(y1)
    lo = y1 - f(hi)
    return np.concatenate([lo, hi], axis=0)
