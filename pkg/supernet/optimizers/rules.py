# supernet/optimizers/rules.py

"""
Update rules of the supported optimizers.

Each rule takes the current tensor, its gradient, the tensor's slot dict
(accumulators, created as zeros on first use), the learning rate and the
1-based step counter, and returns the updated tensor. Slots are replaced,
never modified in place.

- sgd:     v = mu v - lr g; w += v           (plain w -= lr g when mu = 0)
- adagrad: s += g^2; w -= lr g / (sqrt(s) + eps)
- rmsprop: s = rho s + (1 - rho) g^2; w -= lr g / (sqrt(s) + eps)
- adam:    m = b1 m + (1 - b1) g; v = b2 v + (1 - b2) g^2;
           w -= lr m_hat / (sqrt(v_hat) + eps) with m_hat = m / (1 - b1^t),
           v_hat = v / (1 - b2^t)
- nadam:   adam moments with the Nesterov look-ahead
           m_hat = b1 m / (1 - b1^(t+1)) + (1 - b1) g / (1 - b1^t)
"""

from typing import Callable, Dict

import numpy as np

Slots = Dict[str, np.ndarray]


def _slot(slots: Slots, name: str, like: np.ndarray) -> np.ndarray:
    if name not in slots:
        slots[name] = np.zeros_like(like)
    return slots[name]


def sgd(spec, w, g, slots: Slots, lr: float, t: int) -> np.ndarray:
    # heavy-ball momentum; the velocity slot only exists when mu > 0
    if spec.momentum == 0.0:
        return w - lr * g
    slots["velocity"] = spec.momentum * _slot(slots, "velocity", w) - lr * g
    return w + slots["velocity"]


def adagrad(spec, w, g, slots: Slots, lr: float, t: int) -> np.ndarray:
    slots["accumulator"] = _slot(slots, "accumulator", w) + g * g
    return w - lr * g / (np.sqrt(slots["accumulator"]) + spec.epsilon)


def rmsprop(spec, w, g, slots: Slots, lr: float, t: int) -> np.ndarray:
    slots["mean_square"] = spec.rho * _slot(slots, "mean_square", w) + (1.0 - spec.rho) * g * g
    return w - lr * g / (np.sqrt(slots["mean_square"]) + spec.epsilon)


def _moments(spec, w, g, slots: Slots):
    """First and second moment estimates shared by adam and nadam."""
    slots["m"] = spec.beta1 * _slot(slots, "m", w) + (1.0 - spec.beta1) * g
    slots["v"] = spec.beta2 * _slot(slots, "v", w) + (1.0 - spec.beta2) * g * g
    return slots["m"], slots["v"]


def adam(spec, w, g, slots: Slots, lr: float, t: int) -> np.ndarray:
    m, v = _moments(spec, w, g, slots)
    m_hat = m / (1.0 - spec.beta1**t)
    v_hat = v / (1.0 - spec.beta2**t)
    return w - lr * m_hat / (np.sqrt(v_hat) + spec.epsilon)


def nadam(spec, w, g, slots: Slots, lr: float, t: int) -> np.ndarray:
    m, v = _moments(spec, w, g, slots)
    m_hat = spec.beta1 * m / (1.0 - spec.beta1 ** (t + 1)) + (1.0 - spec.beta1) * g / (1.0 - spec.beta1**t)
    v_hat = v / (1.0 - spec.beta2**t)
    return w - lr * m_hat / (np.sqrt(v_hat) + spec.epsilon)


RULES: Dict[str, Callable] = {
    "sgd": sgd,
    "adagrad": adagrad,
    "rmsprop": rmsprop,
    "adam": adam,
    "nadam": nadam,
}
