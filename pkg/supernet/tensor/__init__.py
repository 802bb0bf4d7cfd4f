# supernet/tensor/__init__.py

"""
Module: tensor

Dense linear algebra and seeded random numbers underpinning every other module.

A ``Matrix`` is a 2-D, C-contiguous ``numpy.float64`` array. Public functions
never mutate their inputs and every returned matrix is checked to be finite.

Random numbers come from ``Rng``, a SplitMix64 generator. SplitMix64 is
counter based: output ``i`` (1-based) of seed ``s`` is
``mix(s + i * 0x9E3779B97F4A7C15)`` with the mixing function of Steele, Lea
and Flood (shifts 30/27/31, multipliers 0xBF58476D1CE4E5B9 and
0x94D049BB133111EB), all arithmetic modulo 2**64. The stream therefore
depends only on the seed and is identical on every platform; weight
initialization, shuffling, dropout masks and synthetic data all draw from it.

Functions:
- matmul(a, b) -> Matrix
- transpose(a) -> Matrix
- glorot_init(rng, fan_in, fan_out) -> Matrix
- as_matrix(x, what) -> Matrix
- check_finite(m, what) -> Matrix
"""

import math
from typing import Tuple, Union

import numpy as np
import numpy.typing as npt

from supernet.errors import ConfigurationError, NumericError, ShapeError
from supernet.settings import get_settings

Matrix = npt.NDArray[np.float64]
Shape = Union[int, Tuple[int, ...]]

_GAMMA = np.uint64(0x9E3779B97F4A7C15)
_MIX1 = np.uint64(0xBF58476D1CE4E5B9)
_MIX2 = np.uint64(0x94D049BB133111EB)
_U64_MAX = 2**64 - 1


def _mix(z: npt.NDArray[np.uint64]) -> npt.NDArray[np.uint64]:
    z = (z ^ (z >> np.uint64(30))) * _MIX1
    z = (z ^ (z >> np.uint64(27))) * _MIX2
    return z ^ (z >> np.uint64(31))


class Rng:
    """
    SplitMix64 random number generator.

    Single owner: a session that needs randomness in parallel work must use
    its own instance (see ``fork``) rather than share one.

    Example:
    >>> Rng(0).next_u64(1)[0] == 0xE220A8397B1DCDAF
    True
    """

    def __init__(self, seed: int):
        if not 0 <= int(seed) <= _U64_MAX:
            raise ConfigurationError(f"seed must be a 64-bit unsigned integer, got {seed}")
        self.seed = int(seed)
        self._drawn = 0

    def __repr__(self) -> str:
        return f"Rng(seed={self.seed}, drawn={self._drawn})"

    def next_u64(self, n: int) -> npt.NDArray[np.uint64]:
        """Return the next ``n`` raw 64-bit outputs."""
        counters = np.arange(self._drawn + 1, self._drawn + n + 1, dtype=np.uint64)
        self._drawn += n
        return _mix(np.uint64(self.seed) + counters * _GAMMA)

    def random(self, shape: Shape) -> npt.NDArray[np.float64]:
        """Uniform doubles in [0, 1) built from the top 53 bits of each output."""
        size = int(np.prod(shape))
        bits = self.next_u64(size) >> np.uint64(11)
        return (bits.astype(np.float64) * 2.0**-53).reshape(shape)

    def uniform(self, shape: Shape, low: float, high: float) -> npt.NDArray[np.float64]:
        return low + (high - low) * self.random(shape)

    def normal(self, shape: Shape) -> npt.NDArray[np.float64]:
        """Standard normal samples via the Box-Muller transform."""
        size = int(np.prod(shape))
        pairs = (size + 1) // 2
        u = self.random(2 * pairs)
        radius = np.sqrt(-2.0 * np.log1p(-u[:pairs]))
        angle = 2.0 * math.pi * u[pairs:]
        samples = np.concatenate([radius * np.cos(angle), radius * np.sin(angle)])
        return samples[:size].reshape(shape)

    def permutation(self, n: int) -> npt.NDArray[np.int64]:
        return np.argsort(self.next_u64(n), kind="stable").astype(np.int64)

    def bernoulli_mask(self, shape: Shape, keep: float) -> npt.NDArray[np.bool_]:
        return self.random(shape) < keep

    def fork(self) -> "Rng":
        """An independent generator seeded from this stream."""
        return Rng(int(self.next_u64(1)[0]))


def as_matrix(x, what: str = "matrix") -> Matrix:
    m = np.ascontiguousarray(x, dtype=np.float64)
    if m.ndim != 2:
        raise ShapeError(f"{what} must be 2-D, got shape {m.shape}")
    return m


def check_finite(m: np.ndarray, what: str = "matrix") -> np.ndarray:
    if not np.all(np.isfinite(m)):
        raise NumericError(f"{what} contains NaN or Inf")
    return m


def matmul(a: Matrix, b: Matrix) -> Matrix:
    """
    Matrix product with entry (i, j) = sum over k of a(i, k) * b(k, j).

    In the default ``exact`` mode the sum is accumulated in ascending k, one
    rank-1 update at a time, which makes every entry bitwise equal to a naive
    triple loop on any platform. ``SNET_MATMUL=blas`` delegates to numpy's
    BLAS-backed product instead.

    Raises:
    - ShapeError: if a.cols != b.rows.

    Example:
    >>> matmul([[1.0, 2.0]], [[3.0], [4.0]]).tolist()
    [[11.0]]
    """
    a = as_matrix(a, "left operand")
    b = as_matrix(b, "right operand")
    if a.shape[1] != b.shape[0]:
        raise ShapeError(f"cannot multiply {a.shape[0]}x{a.shape[1]} by {b.shape[0]}x{b.shape[1]}")

    if get_settings().matmul == "blas":
        out = np.ascontiguousarray(a @ b)
    else:
        out = np.zeros((a.shape[0], b.shape[1]), dtype=np.float64)
        columns = np.ascontiguousarray(a.T)
        term = np.empty_like(out)
        for k in range(a.shape[1]):
            np.multiply(columns[k][:, None], b[k][None, :], out=term)
            out += term
    return check_finite(out, "matmul result")


def transpose(a: Matrix) -> Matrix:
    return np.ascontiguousarray(as_matrix(a).T)


def glorot_init(rng: Rng, fan_in: int, fan_out: int) -> Matrix:
    """
    Glorot/Xavier uniform initialization.

    Returns a (fan_in x fan_out) matrix with entries drawn uniformly from
    [-limit, limit) where limit = sqrt(6 / (fan_in + fan_out)).
    """
    if fan_in < 1 or fan_out < 1:
        raise ShapeError(f"glorot_init needs positive fans, got fan_in={fan_in}, fan_out={fan_out}")
    limit = math.sqrt(6.0 / (fan_in + fan_out))
    return rng.uniform((fan_in, fan_out), -limit, limit)


__all__ = [
    "Matrix",
    "Rng",
    "as_matrix",
    "check_finite",
    "glorot_init",
    "matmul",
    "transpose",
]
