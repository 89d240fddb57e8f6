"""Plug-in estimation of density derivatives by Gaussian kernel smoothing."""

from __future__ import annotations

import math
from dataclasses import dataclass, field

import numpy as np

from .analytic_models import DENSITY_FLOOR, DensityFloorError, GaussianMixtureModel, hermite

__all__ = [
    "SampleSet",
    "BandwidthRule",
    "replicate_rng",
    "kde_derivative",
    "bandwidth",
    "plug_in_ratio",
    "compensated_rowsum",
]

_SQRT_2PI = math.sqrt(2.0 * math.pi)


def replicate_rng(seed: int, *key: int) -> np.random.Generator:
    """Independent counter-based stream for ``(seed, *key)``.

    Streams depend only on the key, never on which worker draws them or in
    which order.
    """
    ss = np.random.SeedSequence(seed, spawn_key=tuple(int(k) for k in key))
    return np.random.Generator(np.random.Philox(ss))


@dataclass(frozen=True)
class SampleSet:
    """i.i.d. draws together with the seed (and stream key) that produced them."""

    values: np.ndarray
    seed: int
    key: tuple = ()
    n: int = field(init=False)

    def __post_init__(self):
        v = np.asarray(self.values, dtype=float).ravel()
        if v.size < 1:
            raise ValueError("a sample set needs at least one value")
        v.setflags(write=False)
        object.__setattr__(self, "values", v)
        object.__setattr__(self, "n", int(v.size))
        object.__setattr__(self, "key", tuple(self.key))

    @classmethod
    def draw(cls, model: GaussianMixtureModel, n: int, seed: int, key=()) -> "SampleSet":
        rng = replicate_rng(seed, *key)
        return cls(model.sample(n, rng), seed, tuple(key))

    def regenerate(self, model: GaussianMixtureModel) -> "SampleSet":
        return SampleSet.draw(model, self.n, self.seed, self.key)


@dataclass(frozen=True)
class BandwidthRule:
    m: int
    L: float = 1.0

    def __post_init__(self):
        if self.m < 0:
            raise ValueError("derivative order must be non-negative")
        if not self.L > 0:
            raise ValueError("smoothness radius L must be positive")

    @property
    def exponent(self) -> float:
        return -1.0 / (2 * self.m + 5)

    @property
    def constant(self) -> float:
        return (math.sqrt(8.0 / math.pi) * math.factorial(self.m) / self.L) ** (
            1.0 / (2 * self.m + 5)
        )

    def __call__(self, n: int) -> float:
        if n < 1:
            raise ValueError("sample size must be >= 1")
        return self.constant * n**self.exponent


def bandwidth(m: int, n: int, L: float = 1.0) -> float:
    """Rate-optimal bandwidth ``(sqrt(8/pi) m!/L)^(1/(2m+5)) * n^(-1/(2m+5))``."""
    return BandwidthRule(m, L)(n)


def compensated_rowsum(a) -> np.ndarray:
    """Row sums of a 2-D array by cascaded pairwise two-sum.

    Each pairwise addition records its exact rounding error (Knuth's
    two-sum); the errors are added back at the end.  The result depends only
    on the row's contents in their stored order, never on other rows.
    """
    a = np.array(a, dtype=float, ndmin=2)
    err = np.zeros(a.shape[0])
    while a.shape[1] > 1:
        if a.shape[1] % 2:
            a = np.concatenate([a, np.zeros((a.shape[0], 1))], axis=1)
        x, y = a[:, 0::2], a[:, 1::2]
        s = x + y
        yv = s - x
        err += ((x - (s - yv)) + (y - yv)).sum(axis=1)
        a = s
    return a[:, 0] + err


def _values(samples) -> np.ndarray:
    if isinstance(samples, SampleSet):
        return samples.values
    return np.asarray(samples, dtype=float).ravel()


def kde_derivative(samples, m: int, b: float, y):
    """Gaussian-kernel estimate of q^{(m)} at ``y``.

    ``(1/(n b^{m+1})) * sum_i phi^{(m)}((y - Y_i)/b)`` with
    ``phi^{(m)}(z) = (-1)^m He_m(z) phi(z)``.  The kernel sum for each
    evaluation point is compensated (:func:`compensated_rowsum`) and computed
    independently of every other evaluation point.

    ``y`` may be a scalar or an array; arrays are evaluated point by point.
    """
    if not b > 0:
        raise ValueError(f"bandwidth must be positive, got {b}")
    if m < 0:
        raise ValueError("derivative order must be non-negative")
    data = _values(samples)
    n = data.size
    ys = np.asarray(y, dtype=float)
    flat = np.atleast_1d(ys).ravel()
    sign = -1.0 if m % 2 else 1.0
    scale = sign / (n * b ** (m + 1) * _SQRT_2PI)
    out = np.empty(flat.size)
    block = max(1, 2**20 // max(n, 1))
    for start in range(0, flat.size, block):
        z = (flat[start:start + block, None] - data[None, :]) / b
        kern = hermite(m, z) * np.exp(-0.5 * z * z)
        out[start:start + block] = compensated_rowsum(kern) * scale
    if ys.ndim == 0:
        return float(out[0])
    return out.reshape(ys.shape)


def plug_in_ratio(samples, m: int, y, L: float = 1.0, floor: float = DENSITY_FLOOR):
    """Ratio estimate q^{(m)}(y)/q(y) with orders m and 0 at their own bandwidths."""
    n = _values(samples).size
    num = kde_derivative(samples, m, bandwidth(m, n, L), y)
    den = kde_derivative(samples, 0, bandwidth(0, n, L), y)
    den_arr = np.atleast_1d(den)
    bad = den_arr < floor
    if np.any(bad):
        idx = int(np.flatnonzero(bad)[0])
        raise DensityFloorError(np.atleast_1d(y)[idx], den_arr[idx], floor)
    return num / den
