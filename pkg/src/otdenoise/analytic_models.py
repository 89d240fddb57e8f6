"""Closed-form Gaussian-mixture models used as oracles.

A Gaussian-mixture prior convolved with Gaussian noise is again a Gaussian
mixture, so densities, all their derivatives, CDFs and quantiles of both the
signal and the observation law are available without approximation.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field
from typing import Mapping

import numpy as np
from scipy.special import ndtr, ndtri

__all__ = [
    "DENSITY_FLOOR",
    "DensityFloorError",
    "GaussianMixtureModel",
    "NoiseModel",
    "ScoreStack",
    "hermite",
    "density_derivative",
    "observation_model",
    "cdf",
    "sf",
    "quantile",
    "ot_map_oracle",
    "score_stack",
    "score_derivatives",
    "holder_radius",
    "heat_series",
    "cdf_derivative",
]

DENSITY_FLOOR = 1e-12
_SQRT_2PI = math.sqrt(2.0 * math.pi)
_BISECT_WIDTH = 1e-8
_NEWTON_STEPS = 5


class DensityFloorError(ValueError):
    """Raised where a ratio would divide by a density below the floor."""

    def __init__(self, y, density, floor=DENSITY_FLOOR):
        self.y = y
        self.density = density
        super().__init__(f"density {density:.3e} below floor {floor:.0e} at y={y!r}")


@dataclass(frozen=True)
class GaussianMixtureModel:
    weights: np.ndarray
    means: np.ndarray
    stds: np.ndarray

    def __post_init__(self):
        w = np.atleast_1d(np.asarray(self.weights, dtype=float))
        mu = np.atleast_1d(np.asarray(self.means, dtype=float))
        s = np.atleast_1d(np.asarray(self.stds, dtype=float))
        if not (w.shape == mu.shape == s.shape) or w.ndim != 1:
            raise ValueError("weights, means and stds must be 1-d of equal length")
        if np.any(w <= 0):
            raise ValueError("mixture weights must be positive")
        if abs(w.sum() - 1.0) > 1e-12:
            raise ValueError(f"weights must sum to 1 (got {w.sum()!r})")
        if np.any(s <= 0):
            raise ValueError("component stds must be positive")
        for name, arr in (("weights", w), ("means", mu), ("stds", s)):
            arr.setflags(write=False)
            object.__setattr__(self, name, arr)

    @classmethod
    def gaussian(cls, mean: float = 0.0, std: float = 1.0) -> "GaussianMixtureModel":
        return cls([1.0], [mean], [std])

    @classmethod
    def from_dict(cls, spec: Mapping) -> "GaussianMixtureModel":
        return cls(spec["weights"], spec["means"], spec["stds"])

    def to_dict(self) -> dict:
        return {
            "weights": self.weights.tolist(),
            "means": self.means.tolist(),
            "stds": self.stds.tolist(),
        }

    @property
    def n_components(self) -> int:
        return len(self.weights)

    def window(self, width: float = 6.0) -> tuple[float, float]:
        """Evaluation window ``[min(mu - width*s), max(mu + width*s)]``."""
        return (
            float(np.min(self.means - width * self.stds)),
            float(np.max(self.means + width * self.stds)),
        )

    def mean(self) -> float:
        return float(np.dot(self.weights, self.means))

    def variance(self) -> float:
        m = self.mean()
        return float(np.dot(self.weights, self.stds**2 + (self.means - m) ** 2))

    def pdf(self, y):
        return density_derivative(self, 0, y)

    def cdf(self, y):
        return cdf(self, y)

    def sf(self, y):
        return sf(self, y)

    def quantile(self, t):
        return quantile(self, t)

    def sample(self, n: int, rng: np.random.Generator) -> np.ndarray:
        comp = rng.choice(self.n_components, size=n, p=self.weights)
        return self.means[comp] + self.stds[comp] * rng.standard_normal(n)


@dataclass(frozen=True)
class NoiseModel:
    sigma: float
    eta: float = field(init=False)

    def __post_init__(self):
        if self.sigma < 0:
            raise ValueError("sigma must be non-negative")
        object.__setattr__(self, "eta", self.sigma**2 / 2.0)

    @classmethod
    def from_eta(cls, eta: float) -> "NoiseModel":
        if eta < 0:
            raise ValueError("eta must be non-negative")
        return cls(math.sqrt(2.0 * eta))

    @staticmethod
    def normalize(model: GaussianMixtureModel, sigma: float):
        """Rescale by the observation standard deviation so that sigma <= 1.

        Returns the rescaled prior, the rescaled noise and the scale factor.
        """
        gamma = math.sqrt(model.variance() + sigma**2)
        prior = GaussianMixtureModel(model.weights, model.means / gamma, model.stds / gamma)
        return prior, NoiseModel(sigma / gamma), gamma


@dataclass(frozen=True)
class ScoreStack:
    """Derivatives G^{(m)}(y) = q^{(m-1)}(y), m = 1..max_order, and r_m = G^{(m)}/G^{(1)}.

    ``values`` and ``ratios`` are indexed by m (entry 0 holds G itself / is unused).
    """

    y: np.ndarray
    max_order: int
    values: tuple
    ratios: tuple

    def __getitem__(self, m):
        return self.ratios[m]


def hermite(m: int, z):
    """Probabilists' Hermite polynomial He_m(z) by three-term recurrence."""
    if m < 0:
        raise ValueError("Hermite order must be non-negative")
    z = np.asarray(z, dtype=float)
    h_prev = np.ones_like(z)
    if m == 0:
        return h_prev if h_prev.ndim else float(h_prev)
    h = z.copy()
    for k in range(1, m):
        h_prev, h = h, z * h - k * h_prev
    return h if h.ndim else float(h)


def _components(model, y):
    y = np.asarray(y, dtype=float)
    z = (y[..., None] - model.means) / model.stds
    return y, z


def density_derivative(model: GaussianMixtureModel, m: int, y):
    """q^{(m)}(y) = sum_i w_i (-1)^m He_m(z_i) phi(z_i) / s_i^{m+1}."""
    if m < 0:
        raise ValueError("derivative order must be non-negative")
    y, z = _components(model, y)
    phi = np.exp(-0.5 * z * z) / _SQRT_2PI
    terms = model.weights * hermite(m, z) * phi / model.stds ** (m + 1)
    out = (-1) ** m * terms.sum(axis=-1)
    return out if out.ndim else float(out)


def observation_model(prior: GaussianMixtureModel, noise: NoiseModel | float) -> GaussianMixtureModel:
    sigma = noise.sigma if isinstance(noise, NoiseModel) else float(noise)
    return GaussianMixtureModel(prior.weights, prior.means, np.sqrt(prior.stds**2 + sigma**2))


def cdf(model: GaussianMixtureModel, y):
    y, z = _components(model, y)
    out = (model.weights * ndtr(z)).sum(axis=-1)
    return out if out.ndim else float(out)


def sf(model: GaussianMixtureModel, y):
    """Upper tail 1 - G(y), computed without cancellation."""
    y, z = _components(model, y)
    out = (model.weights * ndtr(-z)).sum(axis=-1)
    return out if out.ndim else float(out)


def _invert(model, t, upper):
    # bracket: the mixture quantile lies between the extreme component quantiles
    t = np.asarray(t, dtype=float)
    zq = ndtri(t)[..., None]
    if upper:
        zq = -zq
    comp = model.means + model.stds * zq
    lo = comp.min(axis=-1) - 1e-9
    hi = comp.max(axis=-1) + 1e-9
    target = cdf if not upper else sf
    sign = 1.0 if not upper else -1.0
    while np.any(hi - lo > _BISECT_WIDTH):
        mid = 0.5 * (lo + hi)
        below = sign * (target(model, mid) - t) < 0
        lo = np.where(below, mid, lo)
        hi = np.where(below, hi, mid)
    x = 0.5 * (lo + hi)
    for _ in range(_NEWTON_STEPS):
        dens = density_derivative(model, 0, x)
        step = sign * (target(model, x) - t) / np.maximum(dens, 1e-300)
        # keep Newton inside the bracket it started from
        x = np.clip(x - step, lo - _BISECT_WIDTH, hi + _BISECT_WIDTH)
    return x


def quantile(model: GaussianMixtureModel, t, upper: bool = False):
    """Generalized inverse of the CDF.

    With ``upper=True`` the argument is an upper-tail probability ``s``
    and the solution of ``sf(x) = s`` is returned; this keeps full relative
    precision in the right tail.
    """
    t_arr = np.asarray(t, dtype=float)
    if np.any(~((t_arr > 0) & (t_arr < 1))):
        raise ValueError("quantile level must lie strictly inside (0, 1)")
    x = _invert(model, t_arr, upper)
    return x if np.ndim(x) else float(x)


def ot_map_oracle(prior: GaussianMixtureModel, obs: GaussianMixtureModel, y):
    """F^{-1}(G(y)), using whichever tail keeps precision."""
    y = np.asarray(y, dtype=float)
    lower = cdf(obs, y)
    upper = sf(obs, y)
    out = np.empty(np.shape(y))
    left = np.asarray(lower <= 0.5)
    if np.any(left):
        out[left] = quantile(prior, np.asarray(lower)[left])
    if np.any(~left):
        out[~left] = quantile(prior, np.asarray(upper)[~left], upper=True)
    return out if out.ndim else float(out)


def score_stack(obs: GaussianMixtureModel, y, M: int, floor: float = DENSITY_FLOOR) -> ScoreStack:
    """CDF derivatives of ``obs`` at ``y`` up to order ``M`` and their ratios."""
    if M < 1:
        raise ValueError("need M >= 1")
    y = np.asarray(y, dtype=float)
    vals = [cdf(obs, y)] + [density_derivative(obs, m - 1, y) for m in range(1, M + 1)]
    q = np.asarray(vals[1])
    bad = q < floor
    if np.any(bad):
        idx = np.flatnonzero(np.atleast_1d(bad))[0]
        raise DensityFloorError(np.atleast_1d(y)[idx], np.atleast_1d(q)[idx], floor)
    ratios = [None, np.ones_like(q) if q.ndim else 1.0] + [v / q for v in vals[2:]]
    return ScoreStack(y, M, tuple(vals), tuple(ratios))


def score_derivatives(obs: GaussianMixtureModel, m: int, j_max: int, y):
    """[f, f', ..., f^{(j_max)}] for the order-m score f = q^{(m)}/q.

    Differentiating f*q = q^{(m)} by Leibniz gives
    f^{(j)} = (q^{(m+j)} - sum_{i<j} C(j,i) f^{(i)} q^{(j-i)}) / q.
    """
    q = [density_derivative(obs, i, y) for i in range(j_max + 1)]
    out = []
    for j in range(j_max + 1):
        acc = density_derivative(obs, m + j, y)
        for i in range(j):
            acc = acc - math.comb(j, i) * out[i] * q[j - i]
        out.append(acc / q[0])
    return out


def holder_radius(model: GaussianMixtureModel, order: int, grid_points: int = 20001) -> float:
    """Smallest L with the density in the integer-order Holder ball of that order.

    With integer smoothness ``order`` the class bounds derivatives through
    ``order - 1`` in sup norm plus the Lipschitz constant of the top one,
    i.e. ``sup |q^{(order)}|``. Sup norms are taken on a dense grid.
    """
    lo, hi = model.window(10.0)
    grid = np.linspace(lo, hi, grid_points)
    low = max(np.max(np.abs(density_derivative(model, k, grid))) for k in range(order))
    top = np.max(np.abs(density_derivative(model, order, grid)))
    return float(low + top)


def cdf_derivative(model: GaussianMixtureModel, k: int, y):
    """k-th derivative of the CDF (k = 0 is the CDF itself)."""
    return cdf(model, y) if k == 0 else density_derivative(model, k - 1, y)


def heat_series(model: GaussianMixtureModel, eta: float, K: int, y, sign: int = 1):
    """Truncated series sum_{k<=K} (sign*eta)^k/k! * D^{2k} CDF(y).

    ``sign=+1`` expands the observation CDF in derivatives of the signal CDF;
    ``sign=-1`` is the inverse relation.
    """
    out = 0.0
    coeff = 1.0
    for k in range(K + 1):
        if k:
            coeff *= sign * eta / k
        out = out + coeff * cdf_derivative(model, 2 * k, y)
    return out
