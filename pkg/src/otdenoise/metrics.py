"""One-dimensional Wasserstein distances, Monge-Ampere residuals and MSE."""

from __future__ import annotations

from dataclasses import dataclass
from typing import Callable

import numpy as np

from .analytic_models import GaussianMixtureModel, cdf, density_derivative, ot_map_oracle
from .denoise import isotonic_projection

__all__ = [
    "QuadratureGrid",
    "quadrature_grid",
    "excluded_mass",
    "wasserstein_empirical",
    "wasserstein_restricted",
    "monge_ampere_residual",
    "mse",
]


def wasserstein_empirical(xs, ys, r: float = 2.0) -> float:
    """W_r between two equal-size empirical measures via sorted order statistics."""
    xs = np.sort(np.asarray(xs, dtype=float).ravel())
    ys = np.sort(np.asarray(ys, dtype=float).ravel())
    if xs.size != ys.size:
        raise ValueError(f"sample sizes differ: {xs.size} vs {ys.size}")
    if r < 1:
        raise ValueError("r must be >= 1")
    if xs.size == 0:
        raise ValueError("empty samples")
    return float(np.mean(np.abs(xs - ys) ** r) ** (1.0 / r))


@dataclass(frozen=True)
class QuadratureGrid:
    points: np.ndarray
    weights: np.ndarray  # q(y) * trapezoid spacing

    @property
    def mass(self) -> float:
        return float(self.weights.sum())


def quadrature_grid(obs: GaussianMixtureModel, window: tuple[float, float],
                    n_points: int = 4001) -> QuadratureGrid:
    if n_points < 2001:
        raise ValueError("use at least 2001 quadrature points")
    lo, hi = window
    pts = np.linspace(lo, hi, n_points)
    h = (hi - lo) / (n_points - 1)
    w = np.full(n_points, h)
    w[0] = w[-1] = h / 2
    return QuadratureGrid(pts, w * density_derivative(obs, 0, pts))


def excluded_mass(obs: GaussianMixtureModel, window: tuple[float, float]) -> float:
    """Q-probability outside the window."""
    lo, hi = window
    return float(cdf(obs, lo) + (1.0 - cdf(obs, hi)))


def wasserstein_restricted(T: Callable, obs: GaussianMixtureModel, prior: GaussianMixtureModel,
                           r: float = 2.0, window: tuple[float, float] | None = None,
                           n_points: int = 4001, isotonic: bool = False) -> float:
    """``(int_window |T(y) - F^{-1}(G(y))|^r q(y) dy)^{1/r}`` by the trapezoid rule.

    ``window`` defaults to the prior's evaluation window. ``T`` must be
    non-decreasing on the grid unless ``isotonic=True``, in which case its
    values are replaced by their q-weighted isotonic projection.
    """
    if r < 1:
        raise ValueError("r must be >= 1")
    window = prior.window() if window is None else window
    grid = quadrature_grid(obs, window, n_points)
    t_vals = np.asarray(T(grid.points), dtype=float)
    if np.any(np.diff(t_vals) < 0):
        if not isotonic:
            raise ValueError("map is not monotone on the window; pass isotonic=True to project")
        t_vals = isotonic_projection(t_vals, np.maximum(grid.weights, 1e-300))
    oracle = ot_map_oracle(prior, obs, grid.points)
    return float(np.sum(np.abs(t_vals - oracle) ** r * grid.weights) ** (1.0 / r))


def monge_ampere_residual(F_cdf: Callable, T: Callable, G_cdf: Callable, y):
    """``|F(T(y)) - G(y)|``."""
    return np.abs(F_cdf(T(y)) - G_cdf(y))


def mse(T: Callable, xs, ys) -> float:
    """``mean((T(y_i) - x_i)^2)`` over coupled pairs."""
    xs = np.asarray(xs, dtype=float).ravel()
    ys = np.asarray(ys, dtype=float).ravel()
    if xs.size != ys.size:
        raise ValueError(f"pair lengths differ: {xs.size} vs {ys.size}")
    return float(np.mean((np.asarray(T(ys), dtype=float) - xs) ** 2))
