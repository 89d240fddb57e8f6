"""
How fast the hierarchy converges in the noise level
===================================================

For a Gaussian prior the optimal transport map is linear, so the error of
T_K can be checked against the exact answer.  Halving eta should divide the
error of T_K by about 2^(K+1).
"""

import numpy as np

from otdenoise.analytic_models import GaussianMixtureModel, NoiseModel, observation_model, ot_map_oracle
from otdenoise.denoise import AnalyticProvider, apply, build_denoiser
from otdenoise.harness import default_config, fit_slope, run_hierarchy_check
from otdenoise.metrics import wasserstein_restricted

prior = GaussianMixtureModel.gaussian(0.0, 1.0)
grid = np.linspace(*prior.window(), 2001)
etas = [0.005, 0.01, 0.02, 0.04, 0.08]

errors = {K: [] for K in range(4)}
for eta in etas:
    obs = observation_model(prior, NoiseModel.from_eta(eta))
    exact = ot_map_oracle(prior, obs, grid)
    for K in errors:
        T = build_denoiser(K, eta, AnalyticProvider(obs))
        errors[K].append(np.max(np.abs(T(grid) - exact)))

for K, errs in errors.items():
    print(f"K={K}  sup errors {np.array(errs)}  slope {fit_slope(etas, errs).slope:.2f}")

# a bimodal prior: the W2 distance to P still drops with every order
res = run_hierarchy_check(default_config("order", hierarchy_prior={
    "weights": [0.5, 0.5], "means": [-1.0, 1.0], "stds": [0.5, 0.5]}))
for row in res.rows:
    print(row["label"], "W2* =", f"{row['value']:.3e}")

# with eta too large for a narrow mixture, T_3 stops being monotone
narrow = GaussianMixtureModel([0.5, 0.5], [-1.0, 1.0], [0.1, 0.1])
obs = observation_model(narrow, NoiseModel.from_eta(0.05))
rep = apply(build_denoiser(3, 0.05, AnalyticProvider(obs)), np.linspace(-3, 3, 601))
print("narrow mixture, eta=0.05: monotone =", rep.monotone, "min slope =", round(rep.min_slope, 2))
T = build_denoiser(3, 0.05, AnalyticProvider(obs))
print("W2* after isotonic projection:", wasserstein_restricted(T, obs, narrow, isotonic=True))
