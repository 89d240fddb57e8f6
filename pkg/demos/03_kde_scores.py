"""
Kernel estimates of higher-order scores
=======================================

Derivatives of a Gaussian kernel density estimate give q^(m).  The
rate-optimal bandwidth shrinks like n^(-1/(2m+5)), and the pointwise
squared error like n^(-4/(2m+5)).
"""


from otdenoise.analytic_models import GaussianMixtureModel, density_derivative
from otdenoise.harness import default_config, run_kde_rate_experiment
from otdenoise.score_estimation import SampleSet, bandwidth, kde_derivative, plug_in_ratio

q = GaussianMixtureModel.gaussian()
s = SampleSet.draw(q, 50_000, seed=3)
for m in range(3):
    b = bandwidth(m, s.n)
    est = kde_derivative(s, m, b, 0.5)
    print(f"m={m}  b={b:.3f}  estimate {est:+.4f}  truth {density_derivative(q, m, 0.5):+.4f}")

print("score at y=1, should be near -1:", plug_in_ratio(s, 1, 1.0))

res = run_kde_rate_experiment(default_config("kde-rate", replicates=100))
for v in res.verdicts:
    print(v.line())
