"""
Bayesian prediction and credible intervals
==========================================

The posterior over the heterogeneity scale is represented on a
deterministic quadrature grid (the mean is integrated out in closed
form), so interval estimates are reproducible to quadrature accuracy -
there is no Monte Carlo in this path.
"""

from metapred import (
    EngineConfig,
    MetaDataset,
    NAMED_PRIORS,
    bind_prior,
    build_posterior_grid,
    credible_interval_mu,
    posterior_tau_moments,
    prediction_interval,
    predictive_cdf,
)

dataset = MetaDataset.from_arrays(
    effects=[0.42, -0.08, 0.55, 0.26, 0.78, 0.11],
    std_errs=[0.21, 0.28, 0.19, 0.24, 0.30, 0.26],
)

# One grid per prior; intervals are quantiles of the discretized
# posterior mixture.
print("prior         95% prediction interval    95% credible interval (mean)")
grids = {}
for name, family in NAMED_PRIORS.items():
    grid = build_posterior_grid(dataset, bind_prior(family, dataset))
    grids[name] = grid
    pred = prediction_interval(grid, 0.95)
    cred = credible_interval_mu(grid, 0.95)
    print(
        f"{name:12s}  ({pred.lower:+.3f}, {pred.upper:+.3f})"
        f"           ({cred.lower:+.3f}, {cred.upper:+.3f})"
    )

# Posterior moments decompose exactly: predictive variance = variance of
# the mean + expected heterogeneity.
grid = grids["jeffreys"]
mean_tau2, var_mu, var_pred = posterior_tau_moments(grid)
print(f"\njeffreys posterior: E[tau^2] = {mean_tau2:.4f}, "
      f"Var(mu) = {var_mu:.4f}, Var(new effect) = {var_pred:.4f}")
print(f"decomposition defect: {var_pred - var_mu - mean_tau2:.2e}")

# The predictive distribution function is available directly.
print("\npredictive CDF under the jeffreys prior:")
for x in (-0.5, 0.0, 0.3, 0.6, 1.0):
    print(f"  F({x:+.1f}) = {predictive_cdf(grid, x):.4f}")

# A wider grid changes nothing visible: the default resolution is already
# converged to well below reporting precision.
fine = build_posterior_grid(
    dataset, bind_prior(NAMED_PRIORS["jeffreys"], dataset), EngineConfig(grid_size=8192)
)
delta = abs(prediction_interval(fine).upper - prediction_interval(grid).upper)
print(f"\nupper endpoint shift after 4x grid refinement: {delta:.2e}")
