"""
Classical random-effects estimators
===================================

A walk through the study-level building blocks: Cochran's Q, the I^2
heterogeneity fraction, the DerSimonian-Laird and REML variance
estimators, and the pooled mean they imply.
"""

from metapred import (
    MetaDataset,
    cochran_q,
    dl_tau2,
    i_squared,
    pooled_mu,
    q_test_pvalue,
    reml_tau2,
    robust_variance,
)

# Six trials reporting log risk ratios with their standard errors. Inputs
# are always on the analysis scale; nothing here exponentiates.
dataset = MetaDataset.from_arrays(
    effects=[0.42, -0.08, 0.55, 0.26, 0.78, 0.11],
    std_errs=[0.21, 0.28, 0.19, 0.24, 0.30, 0.26],
)

q = cochran_q(dataset)
print(f"studies:            {dataset.n}")
print(f"Cochran Q:          {q:.4f}")
print(f"Q-test p-value:     {q_test_pvalue(q, dataset.n):.4f}")
print(f"I^2:                {i_squared(dataset):.1%}")

# Two heterogeneity estimates: the moment estimator and REML.
dl = dl_tau2(dataset)
reml = reml_tau2(dataset)
print(f"tau^2 ({dl.method}):       {dl.tau2:.4f}")
print(f"tau^2 ({reml.method}):     {reml.tau2:.4f}")

# The pooled mean depends on which tau^2 feeds the weights.
for est in (dl, reml):
    pooled = pooled_mu(dataset, est.tau2)
    print(
        f"pooled mean with {est.method} weights: {pooled.mu_hat:.4f} "
        f"(var {pooled.var_mu_hat:.5f})"
    )

# Robust (Hartung-Knapp / Sidik-Jonkman) variances for the pooled mean,
# conventionally paired with the REML heterogeneity estimate.
for kind in ("HK", "SJ"):
    v = robust_variance(dataset, reml.tau2, kind)
    print(f"robust variance {kind}:  {v:.5f}")

# Scale equivariance: measuring in half-units doubles the mean and
# quadruples tau^2, while Q and I^2 are untouched.
doubled = MetaDataset.from_arrays(2 * dataset.effects, 2 * dataset.std_errs)
print(f"\nafter doubling the scale: Q = {cochran_q(doubled):.4f} (unchanged), "
      f"tau^2 = {dl_tau2(doubled).tau2:.4f} (x4)")
