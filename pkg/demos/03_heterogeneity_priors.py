"""
The eleven heterogeneity priors
===============================

Each prior for the between-study scale tau is bound to a dataset (fixing
its data-derived constants) and then evaluated as a density. Proper
families also expose a distribution function.
"""

import math

import numpy as np

from metapred import MetaDataset, NAMED_PRIORS, bind_prior, log_prior_density, prior_cdf

dataset = MetaDataset.from_arrays(
    effects=[0.42, -0.08, 0.55, 0.26, 0.78, 0.11],
    std_errs=[0.21, 0.28, 0.19, 0.24, 0.30, 0.26],
)

bound = {name: bind_prior(family, dataset) for name, family in NAMED_PRIORS.items()}
s0 = math.sqrt(bound["dumouchel"].s0_sq)
print(f"harmonic-mean scale s0 = {s0:.4f}")
print(f"I^2-style scale sigma_hat = {math.sqrt(bound['i2'].sigma_hat_sq):.4f}\n")

# Densities over a short tau grid. Improper families are unnormalized, so
# only ratios are meaningful there.
grid = np.array([0.05, 0.15, 0.3, 0.6, 1.2])
header = "prior        proper  " + "".join(f"p({t:4.2f})  " for t in grid)
print(header)
for name, b in bound.items():
    dens = np.exp(log_prior_density(b, grid))
    row = "".join(f"{d:8.4f}" for d in dens)
    print(f"{name:12s} {str(b.proper):6s} {row}")

# The dumouchel and shrinkage families are built around s0: both have
# their median exactly there.
print("\nmedians via the distribution function:")
for name in ("dumouchel", "shrinkage", "i2", "proper1", "proper2", "proper3"):
    b = bound[name]
    print(f"  {name:10s} F(s0) = {prior_cdf(b, s0):.4f}")

# With equal within-study variances the berger-deely density is
# proportional to the jeffreys density (identical after normalization).
equal = MetaDataset.from_arrays([0.1, 0.5, -0.2], [0.4, 0.4, 0.4])
bj = bind_prior(NAMED_PRIORS["jeffreys"], equal)
bb = bind_prior(NAMED_PRIORS["berger-deely"], equal)
ratio = np.exp(log_prior_density(bj, grid) - log_prior_density(bb, grid))
print(f"\nequal-variance jeffreys / berger-deely density ratio: {ratio.round(6)}")
