"""
Frequentist prediction intervals
================================

The plug-in t interval for the treatment effect in a new study, its
robust-variance variants, and the Wald confidence interval for the mean
they should be compared against.
"""

from metapred import MetaDataset, hts_interval, wald_ci_mu

dataset = MetaDataset.from_arrays(
    effects=[0.42, -0.08, 0.55, 0.26, 0.78, 0.11],
    std_errs=[0.21, 0.28, 0.19, 0.24, 0.30, 0.26],
)

# The confidence interval speaks about the average effect; the prediction
# interval speaks about the effect in the next study. With heterogeneity
# the latter is necessarily wider.
ci = wald_ci_mu(dataset, 0.95)
print(f"95% CI for the mean ({ci.method}):     ({ci.lower:+.3f}, {ci.upper:+.3f})")

for variant in ("DL", "HK", "SJ"):
    iv = hts_interval(dataset, 0.95, variant)
    print(f"95% prediction interval ({iv.method:7s}): ({iv.lower:+.3f}, {iv.upper:+.3f})")

# Width grows with the nominal level.
print("\nplug-in interval width by level:")
for level in (0.50, 0.80, 0.90, 0.95, 0.99):
    iv = hts_interval(dataset, level)
    print(f"  {level:.0%}: width {iv.width:.3f}")
