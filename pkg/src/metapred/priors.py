"""Noninformative priors for the between-study scale tau.

Eleven reference families are provided, each evaluable as a log density on
tau >= 0 once bound to a dataset. Binding fixes the data-derived constants:
s0^2 (harmonic mean of the within-study variances), the I^2-style average
variance sigma_hat^2, and the per-study variances needed by the
Jeffreys-type densities.

Improper families (uniform, sqrt, jeffreys, berger-deely) are evaluated in
their unnormalized form with the arbitrary constant fixed to 1; every
proper family is normalized so its density integrates to one.
"""

from __future__ import annotations

import math
from dataclasses import dataclass
from typing import Optional

import numpy as np
from scipy import integrate, stats
from scipy.special import gammaln

from .core import MetaDataset
from .errors import NumericFailure

__all__ = [
    "PriorFamily",
    "BoundPrior",
    "power_prior",
    "uniform_prior",
    "sqrt_prior",
    "jeffreys_prior",
    "berger_deely_prior",
    "conventional_prior",
    "dumouchel_prior",
    "shrinkage_prior",
    "i2_prior",
    "proper_uniform_prior",
    "inv_gamma_prior",
    "named_prior",
    "NAMED_PRIORS",
    "bind_prior",
    "log_prior_density",
    "prior_cdf",
]

_PROPER_KINDS = frozenset(
    {"conventional", "dumouchel", "shrinkage", "i2", "proper-uniform", "inv-gamma"}
)
_ALL_KINDS = _PROPER_KINDS | {"power", "jeffreys", "berger-deely"}


@dataclass(frozen=True)
class PriorFamily:
    """One prior family for tau, with its shape parameters.

    kind : one of power (p ~ tau^a), jeffreys, berger-deely, conventional,
        dumouchel, shrinkage, i2, proper-uniform (flat on (0, hi)), or
        inv-gamma (Gamma(shape, rate) on the precision 1/tau^2).
    """

    kind: str
    a: Optional[float] = None
    hi: Optional[float] = None
    shape: Optional[float] = None
    rate: Optional[float] = None

    def __post_init__(self):
        if self.kind not in _ALL_KINDS:
            raise ValueError(f"unknown prior kind {self.kind!r}")
        if self.kind == "power":
            if self.a is None or not (self.a > -1.0):
                raise ValueError("power prior needs exponent a > -1 for integrability")
        if self.kind == "proper-uniform":
            if self.hi is None or not (self.hi > 0):
                raise ValueError("proper-uniform prior needs hi > 0")
        if self.kind == "inv-gamma":
            if (
                self.shape is None
                or self.rate is None
                or not (self.shape > 0 and self.rate > 0)
            ):
                raise ValueError("inv-gamma prior needs shape > 0 and rate > 0")

    @property
    def proper(self) -> bool:
        return self.kind in _PROPER_KINDS

    @property
    def name(self) -> str:
        """Canonical tag: the registry name when the family is one of the 11."""
        if self.kind == "power":
            if self.a == 0.0:
                return "uniform"
            if self.a == -0.5:
                return "sqrt"
            return f"power({self.a:g})"
        if self.kind == "proper-uniform":
            if self.hi == 10.0:
                return "proper1"
            return f"proper-uniform({self.hi:g})"
        if self.kind == "inv-gamma":
            if self.shape == 0.001 and self.rate == 0.001:
                return "proper2"
            if self.shape == 0.01 and self.rate == 0.01:
                return "proper3"
            return f"inv-gamma({self.shape:g},{self.rate:g})"
        return self.kind


def power_prior(a: float) -> PriorFamily:
    return PriorFamily("power", a=float(a))


def uniform_prior() -> PriorFamily:
    return power_prior(0.0)


def sqrt_prior() -> PriorFamily:
    return power_prior(-0.5)


def jeffreys_prior() -> PriorFamily:
    return PriorFamily("jeffreys")


def berger_deely_prior() -> PriorFamily:
    return PriorFamily("berger-deely")


def conventional_prior() -> PriorFamily:
    return PriorFamily("conventional")


def dumouchel_prior() -> PriorFamily:
    return PriorFamily("dumouchel")


def shrinkage_prior() -> PriorFamily:
    return PriorFamily("shrinkage")


def i2_prior() -> PriorFamily:
    return PriorFamily("i2")


def proper_uniform_prior(hi: float = 10.0) -> PriorFamily:
    return PriorFamily("proper-uniform", hi=float(hi))


def inv_gamma_prior(shape: float, rate: float) -> PriorFamily:
    return PriorFamily("inv-gamma", shape=float(shape), rate=float(rate))


NAMED_PRIORS: dict[str, PriorFamily] = {
    "uniform": uniform_prior(),
    "sqrt": sqrt_prior(),
    "jeffreys": jeffreys_prior(),
    "berger-deely": berger_deely_prior(),
    "conventional": conventional_prior(),
    "dumouchel": dumouchel_prior(),
    "shrinkage": shrinkage_prior(),
    "i2": i2_prior(),
    "proper1": proper_uniform_prior(10.0),
    "proper2": inv_gamma_prior(0.001, 0.001),
    "proper3": inv_gamma_prior(0.01, 0.01),
}


def named_prior(name: str) -> PriorFamily:
    try:
        return NAMED_PRIORS[name]
    except KeyError:
        raise ValueError(
            f"unknown prior name {name!r}; choose from {', '.join(NAMED_PRIORS)}"
        ) from None


@dataclass(frozen=True)
class BoundPrior:
    """A prior family with its dataset-derived constants frozen in.

    s0_sq is the harmonic mean n / sum(sigma_i^-2); sigma_hat_sq is
    (n-1) sum(sigma_i^-2) / ((sum sigma_i^-2)^2 - sum sigma_i^-4).
    log_norm is the log normalizing constant subtracted from the
    conventional family's displayed form (0 for every other family).
    """

    family: PriorFamily
    s0_sq: float
    sigma_hat_sq: float
    sigma_sq: np.ndarray
    proper: bool
    log_norm: float = 0.0

    @property
    def name(self) -> str:
        return self.family.name


def _conventional_log_unnorm(tau, sigma_sq):
    tau = np.asarray(tau, dtype=float)
    n = len(sigma_sq)
    t2 = tau[..., None] ** 2
    with np.errstate(divide="ignore"):
        out = np.log(tau) - 1.5 / n * np.sum(np.log(sigma_sq + t2), axis=-1)
    return out


def bind_prior(family: PriorFamily, dataset: MetaDataset) -> BoundPrior:
    """Fix a prior family's data-dependent constants for one dataset."""
    if dataset.n < 2:
        raise ValueError(f"binding a prior needs n >= 2, dataset has {dataset.n}")
    sigma_sq = dataset.variances
    inv = 1.0 / sigma_sq
    s1 = float(np.sum(inv))
    s2 = float(np.sum(inv**2))
    n = dataset.n
    s0_sq = n / s1
    denom = s1**2 - s2
    if denom <= 0.0:
        raise NumericFailure(
            f"sigma_hat_sq denominator is nonpositive ({denom!r}); "
            "within-study variances are numerically degenerate"
        )
    sigma_hat_sq = (n - 1) * s1 / denom

    log_norm = 0.0
    if family.kind == "conventional":
        # no closed form; normalize the displayed density numerically
        total, _ = integrate.quad(
            lambda t: math.exp(_conventional_log_unnorm(t, sigma_sq)),
            0.0,
            np.inf,
            epsabs=1e-12,
            epsrel=1e-10,
            limit=200,
        )
        log_norm = math.log(total)

    return BoundPrior(
        family=family,
        s0_sq=s0_sq,
        sigma_hat_sq=sigma_hat_sq,
        sigma_sq=sigma_sq,
        proper=family.proper,
        log_norm=log_norm,
    )


def log_prior_density(prior: BoundPrior, tau) -> float | np.ndarray:
    """Log prior density at tau (scalar or array), tau >= 0.

    Proper families are normalized; improper families return the displayed
    unnormalized form (power(a) returns a * log tau). At tau = 0 the
    continuous limit is returned, which is -inf wherever the density
    vanishes.
    """
    arr = np.asarray(tau, dtype=float)
    if np.any(arr < 0) or np.any(~np.isfinite(arr)):
        raise ValueError("tau must be finite and >= 0")
    scalar = arr.ndim == 0
    t = np.atleast_1d(arr)
    fam = prior.family
    kind = fam.kind
    zero = t == 0.0

    with np.errstate(divide="ignore", invalid="ignore", over="ignore"):
        if kind == "power":
            a = fam.a
            out = a * np.log(t)
            if a == 0.0:
                out = np.zeros_like(t)
        elif kind == "jeffreys":
            ratios = t[:, None] / (prior.sigma_sq[None, :] + t[:, None] ** 2)
            out = 0.5 * np.log(np.sum(ratios**2, axis=1))
        elif kind == "berger-deely":
            out = np.log(t) - np.mean(
                np.log(prior.sigma_sq[None, :] + t[:, None] ** 2), axis=1
            )
        elif kind == "conventional":
            out = _conventional_log_unnorm(t, prior.sigma_sq) - prior.log_norm
        elif kind == "dumouchel":
            s0 = math.sqrt(prior.s0_sq)
            out = math.log(s0) - 2.0 * np.log(s0 + t)
        elif kind == "shrinkage":
            out = np.log(2.0 * prior.s0_sq * t) - 2.0 * np.log(prior.s0_sq + t**2)
        elif kind == "i2":
            out = np.log(2.0 * prior.sigma_hat_sq * t) - 2.0 * np.log(
                prior.sigma_hat_sq + t**2
            )
        elif kind == "proper-uniform":
            out = np.where(t <= fam.hi, -math.log(fam.hi), -np.inf)
        elif kind == "inv-gamma":
            a, b = fam.shape, fam.rate
            out = np.where(
                zero,
                -np.inf,
                math.log(2.0)
                + a * math.log(b)
                - gammaln(a)
                - (2.0 * a + 1.0) * np.log(t)
                - b / t**2,
            )
        else:  # pragma: no cover - guarded by PriorFamily validation
            raise AssertionError(kind)

    out = np.asarray(out, dtype=float)
    if scalar:
        return float(out[0])
    return out


def prior_cdf(prior: BoundPrior, tau: float) -> float:
    """CDF of a proper prior at tau; raises for improper families.

    Closed forms: dumouchel tau/(s0+tau); shrinkage tau^2/(s0^2+tau^2);
    i2 the same with sigma_hat^2; proper-uniform min(tau/hi, 1); inv-gamma
    via the Gamma survival function of the precision. The conventional
    family integrates its density numerically.
    """
    if not prior.proper:
        raise ValueError(
            f"prior '{prior.name}' is improper and has no distribution function"
        )
    if not (math.isfinite(tau) and tau >= 0):
        raise ValueError(f"tau must be finite and >= 0, got {tau!r}")
    fam = prior.family
    kind = fam.kind
    if kind == "dumouchel":
        s0 = math.sqrt(prior.s0_sq)
        return tau / (s0 + tau)
    if kind == "shrinkage":
        return tau**2 / (prior.s0_sq + tau**2)
    if kind == "i2":
        return tau**2 / (prior.sigma_hat_sq + tau**2)
    if kind == "proper-uniform":
        return min(tau / fam.hi, 1.0)
    if kind == "inv-gamma":
        if tau == 0.0:
            return 0.0
        # P(T <= tau) = P(1/T^2 >= tau^-2) with 1/T^2 ~ Gamma(shape, rate)
        return float(stats.gamma.sf(tau**-2, fam.shape, scale=1.0 / fam.rate))
    # conventional
    if tau == 0.0:
        return 0.0
    val, _ = integrate.quad(
        lambda t: math.exp(float(log_prior_density(prior, t))),
        0.0,
        tau,
        epsabs=1e-10,
        limit=200,
    )
    return min(max(val, 0.0), 1.0)
