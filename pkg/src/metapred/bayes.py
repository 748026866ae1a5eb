"""Deterministic posterior computation for the Bayesian hierarchical model.

The hierarchical model puts y_i ~ N(theta_i, sigma_i^2), theta_i ~
N(mu, tau^2), a diffuse N(0, S) prior on mu (S = 10000 by default), and one
of the tau priors from :mod:`metapred.priors`. The mean integrates out in
closed form, leaving a one-dimensional marginal posterior over tau that is
represented on a fixed quadrature grid. Prediction intervals for the effect
in a new study and credible intervals for the mean are quantiles of the
resulting discrete mixture of normals - no Monte Carlo anywhere in this
path.

Grid construction compactifies tau through w = sqrt(tau / (s0 + tau)) and
places Gauss-Legendre nodes in w: the square-root map bounds every one of
the supported priors' integrands at the origin (including the tau^-1/2
singularity of the sqrt prior), and the rational map absorbs heavy tails.
"""

from __future__ import annotations

import math
from dataclasses import dataclass
from functools import lru_cache
from typing import Optional

import numpy as np
from scipy.special import logsumexp, ndtr, roots_legendre

from .core import MetaDataset
from .errors import DivergedPosteriorError, NumericFailure
from .intervals import IntervalEstimate
from .priors import BoundPrior, log_prior_density

__all__ = [
    "EngineConfig",
    "PosteriorGrid",
    "marginal_loglik",
    "build_posterior_grid",
    "predictive_cdf",
    "prediction_interval",
    "credible_interval_mu",
    "posterior_tau_moments",
]

_TAU_MAX_CAP_FACTOR = 1e6  # expansion cap: tau_max = 1e6 * s0


@dataclass(frozen=True)
class EngineConfig:
    """Knobs for posterior-grid construction and quantile inversion."""

    mu_prior_var: float = 10_000.0
    grid_size: int = 2048
    tail_mass_cut: float = 1e-10
    cdf_tolerance: float = 1e-8
    tau_upper_hint: Optional[float] = None

    def __post_init__(self):
        if not (math.isfinite(self.mu_prior_var) and self.mu_prior_var > 0):
            raise ValueError("mu_prior_var must be positive and finite")
        if self.grid_size < 64:
            raise ValueError(f"grid_size must be >= 64, got {self.grid_size}")
        for label, tol in (
            ("tail_mass_cut", self.tail_mass_cut),
            ("cdf_tolerance", self.cdf_tolerance),
        ):
            if not (0.0 < tol < 1e-2):
                raise ValueError(f"{label} must lie in (0, 1e-2), got {tol!r}")
        if self.tau_upper_hint is not None and not (self.tau_upper_hint > 0):
            raise ValueError("tau_upper_hint must be positive when given")


@dataclass(frozen=True)
class PosteriorGrid:
    """Quadrature view of the marginal posterior of tau.

    nodes        increasing tau values (> 0)
    quad_weights positive quadrature weights in tau space
    log_post     log(prior density x integrated likelihood) at the nodes
    cond_mean    posterior mean of mu given tau, per node
    cond_var     posterior variance of mu given tau, per node
    log_norm     log of the normalizing sum Z
    prior_name   tag of the prior that produced the grid
    """

    nodes: np.ndarray
    quad_weights: np.ndarray
    log_post: np.ndarray
    cond_mean: np.ndarray
    cond_var: np.ndarray
    log_norm: float
    prior_name: str

    def posterior_weights(self) -> np.ndarray:
        """Normalized node masses; they sum to 1 by construction."""
        return self.quad_weights * np.exp(self.log_post - self.log_norm)


def _loglik_terms(y, sigma_sq, tau, mu_prior_var):
    """Closed-form marginal log likelihood pieces for an array of tau."""
    t2 = np.asarray(tau, dtype=float)[..., None] ** 2
    v = sigma_sq[None, :] + t2
    inv_v = 1.0 / v
    prec = np.sum(inv_v, axis=-1) + 1.0 / mu_prior_var
    cond_var = 1.0 / prec
    cond_mean = np.sum(y[None, :] * inv_v, axis=-1) * cond_var
    quad_form = np.sum(y[None, :] ** 2 * inv_v, axis=-1) - cond_mean**2 * prec
    loglik = (
        -0.5 * np.sum(np.log(2.0 * math.pi * v), axis=-1)
        - 0.5 * np.log(mu_prior_var * prec)
        - 0.5 * quad_form
    )
    return loglik, cond_mean, cond_var


def marginal_loglik(
    dataset: MetaDataset, tau, mu_prior_var: float = 10_000.0
) -> float | np.ndarray:
    """Log of the likelihood with the mean integrated out against N(0, S).

    Equals log integral prod_i N(y_i; mu, sigma_i^2 + tau^2) N(mu; 0, S) dmu,
    evaluated in closed form. Accepts a scalar or array tau >= 0.
    """
    arr = np.asarray(tau, dtype=float)
    if np.any(arr < 0) or np.any(~np.isfinite(arr)):
        raise ValueError("tau must be finite and >= 0")
    if not (mu_prior_var > 0):
        raise ValueError("mu_prior_var must be positive")
    loglik, _, _ = _loglik_terms(
        dataset.effects, dataset.variances, np.atleast_1d(arr), mu_prior_var
    )
    if arr.ndim == 0:
        return float(loglik[0])
    return loglik


@lru_cache(maxsize=8)
def _gauss_nodes(size: int):
    x, w = roots_legendre(size)
    return x, w


def _log_posterior(y, sigma_sq, prior, tau, mu_prior_var):
    loglik, _, _ = _loglik_terms(y, sigma_sq, tau, mu_prior_var)
    return log_prior_density(prior, tau) + loglik


def _scan_tau_max(y, sigma_sq, prior, config):
    """Geometric upward scan for the tau truncation point.

    Probes start at max(s0, sd(y)) (or the configured hint) and double until
    (a) the posterior density falls below tail_mass_cut x the running peak
    and (b) the remaining tail mass, estimated from the local decay power,
    falls below tail_mass_cut of the accumulated mass. Starting at the data
    scale keeps an unbounded prior density at tau -> 0 (the sqrt prior) out
    of the peak, which would otherwise stall the scan. When (a) holds but
    the tail is too heavy to ever meet (b) inside the cap (e.g. n = 2 with
    a flat prior), the cap is used; only a tail that never decays raises.
    """
    s0 = math.sqrt(prior.s0_sq)
    cap = _TAU_MAX_CAP_FACTOR * s0
    start = config.tau_upper_hint
    if start is None:
        spread = float(np.std(y, ddof=1)) if len(y) > 1 else 0.0
        start = max(s0, spread)
    start = min(max(start, 1e-8), cap / 1024.0)

    n_steps = int(math.ceil(math.log2(cap / start))) + 1
    ladder = start * 2.0 ** np.arange(n_steps)
    ladder[-1] = cap
    log_h = _log_posterior(y, sigma_sq, prior, ladder, config.mu_prior_var)
    log_cut = math.log(config.tail_mass_cut)

    running_peak = np.maximum.accumulate(log_h)
    decayed = log_h <= running_peak + log_cut

    # local decay power between ladder points (tail ~ tau^-power)
    power = np.zeros(len(ladder))
    power[1:] = -(log_h[1:] - log_h[:-1]) / np.diff(np.log(ladder))

    hits = np.nonzero(decayed)[0]
    if len(hits) == 0:
        # proper posteriors with very heavy tails (n = 2 with a flat prior)
        # may not reach the full density cut inside the cap; accept the cap
        # as long as the tail is clearly decaying at an integrable rate
        if log_h[-1] <= running_peak[-1] + 0.5 * log_cut and power[-1] > 1.05:
            return float(cap)
        raise DivergedPosteriorError(prior.name)

    # crude running mass: ladder trapezoids plus a floor for mass below the
    # start; underestimating the total only makes the tail check stricter
    gaps = np.diff(ladder, append=2.0 * ladder[-1] - ladder[-2])
    log_mass = logsumexp(
        np.vstack(
            [
                np.maximum.accumulate(
                    np.logaddexp.accumulate(log_h + np.log(gaps))
                ),
                np.full(len(ladder), log_h[0] + math.log(ladder[0])),
            ]
        ),
        axis=0,
    )
    with np.errstate(divide="ignore", invalid="ignore"):
        log_tail = np.where(
            power > 1.05,
            log_h + np.log(ladder) - np.log(np.maximum(power - 1.0, 1e-12)),
            np.inf,
        )
    ok = decayed & (log_tail <= log_mass + log_cut)
    both = np.nonzero(ok)[0]
    if len(both) > 0:
        return float(ladder[both[0]])
    return float(cap)


def build_posterior_grid(
    dataset: MetaDataset, prior: BoundPrior, config: EngineConfig | None = None
) -> PosteriorGrid:
    """Quadrature representation of the posterior over tau for one prior.

    The grid spans (0, tau_max] with tau_max found by the geometric tail
    scan (for the proper-uniform family the support endpoint is used
    directly). Nodes never touch tau = 0, so integrable endpoint
    singularities are fine.

    Raises
    ------
    DivergedPosteriorError
        If the posterior tail has not decayed by tau = 1e6 * s0, which
        signals an improper posterior for this prior/dataset combination.
    """
    if config is None:
        config = EngineConfig()
    if dataset.n < 2:
        raise ValueError(f"posterior grid needs n >= 2, dataset has {dataset.n}")
    y = dataset.effects
    sigma_sq = dataset.variances
    c = math.sqrt(prior.s0_sq)

    if prior.family.kind == "proper-uniform":
        tau_max = float(prior.family.hi)
    else:
        tau_max = _scan_tau_max(y, sigma_sq, prior, config)

    w_max = math.sqrt(tau_max / (c + tau_max))
    x, gl_w = _gauss_nodes(config.grid_size)
    w = (x + 1.0) * (w_max / 2.0)
    base_w = gl_w * (w_max / 2.0)
    one_minus = 1.0 - w**2
    tau = c * w**2 / one_minus
    jac = 2.0 * c * w / one_minus**2
    quad_weights = base_w * jac

    loglik, cond_mean, cond_var = _loglik_terms(y, sigma_sq, tau, config.mu_prior_var)
    log_post = log_prior_density(prior, tau) + loglik
    log_norm = float(logsumexp(log_post + np.log(quad_weights)))
    if not math.isfinite(log_norm):
        raise DivergedPosteriorError(
            prior.name, f"posterior normalization for prior '{prior.name}' is not finite"
        )

    return PosteriorGrid(
        nodes=tau,
        quad_weights=quad_weights,
        log_post=log_post,
        cond_mean=cond_mean,
        cond_var=cond_var,
        log_norm=log_norm,
        prior_name=prior.name,
    )


def predictive_cdf(grid: PosteriorGrid, x: float) -> float:
    """CDF of the new-study effect under the discretized posterior mixture."""
    pi = grid.posterior_weights()
    sd = np.sqrt(grid.cond_var + grid.nodes**2)
    return float(np.sum(pi * ndtr((x - grid.cond_mean) / sd)))


def _invert_mixture_cdf(means, sds, weights, prob, tol_width):
    """Solve sum_k w_k Phi((x - m_k)/s_k) = prob by bracketed bisection."""
    # drop numerically irrelevant components; total dropped mass < 1e-13
    keep = weights > weights.max() * 1e-17
    m, s, w = means[keep], sds[keep], weights[keep]

    center = float(np.sum(w * m))
    half = 10.0 * float(np.max(s))

    def cdf(x):
        return float(np.sum(w * ndtr((x - m) / s)))

    lo, hi = center - half, center + half
    for _ in range(64):
        if cdf(lo) <= prob:
            break
        lo = center - 2.0 * (center - lo)
    else:
        raise NumericFailure(f"bracket expansion failed below for prob={prob}")
    for _ in range(64):
        if cdf(hi) >= prob:
            break
        hi = center + 2.0 * (hi - center)
    else:
        raise NumericFailure(f"bracket expansion failed above for prob={prob}")

    while hi - lo > tol_width:
        mid = 0.5 * (lo + hi)
        if cdf(mid) < prob:
            lo = mid
        else:
            hi = mid
    return 0.5 * (lo + hi)


def _mixture_interval(grid, level, sds, kind, cdf_tolerance):
    if not (0.0 < level < 1.0):
        raise ValueError(f"level must lie in (0, 1), got {level!r}")
    pi = grid.posterior_weights()
    m = grid.cond_mean
    mean = float(np.sum(pi * m))
    second = float(np.sum(pi * (sds**2 + m**2)))
    overall_sd = math.sqrt(max(second - mean**2, 1e-300))
    tol_width = cdf_tolerance * overall_sd
    alpha = 1.0 - level
    lower = _invert_mixture_cdf(m, sds, pi, alpha / 2.0, tol_width)
    upper = _invert_mixture_cdf(m, sds, pi, 1.0 - alpha / 2.0, tol_width)
    return IntervalEstimate(
        lower=lower, upper=upper, level=level, method=grid.prior_name, kind=kind
    )


def prediction_interval(
    grid: PosteriorGrid, level: float = 0.95, cdf_tolerance: float = 1e-8
) -> IntervalEstimate:
    """Equal-tail posterior interval for the effect in a new study."""
    sds = np.sqrt(grid.cond_var + grid.nodes**2)
    return _mixture_interval(grid, level, sds, "prediction", cdf_tolerance)


def credible_interval_mu(
    grid: PosteriorGrid, level: float = 0.95, cdf_tolerance: float = 1e-8
) -> IntervalEstimate:
    """Equal-tail credible interval for the grand mean."""
    sds = np.sqrt(grid.cond_var)
    return _mixture_interval(grid, level, sds, "credible", cdf_tolerance)


def posterior_tau_moments(grid: PosteriorGrid) -> tuple[float, float, float]:
    """(E[tau^2 | y], Var(mu | y), Var(theta_new | y)) at grid resolution.

    The mixture identity Var(theta_new) = Var(mu) + E[tau^2] holds exactly
    up to floating-point rounding.
    """
    pi = grid.posterior_weights()
    m = grid.cond_mean
    mean_mu = float(np.sum(pi * m))
    mean_tau2 = float(np.sum(pi * grid.nodes**2))
    var_mu = float(np.sum(pi * (grid.cond_var + m**2))) - mean_mu**2
    var_pred = (
        float(np.sum(pi * (grid.cond_var + grid.nodes**2 + m**2))) - mean_mu**2
    )
    return mean_tau2, var_mu, var_pred
