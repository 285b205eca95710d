"""Univariate Gaussian mixture model: likelihood, priors and Gibbs blocks.

The parameter state is theta = (weights, means, variances), optionally
extended by a shared inverse-gamma scale `beta` under the hierarchical
prior, in which case all joint densities (prior, posterior blocks) include
the beta level so that evidence values remain well-defined integrals over
the full state.

The central object for every estimator is the normalized "one Gibbs sweep"
block density pi(theta | theta', z', x): weights given allocation counts,
then per component the variance given the stored mean, the mean given the
fresh variance, and finally beta given the fresh variances.  It is exactly
samplable and exactly evaluable, which is what the importance schemes and
the candidate-point evidence identity require.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field

import numpy as np
from scipy.special import gammaln

from .numerics import (
    LOG_2PI,
    Categorical,
    Dirichlet,
    Gamma,
    InverseGamma,
    Normal,
    as_generator,
    dirichlet_logpdf,
    gamma_logpdf,
    inverse_gamma_logpdf,
    log_sum_exp,
    normal_logpdf,
    Permutation,
)

__all__ = [
    "Dataset",
    "MixtureParams",
    "Allocation",
    "FixedPrior",
    "HierarchicalPrior",
    "PriorSpec",
    "SufficientStats",
    "FullConditionals",
    "log_likelihood",
    "log_prior",
    "allocation_conditional",
    "allocation_log_probs",
    "full_conditionals",
    "log_block_density",
    "sample_block",
    "ParamsBatch",
    "ConditioningSet",
    "log_likelihood_batch",
    "log_prior_batch",
]


@dataclass(frozen=True)
class Dataset:
    """Observed sample x_1..x_n with a label for reporting."""

    observations: np.ndarray
    name: str = ""

    def __post_init__(self):
        obs = np.asarray(self.observations, dtype=float)
        if obs.ndim != 1 or obs.size < 1:
            raise ValueError("observations must be a non-empty 1-D array")
        if not np.all(np.isfinite(obs)):
            raise ValueError("observations must all be finite")
        obs = obs.copy()
        obs.flags.writeable = False
        object.__setattr__(self, "observations", obs)

    @property
    def n(self) -> int:
        return self.observations.size


def _frozen_array(values, dtype=float) -> np.ndarray:
    arr = np.array(values, dtype=dtype)
    arr.flags.writeable = False
    return arr


@dataclass(frozen=True)
class MixtureParams:
    """Full parameter state of a k-component Gaussian mixture.

    `beta` is the shared variance-prior scale and is only set when the
    model carries the hierarchical prior; it rides along with the state so
    that per-draw values can differ along a chain.
    """

    weights: np.ndarray
    means: np.ndarray
    variances: np.ndarray
    beta: float | None = None

    def __post_init__(self):
        w = _frozen_array(self.weights)
        m = _frozen_array(self.means)
        v = _frozen_array(self.variances)
        if not (w.shape == m.shape == v.shape) or w.ndim != 1 or w.size < 1:
            raise ValueError("weights/means/variances must be 1-D and same length")
        if np.any(w < 0) or abs(float(w.sum()) - 1.0) > 1e-12:
            raise ValueError("weights must be >= 0 and sum to 1 within 1e-12")
        if np.any(v <= 0):
            raise ValueError("variances must be > 0")
        if self.beta is not None and not self.beta > 0:
            raise ValueError("beta must be > 0 when present")
        object.__setattr__(self, "weights", w)
        object.__setattr__(self, "means", m)
        object.__setattr__(self, "variances", v)

    @property
    def k(self) -> int:
        return self.weights.size

    def permuted(self, sigma: Permutation) -> "MixtureParams":
        return MixtureParams(
            weights=sigma.apply_to_components(self.weights),
            means=sigma.apply_to_components(self.means),
            variances=sigma.apply_to_components(self.variances),
            beta=self.beta,
        )


@dataclass(frozen=True)
class Allocation:
    """Latent component label per observation."""

    labels: np.ndarray

    def __post_init__(self):
        z = np.asarray(self.labels)
        if z.ndim != 1 or z.size < 1:
            raise ValueError("labels must be a non-empty 1-D integer array")
        if np.any(z < 0):
            raise ValueError("labels must be non-negative")
        z = z.astype(np.intp)
        z.flags.writeable = False
        object.__setattr__(self, "labels", z)

    @property
    def n(self) -> int:
        return self.labels.size

    def counts(self, k: int) -> np.ndarray:
        if np.any(self.labels >= k):
            raise ValueError("allocation label out of range for k")
        return np.bincount(self.labels, minlength=k)

    def permuted(self, sigma: Permutation) -> "Allocation":
        return Allocation(sigma.apply_to_labels(self.labels))


@dataclass(frozen=True)
class FixedPrior:
    """Independent conjugate-style prior with fixed hyperparameters.

    means ~ N(mean_loc, mean_var), variances ~ IG(var_shape, var_scale),
    weights ~ Dirichlet(1, ..., 1).
    """

    mean_loc: float = 0.0
    mean_var: float = 100.0
    var_shape: float = 2.0
    var_scale: float = 3.0

    hierarchical = False

    def __post_init__(self):
        if not (self.mean_var > 0 and self.var_shape > 0 and self.var_scale > 0):
            raise ValueError("prior hyperparameters must be strictly positive")


@dataclass(frozen=True)
class HierarchicalPrior:
    """Data-located prior with a shared random inverse-gamma scale.

    means ~ N(center, spread^2/4), variances ~ IG(var_shape, beta) with
    beta ~ Gamma(beta_shape, beta_rate); weights ~ Dirichlet(1, ..., 1).
    The conventional calibration sets center to the sample median, spread
    to the sample range, beta_shape = 0.2 and beta_rate = 10/spread^2.
    """

    center: float
    spread: float
    var_shape: float = 2.0
    beta_shape: float = 0.2

    hierarchical = True

    def __post_init__(self):
        if not (self.spread > 0 and self.var_shape > 0 and self.beta_shape > 0):
            raise ValueError("prior hyperparameters must be strictly positive")

    @property
    def mean_loc(self) -> float:
        return self.center

    @property
    def mean_var(self) -> float:
        return self.spread**2 / 4.0

    @property
    def beta_rate(self) -> float:
        return 10.0 / self.spread**2

    @classmethod
    def from_data(cls, data: Dataset, var_shape: float = 2.0, beta_shape: float = 0.2):
        x = data.observations
        spread = float(np.max(x) - np.min(x))
        return cls(center=float(np.median(x)), spread=spread,
                   var_shape=var_shape, beta_shape=beta_shape)

    def beta_prior(self) -> Gamma:
        return Gamma(self.beta_shape, self.beta_rate)


PriorSpec = FixedPrior | HierarchicalPrior


@dataclass(frozen=True)
class SufficientStats:
    """Per-component counts and power sums of the allocated observations."""

    counts: np.ndarray
    sums: np.ndarray
    sums_sq: np.ndarray

    @classmethod
    def from_allocation(cls, data: Dataset, alloc: Allocation, k: int) -> "SufficientStats":
        z = alloc.labels
        x = data.observations
        if z.size != x.size:
            raise ValueError("allocation length does not match dataset")
        counts = np.bincount(z, minlength=k).astype(float)
        sums = np.bincount(z, weights=x, minlength=k)
        sums_sq = np.bincount(z, weights=x * x, minlength=k)
        return cls(_frozen_array(counts), _frozen_array(sums), _frozen_array(sums_sq))

    def centered_sq(self, centers: np.ndarray) -> np.ndarray:
        """Sum of (x - c_i)^2 within each component, from power sums."""
        c = np.asarray(centers, dtype=float)
        return self.sums_sq - 2.0 * c * self.sums + self.counts * c * c


# ---------------------------------------------------------------------------
# Densities
# ---------------------------------------------------------------------------

def log_likelihood(data: Dataset, params: MixtureParams) -> float:
    """log p(x | theta) = sum_j log sum_i w_i N(x_j; mu_i, var_i)."""
    x = data.observations[:, None]
    with np.errstate(divide="ignore"):
        comp = np.log(params.weights)[None, :] + normal_logpdf(
            x, params.means[None, :], params.variances[None, :]
        )
    return float(np.sum(log_sum_exp(comp, axis=1)))


def log_prior(params: MixtureParams, prior: PriorSpec) -> float:
    """Joint log-prior of the state (including the beta level if present)."""
    k = params.k
    total = float(dirichlet_logpdf(params.weights, np.ones(k)))
    total += float(np.sum(normal_logpdf(params.means, prior.mean_loc, prior.mean_var)))
    if prior.hierarchical:
        if params.beta is None:
            raise ValueError("hierarchical prior requires params.beta")
        total += float(
            np.sum(inverse_gamma_logpdf(params.variances, prior.var_shape, params.beta))
        )
        total += float(gamma_logpdf(params.beta, prior.beta_shape, prior.beta_rate))
    else:
        total += float(
            np.sum(inverse_gamma_logpdf(params.variances, prior.var_shape, prior.var_scale))
        )
    return total


def allocation_log_probs(data: Dataset, params: MixtureParams):
    """Normalized per-observation log allocation probabilities, (n, k).

    Rows whose unnormalized log-probabilities are all -inf fall back to a
    one-hot at the closest component mean; the number of such rows is
    returned as a diagnostic.
    """
    x = data.observations[:, None]
    with np.errstate(divide="ignore"):
        logits = np.log(params.weights)[None, :] + normal_logpdf(
            x, params.means[None, :], params.variances[None, :]
        )
    row_max = np.max(logits, axis=1)
    bad = ~np.isfinite(row_max)
    n_fallback = int(np.count_nonzero(bad))
    if n_fallback:
        nearest = np.argmin(np.abs(x - params.means[None, :]), axis=1)
        logits[bad] = -np.inf
        logits[bad, nearest[bad]] = 0.0
        row_max = np.max(logits, axis=1)
    norm = log_sum_exp(logits, axis=1)
    return logits - norm[:, None], n_fallback


def allocation_conditional(data: Dataset, params: MixtureParams) -> list[Categorical]:
    """The conditional allocation distribution of each observation."""
    log_probs, _ = allocation_log_probs(data, params)
    probs = np.exp(log_probs)
    probs /= probs.sum(axis=1, keepdims=True)
    return [Categorical(tuple(row)) for row in probs]


@dataclass(frozen=True)
class FullConditionals:
    """The Gibbs block distributions at the current state."""

    weights: Dirichlet
    means: list[Normal]
    variances: list[InverseGamma]
    beta: Gamma | None = None


def _variance_conditionals(stats: SufficientStats, means: np.ndarray,
                           prior: PriorSpec, beta: float | None):
    """Shapes and scales of the per-component variance conditionals."""
    shape = prior.var_shape + 0.5 * stats.counts
    base = beta if prior.hierarchical else prior.var_scale
    scale = base + 0.5 * stats.centered_sq(means)
    return shape, scale


def _mean_conditional_moments(stats: SufficientStats, variances: np.ndarray,
                              prior: PriorSpec):
    prec = 1.0 / prior.mean_var + stats.counts / variances
    mean = (prior.mean_loc / prior.mean_var + stats.sums / variances) / prec
    return mean, 1.0 / prec


def full_conditionals(data: Dataset, alloc: Allocation, params: MixtureParams,
                      prior: PriorSpec) -> FullConditionals:
    """Block conditionals given the current state; empty blocks reduce to the prior."""
    k = params.k
    stats = SufficientStats.from_allocation(data, alloc, k)
    if prior.hierarchical and params.beta is None:
        raise ValueError("hierarchical prior requires params.beta")
    v_shape, v_scale = _variance_conditionals(stats, params.means, prior, params.beta)
    m_mean, m_var = _mean_conditional_moments(stats, params.variances, prior)
    beta_cond = None
    if prior.hierarchical:
        beta_cond = Gamma(
            prior.beta_shape + prior.var_shape * k,
            prior.beta_rate + float(np.sum(1.0 / params.variances)),
        )
    return FullConditionals(
        weights=Dirichlet(tuple(1.0 + stats.counts)),
        means=[Normal(float(m), float(v)) for m, v in zip(m_mean, m_var)],
        variances=[InverseGamma(float(s), float(c)) for s, c in zip(v_shape, v_scale)],
        beta=beta_cond,
    )


def log_block_density(params_at: MixtureParams, given: tuple[MixtureParams, Allocation],
                      data: Dataset, prior: PriorSpec) -> float:
    """Normalized one-sweep joint block density at `params_at` given a stored draw.

    Factorization: p(weights | z') * prod_i [ p(var_i | mean'_i, z', x)
    * p(mean_i | var_i, z', x) ] * p(beta | var, x) when hierarchical.
    The variance factor conditions on the stored mean (and stored beta);
    the mean factor conditions on the evaluation point's fresh variance.
    """
    given_params, given_alloc = given
    k = params_at.k
    if given_params.k != k:
        raise ValueError("conditioning draw has mismatched number of components")
    stats = SufficientStats.from_allocation(data, given_alloc, k)

    total = float(dirichlet_logpdf(params_at.weights, 1.0 + stats.counts))

    v_shape, v_scale = _variance_conditionals(
        stats, given_params.means, prior, given_params.beta
    )
    total += float(np.sum(inverse_gamma_logpdf(params_at.variances, v_shape, v_scale)))

    m_mean, m_var = _mean_conditional_moments(stats, params_at.variances, prior)
    total += float(np.sum(normal_logpdf(params_at.means, m_mean, m_var)))

    if prior.hierarchical:
        if params_at.beta is None or given_params.beta is None:
            raise ValueError("hierarchical prior requires beta on both states")
        total += float(
            gamma_logpdf(
                params_at.beta,
                prior.beta_shape + prior.var_shape * k,
                prior.beta_rate + float(np.sum(1.0 / params_at.variances)),
            )
        )
    return total


def sample_block(given: tuple[MixtureParams, Allocation], data: Dataset,
                 prior: PriorSpec, rng) -> MixtureParams:
    """One exact draw from the block density evaluated by log_block_density."""
    gen = as_generator(rng)
    given_params, given_alloc = given
    k = given_params.k
    stats = SufficientStats.from_allocation(data, given_alloc, k)

    weights = gen.dirichlet(1.0 + stats.counts)
    v_shape, v_scale = _variance_conditionals(
        stats, given_params.means, prior, given_params.beta
    )
    variances = v_scale / gen.gamma(v_shape)
    m_mean, m_var = _mean_conditional_moments(stats, variances, prior)
    means = gen.normal(m_mean, np.sqrt(m_var))
    beta = None
    if prior.hierarchical:
        beta = float(
            gen.gamma(
                prior.beta_shape + prior.var_shape * k,
                1.0 / (prior.beta_rate + float(np.sum(1.0 / variances))),
            )
        )
    return MixtureParams(weights, means, variances, beta)


# ---------------------------------------------------------------------------
# Vectorized machinery: parameter batches and precomputed conditioning sets.
# ---------------------------------------------------------------------------

@dataclass
class ParamsBatch:
    """A batch of B parameter states as (B, k) arrays."""

    weights: np.ndarray
    means: np.ndarray
    variances: np.ndarray
    betas: np.ndarray | None = None

    def __post_init__(self):
        self.weights = np.atleast_2d(np.asarray(self.weights, float))
        self.means = np.atleast_2d(np.asarray(self.means, float))
        self.variances = np.atleast_2d(np.asarray(self.variances, float))
        if self.betas is not None:
            self.betas = np.atleast_1d(np.asarray(self.betas, float))

    @property
    def size(self) -> int:
        return self.weights.shape[0]

    @property
    def k(self) -> int:
        return self.weights.shape[1]

    @classmethod
    def from_params(cls, params_seq) -> "ParamsBatch":
        params_seq = list(params_seq)
        betas = None
        if params_seq[0].beta is not None:
            betas = np.array([p.beta for p in params_seq])
        return cls(
            weights=np.stack([p.weights for p in params_seq]),
            means=np.stack([p.means for p in params_seq]),
            variances=np.stack([p.variances for p in params_seq]),
            betas=betas,
        )

    def row(self, t: int) -> MixtureParams:
        return MixtureParams(
            self.weights[t].copy(),
            self.means[t].copy(),
            self.variances[t].copy(),
            None if self.betas is None else float(self.betas[t]),
        )

    def permuted(self, mapping) -> "ParamsBatch":
        idx = np.asarray(mapping, dtype=np.intp)
        return ParamsBatch(
            self.weights[:, idx], self.means[:, idx], self.variances[:, idx], self.betas
        )


def log_likelihood_batch(data: Dataset, batch: ParamsBatch, chunk: int = 512) -> np.ndarray:
    """Vectorized log p(x | theta) over a batch, chunked to bound memory."""
    x = data.observations
    out = np.empty(batch.size)
    with np.errstate(divide="ignore"):
        logw = np.log(batch.weights)
    for lo in range(0, batch.size, chunk):
        hi = min(lo + chunk, batch.size)
        comp = logw[lo:hi, :, None] + normal_logpdf(
            x[None, None, :],
            batch.means[lo:hi, :, None],
            batch.variances[lo:hi, :, None],
        )
        out[lo:hi] = np.sum(log_sum_exp(comp, axis=1), axis=1)
    return out


def log_prior_batch(batch: ParamsBatch, prior: PriorSpec) -> np.ndarray:
    """Vectorized joint log-prior over a batch of states."""
    k = batch.k
    out = dirichlet_logpdf(batch.weights, np.ones(k))
    out = out + np.sum(normal_logpdf(batch.means, prior.mean_loc, prior.mean_var), axis=1)
    if prior.hierarchical:
        if batch.betas is None:
            raise ValueError("hierarchical prior requires batch.betas")
        out = out + np.sum(
            inverse_gamma_logpdf(batch.variances, prior.var_shape, batch.betas[:, None]),
            axis=1,
        )
        out = out + gamma_logpdf(batch.betas, prior.beta_shape, prior.beta_rate)
    else:
        out = out + np.sum(
            inverse_gamma_logpdf(batch.variances, prior.var_shape, prior.var_scale),
            axis=1,
        )
    return out


@dataclass
class ConditioningSet:
    """Precomputed block-conditional statistics for J stored draws.

    Evaluating the pooled conditional density of a batch of states against
    all J draws and a set of label permutations reduces to gathers and
    matrix contractions over these arrays; `evaluations` counts individual
    block-density evaluations (one per point, draw and permutation).
    """

    prior: PriorSpec
    counts: np.ndarray      # (J, k)
    sums: np.ndarray        # (J, k)
    ig_shape: np.ndarray    # (J, k)
    ig_scale: np.ndarray    # (J, k)
    dir_const: np.ndarray   # (J,)
    evaluations: int = field(default=0, repr=False)

    @property
    def J(self) -> int:
        return self.counts.shape[0]

    @property
    def k(self) -> int:
        return self.counts.shape[1]

    @classmethod
    def from_draws(cls, data: Dataset, prior: PriorSpec, means: np.ndarray,
                   allocs: np.ndarray, betas: np.ndarray | None = None) -> "ConditioningSet":
        """Build from stored means (J, k), allocations (J, n) and optional betas (J,)."""
        means = np.atleast_2d(np.asarray(means, float))
        allocs = np.atleast_2d(np.asarray(allocs))
        J, k = means.shape
        x = data.observations
        counts = np.empty((J, k))
        sums = np.empty((J, k))
        sums_sq = np.empty((J, k))
        for j in range(J):
            z = allocs[j]
            counts[j] = np.bincount(z, minlength=k)
            sums[j] = np.bincount(z, weights=x, minlength=k)
            sums_sq[j] = np.bincount(z, weights=x * x, minlength=k)
        centered = sums_sq - 2.0 * means * sums + counts * means * means
        if prior.hierarchical:
            if betas is None:
                raise ValueError("hierarchical prior requires stored betas")
            base = np.asarray(betas, float)[:, None]
        else:
            base = prior.var_scale
        ig_shape = prior.var_shape + 0.5 * counts
        ig_scale = base + 0.5 * centered
        dir_const = gammaln(k + counts.sum(axis=1)) - gammaln(1.0 + counts).sum(axis=1)
        return cls(prior=prior, counts=counts, sums=sums,
                   ig_shape=ig_shape, ig_scale=ig_scale, dir_const=dir_const)

    @classmethod
    def from_pairs(cls, data: Dataset, prior: PriorSpec, pairs) -> "ConditioningSet":
        """Build from an iterable of (MixtureParams, Allocation) pairs."""
        pairs = list(pairs)
        means = np.stack([p.means for p, _ in pairs])
        allocs = np.stack([a.labels for _, a in pairs])
        betas = None
        if prior.hierarchical:
            betas = np.array([p.beta for p, _ in pairs], dtype=float)
        return cls.from_draws(data, prior, means, allocs, betas)

    def _eval_pieces(self, batch: ParamsBatch):
        """Batch-side quantities shared by every permutation column."""
        prior = self.prior
        with np.errstate(divide="ignore"):
            logw = np.log(batch.weights)
        # a zero weight with a zero count must contribute 0, not -inf * 0
        logw = np.where(np.isneginf(logw), -1e300, logw)
        logv = np.log(batch.variances)
        inv_v = 1.0 / batch.variances
        ig_const = self.dir_const + np.sum(
            self.ig_shape * np.log(self.ig_scale) - gammaln(self.ig_shape), axis=1
        )                                         # (J,) permutation-invariant sums
        if prior.hierarchical:
            if batch.betas is None:
                raise ValueError("hierarchical prior requires batch.betas")
            k = self.k
            g_shape = prior.beta_shape + prior.var_shape * k
            g_rate = prior.beta_rate + inv_v.sum(axis=1)
            beta_term = (
                g_shape * np.log(g_rate)
                - gammaln(g_shape)
                + (g_shape - 1.0) * np.log(batch.betas)
                - g_rate * batch.betas
            )
        else:
            beta_term = np.zeros(batch.size)
        return logw, logv, inv_v, ig_const, beta_term

    def _terms_one_perm(self, batch, idx, pieces, lo, hi):
        """(hi-lo, J) log pi(theta_b | sigma(draw_j), x) without the beta factor."""
        logw, logv, inv_v, ig_const, _ = pieces
        p0 = 1.0 / self.prior.mean_var
        pm0 = self.prior.mean_loc * p0
        n_p = self.counts[:, idx]                 # (J, k)
        s_p = self.sums[:, idx]
        a_p = self.ig_shape[:, idx]
        sc_p = self.ig_scale[:, idx]
        with np.errstate(over="ignore", invalid="ignore"):
            dir_part = logw[lo:hi] @ n_p.T        # (b, J)
            ig_part = -(logv[lo:hi] @ (a_p + 1.0).T) - (inv_v[lo:hi] @ sc_p.T)
            var = batch.variances[lo:hi, None, :]
            prec = p0 + n_p[None, :, :] / var
            # stable at extreme variances: (pm0 v + s) / (p0 v + n)
            mean = (pm0 * var + s_p[None, :, :]) / (p0 * var + n_p[None, :, :])
            norm_part = 0.5 * np.sum(
                np.log(prec) - LOG_2PI
                - prec * (batch.means[lo:hi, None, :] - mean) ** 2,
                axis=2,
            )
            total = ig_const[None, :] + dir_part + ig_part + norm_part
        # an overflowing precision with an exactly-matching mean yields
        # inf - inf; the correct limit of the log-density there is -inf
        return np.where(np.isnan(total), -np.inf, total)

    def log_pooled_density(self, batch: ParamsBatch, perms: np.ndarray,
                           chunk: int = 256) -> np.ndarray:
        """(B, P) array of log[(1/J) sum_j pi(theta_b | sigma_p(draw_j), x)].

        `perms` is a (P, k) integer array of label permutations applied to
        the conditioning draws.
        """
        perms = np.atleast_2d(np.asarray(perms, dtype=np.intp))
        B, P, J = batch.size, perms.shape[0], self.J
        pieces = self._eval_pieces(batch)
        beta_term = pieces[-1]
        out = np.empty((B, P))
        for p in range(P):
            for lo in range(0, B, chunk):
                hi = min(lo + chunk, B)
                total = self._terms_one_perm(batch, perms[p], pieces, lo, hi)
                out[lo:hi, p] = log_sum_exp(total, axis=1) - math.log(J)
        self.evaluations += B * P * J
        return out + beta_term[:, None]

    def log_density_terms(self, batch: ParamsBatch, perms: np.ndarray,
                          chunk: int = 256) -> np.ndarray:
        """(B, P, J) un-pooled log block densities (memory: B*P*J floats)."""
        perms = np.atleast_2d(np.asarray(perms, dtype=np.intp))
        B, P, J = batch.size, perms.shape[0], self.J
        pieces = self._eval_pieces(batch)
        beta_term = pieces[-1]
        out = np.empty((B, P, J))
        for p in range(P):
            for lo in range(0, B, chunk):
                hi = min(lo + chunk, B)
                out[lo:hi, p, :] = self._terms_one_perm(batch, perms[p], pieces, lo, hi)
        self.evaluations += B * P * J
        return out + beta_term[:, None, None]

    def sample(self, draw_indices: np.ndarray, rng) -> ParamsBatch:
        """One block draw per entry of `draw_indices` (values in 0..J-1).

        Draws are generated grouped by conditioning draw for speed and
        scattered back so the batch order matches `draw_indices`.
        """
        gen = as_generator(rng)
        draw_indices = np.asarray(draw_indices, dtype=np.intp)
        B, k = draw_indices.size, self.k
        prior = self.prior
        weights = np.empty((B, k))
        means = np.empty((B, k))
        variances = np.empty((B, k))
        betas = np.empty(B) if prior.hierarchical else None
        p0 = 1.0 / prior.mean_var
        pm0 = prior.mean_loc * p0
        for j in np.unique(draw_indices):
            rows = np.nonzero(draw_indices == j)[0]
            m = rows.size
            weights[rows] = gen.dirichlet(1.0 + self.counts[j], m)
            v = self.ig_scale[j] / gen.gamma(self.ig_shape[j], 1.0, (m, k))
            variances[rows] = v
            prec = p0 + self.counts[j] / v
            mean = (pm0 + self.sums[j] / v) / prec
            means[rows] = gen.normal(mean, np.sqrt(1.0 / prec))
            if betas is not None:
                rate = prior.beta_rate + (1.0 / v).sum(axis=1)
                betas[rows] = gen.gamma(
                    prior.beta_shape + prior.var_shape * k, 1.0 / rate
                )
        return ParamsBatch(weights, means, variances, betas)
