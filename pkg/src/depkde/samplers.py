"""Study targets, iid sampling, and the tuned random-walk MH sampler.

The three targets are a N(3, 2^2), the mixture 0.7 N(0,1) + 0.3 N(4,1),
and a log-normal whose underlying normal has mean 1 and sd 0.3: symmetric,
multimodal, and skewed test cases.  MH chains start from an exact draw of
the target (no burn-in needed) and use Gaussian random-walk increments
whose scale is tuned to an acceptance-rate window.
"""

import math
from dataclasses import dataclass, field

import numpy as np
from scipy import stats

_LOG_2PI = math.log(2.0 * math.pi)


@dataclass(frozen=True)
class TargetDistribution:
    """Analytic pdf/cdf plus an exact iid sampler."""

    name: str
    pdf: callable = field(repr=False)
    cdf: callable = field(repr=False)
    logpdf: callable = field(repr=False)
    iid_draw: callable = field(repr=False)  # (n, rng) -> ndarray
    mean: float = 0.0
    sd: float = 1.0


def normal_target(mean: float = 3.0, sd: float = 2.0) -> TargetDistribution:
    dist = stats.norm(mean, sd)
    inv_2v = 0.5 / (sd * sd)
    log_norm = -0.5 * _LOG_2PI - math.log(sd)

    def logpdf(x):
        d = x - mean
        return log_norm - d * d * inv_2v

    return TargetDistribution(
        name=f"normal({mean},{sd}^2)",
        pdf=dist.pdf, cdf=dist.cdf, logpdf=logpdf,
        iid_draw=lambda n, rng: rng.normal(mean, sd, n),
        mean=mean, sd=sd,
    )


def mixture_target(weights=(0.7, 0.3), means=(0.0, 4.0), sds=(1.0, 1.0)) -> TargetDistribution:
    w = np.asarray(weights, dtype=float)
    if np.any(w <= 0) or abs(w.sum() - 1.0) > 1e-12:
        raise ValueError("mixture weights must be positive and sum to 1")
    mu = np.asarray(means, dtype=float)
    sd = np.asarray(sds, dtype=float)
    comps = [stats.norm(m, s) for m, s in zip(mu, sd)]
    log_w = np.log(w) - 0.5 * _LOG_2PI - np.log(sd)
    mean = float(np.dot(w, mu))
    var = float(np.dot(w, sd**2 + mu**2) - mean**2)

    def pdf(x):
        x = np.asarray(x, dtype=float)
        return sum(wi * c.pdf(x) for wi, c in zip(w, comps))

    def cdf(x):
        x = np.asarray(x, dtype=float)
        return sum(wi * c.cdf(x) for wi, c in zip(w, comps))

    def logpdf(x):
        d = (x - mu) / sd
        return float(np.logaddexp.reduce(log_w - 0.5 * d * d))

    def iid_draw(n, rng):
        idx = rng.choice(w.size, size=n, p=w)
        return rng.normal(mu[idx], sd[idx])

    return TargetDistribution(
        name="mixture", pdf=pdf, cdf=cdf, logpdf=logpdf, iid_draw=iid_draw,
        mean=mean, sd=math.sqrt(var),
    )


def lognormal_target(mu: float = 1.0, sigma: float = 0.3) -> TargetDistribution:
    dist = stats.lognorm(s=sigma, scale=math.exp(mu))
    log_norm = -0.5 * _LOG_2PI - math.log(sigma)
    inv_2v = 0.5 / (sigma * sigma)
    mean = math.exp(mu + 0.5 * sigma**2)
    var = (math.exp(sigma**2) - 1.0) * math.exp(2 * mu + sigma**2)

    def logpdf(x):
        if x <= 0.0:
            return -math.inf
        lx = math.log(x)
        d = lx - mu
        return log_norm - lx - d * d * inv_2v

    return TargetDistribution(
        name=f"lognormal({mu},{sigma}^2)",
        pdf=dist.pdf, cdf=dist.cdf, logpdf=logpdf,
        iid_draw=lambda n, rng: rng.lognormal(mu, sigma, n),
        mean=mean, sd=math.sqrt(var),
    )


TARGETS = {
    "normal": normal_target,
    "mixture": mixture_target,
    "lognormal": lognormal_target,
}


def iid_sample(target: TargetDistribution, n: int, seed) -> np.ndarray:
    """Exact iid draws, deterministic given the seed."""
    if n < 2:
        raise ValueError(f"need n >= 2, got {n}")
    rng = np.random.default_rng(seed)
    return target.iid_draw(n, rng)


@dataclass(frozen=True)
class MHConfig:
    """Random-walk Metropolis-Hastings run configuration."""

    proposal_sd: float
    n_draws: int
    burn_in: int = 0
    seed: int | tuple = 0
    target_acceptance: tuple = (0.20, 0.25)

    def __post_init__(self):
        if self.proposal_sd <= 0:
            raise ValueError(f"proposal_sd must be positive, got {self.proposal_sd}")
        if self.n_draws < 2:
            raise ValueError(f"n_draws must be >= 2, got {self.n_draws}")
        if self.burn_in < 0:
            raise ValueError("burn_in must be nonnegative")


@dataclass(frozen=True)
class MHResult:
    """Chain output with its realized acceptance rate."""

    values: np.ndarray = field(repr=False)
    acceptance_rate: float
    proposal_sd: float


def mh_sample(target: TargetDistribution, cfg: MHConfig) -> MHResult:
    """Random-walk MH chain started from an exact draw of the target."""
    rng = np.random.default_rng(cfg.seed)
    total = cfg.burn_in + cfg.n_draws
    increments = rng.normal(0.0, cfg.proposal_sd, total)
    log_u = np.log(rng.random(total))
    x = float(target.iid_draw(1, rng)[0])
    lp = target.logpdf(x)
    out = np.empty(total)
    accepted = 0
    logpdf = target.logpdf
    for i in range(total):
        x_new = x + increments[i]
        lp_new = logpdf(x_new)
        if lp_new - lp > log_u[i]:
            x, lp = x_new, lp_new
            accepted += 1
        out[i] = x
    return MHResult(
        values=out[cfg.burn_in :],
        acceptance_rate=accepted / total,
        proposal_sd=cfg.proposal_sd,
    )


def tune_proposal(target: TargetDistribution, cfg: MHConfig,
                  pilot_draws: int = 10_000, max_steps: int = 40) -> float:
    """Proposal sd whose pilot-chain acceptance falls in the target window.

    Acceptance is monotone decreasing in the proposal scale for these
    targets, so bisection on log sd converges; cfg.proposal_sd seeds the
    initial guess.
    """
    lo_acc, hi_acc = cfg.target_acceptance

    def acceptance(sd: float, step: int) -> float:
        pilot = MHConfig(
            proposal_sd=sd, n_draws=pilot_draws, burn_in=0,
            seed=(_seed_tuple(cfg.seed) + (1_000 + step,)),
            target_acceptance=cfg.target_acceptance,
        )
        return mh_sample(target, pilot).acceptance_rate

    sd = cfg.proposal_sd
    acc = acceptance(sd, 0)
    if lo_acc <= acc <= hi_acc:
        return sd
    # expand to a bracket: small sd -> high acceptance, large sd -> low
    lo_sd, hi_sd = sd, sd
    step = 1
    while acceptance(lo_sd, step) < hi_acc:
        lo_sd /= 2.0
        step += 1
        if step > max_steps:
            raise RuntimeError("proposal tuning failed to bracket (low side)")
    while acceptance(hi_sd, step) > lo_acc:
        hi_sd *= 2.0
        step += 1
        if step > max_steps:
            raise RuntimeError("proposal tuning failed to bracket (high side)")
    for _ in range(max_steps - step):
        mid = math.sqrt(lo_sd * hi_sd)
        acc = acceptance(mid, step)
        step += 1
        if acc > hi_acc:
            lo_sd = mid
        elif acc < lo_acc:
            hi_sd = mid
        else:
            return mid
    raise RuntimeError(
        f"proposal tuning did not reach acceptance in [{lo_acc}, {hi_acc}] "
        f"after {max_steps} steps (bracket [{lo_sd:.4g}, {hi_sd:.4g}])"
    )


def _seed_tuple(seed) -> tuple:
    if isinstance(seed, (int, np.integer)):
        return (int(seed),)
    return tuple(int(s) for s in seed)


def thin(values, k: int) -> np.ndarray:
    """Every k-th draw (indices k, 2k, ... in 1-based order)."""
    y = np.asarray(values, dtype=float)
    if k < 1:
        raise ValueError(f"thinning factor must be >= 1, got {k}")
    out = y[k - 1 :: k]
    if out.size < 2:
        raise ValueError(f"thinning by {k} leaves fewer than 2 draws")
    return out
