"""Autocorrelation, integrated autocorrelation time, and the zeta factor.

The integrated autocorrelation time (IAT) of a stationary series is the
Bartlett-weighted sum of its autocorrelations; applied to the transformed
series z_i = K_h(x - Y_i) it measures how much dependence inflates the
variance of the density estimate at x.  zeta integrates that kernel-level
IAT against the estimated density and multiplies the variance term of the
modified selector objectives.
"""

from dataclasses import dataclass, field

import numpy as np
from scipy.fft import irfft, next_fast_len, rfft

from .density import EvaluationGrid, as_sample
from .kernel import gauss_pdf


class DegenerateSeriesError(ValueError):
    """Series has (numerically) zero variance; correlations are undefined."""


@dataclass(frozen=True)
class AutocorrSpec:
    """Lag handling for IAT computation.

    max_lag: "adaptive" truncates by the initial-positive-sequence rule
    (standard MCMC practice, controls long-lag noise); "full" keeps the
    literal sum to n-1; an integer caps the lag directly.  Weights are
    always Bartlett (1 - |t|/n).  degenerate_policy is the IAT value
    substituted for a flat transformed series (1 = independence-neutral).
    """

    max_lag: int | str = "adaptive"
    degenerate_policy: float = 1.0


def _autocov_rows(z: np.ndarray, max_lag: int | None = None) -> np.ndarray:
    """Biased autocovariance (divide by n) of each row, via zero-padded FFT.

    Padding to n + max_lag keeps lags 0..max_lag free of circular
    wrap-around; lags beyond max_lag are not returned.
    """
    n = z.shape[-1]
    if max_lag is None:
        max_lag = n - 1
    size = next_fast_len(n + max_lag)
    centered = z - z.mean(axis=-1, keepdims=True)
    spec = rfft(centered, size, axis=-1, workers=-1)
    acov = irfft(spec * np.conj(spec), size, axis=-1, workers=-1)[..., : max_lag + 1]
    return acov / n

def sample_autocorr(series, max_lag: int) -> np.ndarray:
    """Sample autocorrelations rho(0..max_lag), biased estimator, via FFT."""
    y = np.asarray(series, dtype=float).ravel()
    n = y.size
    if n < 2:
        raise ValueError(f"series needs length >= 2, got {n}")
    if not 0 <= max_lag <= n - 1:
        raise ValueError(f"max_lag must be in [0, {n - 1}], got {max_lag}")
    acov = _autocov_rows(y, max_lag)
    if acov[0] <= 0.0 or not np.isfinite(acov[0]):
        raise DegenerateSeriesError("zero-variance series")
    return acov / acov[0]


# adaptive truncation rarely needs more than a few hundred lags; capping the
# scan bounds the FFT size for the per-grid-point kernel IAT sweeps
_ADAPTIVE_LAG_CAP = 2048


def _resolve_max_lag(spec: AutocorrSpec, n: int) -> int:
    """Largest lag whose autocorrelation the spec may consume."""
    if spec.max_lag == "full":
        return n - 1
    if isinstance(spec.max_lag, (int, np.integer)):
        return min(int(spec.max_lag), n - 1)
    if spec.max_lag != "adaptive":
        raise ValueError(f"unknown max_lag mode: {spec.max_lag!r}")
    return min(_ADAPTIVE_LAG_CAP, n - 1)


def _truncation_lag(rho: np.ndarray, spec: AutocorrSpec) -> int:
    """Resolve the summation lag L given rho(0..max_lag)."""
    cap = rho.size - 1
    if spec.max_lag != "adaptive":
        return cap
    # initial positive sequence: stop before the first adjacent pair
    # rho(2k+1) + rho(2k+2) that is non-positive
    n_pairs = cap // 2
    if n_pairs == 0:
        return cap
    pairs = rho[1 : 2 * n_pairs + 1].reshape(n_pairs, 2).sum(axis=1)
    bad = np.nonzero(pairs <= 0.0)[0]
    if bad.size == 0:
        return cap
    return int(2 * bad[0])


def _bartlett_iat(rho: np.ndarray, n: int, lag: int) -> float:
    """1 + 2 * sum_{t=1}^{lag} (1 - t/n) rho(t)."""
    if lag < 1:
        return 1.0
    t = np.arange(1, lag + 1, dtype=float)
    return float(1.0 + 2.0 * np.dot(1.0 - t / n, rho[1 : lag + 1]))


def iat(series, spec: AutocorrSpec = AutocorrSpec()) -> float:
    """Integrated autocorrelation time of a series.

    Degenerate (zero-variance) series return spec.degenerate_policy rather
    than raising, since flat transformed series are expected in the tails.
    """
    y = np.asarray(series, dtype=float).ravel()
    n = y.size
    try:
        rho = sample_autocorr(y, _resolve_max_lag(spec, n))
    except DegenerateSeriesError:
        return spec.degenerate_policy
    return _bartlett_iat(rho, n, _truncation_lag(rho, spec))


def kernel_iat(values, h, x, spec: AutocorrSpec = AutocorrSpec()) -> float:
    """IAT of the transformed series z_i = K_h(x - Y_i), in draw order."""
    taus, _ = kernel_iat_batch(values, h, np.asarray([x], dtype=float), spec)
    return float(taus[0])


def kernel_iat_batch(values, h, xs, spec: AutocorrSpec = AutocorrSpec()):
    """Kernel IAT at many evaluation points at once.

    Returns (taus, fhat): the IAT of the transformed series at each x and,
    as a byproduct, the KDE value there (the row mean of z / h-scaling is
    exactly (nh)^-1 sum K((x - Y_i)/h)).
    """
    y = as_sample(values)
    if h <= 0:
        raise ValueError(f"bandwidth must be positive, got {h}")
    xs = np.asarray(xs, dtype=float)
    n = y.size
    z = gauss_pdf((xs[:, None] - y[None, :]) / h) / h
    fhat = z.mean(axis=1)
    acov = _autocov_rows(z, _resolve_max_lag(spec, n))
    var0 = acov[:, 0]
    msq = (z * z).mean(axis=1)
    degenerate = (var0 <= 0) | (msq <= 0) | (var0 / np.where(msq > 0, msq, 1.0) < 1e-12)
    taus = np.full(xs.size, spec.degenerate_policy)
    for i in np.nonzero(~degenerate)[0]:
        rho = acov[i] / var0[i]
        taus[i] = _bartlett_iat(rho, n, _truncation_lag(rho, spec))
    return taus, fhat


@dataclass(frozen=True)
class ZetaEstimate:
    """Dependence factor zeta-hat with its evaluation trace."""

    value: float
    grid: EvaluationGrid
    per_point_iat: np.ndarray = field(repr=False)
    per_point_density: np.ndarray = field(repr=False)

    def __post_init__(self):
        object.__setattr__(self, "per_point_iat", np.asarray(self.per_point_iat, dtype=float))
        object.__setattr__(self, "per_point_density", np.asarray(self.per_point_density, dtype=float))


def zeta_hat(
    values,
    h,
    grid: EvaluationGrid,
    spec: AutocorrSpec = AutocorrSpec(),
    n_points: int = 256,
) -> ZetaEstimate:
    """zeta-hat = int tau_n(K_{h,x}) f_h(x) dx by trapezoid.

    The kernel IAT varies slowly in x, so it is evaluated on a coarse
    uniform subgrid of the density grid (default 256 points); each point
    costs an FFT over the whole series.
    """
    y = as_sample(values)
    pts = grid.points
    m = min(n_points, pts.size)
    xs = np.linspace(float(pts[0]), float(pts[-1]), m)
    taus, fhat = kernel_iat_batch(y, h, xs, spec)
    value = float(np.trapezoid(taus * fhat, xs))
    return ZetaEstimate(
        value=value, grid=EvaluationGrid(xs), per_point_iat=taus, per_point_density=fhat
    )
