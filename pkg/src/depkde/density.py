"""KDE evaluation, curvature roughness, and integrated squared error.

Holds the evaluation-grid plumbing shared by the selectors and the
simulation harness.  Quadrature is trapezoidal throughout; Simpson's rule
only appears in the test suite as an independent oracle.
"""

import math
from dataclasses import dataclass

import numpy as np
from scipy.fft import irfft, rfft

from .kernel import conv_gauss_deriv4, gauss_pdf


class DegenerateSampleError(ValueError):
    """Sample violates the n >= 2 / finite / nonzero-spread contract."""


class CoverageError(ValueError):
    """Evaluation grid misses non-negligible tail mass of the truth."""


def as_sample(values) -> np.ndarray:
    """Validate and return a sample as a float array, preserving draw order."""
    y = np.asarray(values, dtype=float).ravel()
    if y.size < 2:
        raise DegenerateSampleError(f"need at least 2 draws, got {y.size}")
    if not np.all(np.isfinite(y)):
        raise DegenerateSampleError("sample contains non-finite values")
    if np.std(y) == 0.0:
        raise DegenerateSampleError("sample has zero spread")
    return y


def sample_scale(values) -> float:
    """Robust scale min(sd, IQR/1.349) used for grids and bracket anchors."""
    y = np.asarray(values, dtype=float)
    sd = float(np.std(y))
    q75, q25 = np.percentile(y, [75, 25])
    iqr = float(q75 - q25)
    if iqr > 0:
        return min(sd, iqr / 1.349)
    return sd


@dataclass(frozen=True)
class EvaluationGrid:
    """Uniformly spaced, strictly increasing evaluation points."""

    points: np.ndarray

    def __post_init__(self):
        pts = np.asarray(self.points, dtype=float)
        object.__setattr__(self, "points", pts)
        if pts.size < 1:
            raise ValueError("grid needs at least one point")
        if pts.size > 1:
            steps = np.diff(pts)
            if np.any(steps <= 0):
                raise ValueError("grid points must be strictly increasing")
            # linspace jitter scales with the endpoint magnitude, not the step
            tol = max(1e-12 * float(np.max(steps)),
                      8.0 * np.finfo(float).eps * float(np.max(np.abs(pts))))
            if np.max(steps) - np.min(steps) > tol:
                raise ValueError("grid spacing must be uniform")

    @property
    def spacing(self) -> float:
        if self.points.size < 2:
            return 0.0
        return float(self.points[1] - self.points[0])

    def __len__(self) -> int:
        return self.points.size


def build_grid(values, h, n_points: int = 2048) -> EvaluationGrid:
    """Grid spanning the data plus kernel-tail and density-tail padding.

    Padding is max(8h, 5 * scale * n^(-1/5)) on each side so that both the
    estimate and a comparably scaled truth have tail mass < ~1e-6 outside.
    """
    y = as_sample(values)
    if h <= 0:
        raise ValueError(f"bandwidth must be positive, got {h}")
    pad = max(8.0 * h, 5.0 * sample_scale(y) * y.size ** (-0.2))
    lo = float(np.min(y)) - pad
    hi = float(np.max(y)) + pad
    return EvaluationGrid(np.linspace(lo, hi, n_points))


def kde_at(values, h, x):
    """Gaussian KDE at point(s) x: (nh)^-1 sum_i K((x - Y_i) / h)."""
    y = as_sample(values)
    if h <= 0:
        raise ValueError(f"bandwidth must be positive, got {h}")
    x = np.asarray(x, dtype=float)
    scalar = x.ndim == 0
    u = (np.atleast_1d(x)[:, None] - y[None, :]) / h
    out = gauss_pdf(u).sum(axis=1) / (y.size * h)
    return float(out[0]) if scalar else out


def linear_bin(values, lo: float, hi: float, n_bins: int) -> np.ndarray:
    """Linear-binning weights of the sample onto n_bins equispaced points.

    Each draw splits its unit mass between the two bracketing grid points
    proportionally to proximity; total mass equals n for in-range data.
    """
    y = np.asarray(values, dtype=float)
    delta = (hi - lo) / (n_bins - 1)
    pos = np.clip((y - lo) / delta, 0.0, n_bins - 1.0)
    left = np.floor(pos).astype(np.intp)
    left = np.minimum(left, n_bins - 2)
    frac = pos - left
    counts = np.zeros(n_bins)
    np.add.at(counts, left, 1.0 - frac)
    np.add.at(counts, left + 1, frac)
    return counts


def _fft_size(n: int) -> int:
    return 1 << int(math.ceil(math.log2(max(2 * n, 2))))


def lag_products(counts: np.ndarray) -> np.ndarray:
    """p[d] = sum_i c_i c_{i+d} for d = 0..m-1, via zero-padded FFT."""
    m = counts.size
    size = _fft_size(m)
    spec = rfft(counts, size)
    p = irfft(spec * np.conj(spec), size)
    return p[:m]


def kde_curve(values, h, grid: EvaluationGrid, binned: bool | None = None) -> np.ndarray:
    """KDE evaluated on a grid.

    binned=False sums over all draws at every grid point (pointwise equal to
    kde_at).  binned=True linear-bins the data onto the grid and applies the
    kernel by FFT convolution; the approximation error is far below grid
    resolution.  The default uses the direct sum up to n = 2000.
    """
    y = as_sample(values)
    if h <= 0:
        raise ValueError(f"bandwidth must be positive, got {h}")
    if binned is None:
        binned = y.size > 2000
    pts = grid.points
    if not binned or pts.size < 4:
        return kde_at(y, h, pts)
    counts = linear_bin(y, float(pts[0]), float(pts[-1]), pts.size)
    m = pts.size
    size = _fft_size(m)
    # kernel weights at signed lag distances on the circularly padded grid
    d = np.arange(size, dtype=float)
    d = np.minimum(d, size - d) * grid.spacing
    kern = gauss_pdf(d / h) / h
    conv = irfft(rfft(counts, size) * rfft(kern, size), size)[:m]
    return conv / y.size


def roughness_fhat2(values, h, max_direct_n: int = 2000, n_bins: int = 1024) -> float:
    """R(f''_h) = int (f''_h)^2 dx via the exact pairwise Gaussian identity.

    int K''_h(x-a) K''_h(x-b) dx = h^-5 * G4((a-b)/h) with G4 the fourth
    derivative of the N(0, 2) density, so the integral reduces to a double
    sum over draw pairs.  Above max_direct_n the double sum is approximated
    by linear binning onto n_bins cells over the data range.
    """
    y = as_sample(values)
    if h <= 0:
        raise ValueError(f"bandwidth must be positive, got {h}")
    n = y.size
    if n <= max_direct_n:
        diff = (y[:, None] - y[None, :]) / h
        total = float(conv_gauss_deriv4(diff).sum())
    else:
        lo, hi = float(np.min(y)), float(np.max(y))
        counts = linear_bin(y, lo, hi, n_bins)
        p = lag_products(counts)
        delta = (hi - lo) / (n_bins - 1)
        g4 = conv_gauss_deriv4(np.arange(n_bins) * delta / h)
        total = float(g4[0] * p[0] + 2.0 * np.dot(g4[1:], p[1:]))
    return total / (n * n * h**5)


def ise(values, h, truth, grid: EvaluationGrid, binned: bool | None = None) -> float:
    """Integrated squared error int (f_h - f)^2 dx by trapezoid on the grid.

    truth must expose pdf(x) and cdf(x); raises CoverageError when the truth
    has tail mass above 1e-6 outside the grid.
    """
    pts = grid.points
    tail = float(truth.cdf(pts[0]) + (1.0 - truth.cdf(pts[-1])))
    if tail > 1e-6:
        raise CoverageError(f"grid misses {tail:.3g} of truth mass")
    curve = kde_curve(values, h, grid, binned=binned)
    diff = curve - truth.pdf(pts)
    return float(np.trapezoid(diff * diff, pts))
