"""Gaussian kernel, its even derivatives, and the scalar functionals.

Everything downstream is specialized to the Gaussian kernel: the plug-in
pilot formulas and the pairwise roughness identity only hold for it, so no
kernel polymorphism is offered.
"""

import math
from dataclasses import dataclass

import numpy as np

_INV_SQRT_2PI = 1.0 / math.sqrt(2.0 * math.pi)


def gauss_pdf(u):
    """Standard normal density, vectorized over ``u``."""
    u = np.asarray(u, dtype=float)
    out = _INV_SQRT_2PI * np.exp(-0.5 * u * u)
    return out if out.ndim else float(out)


def gauss_deriv(r, u):
    """r-th derivative of the standard normal density, r in {4, 6}.

    Uses the closed-form Hermite identity phi^(r)(u) = He_r(u) * phi(u)
    (even r, so no sign flip): He_4 = u^4 - 6u^2 + 3 and
    He_6 = u^6 - 15u^4 + 45u^2 - 15.
    """
    u = np.asarray(u, dtype=float)
    u2 = u * u
    if r == 4:
        poly = (u2 - 6.0) * u2 + 3.0
    elif r == 6:
        poly = ((u2 - 15.0) * u2 + 45.0) * u2 - 15.0
    else:
        raise ValueError(f"gauss_deriv supports r in {{4, 6}}, got r={r}")
    out = poly * gauss_pdf(u)
    return out if out.ndim else float(out)


@dataclass(frozen=True)
class KernelFunctionals:
    """Scalar constants of the Gaussian kernel used by every selector.

    roughness_K = R(K) = int K^2, mu2 = int u^2 K(u) du,
    roughness_K2 = R(K'') = int (K'')^2.
    """

    roughness_K: float
    mu2: float
    roughness_K2: float


_SQRT_PI = math.sqrt(math.pi)

_FUNCTIONALS = KernelFunctionals(
    roughness_K=1.0 / (2.0 * _SQRT_PI),
    mu2=1.0,
    roughness_K2=3.0 / (8.0 * _SQRT_PI),
)


def kernel_functionals() -> KernelFunctionals:
    """Exact closed-form functionals of the Gaussian kernel."""
    return _FUNCTIONALS


def conv_gauss_deriv4(u):
    """Fourth derivative of the N(0, 2) density (two-fold convolution of K).

    Appears in the exact pairwise identity
    int K''_h(x - a) K''_h(x - b) dx = h^-5 * conv_gauss_deriv4((a - b) / h).
    """
    u = np.asarray(u, dtype=float)
    s = math.sqrt(2.0)
    # d^4/du^4 [ phi(u/s)/s ] = s^-5 phi^(4)(u/s)
    out = s**-5 * gauss_deriv(4, u / s)
    return out if np.ndim(out) else float(out)
