"""Delay kernels: pointwise values, Laplace transforms, damped products.

All kernels decay exponentially; ``decay_rate`` reports a rate rho* such
that |k(s)| e^{rho* s} stays bounded.  ``weighted_eval`` returns
k(s) e^{rate s} with the two exponentials combined analytically, which is
the only safe way to form quadrature coefficients: the factors overflow
and underflow separately long before the product does.
"""

from __future__ import annotations

import math
from dataclasses import dataclass
from typing import Callable

import numpy as np

from .errors import IntegrableSingularity, OutOfStrip


@dataclass(frozen=True)
class ExponentialKernel:
    """k(s) = k0 e^{-mu s}."""

    k0: float
    mu: float


@dataclass(frozen=True)
class GammaKernel:
    """Gamma density k(s) = mu^sigma s^{sigma-1} e^{-mu s} / Gamma(sigma)."""

    mu: float
    sigma: float


@dataclass(frozen=True)
class SinModulatedKernel:
    """Non-monotone kernel k(s) = k0 e^{-mu s} (sin(a s) + 1)."""

    k0: float
    mu: float
    a: float


@dataclass(frozen=True)
class ShiftedKernel:
    """k(s) = inner(s) for s >= shift, zero before the shift."""

    inner: object
    shift: float


@dataclass(frozen=True)
class CustomKernel:
    """Pointwise evaluator with a caller-declared decay rate."""

    fn: Callable[[float], float]
    decay: float


Kernel = ExponentialKernel | GammaKernel | SinModulatedKernel | ShiftedKernel | CustomKernel


def kernel_eval(kernel, s):
    """Pointwise kernel value at s >= 0 (scalar or array).

    A gamma kernel with sigma < 1 is unbounded at s = 0; the singular point
    itself raises IntegrableSingularity since no finite value exists there.
    """
    s_arr = np.asarray(s, dtype=float)
    if np.any(s_arr < 0):
        raise ValueError("kernel argument must be nonnegative")
    out = _eval(kernel, s_arr)
    return float(out) if np.ndim(s) == 0 else out


def _eval(kernel, s):
    if isinstance(kernel, ExponentialKernel):
        return kernel.k0 * np.exp(-kernel.mu * s)
    if isinstance(kernel, GammaKernel):
        if kernel.sigma < 1.0 and np.any(s == 0.0):
            raise IntegrableSingularity(
                "gamma kernel with sigma < 1 is unbounded at s = 0"
            )
        return _gamma_density(kernel.mu, kernel.sigma, s)
    if isinstance(kernel, SinModulatedKernel):
        return kernel.k0 * np.exp(-kernel.mu * s) * (np.sin(kernel.a * s) + 1.0)
    if isinstance(kernel, ShiftedKernel):
        vals = np.zeros_like(s)
        live = s >= kernel.shift
        if np.any(live):
            vals[live] = _eval(kernel.inner, s[live])
        return vals
    if isinstance(kernel, CustomKernel):
        return np.vectorize(kernel.fn, otypes=[float])(s)
    raise TypeError(f"unknown kernel type {type(kernel)!r}")


def _gamma_density(mu, sigma, s):
    s = np.asarray(s, dtype=float)
    out = np.zeros_like(s)
    pos = s > 0
    if np.any(pos):
        sp = s[pos]
        logv = sigma * math.log(mu) + (sigma - 1.0) * np.log(sp) - mu * sp \
            - math.lgamma(sigma)
        out[pos] = np.exp(logv)
    if np.any(~pos):
        out[~pos] = 0.0 if sigma > 1.0 else (mu if sigma == 1.0 else np.inf)
    return out


def weighted_eval(kernel, s, rate):
    """k(s) e^{rate s} with the exponentials folded analytically."""
    s_arr = np.asarray(s, dtype=float)
    out = _weighted(kernel, s_arr, float(rate))
    return float(out) if np.ndim(s) == 0 else out


def _weighted(kernel, s, rate):
    if isinstance(kernel, ExponentialKernel):
        return kernel.k0 * np.exp((rate - kernel.mu) * s)
    if isinstance(kernel, GammaKernel):
        out = np.zeros_like(s)
        pos = s > 0
        sp = s[pos]
        logv = kernel.sigma * math.log(kernel.mu) + (kernel.sigma - 1.0) * np.log(sp) \
            + (rate - kernel.mu) * sp - math.lgamma(kernel.sigma)
        out[pos] = np.exp(logv)
        if np.any(~pos):
            out[~pos] = _eval(kernel, s[~pos])
        return out
    if isinstance(kernel, SinModulatedKernel):
        return kernel.k0 * np.exp((rate - kernel.mu) * s) * (np.sin(kernel.a * s) + 1.0)
    if isinstance(kernel, ShiftedKernel):
        out = np.zeros_like(s)
        live = s >= kernel.shift
        out[live] = _weighted(kernel.inner, s[live], rate)
        return out
    if isinstance(kernel, CustomKernel):
        return _eval(kernel, s) * np.exp(rate * s)
    raise TypeError(f"unknown kernel type {type(kernel)!r}")


def decay_rate(kernel) -> float:
    """A rate rho* with |k(s)| e^{rho* s} bounded on the half-line."""
    if isinstance(kernel, ExponentialKernel):
        return kernel.mu
    if isinstance(kernel, GammaKernel):
        # s^{sigma-1} spoils the exact rate mu; any rho* < mu works
        return kernel.mu if kernel.sigma <= 1.0 else 0.999 * kernel.mu
    if isinstance(kernel, SinModulatedKernel):
        return kernel.mu
    if isinstance(kernel, ShiftedKernel):
        return decay_rate(kernel.inner)
    if isinstance(kernel, CustomKernel):
        return kernel.decay
    raise TypeError(f"unknown kernel type {type(kernel)!r}")


def kernel_laplace(kernel, lam: complex) -> complex:
    """Closed-form Laplace transform of the kernel at lam.

    Valid on the strip Re(lam) > -rho*; outside it raises OutOfStrip.
    """
    lam = complex(lam)
    if lam.real <= -decay_rate(kernel):
        raise OutOfStrip(
            f"Re(lambda) = {lam.real} outside the strip of {type(kernel).__name__}"
        )
    return _laplace(kernel, lam)


def _laplace(kernel, lam):
    if isinstance(kernel, ExponentialKernel):
        return kernel.k0 / (lam + kernel.mu)
    if isinstance(kernel, GammaKernel):
        return (kernel.mu / (lam + kernel.mu)) ** kernel.sigma
    if isinstance(kernel, SinModulatedKernel):
        z = lam + kernel.mu
        return kernel.k0 * (kernel.a / (z * z + kernel.a**2) + 1.0 / z)
    if isinstance(kernel, ShiftedKernel):
        # transform of inner(. + shift), damped by e^{-lam shift}
        if isinstance(kernel.inner, ExponentialKernel):
            inner = kernel.inner
            return inner.k0 * np.exp(-(lam + inner.mu) * kernel.shift) / (lam + inner.mu)
        raise NotImplementedError(
            "closed-form shifted transform only for exponential inner kernels"
        )
    if isinstance(kernel, CustomKernel):
        raise NotImplementedError("custom kernels carry no closed-form transform")
    raise TypeError(f"unknown kernel type {type(kernel)!r}")


def kernel_laplace_deriv(kernel, lam: complex) -> complex:
    """d/dlam of the Laplace transform (analytic closed forms)."""
    lam = complex(lam)
    if lam.real <= -decay_rate(kernel):
        raise OutOfStrip("derivative requested outside the Laplace strip")
    if isinstance(kernel, ExponentialKernel):
        return -kernel.k0 / (lam + kernel.mu) ** 2
    if isinstance(kernel, GammaKernel):
        return -kernel.sigma * _laplace(kernel, lam) / (lam + kernel.mu)
    if isinstance(kernel, SinModulatedKernel):
        z = lam + kernel.mu
        return kernel.k0 * (-2.0 * kernel.a * z / (z * z + kernel.a**2) ** 2
                            - 1.0 / z**2)
    if isinstance(kernel, ShiftedKernel) and isinstance(kernel.inner, ExponentialKernel):
        return -_laplace(kernel, lam) * (kernel.shift + 1.0 / (lam + kernel.inner.mu))
    # analytic function of one complex variable: central difference is exact
    # to O(h^2) along any direction
    h = 1e-6 * (1.0 + abs(lam))
    return (_laplace(kernel, lam + h) - _laplace(kernel, lam - h)) / (2.0 * h)
