"""
Component functions of the nonconvex zero-chain.

``psi`` is the flat-then-rising switch (identically zero for x <= 1/2) and
``phi`` is a scaled Gaussian CDF.  All functions accept scalars or numpy
arrays and return the same shape (a Python float for scalar input).
"""

import math
from dataclasses import dataclass

import numpy as np
from scipy.special import erfc

__all__ = [
    "SmoothBounds",
    "BOUNDS",
    "psi",
    "psi_prime",
    "phi",
    "phi_prime",
]

SQRT_E = math.sqrt(math.e)
PHI_SCALE = math.sqrt(2.0 * math.pi * math.e)


def _finish(out, scalar):
    return float(out) if scalar else out


def _prep(x):
    arr = np.asarray(x, dtype=np.float64)
    return arr, arr.ndim == 0


def psi(x):
    """0 for x <= 1/2, exp(1 - 1/(2x-1)^2) otherwise."""
    x, scalar = _prep(x)
    u = 2.0 * x - 1.0
    with np.errstate(divide="ignore", invalid="ignore", over="ignore"):
        val = np.exp(1.0 - 1.0 / (u * u))
    return _finish(np.where(u > 0.0, val, 0.0), scalar)


def psi_prime(x):
    """First derivative of :func:`psi`; exactly 0 for x <= 1/2."""
    x, scalar = _prep(x)
    u = 2.0 * x - 1.0
    with np.errstate(divide="ignore", invalid="ignore", over="ignore"):
        val = np.exp(1.0 - 1.0 / (u * u)) * 4.0 / (u * u * u)
    return _finish(np.where(u > 0.0, val, 0.0), scalar)


def _psi_pair(x):
    # (Psi, Psi') from one exponential; array input only
    u = 2.0 * x - 1.0
    with np.errstate(divide="ignore", invalid="ignore", over="ignore"):
        val = np.exp(1.0 - 1.0 / (u * u))
        d = val * 4.0 / (u * u * u)
    pos = u > 0.0
    return np.where(pos, val, 0.0), np.where(pos, d, 0.0)


def _psi_second(x):
    # Psi'' = Psi * (16/u^6 - 24/u^4), u = 2x - 1; used for curvature bounds only.
    x, scalar = _prep(x)
    u = 2.0 * x - 1.0
    with np.errstate(divide="ignore", invalid="ignore", over="ignore"):
        s = 1.0 / (u * u)
        val = np.exp(1.0 - s) * (16.0 * s**3 - 24.0 * s**2)
    return _finish(np.where(u > 0.0, val, 0.0), scalar)


def phi(x):
    """sqrt(e) * int_{-inf}^x exp(-t^2/2) dt, via erfc (stable in both tails)."""
    x, scalar = _prep(x)
    return _finish(0.5 * PHI_SCALE * erfc(-x / math.sqrt(2.0)), scalar)


def phi_prime(x):
    x, scalar = _prep(x)
    return _finish(SQRT_E * np.exp(-0.5 * x * x), scalar)


def _phi_second(x):
    x, scalar = _prep(x)
    return _finish(-x * SQRT_E * np.exp(-0.5 * x * x), scalar)


def _psi_second_sup():
    # |Psi''| = e^{1-s} |16 s^3 - 24 s^2| with s = 1/u^2; the global max sits
    # at the larger root of s^2 - 4.5 s + 3 = 0.
    s = (4.5 + math.sqrt(4.5**2 - 12.0)) / 2.0
    return math.exp(1.0 - s) * (16.0 * s**3 - 24.0 * s**2)


@dataclass(frozen=True)
class SmoothBounds:
    """Suprema of |psi|, |psi'|, |phi|, |phi'| and of the second derivatives.

    The second-derivative suprema are not needed to define the functions;
    they feed the Gershgorin smoothness certificates in
    :mod:`minmaxlb.instances`.
    """

    psi_sup: float = math.e
    psi_prime_sup: float = math.sqrt(54.0 / math.e)
    phi_sup: float = PHI_SCALE
    phi_prime_sup: float = SQRT_E
    psi_second_sup: float = _psi_second_sup()
    # |phi''(x)| = sqrt(e) |x| e^{-x^2/2} peaks at |x| = 1 with value 1.
    phi_second_sup: float = 1.0


BOUNDS = SmoothBounds()
