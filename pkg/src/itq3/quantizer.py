"""Ternary quantization with analytic scale selection.

A block of rotated coefficients is mapped to codes in {-1, 0, +1} on a
grid defined by a positive scale ``d`` and an integer zero-point ``z``.
Scale policies derive ``d`` from block statistics: a fixed multiple of
the standard deviation, the numeric minimizer of the Gaussian
mean-squared-error objective, or a mean-absolute-value rule.  A uniform
b-bit quantizer is included as the no-rotation baseline.
"""

from __future__ import annotations

import math
from dataclasses import dataclass
from functools import lru_cache

import numpy as np
from scipy import integrate

from .errors import DomainError

# Default scale coefficient sqrt(2/pi) = E|x| for standard normal x,
# kept as the written-out decimal for compatibility with stored models.
DEFAULT_SCALE_COEFF = 0.7979

# Floor for the scale of a degenerate (constant) block.  Such blocks
# encode to all-zero codes and reconstruct exactly regardless of d.
EPSILON_D = 1e-8

POLICY_KINDS = ("constant", "argmin", "mean-abs")


@dataclass(frozen=True)
class ScalePolicy:
    """How to derive the ternary scale from block statistics.

    kind "constant" uses ``constant * sigma``; "argmin" uses the cached
    numeric minimizer of :func:`ternary_mse` times sigma; "mean-abs"
    uses two thirds of the mean absolute value.
    """

    kind: str = "constant"
    constant: float = DEFAULT_SCALE_COEFF

    def __post_init__(self):
        if self.kind not in POLICY_KINDS:
            raise DomainError(f"ScalePolicy: unknown kind {self.kind!r}, expected one of {POLICY_KINDS}")
        if not (self.constant > 0 and math.isfinite(self.constant)):
            raise DomainError(f"ScalePolicy: constant must be positive and finite, got {self.constant}")


@dataclass(frozen=True)
class BlockStats:
    """Sample statistics of one coefficient block (population conventions)."""

    n: int
    mean: float
    sigma: float
    l1: float
    linf: float
    excess_kurtosis: float


@dataclass(frozen=True)
class TernaryGrid:
    """Ternary reconstruction grid: levels d*(q - z) for codes q in {-1, 0, 1}."""

    d: float
    z: int = 0

    def __post_init__(self):
        if not (self.d > 0 and math.isfinite(self.d)):
            raise DomainError(f"TernaryGrid: scale must be positive and finite, got {self.d}")
        if self.z not in (-1, 0, 1):
            raise DomainError(f"TernaryGrid: zero-point must be -1, 0, or 1, got {self.z}")


def block_stats(v) -> BlockStats:
    """Exact sample statistics of a block: mean, population sigma, l1, linf, excess kurtosis."""
    a = np.asarray(v, dtype=np.float64)
    if a.ndim != 1 or a.size == 0:
        raise DomainError("block_stats: expects a non-empty 1-D block")
    if not np.all(np.isfinite(a)):
        raise DomainError("block_stats: input contains non-finite values")
    mean = float(np.mean(a))
    var = float(np.mean((a - mean) ** 2))
    sigma = math.sqrt(var)
    if sigma > 0:
        kurt = float(np.mean((a - mean) ** 4)) / var**2 - 3.0
    else:
        kurt = 0.0
    return BlockStats(
        n=a.size,
        mean=mean,
        sigma=sigma,
        l1=float(np.sum(np.abs(a))),
        linf=float(np.max(np.abs(a))),
        excess_kurtosis=kurt,
    )


def ternary_mse(alpha: float, sigma: float) -> float:
    """Mean squared error of thresholded ternary quantization for x ~ N(0, sigma^2).

    Inputs with |x| <= alpha reconstruct to 0 and the rest to
    sign(x)*alpha, so by symmetry

        mse = 2 * int_0^alpha x^2 phi(x) dx
            + 2 * int_alpha^inf (x - alpha)^2 phi(x) dx

    evaluated by adaptive quadrature with absolute tolerance below 1e-9.
    """
    if not (alpha > 0 and math.isfinite(alpha)):
        raise DomainError(f"ternary_mse: alpha must be positive and finite, got {alpha}")
    if not (sigma > 0 and math.isfinite(sigma)):
        raise DomainError(f"ternary_mse: sigma must be positive and finite, got {sigma}")

    norm = 1.0 / (sigma * math.sqrt(2.0 * math.pi))

    def density(x):
        return norm * math.exp(-(x * x) / (2.0 * sigma * sigma))

    dead, _ = integrate.quad(lambda x: x * x * density(x), 0.0, alpha, epsabs=1e-10, limit=200)
    tail, _ = integrate.quad(
        lambda x: (x - alpha) ** 2 * density(x), alpha, np.inf, epsabs=1e-10, limit=200
    )
    return 2.0 * (dead + tail)


@lru_cache(maxsize=1)
def argmin_scale_coeff() -> float:
    """Grid-search minimizer of ternary_mse(alpha, 1) over alpha in (0, 2], step 1e-3.

    Computed once per process and cached.
    """
    alphas = np.arange(1, 2001) * 1e-3
    values = [ternary_mse(float(a), 1.0) for a in alphas]
    return float(alphas[int(np.argmin(values))])


def optimal_scale(stats: BlockStats, policy: ScalePolicy) -> float:
    """Ternary scale for a block under the given policy, floored at EPSILON_D."""
    if policy.kind == "constant":
        d = policy.constant * stats.sigma
    elif policy.kind == "argmin":
        d = argmin_scale_coeff() * stats.sigma
    else:
        d = (2.0 / 3.0) * (stats.l1 / stats.n)
    return d if d > 0 else EPSILON_D


def _round_half_away(y: np.ndarray) -> np.ndarray:
    return np.copysign(np.floor(np.abs(y) + 0.5), y)


def ternary_quantize(x, grid: TernaryGrid):
    """Map values to codes in {-1, 0, 1}: clamp(round(x/d) + z, -1, 1).

    Rounding is half away from zero.  Accepts scalars or arrays; arrays
    come back as int8.
    """
    a = np.asarray(x, dtype=np.float64)
    if not np.all(np.isfinite(a)):
        raise DomainError("ternary_quantize: input contains non-finite values")
    codes = np.clip(_round_half_away(a / grid.d) + grid.z, -1, 1).astype(np.int8)
    if np.isscalar(x) or np.ndim(x) == 0:
        return int(codes)
    return codes


def ternary_dequantize(code, grid: TernaryGrid):
    """Reconstruct d*(code - z) for codes in {-1, 0, 1}."""
    c = np.asarray(code)
    if not np.issubdtype(c.dtype, np.integer):
        raise DomainError("ternary_dequantize: codes must be integers")
    if c.size and (c.min() < -1 or c.max() > 1):
        raise DomainError("ternary_dequantize: codes must lie in {-1, 0, 1}")
    out = grid.d * (c.astype(np.float64) - grid.z)
    if np.isscalar(code) or np.ndim(code) == 0:
        return float(out)
    return out


def uniform_quantize(x, bits: int, wmin: float, wmax: float):
    """Uniform b-bit baseline: step (wmax - wmin)/(2^b - 1), reconstruction clamped to range."""
    if not 2 <= int(bits) <= 8:
        raise DomainError(f"uniform_quantize: bits must be in [2, 8], got {bits}")
    if not (wmin < wmax):
        raise DomainError(f"uniform_quantize: need wmin < wmax, got [{wmin}, {wmax}]")
    a = np.asarray(x, dtype=np.float64)
    if not np.all(np.isfinite(a)):
        raise DomainError("uniform_quantize: input contains non-finite values")
    delta = (wmax - wmin) / (2 ** int(bits) - 1)
    out = np.clip(delta * np.floor(a / delta + 0.5), wmin, wmax)
    if np.isscalar(x) or np.ndim(x) == 0:
        return float(out)
    return out
