"""Exact mutual information of a circulant system from its power spectrum.

The circulant transfer matrix diagonalizes in the DFT basis, so the MI of
the Gaussian channel splits into one log term per frequency:

    I_total = sum_k log(gamma * d_k * |lambda_k|^2 / n + 1)

with lambda = DFT of the aperture row (unnormalized, DC at index 0),
d the scene prior weights and gamma the inverse noise power.  All logs
are natural; "bits" rescales by 1/ln 2 at the end.
"""

import math
from dataclasses import dataclass

import numpy as np

from .errors import InvalidArgumentError
from .model import NoiseModel, ScenePrior, gamma, spectral_weights
from .patterns import AperturePattern

__all__ = [
    "SpectrumResult",
    "MIResult",
    "circulant_spectrum",
    "mutual_information",
    "mi_excluding_dc",
    "jensen_bound",
    "mi_from_spectrum",
]

LN2 = math.log(2.0)


def _log_scale(log_base: str) -> float:
    if log_base == "nats":
        return 1.0
    if log_base == "bits":
        return 1.0 / LN2
    raise InvalidArgumentError(f"log_base must be 'nats' or 'bits', got {log_base!r}")


@dataclass(frozen=True)
class SpectrumResult:
    """Eigenvalue magnitudes of the circulant system matrix.

    lambda1   : DC gain, equal to the sum of the aperture row
    lambda_sq : |lambda_k|^2 for k = 0..n-1 (DC at index 0)
    """

    lambda1: float
    lambda_sq: np.ndarray

    @property
    def n(self) -> int:
        return self.lambda_sq.size

    @property
    def bulk_power(self) -> float:
        """Total off-DC power sum_{k>=2} |lambda_k|^2."""
        return float(self.lambda_sq[1:].sum())


@dataclass(frozen=True)
class MIResult:
    total: float
    per_pixel: float
    log_base: str


def circulant_spectrum(pattern: AperturePattern | np.ndarray) -> SpectrumResult:
    """DFT power spectrum of an aperture row (or any real row vector)."""
    a = pattern.values if isinstance(pattern, AperturePattern) else np.asarray(pattern, dtype=float)
    if a.ndim != 1 or a.size < 1:
        raise InvalidArgumentError("need a nonempty 1D row")
    lam = np.fft.fft(a)
    lam_sq = np.abs(lam) ** 2
    return SpectrumResult(lambda1=float(lam[0].real), lambda_sq=lam_sq)


def mi_from_spectrum(lambda_sq: np.ndarray, weights: np.ndarray, gamma_: float) -> float:
    """Total MI in nats given the squared spectrum, prior weights and gamma."""
    return float(np.log1p(gamma_ * weights * lambda_sq / lambda_sq.size).sum())


def mutual_information(pattern: AperturePattern, prior: ScenePrior,
                       noise: NoiseModel, log_base: str = "nats") -> MIResult:
    """Exact MI of the circulant system built from `pattern`.

    gamma is computed from the pattern's realized transmissivity (mean of
    the entries), not from any nominal family parameter.

    Returns
    -------
    MIResult with the total over all n frequencies and the per-pixel value
    total/n, in the requested log base.
    """
    scale = _log_scale(log_base)
    d = spectral_weights(prior, pattern.n)
    g = gamma(noise, pattern.rho)
    spec = circulant_spectrum(pattern)
    total = mi_from_spectrum(spec.lambda_sq, d, g) * scale
    return MIResult(total=total, per_pixel=total / pattern.n, log_base=log_base)


def mi_excluding_dc(pattern: AperturePattern, noise: NoiseModel,
                    log_base: str = "nats") -> float:
    """Bulk per-pixel MI under the IID prior, DC term removed.

    (1/n) * sum_{k>=2} log(gamma |lambda_k|^2 / n + 1).  This is the
    quantity the large-n limit theorems describe: the DC contribution is
    O(log n / n) and vanishes in the limit but biases finite-n comparisons.
    """
    scale = _log_scale(log_base)
    g = gamma(noise, pattern.rho)
    spec = circulant_spectrum(pattern)
    n = spec.n
    return float(np.log1p(g * spec.lambda_sq[1:] / n).sum()) * scale / n


def jensen_bound(pattern: AperturePattern, noise: NoiseModel,
                 log_base: str = "nats") -> float:
    """Concavity upper bound on the bulk per-pixel MI (IID prior).

        (n-1)/n * log(gamma * S / ((n-1) n) + 1),  S = sum_{k>=2} |lambda_k|^2

    It dominates mi_excluding_dc for every pattern and is attained exactly
    when all off-DC eigenvalue magnitudes are equal (spectrally flat masks).
    """
    scale = _log_scale(log_base)
    g = gamma(noise, pattern.rho)
    spec = circulant_spectrum(pattern)
    n = spec.n
    if n < 2:
        raise InvalidArgumentError("bound needs n >= 2")
    s = spec.bulk_power
    return (n - 1) / n * math.log1p(g * s / ((n - 1) * n)) * scale
