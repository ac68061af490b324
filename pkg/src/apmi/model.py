"""Scene priors and noise model for 1D circulant imaging systems.

The imaging model is y = A x + noise, where A is an n x n circulant
transfer matrix built from an aperture row a, the scene x is a zero-mean
Gaussian with a diagonal spectral covariance d (the prior), and the noise
combines a thermal floor W with signal-dependent shot noise rho*J.
Everything downstream (exact MI, asymptotic predictors, ensembles) consumes
the two quantities defined here: the per-frequency weight vector d and the
inverse noise power gamma = 1/(W + rho*J).
"""

import enum
from dataclasses import dataclass

import numpy as np

from .errors import DegenerateNoiseError, InvalidArgumentError

__all__ = [
    "ScenePrior",
    "NoiseModel",
    "spectral_weights",
    "gamma",
    "db_to_linear",
]


class ScenePrior(enum.Enum):
    """Spectral shape of the scene covariance."""

    IID = "iid"                 # white scene: every frequency weighted 1
    ONE_OVER_F = "one_over_f"   # natural-scene prior: weight falls off as 1/k

    @classmethod
    def parse(cls, text: str) -> "ScenePrior":
        key = text.strip().lower()
        aliases = {
            "iid": cls.IID,
            "1f": cls.ONE_OVER_F,
            "1/f": cls.ONE_OVER_F,
            "one_over_f": cls.ONE_OVER_F,
            "one-over-f": cls.ONE_OVER_F,
        }
        if key not in aliases:
            raise InvalidArgumentError(f"unknown scene prior {text!r}")
        return aliases[key]


@dataclass(frozen=True)
class NoiseModel:
    """Thermal and shot noise powers, in linear units.

    Parameters
    ----------
    W : float
        Thermal (signal-independent) noise power, >= 0.
    J : float
        Shot-noise coefficient; the signal-dependent contribution is
        rho * J where rho is the aperture transmissivity. >= 0.
    """

    W: float
    J: float

    def __post_init__(self):
        if not (np.isfinite(self.W) and np.isfinite(self.J)):
            raise InvalidArgumentError("noise powers must be finite")
        if self.W < 0 or self.J < 0:
            raise InvalidArgumentError("noise powers must be nonnegative")
        if self.W == 0 and self.J == 0:
            raise InvalidArgumentError("W and J cannot both be zero")


def spectral_weights(prior: ScenePrior, n: int) -> np.ndarray:
    """Per-frequency scene weights d, DC at index 0.

    For the IID prior every entry is 1.  For the 1/f prior the weights decay
    with frequency index away from DC.  Even n uses the doubled block
    [1, 1/2, ..., 2/n, 1, 1/2, ..., 2/n]; odd n pairs the mirror frequencies
    (k, n+2-k) at weight 1/k for k = 2..(n+1)/2, with the DC weight 1.

    Parameters
    ----------
    prior : ScenePrior
    n : int
        Number of frequencies (system size), >= 2.

    Returns
    -------
    np.ndarray of shape (n,), entries in (0, 1], d[0] == 1.
    """
    if n < 2:
        raise InvalidArgumentError(f"need n >= 2, got {n}")
    if prior is ScenePrior.IID:
        return np.ones(n)
    if prior is ScenePrior.ONE_OVER_F:
        d = np.empty(n)
        if n % 2 == 0:
            half = n // 2
            d[:half] = 1.0 / np.arange(1, half + 1)
            d[half:] = d[:half]
        else:
            d[0] = 1.0
            for k in range(2, (n + 1) // 2 + 1):
                d[k - 1] = 1.0 / k
                d[n + 1 - k] = 1.0 / k
        return d
    raise InvalidArgumentError(f"unknown prior {prior!r}")


def gamma(noise: NoiseModel, rho: float) -> float:
    """Inverse total noise power 1/(W + rho*J) at transmissivity rho.

    Raises
    ------
    DegenerateNoiseError
        If W + rho*J == 0 (infinite SNR); callers must supply W > 0
        or rho*J > 0.
    """
    if not 0.0 <= rho <= 1.0:
        raise InvalidArgumentError(f"transmissivity must lie in [0, 1], got {rho}")
    total = noise.W + rho * noise.J
    if total == 0.0:
        raise DegenerateNoiseError("W + rho*J is zero; no finite noise power")
    return 1.0 / total


def db_to_linear(x_db: float) -> float:
    """Convert a power ratio in dB to linear units (10^(x/10))."""
    return float(10.0 ** (x_db / 10.0))
