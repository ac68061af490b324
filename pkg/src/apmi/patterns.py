"""Aperture pattern generators: deterministic flat families and random masks.

A pattern is the generating row a of the circulant transfer matrix, with
entries in [0, 1] (fraction of light passed per element).  The two
deterministic families here (maximum-length shift-register sequences and
quadratic-residue masks) are "spectrally flat": half-open masks whose
power spectrum concentrates no information loss in any single frequency.
"""

import json
import math
import os
from dataclasses import dataclass, field
from enum import Enum

import numpy as np

from .errors import FlatnessCheckError, InvalidArgumentError

__all__ = [
    "PatternFamily",
    "AperturePattern",
    "MLS_POLYNOMIALS",
    "gen_pinhole",
    "gen_mls",
    "gen_mura",
    "gen_bernoulli",
    "gen_uniform",
    "transmissivity",
    "save_pattern",
    "load_pattern",
]

# Tolerance scale for the generation-time spectral self-check: bulk
# deviations above FLATNESS_RTOL * n indicate a defective construction.
FLATNESS_RTOL = 1e-6


class PatternFamily(str, Enum):
    PINHOLE = "pinhole"
    MLS = "mls"
    MURA = "mura"
    BERNOULLI = "bernoulli"
    UNIFORM = "uniform"
    CUSTOM = "custom"


@dataclass
class AperturePattern:
    """A 1D aperture: the generating row of the circulant system matrix.

    values : entries in [0, 1], length n >= 1
    family : which generator produced it (CUSTOM for user-supplied rows)
    seed   : RNG seed for the random families, None otherwise
    metadata : generator-specific record (polynomial taps, measured
        spectral levels, nominal p, ...)
    """

    values: np.ndarray
    family: PatternFamily = PatternFamily.CUSTOM
    seed: int | None = None
    metadata: dict = field(default_factory=dict)

    def __post_init__(self):
        a = np.asarray(self.values, dtype=float)
        if a.ndim != 1 or a.size < 1:
            raise InvalidArgumentError("pattern must be a nonempty 1D vector")
        if not np.all(np.isfinite(a)):
            raise InvalidArgumentError("pattern entries must be finite")
        if a.min() < 0.0 or a.max() > 1.0:
            raise InvalidArgumentError("pattern entries must lie in [0, 1]")
        self.values = a

    @property
    def n(self) -> int:
        return self.values.size

    @property
    def rho(self) -> float:
        """Realized transmissivity: mean of the entries."""
        return float(self.values.mean())


def transmissivity(pattern: AperturePattern) -> float:
    """Fraction of light passed by the aperture (mean of the entries)."""
    return pattern.rho


####################### spectral self-check #######################

def _spectral_levels(a: np.ndarray) -> dict:
    """Measure the DC gain and bulk power-spectrum statistics of a row."""
    lam_sq = np.abs(np.fft.fft(a)) ** 2
    bulk = lam_sq[1:]
    return {
        "lambda1": float(np.real(np.sum(a))),
        "bulk_mean": float(bulk.mean()),
        "bulk_min": float(bulk.min()),
        "bulk_max": float(bulk.max()),
    }


def _check_flat(a: np.ndarray, where: str) -> dict:
    """Verify DC = (n+1)/2 and per-bin bulk flatness at (n+1)/4."""
    n = a.size
    levels = _spectral_levels(a)
    target_dc = (n + 1) / 2
    target_bulk = (n + 1) / 4
    dev = max(abs(levels["bulk_min"] - target_bulk),
              abs(levels["bulk_max"] - target_bulk))
    levels["bulk_max_abs_dev"] = dev
    if levels["lambda1"] != target_dc or dev > FLATNESS_RTOL * n:
        raise FlatnessCheckError(
            f"{where}: spectral self-check failed "
            f"(lambda1={levels['lambda1']}, expected {target_dc}; "
            f"max bulk deviation {dev:.3e} > {FLATNESS_RTOL * n:.3e})")
    return levels


####################### deterministic families #######################

def gen_pinhole(n: int) -> AperturePattern:
    """Single open element out of n; transmissivity 1/n."""
    if n < 1:
        raise InvalidArgumentError(f"need n >= 1, got {n}")
    a = np.zeros(n)
    a[0] = 1.0
    return AperturePattern(a, PatternFamily.PINHOLE)


# One fixed primitive polynomial over GF(2) per degree, lowest-weight taps:
# x^m + sum(x^t for t in taps) + 1.  Each entry was verified maximal
# (period 2^m - 1 under the multiply-by-x recurrence below) before being
# frozen here; gen_mls re-verifies spectral flatness at every call.
MLS_POLYNOMIALS: dict[int, tuple[int, ...]] = {
    2: (1,),
    3: (1,),
    4: (1,),
    5: (2,),
    6: (1,),
    7: (1,),
    8: (4, 3, 2),
    9: (4,),
    10: (3,),
    11: (2,),
    12: (6, 4, 1),
    13: (4, 3, 1),
    14: (10, 6, 1),
    15: (1,),
    16: (12, 3, 1),
    17: (3,),
    18: (7,),
    19: (5, 2, 1),
    20: (3,),
}


def gen_mls(degree: int, seed_state: int | None = None) -> AperturePattern:
    """Binary maximum-length sequence of length 2**degree - 1.

    The mask has (n+1)/2 open elements and an exactly flat bulk spectrum:
    lambda_1 = (n+1)/2 and |lambda_k|^2 = (n+1)/4 for every k >= 2, which
    is re-verified at generation time.

    Parameters
    ----------
    degree : int
        Shift-register length; must be a key of MLS_POLYNOMIALS (2..20).
    seed_state : int, optional
        Nonzero initial register fill in [1, 2**degree - 1].  Changing it
        cyclically rotates the sequence; the spectrum magnitudes do not
        depend on it.  Defaults to the all-ones state.
    """
    if degree not in MLS_POLYNOMIALS:
        raise InvalidArgumentError(
            f"degree {degree} not in the shipped polynomial table "
            f"({min(MLS_POLYNOMIALS)}..{max(MLS_POLYNOMIALS)})")
    m = degree
    n = (1 << m) - 1
    if seed_state is None:
        seed_state = n  # all ones
    if not 1 <= seed_state <= n:
        raise InvalidArgumentError(
            f"seed_state must lie in [1, {n}], got {seed_state}")

    poly = (1 << m) | 1
    for t in MLS_POLYNOMIALS[m]:
        poly |= 1 << t

    # Multiply-by-x recurrence in GF(2)[x]/poly; bit 0 of the state traces
    # out one period of the m-sequence.
    a = np.empty(n)
    state = seed_state
    for i in range(n):
        a[i] = state & 1
        state <<= 1
        if state >> m & 1:
            state ^= poly

    levels = _check_flat(a, f"gen_mls(degree={degree})")
    meta = {"degree": m, "polynomial_taps": (m, *MLS_POLYNOMIALS[m], 0),
            "seed_state": seed_state, **levels}
    return AperturePattern(a, PatternFamily.MLS, metadata=meta)


def _is_prime(n: int) -> bool:
    if n < 2:
        return False
    if n % 2 == 0:
        return n == 2
    for f in range(3, math.isqrt(n) + 1, 2):
        if n % f == 0:
            return False
    return True


def gen_mura(n: int) -> AperturePattern:
    """Quadratic-residue mask for a prime n with n % 4 == 1.

    Convention: element 0 is open, element i is open iff i is a nonzero
    quadratic residue mod n, giving (n+1)/2 open elements.  For these
    primes the bulk spectrum is two-valued, (1 +- sqrt(n))^2 / 4, so only
    the DC gain (n+1)/2 and the exact bulk mean (n+1)/4 are enforced; the
    measured bulk levels are recorded in the metadata.
    """
    if not _is_prime(n) or n % 4 != 1:
        raise InvalidArgumentError(
            f"n={n} is not a prime of the form 4d+1 (required for "
            "quadratic-residue masks)")
    a = np.zeros(n)
    a[0] = 1.0
    for i in range(1, n):
        if pow(i, (n - 1) // 2, n) == 1:
            a[i] = 1.0

    levels = _spectral_levels(a)
    target_dc = (n + 1) / 2
    target_mean = (n + 1) / 4
    if levels["lambda1"] != target_dc or \
            abs(levels["bulk_mean"] - target_mean) > 1e-9 * n:
        raise FlatnessCheckError(
            f"gen_mura(n={n}): DC/bulk-mean check failed ({levels})")
    return AperturePattern(a, PatternFamily.MURA, metadata=levels)


####################### random families #######################

def gen_bernoulli(n: int, p: float, seed: int) -> AperturePattern:
    """Random on-off mask: each element open independently with probability p."""
    if n < 1:
        raise InvalidArgumentError(f"need n >= 1, got {n}")
    if not 0.0 <= p <= 1.0:
        raise InvalidArgumentError(f"p must lie in [0, 1], got {p}")
    rng = np.random.default_rng(seed)
    a = (rng.random(n) < p).astype(float)
    return AperturePattern(a, PatternFamily.BERNOULLI, seed=seed,
                           metadata={"p": p})


def gen_uniform(n: int, seed: int) -> AperturePattern:
    """Gray-scale mask with entries drawn uniformly from [0, 1)."""
    if n < 1:
        raise InvalidArgumentError(f"need n >= 1, got {n}")
    rng = np.random.default_rng(seed)
    return AperturePattern(rng.random(n), PatternFamily.UNIFORM, seed=seed)


####################### serialization #######################

def save_pattern(pattern: AperturePattern, base_path: str) -> tuple[str, str]:
    """Write <base>.txt (one decimal per line) and <base>.json descriptor.

    The text file round-trips exactly (repr of each float); the descriptor
    records family, n, seed and realized transmissivity plus any
    generator metadata.
    """
    txt_path = base_path + ".txt"
    json_path = base_path + ".json"
    with open(txt_path, "w") as fh:
        for v in pattern.values:
            fh.write(f"{int(v)}\n" if v in (0.0, 1.0) else f"{float(v)!r}\n")
    desc = {
        "family": pattern.family.value,
        "n": pattern.n,
        "seed": pattern.seed,
        "rho": pattern.rho,
    }
    if pattern.metadata:
        desc["metadata"] = {k: (list(v) if isinstance(v, tuple) else v)
                            for k, v in pattern.metadata.items()}
    with open(json_path, "w") as fh:
        json.dump(desc, fh, indent=2, sort_keys=True)
        fh.write("\n")
    return txt_path, json_path


def load_pattern(txt_path: str) -> AperturePattern:
    """Read a pattern text file (one value per line) written by save_pattern.

    If a sibling .json descriptor exists its family/seed are restored;
    otherwise the pattern is loaded as CUSTOM.
    """
    vals = []
    with open(txt_path) as fh:
        for lineno, line in enumerate(fh, start=1):
            if not line.strip():
                continue
            try:
                vals.append(float(line))
            except ValueError:
                raise InvalidArgumentError(
                    f"{txt_path}:{lineno}: not a number: {line.strip()!r}"
                ) from None
    if not vals:
        raise InvalidArgumentError(f"{txt_path}: no pattern entries found")
    family = PatternFamily.CUSTOM
    seed = None
    meta: dict = {}
    json_path = os.path.splitext(txt_path)[0] + ".json"
    if os.path.exists(json_path):
        try:
            with open(json_path) as fh:
                desc = json.load(fh)
            family = PatternFamily(desc.get("family", "custom"))
        except (json.JSONDecodeError, ValueError) as exc:
            raise InvalidArgumentError(f"{json_path}: bad descriptor: {exc}") from None
        seed = desc.get("seed")
        meta = desc.get("metadata", {})
    return AperturePattern(np.asarray(vals), family, seed=seed, metadata=meta)
