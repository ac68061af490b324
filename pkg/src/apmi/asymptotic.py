"""Large-n mutual information predictors and transmissivity optimizers.

Random-mask MI concentrates as n grows: the bulk eigenvalue distribution of
the circulant only depends on the entry mean and variance, so the per-pixel
MI of on-off and gray random masks tends to a closed expectation over an
exponential (chi-squared with 2 dof, halved) spectral density.  Every such
expectation is routed through a single audited kernel:

    explog_exp1(c) = E_{Y ~ Exp(1)}[log(c Y + 1)] = e^(1/c) E1(1/c)

All predictor values are in nats.  Per-pixel predictors describe the bulk
(DC-excluded) per-pixel MI; the 1/f-prior predictors return total MI and
include the DC term explicitly.
"""

import math
from dataclasses import dataclass

import numpy as np
from scipy import integrate, special

from .errors import InvalidArgumentError

__all__ = [
    "PredictionResult",
    "explog_exp1",
    "predict_pinhole",
    "predict_flat_iid",
    "predict_bernoulli_iid",
    "optimal_p_iid",
    "predict_uniform_iid",
    "predict_flat_onef",
    "predict_gaussian_onef",
    "predict_bernoulli_onef",
    "optimal_p_onef",
]

# Documented numerical contract of the kernel and the Gaussian quadrature.
EXPLOG_ABS_TOL = 1e-10
GAUSS_QUAD_ABS_TOL = 1e-8
GAUSS_TRUNC_SD = 10.0

# Below this c the exp(1/c)*E1(1/c) product would overflow/underflow;
# an 8-term asymptotic series is accurate to ~1e-21 there.
_SERIES_CUTOFF = 1.0 / 600.0


@dataclass(frozen=True)
class PredictionResult:
    """An asymptotic MI prediction.

    value         : predicted MI in nats
    kind          : "per_pixel" or "total"
    method        : "closed_form" or "quadrature"
    est_abs_error : bound on the numerical error of `value`
                    (0.0 for closed forms)
    """

    value: float
    kind: str
    method: str
    est_abs_error: float = 0.0


def explog_exp1(c: float) -> float:
    """E[log(c*Y + 1)] for Y ~ Exp(1), c >= 0.

    Uses the exponential-integral identity e^(1/c) E1(1/c); for c below
    ~1/600 the product is numerically degenerate and an asymptotic series
    c - c^2 + 2c^3 - ... (truncation error <= 9! c^10) takes over.
    Absolute error is far below EXPLOG_ABS_TOL everywhere.
    """
    if not np.isfinite(c) or c < 0:
        raise InvalidArgumentError(f"need finite c >= 0, got {c}")
    if c == 0.0:
        return 0.0
    if c < _SERIES_CUTOFF:
        acc = 0.0
        term = c
        for k in range(1, 9):
            acc += term
            term *= -k * c
        return acc
    x = 1.0 / c
    return float(math.exp(x) * special.exp1(x))


def _check_noise(W: float, J: float) -> None:
    if not (np.isfinite(W) and np.isfinite(J)) or W < 0 or J < 0:
        raise InvalidArgumentError(f"need finite W >= 0 and J >= 0, got W={W}, J={J}")


def _check_odd_n(n: int) -> None:
    if n < 5 or n % 2 == 0:
        raise InvalidArgumentError(
            f"the 1/f-prior formulas need odd n >= 5, got {n}")


####################### IID-prior (white scene) predictors #######################

def predict_pinhole(n: int, W: float, J: float) -> PredictionResult:
    """Exact per-pixel MI of the n-element pinhole: log(1/(n W + J) + 1)."""
    _check_noise(W, J)
    if n < 1:
        raise InvalidArgumentError(f"need n >= 1, got {n}")
    if n * W + J == 0:
        raise InvalidArgumentError("n*W + J must be positive")
    return PredictionResult(math.log1p(1.0 / (n * W + J)), "per_pixel", "closed_form")


def predict_flat_iid(W: float, J: float) -> PredictionResult:
    """Large-n per-pixel MI of a spectrally flat half-open mask.

    Bulk eigenvalue power is (n+1)/4 ~ n/4 and rho -> 1/2, giving
    log((1/4)/(W + J/2) + 1).
    """
    _check_noise(W, J)
    if W + J / 2 == 0:
        raise InvalidArgumentError("W + J/2 must be positive")
    return PredictionResult(math.log1p(0.25 / (W + J / 2.0)), "per_pixel", "closed_form")


def predict_bernoulli_iid(p: float, W: float, J: float) -> PredictionResult:
    """Large-n bulk per-pixel MI of a random on-off mask with open fraction p.

    The bulk spectrum |lambda_k|^2/n tends to p(1-p) * Exp(1), so the
    per-pixel MI tends to explog_exp1(p(1-p) / (W + p J)).
    """
    _check_noise(W, J)
    if not 0.0 <= p <= 1.0:
        raise InvalidArgumentError(f"p must lie in [0, 1], got {p}")
    if W + p * J == 0:
        raise InvalidArgumentError("W + p*J must be positive")
    c = p * (1.0 - p) / (W + p * J)
    return PredictionResult(explog_exp1(c), "per_pixel", "quadrature",
                            est_abs_error=EXPLOG_ABS_TOL)


def optimal_p_iid(W: float, J: float) -> float:
    """Open fraction maximizing the on-off bulk MI under the IID prior.

    Closed form (W/J) (sqrt(1 + J/W) - 1): the argmax of
    c(p) = p(1-p)/(W + pJ), i.e. the root of p^2 J + 2 p W - W = 0 in (0, 1/2].
    Shot-dominant noise (W << J) drives p* toward sqrt(W/J); thermal-dominant
    noise drives it toward 1/2.
    """
    _check_noise(W, J)
    if W <= 0 or J <= 0:
        raise InvalidArgumentError("closed form needs W > 0 and J > 0")
    return float(W / J * (math.sqrt(1.0 + J / W) - 1.0))


def predict_uniform_iid(W: float, J: float, bulk_variance: float = 1.0 / 24.0) -> PredictionResult:
    """Large-n bulk per-pixel MI of a uniform [0,1] gray mask.

    explog_exp1(bulk_variance / (W + J/2)); rho -> 1/2.  The bulk variance
    of the limiting spectrum is configurable: the default 1/24 reproduces
    the published constant, while the entry variance of Uniform[0,1] is
    1/12 (the value the simulations in the acceptance suite validate).
    """
    _check_noise(W, J)
    if bulk_variance <= 0:
        raise InvalidArgumentError(f"bulk_variance must be positive, got {bulk_variance}")
    if W + J / 2 == 0:
        raise InvalidArgumentError("W + J/2 must be positive")
    c = bulk_variance / (W + J / 2.0)
    return PredictionResult(explog_exp1(c), "per_pixel", "quadrature",
                            est_abs_error=EXPLOG_ABS_TOL)


####################### 1/f-prior (natural scene) predictors #######################

def predict_flat_onef(n: int, W: float, J: float, form: str = "midsum") -> PredictionResult:
    """Total MI of a flat half-open mask under the 1/f prior (odd n).

    form="midsum": DC term plus twice the sum over the paired bulk
    frequencies,

        log((n/4)/(W+J/2) + 1) + 2 sum_{k=2}^{(n-1)/2} log((1/4)/(W+J/2)/k + 1)

    form="closed": the further approximation
    log(n/4 / (W+J/2)) + (1/2)/(W+J/2) * (log(n/2) - 1), which makes the
    O(log n) growth explicit.
    """
    _check_noise(W, J)
    _check_odd_n(n)
    if W + J / 2 == 0:
        raise InvalidArgumentError("W + J/2 must be positive")
    g = 1.0 / (W + J / 2.0)
    if form == "midsum":
        k = np.arange(2, (n - 1) // 2 + 1)
        value = math.log1p(g * n / 4.0) + 2.0 * float(np.log1p(g / 4.0 / k).sum())
    elif form == "closed":
        value = math.log(g * n / 4.0) + g / 2.0 * (math.log(n / 2.0) - 1.0)
    else:
        raise InvalidArgumentError(f"form must be 'midsum' or 'closed', got {form!r}")
    return PredictionResult(value, "total", "closed_form")


def _normal_expect_log(gamma_: float, sd: float, mean: float,
                       abs_tol: float = GAUSS_QUAD_ABS_TOL) -> tuple[float, float]:
    """E_G[log(gamma*(sd*G + mean)^2 + 1)] over G ~ N(0,1), truncated at
    +-GAUSS_TRUNC_SD standard deviations (tail contribution < 1e-20)."""
    norm = 1.0 / math.sqrt(2.0 * math.pi)

    def integrand(g):
        return math.log1p(gamma_ * (sd * g + mean) ** 2) * norm * math.exp(-0.5 * g * g)

    val, err = integrate.quad(integrand, -GAUSS_TRUNC_SD, GAUSS_TRUNC_SD,
                              epsabs=abs_tol, epsrel=1e-10, limit=200)
    return float(val), float(err)


def predict_gaussian_onef(n: int, W: float, rho_j_product: float) -> PredictionResult:
    """Expected total MI of a circulant with IID standard-Gaussian row entries
    under the 1/f prior, at fixed inverse noise gamma = 1/(W + rho_j_product).

    The DC gain satisfies lambda_1^2/n ~ G^2 with G standard normal, and each
    paired bulk frequency contributes a chi-squared(2 dof) term:

        E_G[log(gamma G^2 + 1)] + 2 sum_{k=2}^{(n-1)/2} explog_exp1(gamma / k)
    """
    _check_noise(W, rho_j_product)
    _check_odd_n(n)
    if W + rho_j_product == 0:
        raise InvalidArgumentError("W + rho_j_product must be positive")
    g = 1.0 / (W + rho_j_product)
    dc, dc_err = _normal_expect_log(g, sd=1.0, mean=0.0)
    ks = range(2, (n - 1) // 2 + 1)
    bulk = 2.0 * math.fsum(explog_exp1(g / k) for k in ks)
    err = dc_err + 2 * len(ks) * EXPLOG_ABS_TOL
    return PredictionResult(dc + bulk, "total", "quadrature", est_abs_error=err)


def predict_bernoulli_onef(n: int, p: float, W: float, J: float) -> PredictionResult:
    """Expected total MI of a random on-off mask under the 1/f prior (odd n).

    DC term: E_G[log(gamma (sqrt(p(1-p)) G + p sqrt(n))^2 + 1)] by normal
    quadrature (lambda_1/sqrt(n) is asymptotically normal with mean p sqrt(n)
    and variance p(1-p)); bulk: 2 sum_{k=2}^{(n-1)/2}
    explog_exp1(p(1-p) gamma / k), with gamma = 1/(W + pJ).
    """
    _check_noise(W, J)
    _check_odd_n(n)
    if not 0.0 <= p <= 1.0:
        raise InvalidArgumentError(f"p must lie in [0, 1], got {p}")
    if W + p * J == 0:
        raise InvalidArgumentError("W + p*J must be positive")
    g = 1.0 / (W + p * J)
    dc, dc_err = _normal_expect_log(g, sd=math.sqrt(p * (1.0 - p)), mean=p * math.sqrt(n))
    ks = range(2, (n - 1) // 2 + 1)
    bulk = 2.0 * math.fsum(explog_exp1(p * (1.0 - p) * g / k) for k in ks)
    err = dc_err + 2 * len(ks) * EXPLOG_ABS_TOL
    return PredictionResult(dc + bulk, "total", "quadrature", est_abs_error=err)


####################### transmissivity optimization #######################

_R_GOLDEN = (math.sqrt(5.0) - 1.0) / 2.0


def _golden_max(f, lo: float, hi: float, tol: float) -> float:
    """Golden-section search for the maximizer of a unimodal f on [lo, hi]."""
    x1 = hi - _R_GOLDEN * (hi - lo)
    x2 = lo + _R_GOLDEN * (hi - lo)
    f1, f2 = f(x1), f(x2)
    while hi - lo > tol:
        if f1 < f2:
            lo, x1, f1 = x1, x2, f2
            x2 = lo + _R_GOLDEN * (hi - lo)
            f2 = f(x2)
        else:
            hi, x2, f2 = x2, x1, f1
            x1 = hi - _R_GOLDEN * (hi - lo)
            f1 = f(x1)
    return 0.5 * (lo + hi)


def optimal_p_onef(n: int, W: float, J: float, tol: float = 1e-4) -> float:
    """Open fraction maximizing the on-off total-MI prediction under the
    1/f prior, by golden-section search over p in (0.005, 0.995)."""
    _check_noise(W, J)
    _check_odd_n(n)

    def objective(p):
        return predict_bernoulli_onef(n, p, W, J).value

    return _golden_max(objective, 0.005, 0.995, tol)
