"""Closed-form special constants of the nonlocal-to-local theory.

All constants are ratios of Gamma values; the Gamma function itself is
implemented here (Lanczos approximation with reflection) so the package has
no special-function dependency on its critical path.
"""

from dataclasses import dataclass

import numpy as np

from . import quadrature

__all__ = [
    "gamma_fn",
    "frac_norming_constant",
    "bbm_constant",
    "sphere_area",
    "riesz_constant",
    "stable_norming_constant",
    "cds_inverse_quadrature",
    "ConstantReport",
    "constant_report",
]

# Lanczos coefficients, g = 7, n = 9 (double precision classic set).
_LANCZOS_G = 7.0
_LANCZOS_C = (
    0.99999999999980993,
    676.5203681218851,
    -1259.1392167224028,
    771.32342877765313,
    -176.61502916214059,
    12.507343278686905,
    -0.13857109526572012,
    9.9843695780195716e-6,
    1.5056327351493116e-7,
)


class GammaPoleError(ValueError):
    """Gamma evaluated at a non-positive integer."""


def gamma_fn(x):
    """Euler Gamma function for real x, poles excluded.

    Lanczos approximation on x >= 0.5, reflection formula below.  Relative
    accuracy ~1e-13 over [1e-3, 50].
    """
    x = float(x)
    if x <= 0.0 and x == np.floor(x):
        raise GammaPoleError(f"Gamma has a pole at {x}")
    if x < 0.5:
        # reflection: Gamma(x) Gamma(1-x) = pi / sin(pi x)
        return np.pi / (np.sin(np.pi * x) * gamma_fn(1.0 - x))
    z = x - 1.0
    acc = _LANCZOS_C[0]
    for i, c in enumerate(_LANCZOS_C[1:], start=1):
        acc += c / (z + i)
    t = z + _LANCZOS_G + 0.5
    return np.sqrt(2.0 * np.pi) * t ** (z + 0.5) * np.exp(-t) * acc


def sphere_area(d):
    """Surface measure of the unit sphere in R^d (two points for d = 1)."""
    if d < 1:
        raise ValueError("dimension must be >= 1")
    return 2.0 * np.pi ** (d / 2.0) / gamma_fn(d / 2.0)


def frac_norming_constant(d, alpha):
    """Norming constant of the fractional Laplacian of order alpha in R^d,

        C = 2^alpha Gamma((d+alpha)/2) / (pi^(d/2) |Gamma(-alpha/2)|),

    chosen so that its Fourier symbol is |xi|^alpha.
    """
    if not 0.0 < alpha < 2.0:
        raise ValueError(f"alpha must lie in (0, 2), got {alpha}")
    if d < 1:
        raise ValueError("dimension must be >= 1")
    s = alpha / 2.0
    # |Gamma(-s)| = Gamma(1 - s) / s for s in (0, 1)
    abs_gamma_neg = gamma_fn(1.0 - s) / s
    return 2.0 ** alpha * gamma_fn((d + alpha) / 2.0) / (np.pi ** (d / 2.0) * abs_gamma_neg)


def stable_norming_constant(d, alpha):
    """Coefficient a = alpha (2-alpha) / (2 |S^(d-1)|) of the normalized
    alpha-stable family (unit 2-Levy integral)."""
    if not 0.0 < alpha < 2.0:
        raise ValueError(f"alpha must lie in (0, 2), got {alpha}")
    return alpha * (2.0 - alpha) / (2.0 * sphere_area(d))


def bbm_constant(d, p):
    """Spherical average of |w.e|^p over the unit sphere,

        K = Gamma(d/2) Gamma((p+1)/2) / (Gamma(1/2) Gamma((p+d)/2)),

    the factor governing the nonlocal-to-local seminorm limit.
    """
    if d < 1 or p < 1:
        raise ValueError("need d >= 1 and p >= 1")
    return gamma_fn(d / 2.0) * gamma_fn((p + 1.0) / 2.0) / (
        gamma_fn(0.5) * gamma_fn((p + d) / 2.0)
    )


def riesz_constant(d, a):
    """Normalizing constant of the Riesz potential, printed form

        gamma = pi^(d/2 - a) Gamma(d/2) / Gamma((d-a)/2).

    Note: this is the closed form as printed in the source material; the
    conventional Riesz constant carries additional 2^a and Gamma(a/2)
    factors.  We evaluate the printed form verbatim and do not correct it.
    """
    if not 0.0 < a < d:
        raise ValueError(f"order must lie in (0, d), got a={a}, d={d}")
    return np.pi ** (d / 2.0 - a) * gamma_fn(d / 2.0) / gamma_fn((d - a) / 2.0)


def cds_inverse_quadrature(alpha, order=40, cutoff_periods=80):
    """Quadrature value of  int_R (1 - cos t) |t|^(-1-alpha) dt  (= 1/C_{1,alpha}).

    Near zero: Gauss-Jacobi with the exact weight t^(1-alpha); the smooth
    factor (1 - cos t)/t^2 is evaluated stably via sin(t/2).  On (1, cutoff):
    plain panels.  The cosine tail beyond the cutoff is summed by an exact
    integration-by-parts series.
    """
    # (0, 1]: (1 - cos t) t^(-1-alpha) = t^(1-alpha) * f(t),  f = (1-cos t)/t^2
    t, w = quadrature.jacobi_rule(0.0, 1.0, 1.0 - alpha, order)
    f = 2.0 * np.sin(0.5 * t) ** 2 / t**2
    inner = (w * f).sum()
    # (1, X]: smooth oscillatory, one panel per half period
    cutoff = np.pi * cutoff_periods
    edges = np.linspace(1.0, cutoff, 2 * cutoff_periods + 1)
    x, w = quadrature.composite_rule(edges, order=10)
    mid = (w * (1.0 - np.cos(x)) * x ** (-1.0 - alpha)).sum()
    # (X, inf): int nu - int cos(t) nu(t)
    tail = cutoff ** (-alpha) / alpha - quadrature.osc_cos_tail(1.0, 1.0 + alpha, 1.0, cutoff)
    return 2.0 * (inner + mid + tail)


@dataclass
class ConstantReport:
    """One evaluated constant, optionally cross-checked by quadrature."""

    name: str
    d: int
    parameter: float
    value: float
    quadrature_value: float | None = None
    abs_gap: float | None = None

    def __post_init__(self):
        if not np.isfinite(self.value):
            raise ValueError(f"constant {self.name} is not finite")
        if self.quadrature_value is not None:
            self.abs_gap = abs(self.value - self.quadrature_value)


def constant_report(name, d, parameter, with_quadrature=True):
    """Evaluate a named constant and, where available, its quadrature check."""
    if name == "cd_alpha":
        value = frac_norming_constant(d, parameter)
        quad = None
        if with_quadrature and d == 1:
            quad = 1.0 / cds_inverse_quadrature(parameter)
        return ConstantReport(name, d, parameter, value, quad)
    if name == "stable_a":
        return ConstantReport(name, d, parameter, stable_norming_constant(d, parameter))
    if name == "bbm_k":
        return ConstantReport(name, d, parameter, bbm_constant(d, parameter))
    if name == "sphere_area":
        return ConstantReport(name, d, parameter, sphere_area(d))
    if name == "riesz_gamma":
        return ConstantReport(name, d, parameter, riesz_constant(d, parameter))
    raise ValueError(f"unknown constant {name!r}")
