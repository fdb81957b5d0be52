"""Radial symmetric Levy kernels on the line and the Dirac-approximating
families driving the nonlocal-to-local limit, plus the complement weights
nu_K (essential infimum) and nu_K-ring (capped integral).

A kernel is described by its radial density nu(r), r > 0, together with the
structural data the quadrature layer needs: the exact power behavior near the
origin (nu ~ c r^theta), breakpoints where the density is non-smooth, the
support radius, and a closed-form one-sided tail  int_R^inf nu(r) dr.
"""

from dataclasses import dataclass, field
from typing import Callable

import numpy as np

from . import constants, quadrature

__all__ = [
    "KernelSpec",
    "WeightSpec",
    "NonIntegrableKernelError",
    "make_kernel",
    "fractional_kernel",
    "window_kernel",
    "log_window_kernel",
    "rescaled_kernel",
    "custom_kernel",
    "levy_integral",
    "concentration_mass",
    "symbol",
    "weight_eval",
]

FRACTIONAL_NORMALIZATIONS = ("exact", "stable", "half", "unnormalized")


class NonIntegrableKernelError(ValueError):
    """The density fails the p-Levy integrability condition."""


@dataclass(frozen=True)
class KernelSpec:
    """Immutable description of a radial symmetric Levy kernel in 1D.

    sing_power/sing_coef give the exact behavior nu(r) = sing_coef * r^sing_power
    on (0, sing_radius); singular_exponent is the order sigma with
    nu ~ r^(-d-sigma), so sigma = -sing_power - d.
    """

    d: int
    family: str
    p_order: float
    params: dict = field(compare=False)
    sing_power: float = 0.0
    sing_coef: float = 0.0
    sing_radius: float = np.inf
    support: float = np.inf
    breakpoints: tuple = ()
    far_coef: float = 0.0  # density ~ far_coef * r^far_power beyond far_radius
    far_power: float = 0.0
    far_radius: float = np.inf
    _density: Callable = field(default=None, repr=False, compare=False)
    _tail: Callable = field(default=None, repr=False, compare=False)

    @property
    def singular_exponent(self):
        return -self.sing_power - self.d

    def density(self, r):
        """Radial density at |h| = r (vectorized, r > 0)."""
        r = np.asarray(r, dtype=float)
        return self._density(np.abs(r))

    def tail_mass(self, radius):
        """One-sided tail  int_radius^inf nu(r) dr  (closed form)."""
        if radius >= self.support:
            return 0.0
        return float(self._tail(float(radius)))

    def smooth_factor(self, r):
        """nu(r) / (sing_coef r^sing_power) on (0, sing_radius); smooth there."""
        r = np.asarray(r, dtype=float)
        if self.sing_coef == 0.0:
            return np.zeros_like(r)
        return self._density(r) / (self.sing_coef * r**self.sing_power)

    def radially_nonincreasing(self):
        return self.family in ("fractional", "rescaled") or (
            self.family == "window" and self.params["beta"] <= self.p_order
        )


def _check_integrability(kernel):
    # local part: r^p nu(r) ~ r^(p + sing_power) must be integrable at 0
    if kernel.sing_coef > 0.0 and kernel.p_order + kernel.sing_power <= -1.0:
        raise NonIntegrableKernelError(
            f"r^p nu(r) ~ r^{kernel.p_order + kernel.sing_power} near 0 is not integrable"
        )
    if not np.isfinite(kernel.support):
        # tail must be finite
        if not np.isfinite(kernel.tail_mass(1.0)):
            raise NonIntegrableKernelError("kernel tail mass is infinite")


def fractional_kernel(alpha, d=1, normalization="exact", p=2.0):
    """Fractional kernel  nu(h) = c |h|^(-d-alpha)  with c per normalization:

    - "exact": the Fourier-exact norming constant (symbol |xi|^alpha),
    - "stable": alpha(2-alpha)/(2 |S^{d-1}|) (unit 2-Levy integral),
    - "half": half the exact constant,
    - "unnormalized": c = 1.
    """
    if not 0.0 < alpha < 2.0:
        raise ValueError(f"alpha must lie in (0, 2), got {alpha}")
    if normalization not in FRACTIONAL_NORMALIZATIONS:
        raise ValueError(f"unknown normalization {normalization!r}")
    if normalization == "exact":
        c = constants.frac_norming_constant(d, alpha)
    elif normalization == "stable":
        c = constants.stable_norming_constant(d, alpha)
    elif normalization == "half":
        c = 0.5 * constants.frac_norming_constant(d, alpha)
    else:
        c = 1.0
    power = -d - alpha

    def density(r):
        return c * r**power

    def tail(radius):
        return c * radius ** (-alpha) / alpha

    k = KernelSpec(
        d=d,
        family="fractional",
        p_order=p,
        params={"alpha": alpha, "normalization": normalization, "coef": c},
        sing_power=power,
        sing_coef=c,
        sing_radius=np.inf,
        support=np.inf,
        breakpoints=(),
        far_coef=c,
        far_power=power,
        far_radius=0.0,
        _density=density,
        _tail=tail,
    )
    _check_integrability(k)
    return k


def window_kernel(beta, eps, p=2.0, d=1):
    """Compact window family  nu(h) = (d+beta)/(|S^{d-1}| eps^{d+beta})
    |h|^(beta-p) 1_{|h|<=eps};  normalized to unit p-Levy integral for eps < 1.
    """
    if beta <= -d:
        raise ValueError(f"beta must exceed -d, got {beta}")
    if not 0.0 < eps < 1.0:
        raise ValueError(f"eps must lie in (0, 1), got {eps}")
    c = (d + beta) / (constants.sphere_area(d) * eps ** (d + beta))
    power = beta - p

    def density(r):
        r = np.asarray(r, dtype=float)
        return np.where(r <= eps, c * r**power, 0.0)

    def tail(radius):
        if radius >= eps:
            return 0.0
        if power == -1.0:
            return c * np.log(eps / radius)
        return c * (eps ** (power + 1.0) - radius ** (power + 1.0)) / (power + 1.0)

    k = KernelSpec(
        d=d,
        family="window",
        p_order=p,
        params={"beta": beta, "eps": eps, "coef": c},
        sing_power=power,
        sing_coef=c,
        sing_radius=eps,
        support=eps,
        breakpoints=(eps,),
        _density=density,
        _tail=tail,
    )
    _check_integrability(k)
    return k


def log_window_kernel(eps, eps0, p=2.0, d=1):
    """Annulus family  nu(h) = |h|^(-d-p) / (|S^{d-1}| log(eps0/eps))  on
    eps <= |h| <= eps0;  normalized for eps0 <= 1.  No singularity at 0."""
    if not 0.0 < eps < eps0 <= 1.0:
        raise ValueError("need 0 < eps < eps0 <= 1")
    c = 1.0 / (constants.sphere_area(d) * np.log(eps0 / eps))
    power = -d - p

    def density(r):
        r = np.asarray(r, dtype=float)
        return np.where((r >= eps) & (r <= eps0), c * r**power, 0.0)

    def tail(radius):
        lo = max(radius, eps)
        if lo >= eps0:
            return 0.0
        return c * (lo ** (power + 1.0) - eps0 ** (power + 1.0)) / (-power - 1.0)

    return KernelSpec(
        d=d,
        family="log_window",
        p_order=p,
        params={"eps": eps, "eps0": eps0, "coef": c},
        sing_power=0.0,
        sing_coef=0.0,
        sing_radius=eps,
        support=eps0,
        breakpoints=(eps, eps0),
        _density=density,
        _tail=tail,
    )


def rescaled_kernel(base, eps):
    """Rescaling of a unit-normalized kernel that concentrates its p-Levy mass
    at the origin:

        nu_eps(h) = eps^(-d-p) nu(h/eps)              |h| <= eps
                  = eps^(-d) |h|^(-p) nu(h/eps)       eps < |h| <= 1
                  = eps^(-d) nu(h/eps)                |h| > 1.
    """
    if not 0.0 < eps < 1.0:
        raise ValueError(f"eps must lie in (0, 1), got {eps}")
    d, p = base.d, base.p_order

    def density(r):
        r = np.asarray(r, dtype=float)
        inner = eps ** (-d - p) * base.density(r / eps)
        mid = eps ** (-d) * r ** (-p) * base.density(r / eps)
        outer = eps ** (-d) * base.density(r / eps)
        return np.where(r <= eps, inner, np.where(r <= 1.0, mid, outer))

    def tail(radius):
        total = 0.0
        if radius < eps:
            # inner region up to eps: eps^(-p) [base_tail(r/eps) - base_tail(1)]
            total += eps ** (-p) * (base.tail_mass(radius / eps) - base.tail_mass(1.0))
        if radius < 1.0:
            lo = max(radius, eps)
            # middle band, substitute z = r/eps: eps^(-p) int z^-p nu(z) dz
            x, w = quadrature.composite_rule(
                _band_edges(lo / eps, 1.0 / eps, base.breakpoints), order=12
            )
            if x.size:
                total += eps ** (-p) * (w * x ** (-p) * base.density(x)).sum()
        total += base.tail_mass(max(radius, 1.0) / eps)
        return total

    support = eps * base.support if np.isfinite(base.support) else np.inf
    bps = tuple(
        sorted(
            {eps * b for b in base.breakpoints if eps * b < support}
            | ({eps, 1.0} if support > eps else set())
        )
    )
    far_coef, far_power, far_radius = 0.0, 0.0, np.inf
    if not np.isfinite(base.support) and base.far_coef > 0.0:
        # outer branch: eps^(-d) nu(r/eps) = base.far_coef eps^(-d-far_power) r^far_power
        far_coef = base.far_coef * eps ** (-d - base.far_power)
        far_power = base.far_power
        far_radius = max(1.0, eps * base.far_radius)
    k = KernelSpec(
        d=d,
        family="rescaled",
        p_order=p,
        params={"eps": eps, "base": base.family, "base_params": dict(base.params)},
        sing_power=base.sing_power,
        sing_coef=base.sing_coef * eps ** (-d - p - base.sing_power),
        sing_radius=min(eps, eps * base.sing_radius),
        support=support,
        breakpoints=bps,
        far_coef=far_coef,
        far_power=far_power,
        far_radius=far_radius,
        _density=density,
        _tail=tail,
    )
    _check_integrability(k)
    return k


def custom_kernel(density, sing_power, sing_coef, sing_radius, p=2.0, support=np.inf,
                  breakpoints=(), tail=None, d=1):
    """Kernel from a user radial density; the tail defaults to adaptive panels
    against the declared decay (requires density integrable at infinity)."""

    if tail is None:

        def tail(radius):
            # panel out to where the remaining mass is negligible
            hi = max(10.0 * radius, 10.0)
            total, prev = 0.0, np.inf
            while hi < 1e12:
                x, w = quadrature.composite_rule(np.geomspace(max(radius, 1e-300), hi, 200), 10)
                total = (w * density(x)).sum()
                if abs(total - prev) <= 1e-12 * max(abs(total), 1.0):
                    break
                prev, hi = total, hi * 10.0
            return total

    k = KernelSpec(
        d=d,
        family="custom",
        p_order=p,
        params={},
        sing_power=sing_power,
        sing_coef=sing_coef,
        sing_radius=sing_radius,
        support=support,
        breakpoints=tuple(breakpoints),
        _density=density,
        _tail=tail,
    )
    _check_integrability(k)
    return k


def make_kernel(family, **params):
    """Dispatch constructor used by the CLI/JSON layer."""
    builders = {
        "fractional": fractional_kernel,
        "window": window_kernel,
        "log_window": log_window_kernel,
        "custom": custom_kernel,
    }
    if family == "rescaled":
        base = params.pop("base")
        if isinstance(base, dict):
            base = make_kernel(**base)
        return rescaled_kernel(base, **params)
    if family not in builders:
        raise ValueError(f"unknown kernel family {family!r}")
    return builders[family](**params)


# ---------------------------------------------------------------------------
# integrals of the density
# ---------------------------------------------------------------------------

def _singular_moment(kernel, r_hi, poly_power, order=30):
    """int_0^r_hi r^poly_power nu(r) dr  with the exact endpoint weight."""
    if kernel.sing_coef == 0.0:
        return 0.0
    r_hi = min(r_hi, kernel.sing_radius, kernel.support)
    if r_hi <= 0.0:
        return 0.0
    expo = poly_power + kernel.sing_power
    if expo <= -1.0:
        raise NonIntegrableKernelError(
            f"moment r^{poly_power} nu(r) diverges at the origin"
        )
    t, w = quadrature.jacobi_rule(0.0, r_hi, expo, order)
    return float((w * kernel.sing_coef * kernel.smooth_factor(t)).sum())


def _band_edges(lo, hi, breakpoints):
    """Panel edges on [lo, hi] split at breakpoints and log-graded within each
    segment so no panel spans more than a factor of 2 in radius."""
    seg = quadrature.split_edges(lo, hi, np.asarray(breakpoints, dtype=float))
    edges = []
    for a, b in zip(seg[:-1], seg[1:]):
        n = max(1, int(np.ceil(np.log2(b / max(a, 1e-300))))) if a > 0 else 8
        edges.append(np.geomspace(max(a, 1e-12 * b), b, n + 1) if a > 0 else np.linspace(a, b, n + 1))
        edges[-1][0] = a
    out = np.concatenate(edges)
    return np.unique(out)


def _smooth_band(kernel, lo, hi, fn=None, order=12):
    """int_lo^hi fn(r) nu(r) dr on a band away from the origin, split at
    kernel breakpoints and log-graded."""
    hi = min(hi, kernel.support)
    if hi <= lo:
        return 0.0
    x, w = quadrature.composite_rule(_band_edges(lo, hi, kernel.breakpoints), order)
    if x.size == 0:
        return 0.0
    vals = kernel.density(x)
    if fn is not None:
        vals = vals * fn(x)
    return float((w * vals).sum())


def levy_integral(kernel):
    """The p-Levy integral  int_R (1 ^ |h|^p) nu(h) dh; ~1 for normalized
    Dirac-approximating families."""
    p = kernel.p_order
    r_split = min(1.0, kernel.sing_radius)
    inner = _singular_moment(kernel, r_split, p)
    mid = _smooth_band(kernel, r_split, 1.0, fn=lambda r: r**p)
    tail = kernel.tail_mass(1.0)
    value = 2.0 * (inner + mid + tail)
    if not np.isfinite(value) or value > 1e30:
        raise NonIntegrableKernelError("p-Levy integral diverges")
    return value


def concentration_mass(kernel, delta):
    """Tail of the p-Levy integral:  int_{|h| >= delta} (1 ^ |h|^p) nu(h) dh."""
    if delta <= 0.0:
        raise ValueError("delta must be positive")
    if delta >= 1.0:
        return 2.0 * kernel.tail_mass(delta)
    band = _smooth_band(kernel, delta, 1.0, fn=lambda r: r**kernel.p_order)
    return 2.0 * (band + kernel.tail_mass(1.0))


def symbol(kernel, xi, order=40):
    """Fourier symbol (characteristic exponent)

        psi(xi) = int_R (1 - cos(xi h)) nu(h) dh,

    computed by singularity-subtracted quadrature plus an exact oscillatory
    tail; psi(0) = 0, psi even and nonnegative.
    """
    xi = abs(float(xi))
    if xi == 0.0:
        return 0.0
    r_split = min(1.0, kernel.sing_radius, kernel.support)

    def one_minus_cos(r):
        return 2.0 * np.sin(0.5 * xi * r) ** 2

    inner = 0.0
    if kernel.sing_coef > 0.0 and r_split > 0.0:
        t, w = quadrature.jacobi_rule(0.0, r_split, 2.0 + kernel.sing_power, order)
        f = one_minus_cos(t) / t**2 * kernel.sing_coef * kernel.smooth_factor(t)
        inner = float((w * f).sum())
    if np.isfinite(kernel.support):
        mid = _smooth_band(kernel, r_split, kernel.support, fn=one_minus_cos, order=24)
        return 2.0 * (inner + mid)
    # power tail: resolve oscillations on (r_split, X], exact series beyond
    if kernel.far_coef <= 0.0:
        raise ValueError("infinite-support kernel without declared far power law")
    periods = max(40, int(10 * xi))
    cutoff = max(2.0 * r_split, 2.0 * kernel.far_radius, np.pi * periods / xi)
    edges = quadrature.split_edges(
        r_split, cutoff,
        np.concatenate([np.array(kernel.breakpoints),
                        np.arange(1, int(cutoff * xi / np.pi) + 1) * np.pi / xi]),
    )
    x, w = quadrature.composite_rule(edges, order=10)
    mid = float((w * kernel.density(x) * one_minus_cos(x)).sum())
    tail = kernel.tail_mass(cutoff) - quadrature.osc_cos_tail(
        kernel.far_coef, -kernel.far_power, xi, cutoff
    )
    return 2.0 * (inner + mid + tail)


# ---------------------------------------------------------------------------
# complement weights
# ---------------------------------------------------------------------------

@dataclass(frozen=True)
class WeightSpec:
    """Weight on the complement derived from a kernel and a compact K inside
    the domain: kind "essinf" is nu_K(x) = essinf_{y in K} nu(x-y), kind
    "integral" is the capped mass int_K 1 ^ nu(x-y) dy."""

    kernel: KernelSpec
    K: tuple
    kind: str = "essinf"
    grid_samples: int = 10_000

    def __post_init__(self):
        k0, k1 = self.K
        if not k1 > k0:
            raise ValueError("K must have positive length")
        if self.kind not in ("essinf", "integral"):
            raise ValueError(f"unknown weight kind {self.kind!r}")


def _cap_crossings(kernel, lo, hi):
    """Radii in (lo, hi) where nu(r) = 1, found per smooth piece by bisection."""
    edges = quadrature.split_edges(lo, hi, np.array(kernel.breakpoints))
    roots = []
    with np.errstate(over="ignore", divide="ignore"):
        fvals = [kernel.density(a * (1 + 1e-12)) - 1.0 for a in edges[:-1]]
        fvals_hi = [kernel.density(b * (1 - 1e-12)) - 1.0 for b in edges[1:]]
    for a, b, fa, fb in zip(edges[:-1], edges[1:], fvals, fvals_hi):
        if fa * fb < 0.0:
            x, y = a, b
            for _ in range(200):
                m = 0.5 * (x + y)
                if (kernel.density(m) - 1.0) * fa > 0.0:
                    x = m
                else:
                    y = m
            roots.append(0.5 * (x + y))
    return roots


def weight_eval(weight, x):
    """Evaluate a complement weight at a point x."""
    kernel = weight.kernel
    k0, k1 = weight.K
    x = float(x)
    if weight.kind == "essinf":
        if kernel.radially_nonincreasing():
            far = max(abs(x - k0), abs(x - k1))
            return float(kernel.density(far))
        ys = np.linspace(k0, k1, weight.grid_samples)
        r = np.abs(x - ys)
        r = r[r > 0]
        return float(kernel.density(r).min())
    # integral kind: int_K 1 ^ nu(x - y) dy, integrand capped and kinked at
    # the radii where nu crosses 1 and at kernel breakpoints
    rmin = 0.0 if k0 <= x <= k1 else min(abs(x - k0), abs(x - k1))
    rmax = max(abs(x - k0), abs(x - k1))
    crossings = _cap_crossings(kernel, max(rmin, 1e-300), rmax)
    special = []
    for r in list(crossings) + list(kernel.breakpoints) + [kernel.support]:
        for y in (x - r, x + r):
            if k0 < y < k1:
                special.append(y)
    if k0 < x < k1:
        special.append(x)
    edges = quadrature.split_edges(k0, k1, np.array(special))
    ys, w = quadrature.composite_rule(edges, order=12)
    vals = np.minimum(1.0, kernel.density(np.maximum(np.abs(x - ys), 1e-300)))
    return float((w * vals).sum())
