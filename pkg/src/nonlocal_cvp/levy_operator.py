"""Pointwise evaluation of the Levy operator L and the nonlocal normal
derivative N, plus a quadrature-level check of the nonlocal Green-Gauss
identity.

L is evaluated exclusively through the second-difference representation

    Lu(x) = -1/2 int (u(x+h) + u(x-h) - 2 u(x)) nu(h) dh
          = -int_0^inf D2u(x, h) nu(h) dh,

which needs no principal value: |D2u| <= C h^2 near the origin.
"""

import numpy as np

from . import quadrature
from .fields import RegularityError

__all__ = ["apply_L", "apply_N", "green_gauss_residual", "energy_pairing",
           "complement_pairing", "SingularEvaluationError"]


class SingularEvaluationError(ValueError):
    """Evaluation point sits on the boundary where the kernel is singular."""


def _second_difference(u, x, h):
    return u(x + h) + u(x - h) - 2.0 * float(u(np.array(x)))


def _breakpoint_radii(u, x):
    radii = sorted({abs(b - x) for b in u.breakpoints})
    return [r for r in radii if r > 1e-14]


def _far_radius(u, x):
    """Radius beyond which u(x +- h) vanishes, or None for global fields."""
    if u.support is None:
        return None
    lo, hi = u.support
    return max(abs(x - lo), abs(x - hi))


def _euler_tail(terms):
    """Limit of the partial sums of a (nearly) alternating series by repeated
    averaging of the last partial sums."""
    s = np.cumsum(terms)
    tail = s[-12:] if s.size >= 12 else s
    while tail.size > 1:
        tail = 0.5 * (tail[ :-1] + tail[1:])
    return float(tail[0])


def _far_second_difference(kernel, u, x, from_radius, tol):
    """-int_from^inf D2u(x, h) nu(h) dh  (the far part of Lu)."""
    far = _far_radius(u, x)
    ux = float(u(np.array(x)))
    if far is not None and from_radius >= far:
        return 2.0 * ux * kernel.tail_mass(from_radius)
    if far is not None:
        # integrate the live part, then the exact constant tail
        edges = quadrature.split_edges(from_radius, far, np.array(kernel.breakpoints))
        x_, w = quadrature.composite_rule(
            np.unique(np.concatenate([edges, np.geomspace(from_radius, far, 40)])), 10
        )
        live = -(w * _second_difference(u, x, x_) * kernel.density(x_)).sum()
        return float(live) + 2.0 * ux * kernel.tail_mass(far)
    freq = getattr(u, "osc_freq", None)
    if freq:
        # split off the constant part:  -D2 = 2 u(x) - [u(x+h) + u(x-h)];
        # the bracket is purely oscillatory, so half-period panels give an
        # alternating series the Euler transform sums accurately.
        half = np.pi / freq
        edges = from_radius + half * np.arange(129.0)
        terms = []
        for lo, hi in zip(edges[:-1], edges[1:]):
            xq, wq = quadrature.gauss_rule(lo, hi, 10)
            pair = u(x + xq) + u(x - xq)
            terms.append(-(wq * pair * kernel.density(xq)).sum())
        return 2.0 * ux * kernel.tail_mass(from_radius) + _euler_tail(np.array(terms))
    # bounded, non-oscillatory far field: integrate -D2 nu on log panels out
    # to where the neglected remainder is below the tolerance budget
    bound = getattr(u, "bound", 1.0)
    target = tol / (10.0 * max(1.0, 6.0 * bound))
    hi = from_radius
    while kernel.tail_mass(hi) > target and hi < 1e12:
        hi *= 10.0
    x_, w = quadrature.composite_rule(np.geomspace(from_radius, hi, 150), 10)
    return -float((w * _second_difference(u, x, x_) * kernel.density(x_)).sum())


def apply_L(kernel, u, x, tol=1e-8, order=40):
    """Pointwise Lu(x) by graded second-difference quadrature.

    Requires a field that is C2 near x; P1-discrete fields are rejected
    (their kinks make the pointwise operator ill-defined at nodes).
    """
    if not u.is_pointwise_smooth():
        raise RegularityError("pointwise L needs a C2-bounded field, got P1-discrete")
    x = float(x)
    bp_radii = _breakpoint_radii(u, x)
    if u.breakpoints and min(abs(b - x) for b in u.breakpoints) < 1e-12:
        raise RegularityError(f"field is not C2 at x = {x}")

    # inner radius: stop before the first field kink and the kernel's
    # smooth-power radius
    r_in = min(1.0, kernel.sing_radius, kernel.support)
    if bp_radii:
        r_in = min(r_in, 0.5 * bp_radii[0])
    inner = 0.0
    if kernel.sing_coef > 0.0 and r_in > 0.0:
        t, w = quadrature.jacobi_rule(0.0, r_in, 2.0 + kernel.sing_power, order)
        psi = _second_difference(u, x, t) / t**2
        inner = -float((w * psi * kernel.sing_coef * kernel.smooth_factor(t)).sum())
    elif kernel.sing_coef == 0.0:
        r_in = min(kernel.sing_radius, kernel.support)

    # middle: out to a few units (or the support), geometric clusters at the
    # field kink radii, splits at kernel breakpoints
    far_r = _far_radius(u, x)
    r_mid = max(4.0, 2.0 * r_in)
    if far_r is not None:
        r_mid = max(r_in, far_r)
    if np.isfinite(kernel.support):
        r_mid = min(r_mid, kernel.support)
    mid = 0.0
    if r_mid > r_in:
        special = list(kernel.breakpoints) + bp_radii
        edges = [quadrature.split_edges(r_in, r_mid, np.array(special)),
                 np.geomspace(r_in, r_mid, 40)]
        for pt in special:
            if r_in <= pt <= r_mid:
                gap = 0.2 * (r_mid - r_in)
                edges.append(pt - gap * 2.0 ** -np.arange(28.0))
                edges.append(pt + gap * 2.0 ** -np.arange(28.0))
        all_edges = np.concatenate(edges)
        all_edges = np.unique(all_edges[(all_edges >= r_in) & (all_edges <= r_mid)])
        x_, w = quadrature.composite_rule(all_edges, 10)
        mid = -float((w * _second_difference(u, x, x_) * kernel.density(x_)).sum())

    far = 0.0
    if not np.isfinite(kernel.support) or r_mid < kernel.support:
        far = _far_second_difference(kernel, u, x, r_mid, tol)
    return inner + mid + far


def apply_N(kernel, omega, u, y, order=12):
    """Nonlocal normal derivative  Nu(y) = int_omega (u(x) - u(y)) nu(x-y) dx
    for y strictly outside the closure of omega."""
    a, b = omega
    y = float(y)
    if a <= y <= b:
        if y in (a, b) or abs(y - a) < 1e-14 or abs(y - b) < 1e-14:
            raise SingularEvaluationError(
                "N is evaluated on the open complement; the kernel is singular on the boundary"
            )
        raise ValueError("evaluation point lies inside omega")
    uy = float(u(np.array(y)))
    near = a if y < a else b
    dist = max(abs(y - near), 1e-300)
    special = [p for p in u.breakpoints if a < p < b]
    for r in list(kernel.breakpoints) + [kernel.support]:
        for cand in (y - r, y + r):
            if a < cand < b:
                special.append(cand)
    base = quadrature.split_edges(a, b, np.array(special))
    # dyadic panels from the near endpoint at multiples of dist(y, boundary),
    # so the kernel varies boundedly on every panel
    offs = dist * 2.0 ** np.arange(0.0, 60.0)
    offs = offs[offs < b - a]
    inward = np.sign((a + b) / 2 - near)
    cluster = near + inward * offs
    edges = np.unique(np.concatenate([base, cluster[(cluster > a) & (cluster < b)]]))
    x, w = quadrature.composite_rule(edges, order)
    r = np.abs(x - y)
    vals = (u(x) - uy) * kernel.density(r)
    return float((w * vals).sum())


def _pair_difference(u, v, x, h):
    """(u(x)-u(x+h))(v(x)-v(x+h)) + (u(x)-u(x-h))(v(x)-v(x-h)), vectorized in h."""
    ux, vx = float(u(np.array(x))), float(v(np.array(x)))
    return (ux - u(x + h)) * (vx - v(x + h)) + (ux - u(x - h)) * (vx - v(x - h))


def energy_pairing(kernel, omega, u, v, order=24, tol=1e-9):
    """Continuum bilinear form

        E(u, v) = 1/2 iint_{(Oc x Oc)^c} (u(x)-u(y))(v(x)-v(y)) nu(x-y)

    by nested quadrature, written as  iint_{omega x R} - 1/2 iint_{omega x omega}.
    Requires v of compact support so the outer-in-y part truncates exactly.
    """
    if v.support is None:
        raise ValueError("energy_pairing needs a compactly supported test field")
    a, b = omega
    # the inner integrals have dist^(2-sigma) endpoint behavior in x: grade
    # the outer rule into both boundary points
    mid = 0.5 * (a + b)
    edges = np.unique(np.concatenate([
        quadrature.geometric_panels(a, mid, toward=a, n_panels=18),
        quadrature.geometric_panels(mid, b, toward=b, n_panels=18),
    ]))
    xs, xw = quadrature.composite_rule(edges, order=10)

    vals_ar = np.empty_like(xs)   # inner integral over y in R
    vals_aa = np.empty_like(xs)   # inner integral over y in omega
    for i, x in enumerate(xs):
        # --- y over R via h = y - x, both signs folded: 0..inf
        r_in = min(1.0, kernel.sing_radius, kernel.support)
        bp = _breakpoint_radii(u, x) + _breakpoint_radii(v, x)
        if bp:
            r_in = min(r_in, 0.5 * min(bp))
        acc = 0.0
        if kernel.sing_coef > 0.0 and r_in > 0.0:
            t, w = quadrature.jacobi_rule(0.0, r_in, 2.0 + kernel.sing_power, order)
            f = _pair_difference(u, v, x, t) / t**2
            acc += float((w * f * kernel.sing_coef * kernel.smooth_factor(t)).sum())
        r_v = _far_radius(v, x)
        r_mid = max(r_v, 2.0 * r_in)
        if np.isfinite(kernel.support):
            r_mid = min(r_mid, kernel.support)
        if r_mid > r_in:
            special = list(kernel.breakpoints) + bp
            edges = quadrature.split_edges(r_in, r_mid, np.array(special))
            t, w = quadrature.composite_rule(
                np.unique(np.concatenate([edges, np.geomspace(r_in, r_mid, 30)])), 10
            )
            acc += float((w * _pair_difference(u, v, x, t) * kernel.density(t)).sum())
        # beyond the support of v: (u(x)-u(y)) v(x), the far part of Lu times v(x)
        vx = float(v(np.array(x)))
        if (not np.isfinite(kernel.support)) or r_mid < kernel.support:
            if vx != 0.0:
                acc += vx * _far_second_difference(kernel, u, x, r_mid, tol)
        vals_ar[i] = acc

        # --- y over omega: h in (0, x-a) and (0, b-x) one-sided
        acc2 = 0.0
        for lo_len, sgn in ((x - a, -1.0), (b - x, 1.0)):
            if lo_len <= 0:
                continue
            r1 = min(lo_len, kernel.sing_radius, kernel.support)
            if bp:
                r1 = min(r1, 0.5 * min(bp))
            if kernel.sing_coef > 0.0 and r1 > 0.0:
                t, w = quadrature.jacobi_rule(0.0, r1, 2.0 + kernel.sing_power, order)
                du = (float(u(np.array(x))) - u(x + sgn * t)) / t
                dv = (float(v(np.array(x))) - v(x + sgn * t)) / t
                acc2 += float((w * du * dv * kernel.sing_coef * kernel.smooth_factor(t)).sum())
                r_start = r1
            else:
                r_start = min(kernel.sing_radius, lo_len)
            if lo_len > r_start and r_start < kernel.support:
                hi = min(lo_len, kernel.support)
                special = list(kernel.breakpoints) + bp
                edges = quadrature.split_edges(r_start, hi, np.array(special))
                t, w = quadrature.composite_rule(
                    np.unique(np.concatenate([edges, np.geomspace(r_start, hi, 25)])), 10
                )
                du = float(u(np.array(x))) - u(x + sgn * t)
                dv = float(v(np.array(x))) - v(x + sgn * t)
                acc2 += float((w * du * dv * kernel.density(t)).sum())
        vals_aa[i] = acc2

    return float((xw * (vals_ar - 0.5 * vals_aa)).sum())


def complement_pairing(kernel, omega, u, v, collar, order=10):
    """Flux pairing  int_{Oc} (Nu)(y) v(y) dy  over the collar where v lives.

    Uses the outward normal-derivative sign  Nu(y) = int_omega (u(y) - u(x))
    nu(x-y) dx, the one under which the Green-Gauss identity closes (the
    inward-difference integrand of apply_N is its negative).
    """
    a, b = omega
    # Nu blows up like dist^(1-sigma) at the boundary; use an exponent-matched
    # Jacobi panel innermost, geometric panels beyond
    expo = min(0.0, 1.0 - kernel.singular_exponent)
    out = 0.0
    for lo, hi, toward in ((a - collar, a, a), (b, b + collar, b)):
        edges = quadrature.geometric_panels(lo, hi, toward, n_panels=20)
        vbps = [p for p in v.breakpoints if lo < p < hi]
        if vbps:
            edges = np.unique(np.concatenate([edges, np.array(vbps)]))
        if toward == a:
            inner_lo, inner_hi = edges[-2], edges[-1]
            edges = edges[:-1]
        else:
            inner_lo, inner_hi = edges[0], edges[1]
            edges = edges[1:]
        y, w = quadrature.composite_rule(edges, order)
        tj, wj = quadrature.jacobi_rule(0.0, inner_hi - inner_lo, expo, 12)
        if toward == a:
            yj = a - tj               # measure distance from the boundary
        else:
            yj = b + tj
        wj = wj * (np.maximum(tj, 1e-300)) ** (-expo)
        y = np.concatenate([y, yj])
        w = np.concatenate([w, wj])
        vals = v(y)
        live = np.abs(vals) > 0.0
        acc = 0.0
        for yi, wi, vi in zip(y[live], w[live], vals[live]):
            acc -= wi * vi * apply_N(kernel, omega, u, yi)
        out += acc
    return out


def green_gauss_residual(kernel, omega, u, v, collar, order=24):
    """|int_omega (Lu) v - E(u, v) + int_{Oc} (Nu) v|  with all three terms by
    independent quadrature."""
    a, b = omega
    xs, xw = quadrature.composite_rule(np.linspace(a, b, 25), order=10)
    lhs = float(sum(w * apply_L(kernel, u, x) * float(v(np.array(x))) for x, w in zip(xs, xw)))
    form = energy_pairing(kernel, omega, u, v, order=order)
    flux = complement_pairing(kernel, omega, u, v, collar)
    return abs(lhs - (form - flux))
