"""Quadrature helpers: Gauss panels, Jacobi-weighted rules for endpoint
singularities, geometric grading and oscillatory power-law tails.

All rules return plain (nodes, weights) arrays so callers can vectorize
kernel/field evaluations themselves.
"""

from functools import lru_cache

import numpy as np
from scipy.special import roots_jacobi, roots_legendre


@lru_cache(maxsize=64)
def _legendre(n):
    x, w = roots_legendre(n)
    return x, w


@lru_cache(maxsize=256)
def _jacobi(n, expo):
    # weight (1+x)^expo on [-1, 1]
    x, w = roots_jacobi(n, 0.0, expo)
    return x, w


def gauss_rule(a, b, n):
    """Nodes/weights of n-point Gauss-Legendre on [a, b]."""
    x, w = _legendre(n)
    mid, half = 0.5 * (a + b), 0.5 * (b - a)
    return mid + half * x, half * w


def jacobi_rule(a, b, expo, n):
    """Nodes/weights t_i, w_i such that  int_a^b (t-a)^expo f(t) dt ~ sum w_i f(t_i)
    for smooth f.  The singular weight is folded into w_i; requires expo > -1.
    """
    if expo <= -1.0:
        raise ValueError(f"Jacobi exponent must exceed -1, got {expo}")
    x, w = _jacobi(n, float(expo))
    half = 0.5 * (b - a)
    t = a + half * (1.0 + x)
    return t, w * half ** (expo + 1.0)


def geometric_panels(a, b, toward, n_panels=30, ratio=2.0):
    """Panel edges on [a, b] geometrically refined toward `toward` (= a or b)."""
    if n_panels <= 1:
        return np.array([a, b])
    # relative offsets from the refined endpoint: ratio^-(n-1), ..., ratio^-1, 1
    rel = np.concatenate(([0.0], ratio ** -np.arange(n_panels - 1, -1.0, -1.0)))
    if toward == a:
        edges = a + (b - a) * rel
    else:
        edges = b - (b - a) * rel[::-1]
    edges[0], edges[-1] = a, b
    return edges


def graded_rule(a, b, toward, n_panels=30, order=8, ratio=2.0):
    """Composite Gauss rule on [a, b] with geometric grading toward one endpoint."""
    edges = geometric_panels(a, b, toward, n_panels, ratio)
    xs, ws = [], []
    for lo, hi in zip(edges[:-1], edges[1:]):
        if hi <= lo:
            continue
        x, w = gauss_rule(lo, hi, order)
        xs.append(x)
        ws.append(w)
    return np.concatenate(xs), np.concatenate(ws)


def composite_rule(edges, order=8):
    """Composite Gauss rule over consecutive panels given by `edges`."""
    xs, ws = [], []
    for lo, hi in zip(edges[:-1], edges[1:]):
        if hi - lo <= 0.0:
            continue
        x, w = gauss_rule(lo, hi, order)
        xs.append(x)
        ws.append(w)
    if not xs:
        return np.array([]), np.array([])
    return np.concatenate(xs), np.concatenate(ws)


def split_edges(a, b, points):
    """Sorted panel edges for [a, b] split at the interior `points`."""
    pts = [p for p in np.atleast_1d(points) if a < p < b]
    return np.array(sorted({a, b, *pts}))


def osc_cos_tail(coef, power, xi, cutoff, n_terms=10):
    """int_cutoff^inf cos(xi*h) * coef*h^(-power) dh  by repeated integration
    by parts; accurate when xi*cutoff >> n_terms.
    """
    if xi == 0.0:
        if power <= 1.0:
            return np.inf
        return coef * cutoff ** (1.0 - power) / (power - 1.0)
    # I_k = int e^{i xi h} nu^(k)(h) dh  with  nu^(k)(X) = coef * (-1)^k (power)_k X^{-power-k}
    # I = -e^{i xi X} sum_k D_k / (i xi)^{k+1},  D_k = coef (power)_k X^{-power-k}
    total = 0.0 + 0.0j
    phase = np.exp(1j * xi * cutoff)
    deriv = coef * cutoff ** (-power)
    for k in range(n_terms):
        total += -phase * deriv / (1j * xi) ** (k + 1)
        deriv *= (power + k) / cutoff
    return float(total.real)
