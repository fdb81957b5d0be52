"""Scalar fields on the line and the built-in function catalog.

A ScalarField bundles an evaluation handle with the structural facts the
pointwise quadrature needs: regularity class, compact support (if any) and
the points where the function is not smooth.
"""

from dataclasses import dataclass, field
from typing import Callable

import numpy as np

__all__ = ["ScalarField", "RegularityError", "catalog_field", "CATALOG"]

C2 = "c2"
P1 = "p1"
ANALYTIC = "analytic"


class RegularityError(TypeError):
    """Operation requires more smoothness than the field declares."""


@dataclass(frozen=True)
class ScalarField:
    fn: Callable
    regularity: str = C2
    support: tuple | None = None  # compact support interval, None = global
    breakpoints: tuple = ()       # x-locations where fn is not smooth
    name: str = ""
    d2: Callable | None = field(default=None, compare=False)
    osc_freq: float | None = None  # dominant frequency of a global oscillatory field
    bound: float = 1.0             # sup |u|, used to truncate far-field quadrature

    def __call__(self, x):
        return self.fn(np.asarray(x, dtype=float))

    def is_pointwise_smooth(self):
        return self.regularity in (C2, ANALYTIC)


def _bump(x, center=0.0, width=1.0):
    """Smooth bump supported on (center-width, center+width)."""
    t = (np.asarray(x, dtype=float) - center) / width
    out = np.zeros_like(t)
    inside = np.abs(t) < 1.0
    ti = t[inside]
    out[inside] = np.exp(1.0 - 1.0 / (1.0 - ti**2))
    return out


def catalog_field(name, **params):
    """Built-in catalog keyed by name + params; used by the CLI and tests."""
    if name == "constant":
        c = params.get("value", 1.0)
        return ScalarField(lambda x: np.full_like(np.asarray(x, float), c),
                           ANALYTIC, name=f"constant({c})")
    if name == "monomial":
        k = params.get("degree", 1)
        return ScalarField(lambda x: np.asarray(x, float) ** k, ANALYTIC,
                           name=f"x^{k}", d2=lambda x: k * (k - 1) * np.asarray(x, float) ** max(k - 2, 0))
    if name == "sin":
        w = params.get("freq", np.pi)
        return ScalarField(lambda x: np.sin(w * np.asarray(x, float)), ANALYTIC,
                           name=f"sin({w:g}x)", osc_freq=w,
                           d2=lambda x: -w * w * np.sin(w * np.asarray(x, float)))
    if name == "cos":
        w = params.get("freq", np.pi)
        return ScalarField(lambda x: np.cos(w * np.asarray(x, float)), ANALYTIC,
                           name=f"cos({w:g}x)", osc_freq=w,
                           d2=lambda x: -w * w * np.cos(w * np.asarray(x, float)))
    if name == "gaussian":
        s = params.get("scale", 1.0)
        c = params.get("center", 0.0)
        # numerically compact: the density underflows ~9 scales out
        return ScalarField(lambda x: np.exp(-((np.asarray(x, float) - c) / s) ** 2),
                           ANALYTIC, support=(c - 14.0 * s, c + 14.0 * s),
                           name=f"gaussian({c:g},{s:g})")
    if name == "bump":
        c = params.get("center", 0.0)
        w = params.get("width", 1.0)
        return ScalarField(lambda x: _bump(x, c, w), C2, support=(c - w, c + w),
                           breakpoints=(c - w, c + w), name=f"bump({c:g},{w:g})")
    if name == "getoor":
        s = params.get("s", 0.5)
        return ScalarField(
            lambda x: np.maximum(1.0 - np.asarray(x, float) ** 2, 0.0) ** s,
            C2, support=(-1.0, 1.0), breakpoints=(-1.0, 1.0), name=f"getoor({s:g})",
        )
    if name == "sin_bump":
        # sin(pi x) windowed by a wide smooth bump; compactly supported test field
        w = params.get("width", 3.0)
        f = params.get("freq", np.pi)
        return ScalarField(
            lambda x: np.sin(f * np.asarray(x, float)) * _bump(x, 0.0, w),
            C2, support=(-w, w), breakpoints=(-w, w), name=f"sin_bump({f:g},{w:g})",
        )
    raise KeyError(f"unknown catalog function {name!r}")


CATALOG = ("constant", "monomial", "sin", "cos", "gaussian", "bump", "getoor", "sin_bump")
