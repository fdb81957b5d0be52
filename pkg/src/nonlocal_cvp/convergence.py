"""The nonlocal-to-local harness: seminorm limits toward gradient energies,
collapsing cross-boundary energy, the limit diffusion coefficient, robust
Poincare uniformity, and convergence of solutions / eigenpairs to a local P1
oracle as the kernel family concentrates (alpha -> 2).

Normalization bookkeeping: the assembled bilinear form carries the factor
1/2; the limit coefficient of a family is the raw second moment
lim int_{B_delta} h^2 nu_alpha(h) dh, so the local oracle coefficient matched
to the assembled form is half that moment.  Every report records this chain.
"""

from dataclasses import dataclass, field

import numpy as np
import scipy.linalg as sla

from . import constants, kernels, quadrature, spectral
from .assembly import assemble_forms
from .solvers import ComplementProblem, solve_dirichlet, solve_neumann

__all__ = ["SweepReport", "LocalOracle", "local_solve", "local_eig",
           "limit_coefficient", "second_moment", "bbm_sweep", "collapse_check",
           "sharp_constant_sweep", "solution_convergence", "eigen_convergence",
           "fractional_family", "omega_seminorm", "cross_energy"]


@dataclass
class SweepReport:
    tag: str
    grid: np.ndarray
    measured: np.ndarray
    reference: float | np.ndarray
    provenance: str
    rel_errors: np.ndarray = field(default=None)
    verdict: str = field(default=None)

    def __post_init__(self):
        self.grid = np.asarray(self.grid, dtype=float)
        self.measured = np.asarray(self.measured, dtype=float)
        if not np.all(np.isfinite(self.measured)):
            raise ValueError("sweep produced non-finite measurements")
        if self.rel_errors is None:
            ref = np.asarray(self.reference, dtype=float)
            scale = np.maximum(np.abs(ref), 1e-300)
            self.rel_errors = np.abs(self.measured - ref) / scale
        if self.verdict is None:
            self.verdict = _verdict(self.rel_errors)


def _verdict(errors):
    if errors.size <= 1:
        return "converging"
    if errors[-1] >= errors[0]:
        return "failed"
    if np.all(np.diff(errors) <= 1e-12 + 0.05 * errors[:-1]):
        return "converging"
    return "non-monotone-converging"


def fractional_family(normalization="exact", p=2.0):
    """alpha -> fractional kernel, the family driving the alpha -> 2 sweeps."""
    return lambda alpha: kernels.fractional_kernel(alpha, normalization=normalization, p=p)


# ---------------------------------------------------------------------------
# local oracle
# ---------------------------------------------------------------------------

@dataclass
class LocalOracle:
    """P1 discretization of  -(a u')' on Omega (no collar)."""

    a: float
    b: float
    n: int
    coefficient: float = 1.0

    def __post_init__(self):
        if self.coefficient <= 0:
            raise ValueError("diffusion coefficient must be positive")
        self.nodes = np.linspace(self.a, self.b, self.n + 1)
        h = (self.b - self.a) / self.n
        n1 = self.n + 1
        K = np.zeros((n1, n1))
        M = np.zeros((n1, n1))
        for k in range(self.n):
            K[k:k + 2, k:k + 2] += self.coefficient / h * np.array([[1.0, -1.0], [-1.0, 1.0]])
            M[k:k + 2, k:k + 2] += h / 6.0 * np.array([[2.0, 1.0], [1.0, 2.0]])
        self.stiffness = K
        self.mass = M

    def load(self, f, order=8):
        b = np.zeros(self.n + 1)
        for k in range(self.n):
            x0, x1 = self.nodes[k], self.nodes[k + 1]
            xq, wq = quadrature.gauss_rule(x0, x1, order)
            vals = np.asarray(f(xq), dtype=float)
            b[k] += (wq * vals * (x1 - xq) / (x1 - x0)).sum()
            b[k + 1] += (wq * vals * (xq - x0) / (x1 - x0)).sum()
        return b


def local_solve(oracle, kind, f, g=None):
    """Classical P1 solve of -(a u')' = f with Dirichlet endpoint data or the
    (compatible, mean-zero) Neumann problem."""
    b = oracle.load(f)
    n1 = oracle.n + 1
    if kind == "dirichlet":
        gv = np.zeros(2)
        if g is not None:
            gfun = g if callable(g) else (lambda x, c=float(g): np.full_like(x, c))
            gv = np.asarray(gfun(np.array([oracle.a, oracle.b])), dtype=float)
        u = np.zeros(n1)
        u[0], u[-1] = gv
        inner = slice(1, -1)
        rhs = b[inner] - oracle.stiffness[inner, :][:, [0, -1]] @ gv
        u[inner] = sla.solve(oracle.stiffness[inner, inner], rhs, assume_a="pos")
        return u
    if kind == "neumann":
        m = oracle.mass @ np.ones(n1)
        if abs(b.sum()) > 1e-8 * max(np.abs(b).sum(), 1e-30):
            raise ValueError("incompatible local Neumann data")
        K = np.zeros((n1 + 1, n1 + 1))
        K[:n1, :n1] = oracle.stiffness
        K[:n1, n1] = m
        K[n1, :n1] = m
        x = sla.solve(K, np.concatenate([b, [0.0]]), assume_a="sym")
        return x[:n1]
    raise ValueError(f"unknown kind {kind!r}")


def local_eig(oracle, kind, k):
    """First k eigenpairs of the local oracle (mass-orthonormal)."""
    if kind == "dirichlet":
        A = oracle.stiffness[1:-1, 1:-1]
        B = oracle.mass[1:-1, 1:-1]
        vals, vecs = sla.eigh(A, B)
        full = np.zeros((oracle.n + 1, vals.size))
        full[1:-1] = vecs
    elif kind == "neumann":
        vals, full = sla.eigh(oracle.stiffness, oracle.mass)
    else:
        raise ValueError(f"unknown kind {kind!r}")
    return vals[:k], full[:, :k]


# ---------------------------------------------------------------------------
# limit coefficient
# ---------------------------------------------------------------------------

def second_moment(kernel, delta):
    """int_{|h| < delta} h^2 nu(h) dh  (two-sided)."""
    from .assembly import _sing_int

    return 2.0 * _sing_int(kernel, 1.0, delta, 2)


def limit_coefficient(family, delta, alpha_grid):
    """Extrapolated alpha -> 2 limit of the second moment of the family (the
    1D entry of the limit diffusion matrix)."""
    grid = np.asarray(alpha_grid, dtype=float)
    vals = np.array([second_moment(family(a), delta) for a in grid])
    if not np.all(np.isfinite(vals)):
        raise ValueError("moment integral diverged along the grid")
    eps = 2.0 - grid
    use = min(3, grid.size)
    coef = np.polynomial.polynomial.polyfit(eps[-use:], vals[-use:], use - 1)
    limit = float(np.polynomial.polynomial.polyval(0.0, coef))
    if use >= 2:
        coef2 = np.polynomial.polynomial.polyfit(eps[-2:], vals[-2:], 1)
        alt = float(np.polynomial.polynomial.polyval(0.0, coef2))
        if abs(limit - alt) > 0.05 * max(abs(limit), 1e-300):
            raise ValueError("moment extrapolation did not stabilize")
    return limit


# ---------------------------------------------------------------------------
# continuum seminorm sweeps
# ---------------------------------------------------------------------------

def omega_seminorm(omega, u, p, s, order=30):
    """Gagliardo-type double integral  iint_{Omega Omega} |u(x)-u(y)|^p /
    |x-y|^(1+sp)  by graded quadrature (exact endpoint weight in h)."""
    a, b = omega
    mid = 0.5 * (a + b)
    edges = np.unique(np.concatenate([
        quadrature.geometric_panels(a, mid, toward=a, n_panels=14),
        quadrature.geometric_panels(mid, b, toward=b, n_panels=14),
    ]))
    xs, xw = quadrature.composite_rule(edges, order=8)
    expo = p * (1.0 - s) - 1.0   # weight h^expo against |du/h|^p
    total = 0.0
    for x, wx in zip(xs, xw):
        acc = 0.0
        for side_len, sgn in ((x - a, -1.0), (b - x, 1.0)):
            if side_len <= 0:
                continue
            t, wt = quadrature.jacobi_rule(0.0, side_len, expo, order)
            du = np.abs(float(u(np.array(x))) - u(x + sgn * t)) / t
            acc += float((wt * du**p).sum())
        total += wx * acc
    return total


def kernel_omega_seminorm(kernel, omega, u, p=None, order=30):
    """iint_{Omega Omega} |u(x)-u(y)|^p nu(x-y)  for a kernel-family member:
    Jacobi rule with the kernel's own singular power, breakpoint splits in the
    smooth band."""
    if p is None:
        p = kernel.p_order
    a, b = omega
    mid = 0.5 * (a + b)
    edges = np.unique(np.concatenate([
        quadrature.geometric_panels(a, mid, toward=a, n_panels=14),
        quadrature.geometric_panels(mid, b, toward=b, n_panels=14),
    ]))
    xs, xw = quadrature.composite_rule(edges, order=8)
    total = 0.0
    for x, wx in zip(xs, xw):
        acc = 0.0
        for side_len, sgn in ((x - a, -1.0), (b - x, 1.0)):
            if side_len <= 0:
                continue
            r1 = min(side_len, kernel.sing_radius, kernel.support)
            if kernel.sing_coef > 0.0 and r1 > 0.0:
                t, wt = quadrature.jacobi_rule(0.0, r1, p + kernel.sing_power, order)
                du = np.abs(float(u(np.array(x))) - u(x + sgn * t)) / t
                acc += float((wt * du**p * kernel.sing_coef
                              * kernel.smooth_factor(t)).sum())
            hi = min(side_len, kernel.support)
            if hi > r1:
                t, wt = quadrature.composite_rule(
                    quadrature.split_edges(r1, hi, np.array(kernel.breakpoints)), 12)
                du = np.abs(float(u(np.array(x))) - u(x + sgn * t))
                acc += float((wt * du**p * kernel.density(t)).sum())
        total += wx * acc
    return total


def _grad_p_integral(omega, u, p, order=12, step=1e-6):
    a, b = omega
    xs, xw = quadrature.composite_rule(np.linspace(a, b, 65), order)
    du = (u(xs + step) - u(xs - step)) / (2.0 * step)
    return float((xw * np.abs(du) ** p).sum())


def bbm_sweep(omega, u, p, s_grid, family=None, order=30):
    """Seminorm limit along a concentrating family.

    Default (family None): the fractional weight |h|^(-1-sp), measured
    (1-s) x seminorm, limit (|S^0|/p) K_(1,p) int |u'|^p.  With an explicit
    family (grid value -> normalized kernel): measured iint |du|^p nu, limit
    K_(1,p) int |u'|^p.
    """
    s_grid = np.asarray(s_grid, dtype=float)
    K = constants.bbm_constant(1, p)
    if family is None:
        measured = np.array([(1.0 - s) * omega_seminorm(omega, u, p, s, order=order)
                             for s in s_grid])
        ref = (constants.sphere_area(1) / p) * K * _grad_p_integral(omega, u, p)
        provenance = (f"(|S^0|/p) K_(1,p) int |u'|^p with K_(1,p)={K:.12g} "
                      "from the spherical-average formula")
    else:
        measured = np.array([kernel_omega_seminorm(family(s), omega, u, p=p,
                                                   order=order) for s in s_grid])
        ref = K * _grad_p_integral(omega, u, p)
        provenance = (f"K_(1,p) int |u'|^p with K_(1,p)={K:.12g}; family "
                      "normalized to unit p-Levy integral")
    return SweepReport(tag="bbm", grid=s_grid, measured=measured, reference=ref,
                       provenance=provenance)


def cross_energy(kernel, omega, u, order=10):
    """iint_{Omega x Omega^c} |u(x)-u(y)|^2 nu(x-y) dy dx.

    Compactly supported fields get an exact constant tail; global bounded
    fields are integrated out to a radius where the kernel tail mass is below
    1e-12 of scale (the neglected remainder is O(bound^2 tail))."""
    a, b = omega
    if u.support is None:
        hi = 10.0 * max(1.0, abs(a), abs(b))
        while kernel.tail_mass(hi) > 1e-12 and hi < 1e12:
            hi *= 10.0
        u = type(u)(u.fn, u.regularity, support=(a - hi, b + hi),
                    breakpoints=u.breakpoints, name=u.name)
    mid = 0.5 * (a + b)
    edges = np.unique(np.concatenate([
        quadrature.geometric_panels(a, mid, toward=a, n_panels=24),
        quadrature.geometric_panels(mid, b, toward=b, n_panels=24),
    ]))
    xs, xw = quadrature.composite_rule(edges, order=order)
    total = 0.0
    for x, wx in zip(xs, xw):
        acc = 0.0
        ux = float(u(np.array(x)))
        for dist, sgn in ((x - a, -1.0), (b - x, 1.0)):
            far = max(abs(x - u.support[0]), abs(x - u.support[1]))
            hi = min(far, kernel.support)
            if hi > dist:
                hs = np.geomspace(dist, hi, 40)
                t, wt = quadrature.composite_rule(hs, order)
                du = ux - u(x + sgn * t)
                acc += float((wt * du**2 * kernel.density(t)).sum())
            if kernel.support > far:
                acc += ux**2 * kernel.tail_mass(max(dist, far))
        total += wx * acc
    return total


def collapse_check(omega, u, family, grid):
    """Cross-boundary energy along the family; the verdict asks it to vanish."""
    grid = np.asarray(grid, dtype=float)
    measured = np.array([cross_energy(family(g), omega, u) for g in grid])
    errors = np.abs(measured)
    return SweepReport(
        tag="collapse", grid=grid, measured=measured, reference=0.0,
        provenance="cross-boundary energy collapses to 0 as the family concentrates",
        rel_errors=errors,
    )


# ---------------------------------------------------------------------------
# discrete alpha -> 2 sweeps
# ---------------------------------------------------------------------------

def _l2_error(forms, coeffs_a, coeffs_b):
    d = coeffs_a - coeffs_b
    return float(np.sqrt(d @ forms.M @ d))


def _interp_local(mesh, oracle, u_loc):
    """Interpolate an Omega-only oracle solution onto the collar mesh (zero
    outside Omega)."""
    vals = np.zeros(mesh.n_nodes)
    sup = mesh.omega_support
    vals[sup] = np.interp(mesh.nodes[sup], oracle.nodes, u_loc)
    return vals


def oracle_coefficient(family, alpha_grid, delta=1.0):
    """Local diffusion coefficient matched to the half-weighted assembled
    form: half the limiting second moment."""
    return 0.5 * limit_coefficient(family, delta, alpha_grid)


def sharp_constant_sweep(omega, family, alpha_grid, n=128, collar=2.0, quad_order=8):
    """mu_1(alpha) against the local oracle's first nonzero Neumann eigenvalue;
    also checks the uniform (robust) bound on 1/mu_1 across the grid."""
    from .assembly import build_mesh

    grid = np.asarray(alpha_grid, dtype=float)
    a, b = omega
    mesh = build_mesh(a, b, n, collar)
    mu1 = []
    for alpha in grid:
        forms = assemble_forms(mesh, family(alpha), quad_order=quad_order)
        mu1.append(spectral.eig(forms, "neumann", k=2).values[1])
    mu1 = np.array(mu1)
    coef = oracle_coefficient(family, grid)
    oracle = LocalOracle(a, b, n, coefficient=coef)
    ref = local_eig(oracle, "neumann", 2)[0][1]
    report = SweepReport(
        tag="poincare-sharp-constant", grid=grid, measured=mu1, reference=ref,
        provenance=(f"local Neumann mu_1 with coefficient {coef:.12g} = half the "
                    "limiting second moment of the family"),
    )
    report.uniform_bound_ok = bool(np.max(1.0 / mu1) <= 2.0 * (1.0 / mu1[-1]))
    return report


def solution_convergence(kind, family, alpha_grid, n=128, collar=2.0, quad_order=8,
                         f=None, g=None):
    """L2 distance between the nonlocal solve and the local oracle solution
    along alpha -> 2.  Defaults: the manufactured Dirichlet problem
    f = pi^2 sin(pi x), g = 0 (local solution sin(pi x)) and the mean-zero
    Neumann problem f = cos(2 pi x)."""
    from .assembly import build_mesh

    grid = np.asarray(alpha_grid, dtype=float)
    mesh = build_mesh(0.0, 1.0, n, collar)
    coef = oracle_coefficient(family, grid)
    oracle = LocalOracle(0.0, 1.0, n, coefficient=coef)
    if f is None:
        f = (lambda x: np.pi**2 * np.sin(np.pi * x)) if kind == "dirichlet" else \
            (lambda x: np.cos(2.0 * np.pi * x))
    u_loc = local_solve(oracle, kind, f, g if kind == "dirichlet" else None)
    errors = []
    forms_last = None
    for alpha in grid:
        tail = "dirichlet_zero" if kind == "dirichlet" else "drop"
        forms = assemble_forms(mesh, family(alpha), quad_order=quad_order, tail_mode=tail)
        forms_last = forms
        if kind == "dirichlet":
            prob = ComplementProblem(forms, "dirichlet", f=f, g=g)
            u = solve_dirichlet(prob)
        else:
            prob = ComplementProblem(forms, "neumann", f=f, g=g)
            u = solve_neumann(prob)
        target = _interp_local(mesh, oracle, u_loc)
        errors.append(_l2_error(forms, u.coeffs, target))
    errors = np.array(errors)
    report = SweepReport(
        tag=f"solution-{kind}", grid=grid, measured=errors, reference=0.0,
        provenance=(f"L2(Omega) distance to the local oracle with coefficient "
                    f"{coef:.12g}"),
        rel_errors=errors,
    )
    report.decrease_ok = bool(errors[-1] < errors[0] / 3.0)
    report.forms = forms_last
    return report


def eigen_convergence(condition, family, alpha_grid, k=2, n=128, collar=2.0,
                      quad_order=8):
    """Eigenvalue gaps and eigenvector alignment against the local oracle."""
    from .assembly import build_mesh

    grid = np.asarray(alpha_grid, dtype=float)
    mesh = build_mesh(0.0, 1.0, n, collar)
    coef = oracle_coefficient(family, grid)
    oracle = LocalOracle(0.0, 1.0, n, coefficient=coef)
    n_modes = k + (1 if condition == "neumann" else 0)
    loc_vals, loc_vecs = local_eig(oracle, condition, n_modes)
    gaps = np.zeros((grid.size, n_modes))
    aligns = np.zeros((grid.size, n_modes))
    tail = "dirichlet_zero" if condition == "dirichlet" else "drop"
    for i, alpha in enumerate(grid):
        forms = assemble_forms(mesh, family(alpha), quad_order=quad_order, tail_mode=tail)
        spec = spectral.eig(forms, condition, k=n_modes)
        for j in range(n_modes):
            gaps[i, j] = abs(spec.values[j] - loc_vals[j])
            target = _interp_local(mesh, oracle, loc_vecs[:, j])
            nrm = np.sqrt(target @ forms.M @ target)
            if nrm > 0:
                aligns[i, j] = abs(spec.vectors[j].coeffs @ forms.M @ target) / nrm
            else:
                aligns[i, j] = 1.0   # zero mode against zero mode
    first = 1 if condition == "neumann" else 0
    report = SweepReport(
        tag=f"eigen-{condition}", grid=grid, measured=gaps[:, first],
        reference=0.0,
        provenance=f"|value - local oracle| for mode {first}, coefficient {coef:.12g}",
        rel_errors=gaps[:, first] / max(abs(loc_vals[first]), 1e-300),
    )
    report.gaps = gaps
    report.alignments = aligns
    report.local_values = loc_vals
    return report
