"""Stationary complement value problems on the assembled forms: Dirichlet,
mean-zero Neumann (saddle), Robin, mixed, and Helmholtz with the Fredholm
branch at resonance.
"""

from dataclasses import dataclass

import numpy as np
import scipy.linalg as sla

from . import spectral
from .assembly import DiscreteField, assemble_load
from .fields import ScalarField

__all__ = ["ComplementProblem", "IncompatibleDataError", "SingularSystemError",
           "EmptyDirichletSetError", "check_compatibility", "solve_dirichlet",
           "solve_neumann", "solve_robin", "solve_mixed", "solve_helmholtz",
           "variational_residual"]


class IncompatibleDataError(ValueError):
    def __init__(self, msg, residual):
        super().__init__(msg)
        self.residual = residual


class SingularSystemError(RuntimeError):
    pass


def _as_field(data):
    if data is None or isinstance(data, ScalarField):
        return data
    if callable(data):
        return ScalarField(lambda x, fn=data: np.asarray(fn(np.asarray(x, float)), float))
    c = float(data)
    return ScalarField(lambda x, c=c: np.full_like(np.asarray(x, float), c))


@dataclass
class ComplementProblem:
    """One stationary problem over assembled forms.

    g is the complement data: Dirichlet trace, Neumann flux density, or the
    Robin right side (always paired against the Robin weight).  For mixed
    problems D_nodes/N_nodes partition the complement nodes (boundary nodes
    are always eliminated with the Dirichlet part).
    """

    forms: object
    kind: str
    f: object = None
    g: object = None
    g_weight: object = None            # optional nu_K-style weight on g
    beta: object = None                # Robin coefficient (callable or scalar)
    robin_weight: object = None        # WeightSpec for the Robin term
    lam: float = 0.0
    helmholtz_condition: str = "neumann"
    D_nodes: np.ndarray | None = None
    N_nodes: np.ndarray | None = None
    g_D: object = None                 # mixed: Dirichlet trace on D
    g_N: object = None                 # mixed: flux density on N
    compat_tol: float | None = None

    def __post_init__(self):
        kinds = ("dirichlet", "neumann", "robin", "mixed", "helmholtz")
        if self.kind not in kinds:
            raise ValueError(f"kind must be one of {kinds}")
        self.f = _as_field(self.f)
        self.g = _as_field(self.g)
        self.g_D = _as_field(self.g_D)
        self.g_N = _as_field(self.g_N)
        if self.kind == "robin" and self.robin_weight is None and self.g_weight is not None:
            self.robin_weight = self.g_weight

    def load(self):
        weight = self.g_weight
        if self.kind == "robin" and weight is None:
            weight = self.robin_weight
        return assemble_load(self.forms.mesh, f=self.f, g=self.g, g_weight=weight)


def _solve_sym(A, b, what):
    try:
        x = sla.solve(A, b, assume_a="sym")
    except (sla.LinAlgError, ValueError) as exc:
        raise SingularSystemError(f"{what}: singular system") from exc
    if not np.all(np.isfinite(x)):
        raise SingularSystemError(f"{what}: non-finite solution")
    return x


def _abs_load(problem):
    mesh = problem.forms.mesh
    f, g = problem.f, problem.g
    absf = ScalarField(lambda x: np.abs(f(x))) if f is not None else None
    absg = ScalarField(lambda x: np.abs(g(x))) if g is not None else None
    return assemble_load(mesh, f=absf, g=absg, g_weight=problem.g_weight).sum()


def check_compatibility(problem):
    """|int_Omega f + int_collar g (w)|  for the Neumann problem; the caller
    compares against a tolerance."""
    return abs(problem.load().sum())


def solve_dirichlet(problem):
    """Eliminate complement + boundary nodes at the trace values of g and
    solve the interior block."""
    forms, mesh = problem.forms, problem.forms.mesh
    idx_i = mesh.interior
    idx_d = np.sort(np.concatenate([mesh.boundary, mesh.complement]))
    gvals = np.zeros(mesh.n_nodes)
    if problem.g is not None:
        gvals[idx_d] = problem.g(mesh.nodes[idx_d])
    b = problem.load()
    rhs = b[idx_i] - forms.E[np.ix_(idx_i, idx_d)] @ gvals[idx_d]
    if forms.tail_mode == "dirichlet_const" and problem.g is not None:
        # data continued constantly beyond the universe: the tail block pairs
        # u against that constant
        c_inf = 0.5 * float(problem.g(np.array(mesh.nodes[0])) + problem.g(np.array(mesh.nodes[-1])))
        rhs = rhs + c_inf * (forms.tail_matrix @ np.ones(mesh.n_nodes))[idx_i]
    u = gvals.copy()
    u[idx_i] = _solve_sym(forms.E[np.ix_(idx_i, idx_i)], rhs, "dirichlet")
    return DiscreteField(mesh, u)


def solve_neumann(problem, compat_tol=None):
    """Mean-zero saddle solve  [E m; m^T 0] (u, c) = (b, 0)  after the
    compatibility gate; requires the drop-tail form (E 1 = 0)."""
    forms, mesh = problem.forms, problem.forms.mesh
    residual = check_compatibility(problem)
    tol = compat_tol if compat_tol is not None else problem.compat_tol
    if tol is None:
        tol = 1e-10 * max(_abs_load(problem), 1e-30)
    if residual > tol:
        raise IncompatibleDataError(
            f"Neumann data violate the compatibility condition (residual {residual:.3e})",
            residual)
    b = problem.load()
    N = mesh.n_nodes
    m = forms.omega_mass_vector()
    K = np.zeros((N + 1, N + 1))
    K[:N, :N] = forms.E
    K[:N, N] = m
    K[N, :N] = m
    rhs = np.concatenate([b, [0.0]])
    x = _solve_sym(K, rhs, "neumann")
    return DiscreteField(mesh, x[:N])


def solve_robin(problem):
    """Solve (E + Mc(beta nu_K)) u = b; coercive, no mean constraint."""
    forms, mesh = problem.forms, problem.forms.mesh
    C = spectral._robin_matrix(forms, problem.beta, problem.robin_weight)
    u = _solve_sym(forms.E + C, problem.load(), "robin")
    return DiscreteField(mesh, u)


class EmptyDirichletSetError(ValueError):
    pass


def solve_mixed(problem):
    """Dirichlet-eliminate D nodes (plus the boundary pair), keep N nodes as
    unknowns with their flux load."""
    forms, mesh = problem.forms, problem.forms.mesh
    D = np.asarray(problem.D_nodes if problem.D_nodes is not None else [], dtype=int)
    if D.size == 0:
        raise EmptyDirichletSetError("mixed problem needs a Dirichlet set of positive measure")
    D = np.unique(np.concatenate([D, mesh.boundary]))
    comp_and_bnd = set(np.concatenate([mesh.complement, mesh.boundary]).tolist())
    if not set(D.tolist()) <= comp_and_bnd:
        raise ValueError("Dirichlet nodes must lie on the complement")
    free = np.setdiff1d(np.arange(mesh.n_nodes), D)
    gvals = np.zeros(mesh.n_nodes)
    trace = problem.g_D if problem.g_D is not None else problem.g
    if trace is not None:
        gvals[D] = trace(mesh.nodes[D])
    b = assemble_load(mesh, f=problem.f, g=problem.g_N)
    rhs = b[free] - forms.E[np.ix_(free, D)] @ gvals[D]
    u = gvals.copy()
    u[free] = _solve_sym(forms.E[np.ix_(free, free)], rhs, "mixed")
    return DiscreteField(mesh, u)


def solve_helmholtz(problem, resonance_gap=1e-8, fredholm_tol=1e-8):
    """Solve (E - lam M) u = b in the Neumann or Dirichlet space via the
    condensed eigendecomposition; at resonance, project the load on the
    eigenspace (Fredholm alternative) and return the minimal-norm solution
    when the projection vanishes."""
    forms, mesh = problem.forms, problem.forms.mesh
    lam = float(problem.lam)
    b = problem.load()
    if problem.helmholtz_condition == "dirichlet":
        idx = mesh.interior
        A = forms.E[np.ix_(idx, idx)]
        B = forms.M[np.ix_(idx, idx)]
        vals, vecs = sla.eigh(A, B)
        beta_modes = vecs.T @ b[idx]
        coeffs, offending = _fredholm_coeffs(vals, beta_modes, lam, resonance_gap, fredholm_tol)
        u = np.zeros(mesh.n_nodes)
        u[idx] = vecs @ coeffs
        return DiscreteField(mesh, u)
    cond = spectral._condense(forms.E, mesh)
    B = forms.M[np.ix_(cond.sup, cond.sup)]
    vals, vecs = sla.eigh(cond.S, B)
    beta_modes = vecs.T @ cond.reduce_load(b)
    coeffs, offending = _fredholm_coeffs(vals, beta_modes, lam, resonance_gap, fredholm_tol)
    full = cond.recover(vecs @ coeffs, b=b)
    return DiscreteField(mesh, full)


def _fredholm_coeffs(vals, beta_modes, lam, resonance_gap, fredholm_tol):
    scale = np.maximum(np.abs(vals), 1.0)
    resonant = np.abs(vals - lam) < resonance_gap * scale
    coeffs = np.zeros_like(beta_modes)
    norm_b = max(np.linalg.norm(beta_modes), 1e-300)
    if resonant.any():
        proj = np.linalg.norm(beta_modes[resonant]) / norm_b
        if proj > fredholm_tol:
            j = int(np.nonzero(resonant)[0][0])
            raise spectral.ResonanceError(
                f"shift {lam} is resonant (eigenvalue index {j}) and the load has "
                f"projection {proj:.3e} on the eigenspace", index=j, projection=proj)
    live = ~resonant
    coeffs[live] = beta_modes[live] / (vals[live] - lam)
    return coeffs, np.nonzero(resonant)[0]


def variational_residual(problem, u, n_trials=50, seed=0):
    """max over random discrete test fields v of |a(u, v) - rhs(v)| / ||v||,
    v drawn in the problem's test space."""
    forms, mesh = problem.forms, problem.forms.mesh
    A = forms.E
    if problem.kind == "robin":
        A = A + spectral._robin_matrix(forms, problem.beta, problem.robin_weight)
    if problem.kind == "helmholtz":
        A = A - problem.lam * forms.M
    b = problem.load()
    if problem.kind in ("dirichlet",):
        test_idx = mesh.interior
    elif problem.kind == "mixed":
        D = np.unique(np.concatenate([np.asarray(problem.D_nodes, dtype=int), mesh.boundary]))
        test_idx = np.setdiff1d(np.arange(mesh.n_nodes), D)
    elif problem.kind == "helmholtz" and problem.helmholtz_condition == "dirichlet":
        test_idx = mesh.interior
    else:
        test_idx = np.arange(mesh.n_nodes)
    rng = np.random.default_rng(seed)
    resid = A @ u.coeffs - b
    worst = 0.0
    for _ in range(n_trials):
        v = np.zeros(mesh.n_nodes)
        v[test_idx] = rng.standard_normal(test_idx.size)
        if problem.kind in ("neumann",) or (
                problem.kind == "helmholtz" and problem.helmholtz_condition == "neumann"):
            m = forms.omega_mass_vector()
            v = v - m * (m @ v) / (m @ m)       # mean-zero test space
        worst = max(worst, abs(v @ resid) / np.linalg.norm(v))
    return worst
