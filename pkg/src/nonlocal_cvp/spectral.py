"""Eigenpairs of the nonlocal operator under Neumann / Dirichlet / Robin
complement conditions, the discrete Dirichlet-to-Neumann map, and spectral
heat / Schrodinger / wave evolutions.

The L2(Omega) mass matrix vanishes on complement-only hats, so the discrete
eigenproblem  E x = mu M x  is condensed onto the Omega-supported block by a
Schur complement in the complement block (the eliminated rows are exactly the
discrete natural condition on the collar); the condensed problem is a
standard symmetric-definite pencil solved densely.
"""

from dataclasses import dataclass, field

import numpy as np
import scipy.linalg as sla

from .assembly import DiscreteField, complement_mass

__all__ = ["Spectrum", "DtNMap", "eig", "rayleigh_residual", "poincare_constant",
           "dtn_matrix", "robin_dtn_link_pairs", "evolve_heat",
           "evolve_schrodinger", "evolve_wave", "EigenSolveError",
           "ResonanceError", "RobinPreconditionError"]


class EigenSolveError(RuntimeError):
    pass


class ResonanceError(ValueError):
    """Shift coincides with an eigenvalue of the reduced pencil."""

    def __init__(self, msg, index=None, projection=None):
        super().__init__(msg)
        self.index = index
        self.projection = projection


class RobinPreconditionError(ValueError):
    """Robin term beta * nu_K vanishes a.e.; the form is not coercive."""


@dataclass
class Spectrum:
    condition: str
    values: np.ndarray
    vectors: list                      # DiscreteField per eigenvalue
    mass_normalized: bool = True
    forms: object = field(default=None, repr=False)

    def __len__(self):
        return self.values.size

    def pair(self, n):
        return self.values[n], self.vectors[n]


def _fix_signs(vecs, tol=1e-12):
    """First nonzero component positive (deterministic output ordering)."""
    for j in range(vecs.shape[1]):
        col = vecs[:, j]
        nz = np.nonzero(np.abs(col) > tol * max(1.0, np.abs(col).max()))[0]
        if nz.size and col[nz[0]] < 0:
            vecs[:, j] = -col
    return vecs


@dataclass
class _Condensation:
    S: np.ndarray
    sup: np.ndarray
    comp: np.ndarray
    _cho: object
    _A_oc: np.ndarray
    _scale: np.ndarray       # Jacobi equilibration of the complement block
    n_nodes: int

    def _solve_cc(self, rhs):
        s = self._scale if rhs.ndim == 1 else self._scale[:, None]
        return s * sla.cho_solve(self._cho, s * rhs)

    def reduce_load(self, b):
        if self.comp.size == 0:
            return b[self.sup]
        return b[self.sup] - self._A_oc @ self._solve_cc(b[self.comp])

    def recover(self, x_sup, b=None):
        full = np.zeros(self.n_nodes)
        full[self.sup] = x_sup
        if self.comp.size:
            rhs = -self._A_oc.T @ x_sup
            if b is not None:
                rhs = rhs + b[self.comp]
            full[self.comp] = self._solve_cc(rhs)
        return full


def _condense(A, mesh):
    """Schur-eliminate complement-only hats against the Omega-supported block.

    Complement hats beyond the kernel's reach have identically zero rows
    (complement-complement pairs are outside the form's region); they carry
    no information and are dropped from the quotient, pinned to zero.
    """
    sup = mesh.omega_support
    comp = mesh.complement
    S_oo = A[np.ix_(sup, sup)]
    if comp.size:
        diag = np.abs(np.diagonal(A)[comp])
        comp = comp[diag > 1e-14 * max(diag.max(), np.abs(A).max())]
    if comp.size == 0:
        return _Condensation(S_oo, sup, comp, None, np.zeros((sup.size, 0)),
                             np.zeros(0), mesh.n_nodes)
    A_oc = A[np.ix_(sup, comp)]
    A_cc = A[np.ix_(comp, comp)]
    scale = 1.0 / np.sqrt(np.diagonal(A_cc))
    try:
        cho = sla.cho_factor(scale[:, None] * A_cc * scale[None, :])
    except sla.LinAlgError as exc:
        raise EigenSolveError(
            "complement block of the form is singular on the collar"
        ) from exc
    cond = _Condensation(None, sup, comp, cho, A_oc, scale, mesh.n_nodes)
    cond.S = S_oo - A_oc @ cond._solve_cc(A_oc.T)
    return cond


def _robin_matrix(forms, beta, robin_weight):
    from .kernels import weight_eval

    if robin_weight is None:
        raise RobinPreconditionError("Robin condition needs a complement weight nu_K")
    beta_fn = beta if callable(beta) else (lambda x, b=float(beta or 0.0): b)

    def wfn(x):
        return beta_fn(x) * weight_eval(robin_weight, x)

    C = complement_mass(forms.mesh, weight=wfn)
    if C.diagonal().max() <= 0.0:
        raise RobinPreconditionError("beta * nu_K vanishes on the collar")
    return C


def eig(forms, condition, k=None, beta=None, robin_weight=None):
    """First k eigenpairs of the form under the stated complement condition,
    mass-orthonormal, vectors extended to all mesh nodes."""
    mesh = forms.mesh
    if condition == "dirichlet":
        idx = mesh.interior
        A = forms.E[np.ix_(idx, idx)]
        B = forms.M[np.ix_(idx, idx)]
        vals, vecs = sla.eigh(A, B)
        full = np.zeros((mesh.n_nodes, vals.size))
        full[idx] = vecs
    elif condition in ("neumann", "robin"):
        A = forms.E
        if condition == "robin":
            A = A + _robin_matrix(forms, beta, robin_weight)
        cond = _condense(A, mesh)
        B = forms.M[np.ix_(cond.sup, cond.sup)]
        vals, vecs = sla.eigh(cond.S, B)
        full = np.zeros((mesh.n_nodes, vals.size))
        for j in range(vals.size):
            full[:, j] = cond.recover(vecs[:, j])
    else:
        raise ValueError(f"unknown condition {condition!r}")
    if k is not None:
        vals, full = vals[:k], full[:, :k]
    full = _fix_signs(full)
    fields = [DiscreteField(mesh, full[:, j].copy()) for j in range(vals.size)]
    return Spectrum(condition=condition, values=vals, vectors=fields, forms=forms)


def mass_inner(forms, u, v):
    """L2(Omega) inner product of two discrete fields."""
    return float(u.coeffs @ forms.M @ v.coeffs)


def rayleigh_residual(forms, spectrum, beta=None, robin_weight=None):
    """max over pairs of |mu - E(v,v)/(v,v)| and ||E v - mu M v|| on the
    condition's degrees of freedom."""
    mesh = forms.mesh
    A = forms.E
    if spectrum.condition == "robin":
        A = A + _robin_matrix(forms, beta, robin_weight)
    if spectrum.condition == "dirichlet":
        dof = mesh.interior
    else:
        dof = np.arange(mesh.n_nodes)
    worst = 0.0
    scale = max(1.0, np.abs(A).max())
    for mu, v in zip(spectrum.values, spectrum.vectors):
        x = v.coeffs
        quot = (x @ A @ x) / (x @ forms.M @ x)
        res = A @ x - mu * (forms.M @ x)
        worst = max(worst, abs(mu - quot), np.linalg.norm(res[dof]) / scale)
    return worst


def poincare_constant(forms, mode="neumann_mean_zero"):
    """Sharp discrete Poincare constants: 1/mu_1 on the mean-zero space, or
    the Friedrichs constant 1/lambda_1 on the zero-complement space."""
    if mode == "neumann_mean_zero":
        spec = eig(forms, "neumann", k=2)
        return 1.0 / spec.values[1]
    if mode == "dirichlet_friedrichs":
        spec = eig(forms, "dirichlet", k=1)
        return 1.0 / spec.values[0]
    raise ValueError(f"unknown mode {mode!r}")


# ---------------------------------------------------------------------------
# Dirichlet-to-Neumann map
# ---------------------------------------------------------------------------

@dataclass
class DtNMap:
    lam: float
    matrix: np.ndarray = field(repr=False)
    trace_nodes: np.ndarray = field(repr=False)
    forms: object = field(default=None, repr=False)


def dtn_matrix(forms, lam=0.0, resonance_gap=1e-8):
    """Discrete Dirichlet-to-Neumann map at shift lam: the trace-block Schur
    complement of E - lam M with interior unknowns eliminated.  The lam term
    lives only on Omega-supported mass (the L2(Omega) pairing); trace nodes
    are complement + boundary."""
    mesh = forms.mesh
    idx_i = mesh.interior
    dir_vals = sla.eigh(forms.E[np.ix_(idx_i, idx_i)], forms.M[np.ix_(idx_i, idx_i)],
                        eigvals_only=True)
    gap = np.abs(dir_vals - lam) / np.maximum(np.abs(dir_vals), 1.0)
    if gap.min() < resonance_gap:
        j = int(gap.argmin())
        raise ResonanceError(
            f"shift {lam} hits the Dirichlet spectrum (eigenvalue index {j})",
            index=j)
    T = forms.E - lam * forms.M
    tr = np.sort(np.concatenate([mesh.boundary, mesh.complement]))
    T_tt = T[np.ix_(tr, tr)]
    T_ti = T[np.ix_(tr, idx_i)]
    T_ii = T[np.ix_(idx_i, idx_i)]
    D = T_tt - T_ti @ sla.solve(T_ii, T_ti.T, assume_a="sym")
    D = 0.5 * (D + D.T)
    return DtNMap(lam=lam, matrix=D, trace_nodes=tr, forms=forms)


def harmonic_extension(forms, dtn, g_trace):
    """Extend trace data through the (E - lam M)-harmonic interior solve."""
    mesh = forms.mesh
    idx_i = mesh.interior
    T = forms.E - dtn.lam * forms.M
    rhs = -T[np.ix_(idx_i, dtn.trace_nodes)] @ g_trace
    u = np.zeros(mesh.n_nodes)
    u[dtn.trace_nodes] = g_trace
    u[idx_i] = sla.solve(T[np.ix_(idx_i, idx_i)], rhs, assume_a="sym")
    return DiscreteField(mesh, u)


def robin_dtn_link_pairs(forms, dtn, robin_weight, k=2, order="smallest"):
    """Eigenpairs (beta_j, g_j) of  -D g = beta Mc g  against the weighted
    complement mass; each links the shift lam to the Robin spectrum."""
    from .kernels import weight_eval

    C = complement_mass(forms.mesh, weight=lambda x: weight_eval(robin_weight, x))
    C_tt = C[np.ix_(dtn.trace_nodes, dtn.trace_nodes)]
    vals, vecs = sla.eigh(-dtn.matrix, C_tt)
    idx = np.argsort(vals)
    if order == "largest":
        idx = idx[::-1]
    vals, vecs = vals[idx], vecs[:, idx]
    return [(float(vals[j]), vecs[:, j].copy()) for j in range(min(k, vals.size))]


# ---------------------------------------------------------------------------
# spectral evolutions
# ---------------------------------------------------------------------------

def _mode_data(spectrum, forms, u0):
    V = np.column_stack([v.coeffs for v in spectrum.vectors])
    c0 = V.T @ (forms.M @ u0.coeffs)
    return V, c0


def _forcing_segments(f, total_time, forms):
    """Normalize the forcing into piecewise-constant segments of mode loads."""
    if f is None or (np.isscalar(f) and f == 0):
        return []
    if isinstance(f, DiscreteField):
        return [(0.0, total_time, f.coeffs)]
    segments = []
    for t0, t1, fld in f:
        segments.append((float(t0), float(t1), fld.coeffs))
    return segments


def full_dimension(spectrum):
    mesh = spectrum.forms.mesh
    return mesh.interior.size if spectrum.condition == "dirichlet" else mesh.omega_support.size


def evolve_heat(spectrum, u0, T, samples, f=None):
    """Heat evolution  u(t) = sum_k (u0, phi_k) e^(-mu_k t) phi_k  plus an
    exact per-mode Duhamel term for piecewise-constant-in-time forcing."""
    forms = spectrum.forms
    if len(spectrum) < full_dimension(spectrum):
        import warnings
        warnings.warn("spectrum truncated below the discrete dimension")
    V, c0 = _mode_data(spectrum, forms, u0)
    mu = spectrum.values
    times = np.linspace(0.0, T, samples + 1)
    segs = [(t0, t1, V.T @ (forms.M @ coeffs)) for t0, t1, coeffs in
            _forcing_segments(f, T, forms)]
    out = np.empty((times.size, forms.mesh.n_nodes))
    for i, t in enumerate(times):
        c = c0 * np.exp(-mu * t)
        for t0, t1, fk in segs:
            lo, hi = min(t0, t), min(t1, t)
            if hi <= lo:
                continue
            # int_lo^hi e^(-mu (t-s)) ds, exact also at mu = 0
            with np.errstate(divide="ignore", invalid="ignore"):
                seg = np.where(mu > 0.0,
                               (np.exp(-mu * (t - hi)) - np.exp(-mu * (t - lo))) / np.where(mu > 0, mu, 1.0),
                               hi - lo)
            c = c + fk * seg
        out[i] = V @ c
    return times, [DiscreteField(forms.mesh, row.copy()) for row in out]


def evolve_schrodinger(spectrum, u0, T, samples):
    """Unitary evolution  u(t) = sum_k (u0, phi_k) e^(i mu_k t) phi_k."""
    forms = spectrum.forms
    V, c0 = _mode_data(spectrum, forms, u0)
    mu = spectrum.values
    times = np.linspace(0.0, T, samples + 1)
    out = np.empty((times.size, forms.mesh.n_nodes), dtype=complex)
    for i, t in enumerate(times):
        out[i] = V @ (c0 * np.exp(1j * mu * t))
    return times, out


def evolve_wave(spectrum, u0, u1, T, samples):
    """Wave evolution with modes cos(sqrt(mu) t), sin(sqrt(mu) t)/sqrt(mu);
    the zero mode degenerates to  c0 + t d0.  Also returns the velocity
    trajectory for energy bookkeeping."""
    forms = spectrum.forms
    V, c0 = _mode_data(spectrum, forms, u0)
    _, d0 = _mode_data(spectrum, forms, u1)
    mu = np.maximum(spectrum.values, 0.0)
    root = np.sqrt(mu)
    times = np.linspace(0.0, T, samples + 1)
    out = np.empty((times.size, forms.mesh.n_nodes))
    vel = np.empty_like(out)
    for i, t in enumerate(times):
        cos_part = np.cos(root * t)
        with np.errstate(divide="ignore", invalid="ignore"):
            sin_over = np.where(root > 1e-13, np.sin(root * t) / np.where(root > 0, root, 1.0), t)
        out[i] = V @ (c0 * cos_part + d0 * sin_over)
        vel[i] = V @ (-c0 * root * np.sin(root * t) + d0 * cos_part)
    fields = [DiscreteField(forms.mesh, row.copy()) for row in out]
    velocities = [DiscreteField(forms.mesh, row.copy()) for row in vel]
    return times, fields, velocities
