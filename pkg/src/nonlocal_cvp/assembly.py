"""Uniform 1D meshes with a complement collar and Galerkin assembly of the
nonlocal bilinear form

    E(u, v) = 1/2 iint_{(Oc x Oc)^c} (u(x)-u(y)) (v(x)-v(y)) nu(x-y) dx dy

for P1 hat functions, together with the interior mass matrix, weighted
complement mass, load vectors and optional far-field tail terms.

The mesh is uniform and the kernel translation invariant, so the element-pair
interaction matrices depend only on the element offset m = k - l.  Identical
(m = 0) and touching (m = 1) pairs are written in corner coordinates whose
weight vectors vanish at the kernel singularity; their radial moments use
Gauss-Jacobi rules with the exact singular exponent.  Separated pairs reduce
to a 1D quadrature in t = xi - eta against exact per-line integrals of the
basis products.
"""

from dataclasses import dataclass, field

import numpy as np

from . import quadrature
from .fields import P1, ScalarField

__all__ = ["Mesh1D", "GalerkinForms", "DiscreteField", "build_mesh",
           "assemble_forms", "assemble_load", "seminorm_E", "complement_mass",
           "export_matrix"]

INTERIOR, BOUNDARY, COMPLEMENT = 0, 1, 2


class MeshError(ValueError):
    pass


@dataclass(frozen=True)
class Mesh1D:
    a: float
    b: float
    h: float
    collar: float                      # snapped collar width (multiple of h)
    nodes: np.ndarray = field(repr=False)
    tags: np.ndarray = field(repr=False)

    @property
    def n_nodes(self):
        return self.nodes.size

    @property
    def n_elements(self):
        return self.nodes.size - 1

    def index_set(self, tag):
        return np.nonzero(self.tags == tag)[0]

    @property
    def interior(self):
        return self.index_set(INTERIOR)

    @property
    def boundary(self):
        return self.index_set(BOUNDARY)

    @property
    def complement(self):
        return self.index_set(COMPLEMENT)

    @property
    def omega_support(self):
        """Nodes whose hat has positive mass in Omega (interior + boundary)."""
        return np.nonzero(self.tags != COMPLEMENT)[0]

    def element_in_omega(self):
        mids = 0.5 * (self.nodes[:-1] + self.nodes[1:])
        return (mids > self.a) & (mids < self.b)


def build_mesh(a, b, n_interior, collar_R):
    """Uniform mesh of Omega = (a, b) with n_interior elements inside and a
    complement collar snapped outward to a multiple of h on each side."""
    if not b > a:
        raise MeshError(f"degenerate interval [{a}, {b}]")
    if n_interior < 4:
        raise MeshError("need at least 4 interior elements")
    if collar_R <= 0:
        raise MeshError("collar width must be positive")
    h = (b - a) / n_interior
    m = int(np.ceil(collar_R / h - 1e-9))
    nodes = a + h * np.arange(-m, n_interior + m + 1)
    nodes[m], nodes[m + n_interior] = a, b
    tags = np.full(nodes.size, COMPLEMENT, dtype=np.int8)
    tags[m], tags[m + n_interior] = BOUNDARY, BOUNDARY
    tags[m + 1:m + n_interior] = INTERIOR
    return Mesh1D(a=float(a), b=float(b), h=h, collar=m * h, nodes=nodes, tags=tags)


@dataclass
class DiscreteField:
    """P1 coefficient vector over all mesh nodes; zero outside the universe."""

    mesh: Mesh1D
    coeffs: np.ndarray

    def __post_init__(self):
        self.coeffs = np.asarray(self.coeffs, dtype=float)
        if self.coeffs.shape != (self.mesh.n_nodes,):
            raise ValueError("coefficient length does not match node count")

    def __call__(self, x):
        x = np.asarray(x, dtype=float)
        vals = np.interp(x, self.mesh.nodes, self.coeffs, left=0.0, right=0.0)
        return vals

    def as_field(self):
        return ScalarField(self.__call__, P1, support=(self.mesh.nodes[0], self.mesh.nodes[-1]),
                           breakpoints=tuple(self.mesh.nodes), name="p1-field")


# ---------------------------------------------------------------------------
# singular radial moments
# ---------------------------------------------------------------------------

def _sing_int(kernel, h, s_hi, q_min, poly=None, order=24):
    """int_0^s_hi nu(h s) s^q_min poly(s) ds  with poly smooth, exact
    Gauss-Jacobi treatment of the kernel power at s = 0."""
    if s_hi <= 0.0:
        return 0.0
    s_hi = min(s_hi, kernel.support / h)
    if s_hi <= 0.0:
        return 0.0
    s_star = min(s_hi, kernel.sing_radius / h)
    total = 0.0
    if kernel.sing_coef > 0.0 and s_star > 0.0:
        # nu(h s) = sing_coef h^power s^power smooth_factor(h s): the Jacobi
        # weight s^(q_min + power) absorbs the full singular power exactly
        expo = q_min + kernel.sing_power
        t, w = quadrature.jacobi_rule(0.0, s_star, expo, order)
        f = kernel.sing_coef * h ** kernel.sing_power * kernel.smooth_factor(h * t)
        if poly is not None:
            f = f * poly(t)
        total += float((w * f).sum())
    if s_hi > s_star:
        bps = [bp / h for bp in kernel.breakpoints]
        x, w = quadrature.composite_rule(
            quadrature.split_edges(max(s_star, 1e-300), s_hi, np.array(bps)), 12
        )
        if x.size:
            vals = kernel.density(h * x) * x**q_min
            if poly is not None:
                vals = vals * poly(x)
            total += float((w * vals).sum())
    return total


def _line_weight_nodes(order):
    """Per-t 4x4 basis-product line integrals for separated element pairs.

    For t = xi - eta the admissible xi-range is (max(0,t), min(1,1+t)); the
    integrand entries are quadratic in xi, so 2-point Gauss along the line is
    exact.  Returns the base t-rule on (-1,0)+(0,1) and the W(t) stack.
    """
    t0, w0 = quadrature.gauss_rule(-1.0, 0.0, order)
    t1, w1 = quadrature.gauss_rule(0.0, 1.0, order)
    t = np.concatenate([t0, t1])
    wt = np.concatenate([w0, w1])
    W = _line_weights_at(t)
    return t, wt, W


def _line_weights_at(t):
    t = np.asarray(t, dtype=float)
    lo, hi = np.maximum(0.0, t), np.minimum(1.0, 1.0 + t)
    length = hi - lo
    # 2-point Gauss along each line
    g = 0.5 / np.sqrt(3.0)
    xi_nodes = np.stack([lo + length * (0.5 - g), lo + length * (0.5 + g)])  # (2, nt)
    W = np.zeros((t.size, 4, 4))
    for xi in xi_nodes:
        eta = xi - t
        b = np.stack([1.0 - xi, xi, -(1.0 - eta), -eta])       # (4, nt)
        b[3] = -(b[0] + b[1] + b[2])                           # exact zero row sum
        W += 0.5 * np.einsum("pt,qt->tpq", b, b) * length[:, None, None]
    return W


def _local_m0(kernel, h, order):
    c0 = 2.0 * h * h * _sing_int(kernel, h, 1.0, 2, poly=lambda s: 1.0 - s, order=order)
    return c0 * np.array([[1.0, -1.0], [-1.0, 1.0]])


def _local_m1(kernel, h, order):
    """Touching pair x in I_k, y in I_{k-1}; corner coordinates (xi, 1-eta)
    vanish at the shared node, nodes (k-1, k, k+1)."""
    # t in (-1, 0): every entry of the line-integral matrix is W(0) (1+t)^3
    W0 = _line_weights_m1(np.array([0.0]))[0]
    M3 = _sing_int(kernel, h, 1.0, 3, order=order)
    A = W0 * M3
    # t in (0, 1): radius h(1+t) in (h, 2h), regular
    bps = sorted({bp / h - 1.0 for bp in kernel.breakpoints} | {kernel.support / h - 1.0})
    bps = [b for b in bps if 0.0 < b < 1.0]
    hi = min(1.0, kernel.support / h - 1.0)
    if hi > 0.0:
        t, wt = quadrature.composite_rule(quadrature.split_edges(0.0, hi, np.array(bps)), 12)
        if t.size:
            Wt = _line_weights_m1(t)
            nu = kernel.density(h * (1.0 + t))
            A = A + np.einsum("t,tpq->pq", wt * nu, Wt)
    return h * h * A


def _line_weights_m1(t):
    """Line integrals of c c^T for the touching pair, c on nodes (k-1, k, k+1):
    c = (-(1-eta), (1-eta)-xi, xi) along eta = xi - t, xi in (max(0,t), min(1,1+t))."""
    t = np.asarray(t, dtype=float)
    lo, hi = np.maximum(0.0, t), np.minimum(1.0, 1.0 + t)
    length = np.maximum(hi - lo, 0.0)
    g = 0.5 / np.sqrt(3.0)
    xi_nodes = np.stack([lo + length * (0.5 - g), lo + length * (0.5 + g)])
    W = np.zeros((t.size, 3, 3))
    for xi in xi_nodes:
        rho = 1.0 - (xi - t)   # 1 - eta
        c = np.stack([-rho, np.zeros_like(xi), xi])
        c[1] = -(c[0] + c[2])
        W += 0.5 * np.einsum("pt,qt->tpq", c, c) * length[:, None, None]
    return W


def _separated_locals(kernel, h, offsets, order):
    """Stack of 4x4 local matrices for separated offsets m >= 2."""
    t, wt, W = _line_weight_nodes(order)
    out = np.zeros((offsets.size, 4, 4))
    radii_lo = h * (offsets - 1.0)
    # offsets entirely beyond the support contribute nothing
    live = radii_lo < kernel.support
    bps = np.array(sorted(set(kernel.breakpoints) | {kernel.support})) if (
        kernel.breakpoints or np.isfinite(kernel.support)) else np.array([])
    for j in np.nonzero(live)[0]:
        m = offsets[j]
        inner_bps = (bps / h - m) if bps.size else np.array([])
        inner_bps = inner_bps[(inner_bps > -1.0) & (inner_bps < 1.0)]
        if inner_bps.size:
            # split at the mapped kernel breakpoints and at t = 0 where the
            # per-line basis integrals switch polynomial branch
            tj, wj = quadrature.composite_rule(
                quadrature.split_edges(-1.0, 1.0, np.append(inner_bps, 0.0)), 12
            )
            Wj = _line_weights_at(tj)
            nu = kernel.density(h * (m + tj))
            out[j] = np.einsum("t,tpq->pq", wj * nu, Wj)
        else:
            nu = kernel.density(h * (m + t))
            out[j] = np.einsum("t,tpq->pq", wt * nu, W)
    return h * h * out


@dataclass
class GalerkinForms:
    """Assembled discrete operators on a mesh for one kernel."""

    mesh: Mesh1D
    kernel: object
    E: np.ndarray = field(repr=False)
    M: np.ndarray = field(repr=False)          # mass against L2(Omega), all nodes
    tail_mode: str = "drop"
    tail_matrix: np.ndarray | None = field(default=None, repr=False)
    tail_diag: np.ndarray | None = field(default=None, repr=False)
    quad_order: int = 8

    def omega_mass_vector(self):
        """m_i = int_Omega phi_i dx  (hat masses: h interior, h/2 boundary)."""
        h = self.mesh.h
        m = np.zeros(self.mesh.n_nodes)
        m[self.mesh.interior] = h
        m[self.mesh.boundary] = 0.5 * h
        return m


def assemble_forms(mesh, kernel, quad_order=8, tail_mode="drop", region="cvp"):
    """Assemble the nonlocal stiffness matrix over all mesh nodes, the Omega
    mass matrix, and tail terms.

    region "cvp" admits element pairs with at least one element in Omega (the
    complement-value form); "omega" restricts to both-in-Omega pairs (the
    interior double integral, used for seminorm comparisons)."""
    if kernel.singular_exponent >= 2.0:
        raise ValueError("form is not finite on P1 for singular exponent >= 2")
    if quad_order < 4:
        raise ValueError("quad_order must be at least 4")
    if tail_mode not in ("drop", "dirichlet_zero", "dirichlet_const"):
        raise ValueError(f"unknown tail_mode {tail_mode!r}")
    if region not in ("cvp", "omega"):
        raise ValueError(f"unknown region {region!r}")
    h, N = mesh.h, mesh.n_nodes
    n_el = mesh.n_elements
    in_omega = mesh.element_in_omega()

    def admit(mask_hi, mask_lo):
        if region == "cvp":
            return mask_hi | mask_lo
        return mask_hi & mask_lo

    E = np.zeros((N, N))
    order = max(quad_order, 8)

    # m = 0: diagonal element pairs inside Omega count once with weight 1/2
    A0 = 0.5 * _local_m0(kernel, h, 4 * order)
    ks = np.nonzero(in_omega)[0]
    for dp, dq in ((0, 0), (0, 1), (1, 0), (1, 1)):
        np.add.at(E.reshape(-1), (ks + dp) * N + (ks + dq), A0[dp, dq])

    # m = 1: touching pairs (k, k-1), nodes (k-1, k, k+1)
    A1 = _local_m1(kernel, h, 4 * order)
    ks = np.nonzero(admit(in_omega[1:], in_omega[:-1]))[0] + 1
    offs = (-1, 0, 1)
    for p in range(3):
        for q in range(3):
            np.add.at(E.reshape(-1), (ks + offs[p]) * N + (ks + offs[q]), A1[p, q])

    # m >= 2: separated pairs, Toeplitz in the offset
    if n_el >= 3:
        offsets = np.arange(2, n_el, dtype=float)
        A = _separated_locals(kernel, h, offsets, order)
        karr_list, midx_list = [], []
        for j, m in enumerate(offsets.astype(int)):
            if not A[j].any():
                continue
            ks = np.nonzero(admit(in_omega[m:], in_omega[:-m]))[0] + m
            if ks.size:
                karr_list.append(ks)
                midx_list.append(np.full(ks.size, j))
        if karr_list:
            karr = np.concatenate(karr_list)
            midx = np.concatenate(midx_list)
            marr = offsets.astype(int)[midx]
            node_off = [np.zeros_like(karr), np.ones_like(karr), -marr, -marr + 1]
            for p in range(4):
                rows = karr + node_off[p]
                for q in range(4):
                    cols = karr + node_off[q]
                    np.add.at(E.reshape(-1), rows * N + cols, A[midx, p, q])

    E = 0.5 * (E + E.T)

    tail_matrix = tail_diag = None
    if tail_mode != "drop" and region == "cvp":
        tail_matrix = _tail_matrix(mesh, kernel)
        tail_diag = np.zeros(N)
        lo, hi = mesh.nodes[0], mesh.nodes[-1]
        sup = mesh.omega_support
        tail_diag[sup] = [kernel.tail_mass(x - lo) + kernel.tail_mass(hi - x)
                          for x in mesh.nodes[sup]]
        E = E + tail_matrix

    M = _omega_mass(mesh)
    return GalerkinForms(mesh=mesh, kernel=kernel, E=E, M=M, tail_mode=tail_mode,
                         tail_matrix=tail_matrix, tail_diag=tail_diag,
                         quad_order=quad_order)


def _omega_mass(mesh):
    """Mass matrix of the L2(Omega) inner product over all nodes (entries
    vanish on complement rows/columns)."""
    N, h = mesh.n_nodes, mesh.h
    M = np.zeros((N, N))
    for k in np.nonzero(mesh.element_in_omega())[0]:
        M[k, k] += h / 3.0
        M[k + 1, k + 1] += h / 3.0
        M[k, k + 1] += h / 6.0
        M[k + 1, k] += h / 6.0
    return M


def _tail_matrix(mesh, kernel, order=8):
    """Consistent matrix of  int_Omega phi_i phi_j tau,  tau(x) the kernel mass
    beyond the mesh universe (zero-extension of Dirichlet data)."""
    N = mesh.n_nodes
    lo, hi = mesh.nodes[0], mesh.nodes[-1]
    T = np.zeros((N, N))
    for k in np.nonzero(mesh.element_in_omega())[0]:
        x0, x1 = mesh.nodes[k], mesh.nodes[k + 1]
        xq, wq = quadrature.gauss_rule(x0, x1, order)
        tau = np.array([kernel.tail_mass(x - lo) + kernel.tail_mass(hi - x) for x in xq])
        phi0 = (x1 - xq) / (x1 - x0)
        phi1 = (xq - x0) / (x1 - x0)
        T[k, k] += (wq * tau * phi0 * phi0).sum()
        T[k + 1, k + 1] += (wq * tau * phi1 * phi1).sum()
        v = (wq * tau * phi0 * phi1).sum()
        T[k, k + 1] += v
        T[k + 1, k] += v
    return T


def complement_mass(mesh, weight=None, order=8):
    """Mass matrix over the truncated complement, optionally against a weight
    function (e.g. beta * nu_K for Robin terms)."""
    N = mesh.n_nodes
    C = np.zeros((N, N))
    for k in np.nonzero(~mesh.element_in_omega())[0]:
        x0, x1 = mesh.nodes[k], mesh.nodes[k + 1]
        xq, wq = quadrature.gauss_rule(x0, x1, order)
        wvals = np.ones_like(xq) if weight is None else np.array(
            [float(weight(x)) for x in xq])
        phi0 = (x1 - xq) / (x1 - x0)
        phi1 = (xq - x0) / (x1 - x0)
        C[k, k] += (wq * wvals * phi0 * phi0).sum()
        C[k + 1, k + 1] += (wq * wvals * phi1 * phi1).sum()
        v = (wq * wvals * phi0 * phi1).sum()
        C[k, k + 1] += v
        C[k + 1, k] += v
    return C


def assemble_load(mesh, f=None, g=None, g_weight=None, order=8):
    """Load vector  b_i = int_Omega f phi_i + int_collar g phi_i (w),  with an
    optional complement weight (nu_K-style) multiplying g."""
    N = mesh.n_nodes
    b = np.zeros(N)
    in_omega = mesh.element_in_omega()
    for k in range(mesh.n_elements):
        data = f if in_omega[k] else g
        if data is None:
            continue
        x0, x1 = mesh.nodes[k], mesh.nodes[k + 1]
        xq, wq = quadrature.gauss_rule(x0, x1, order)
        vals = np.asarray(data(xq), dtype=float)
        if not in_omega[k] and g_weight is not None:
            from .kernels import weight_eval
            vals = vals * np.array([weight_eval(g_weight, x) for x in xq])
        phi0 = (x1 - xq) / (x1 - x0)
        phi1 = (xq - x0) / (x1 - x0)
        b[k] += (wq * vals * phi0).sum()
        b[k + 1] += (wq * vals * phi1).sum()
    return b


def seminorm_E(forms, u):
    """Quadratic form value  u^T E u  of a discrete field."""
    if u.mesh is not forms.mesh and u.mesh.n_nodes != forms.mesh.n_nodes:
        raise ValueError("field lives on a different mesh")
    return float(u.coeffs @ forms.E @ u.coeffs)


def export_matrix(path, matrix, name="matrix", tol=0.0):
    """Plain-text triplet export (header line, then 'i j value' rows)."""
    matrix = np.asarray(matrix)
    rows, cols = np.nonzero(np.abs(matrix) > tol)
    with open(path, "w", newline="\n") as fh:
        fh.write(f"%% {name} {matrix.shape[0]} {matrix.shape[1]} {rows.size}\n")
        for i, j in zip(rows, cols):
            fh.write(f"{i + 1} {j + 1} {matrix[i, j]:.17g}\n")
