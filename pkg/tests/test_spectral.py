"""Spectral decompositions, the Dirichlet-to-Neumann map and its Robin link,
Poincare constants, and the heat/Schrodinger/wave evolutions."""

import numpy as np
import pytest

from nonlocal_cvp import assembly as A
from nonlocal_cvp import convergence as C
from nonlocal_cvp import kernels as K
from nonlocal_cvp import spectral as SP


def test_neumann_zero_mode(forms_a1):
    spec = SP.eig(forms_a1, "neumann", k=3)
    scale = np.abs(forms_a1.E).max()
    assert abs(spec.values[0]) <= 1e-10 * scale
    assert np.ptp(spec.vectors[0].coeffs) <= 1e-8 * abs(spec.vectors[0].coeffs[0])
    assert spec.values[1] > 0


def test_values_non_decreasing(forms_a1):
    spec = SP.eig(forms_a1, "neumann", k=12)
    assert np.all(np.diff(spec.values) >= -1e-12 * np.abs(spec.values[-1]))


def test_mass_orthonormality(forms_a1):
    spec = SP.eig(forms_a1, "neumann", k=8)
    V = np.column_stack([v.coeffs for v in spec.vectors])
    G = V.T @ forms_a1.M @ V
    assert np.abs(G - np.eye(8)).max() <= 1e-10


def test_dirichlet_first_values_positive(forms_a1):
    spec = SP.eig(forms_a1, "dirichlet", k=4)
    assert spec.values[0] > 0


def test_dirichlet_near_local_limit():
    # alpha = 1.95 on (0,1): first eigenvalue within 10% of pi^2 (a local P1
    # oracle at the same resolution gives the classical -u'' spectrum)
    mesh = A.build_mesh(0.0, 1.0, 128, 1.0)
    k = K.fractional_kernel(1.95, normalization="exact")
    forms = A.assemble_forms(mesh, k, tail_mode="dirichlet_zero")
    lam1 = SP.eig(forms, "dirichlet", k=1).values[0]
    oracle = C.LocalOracle(0.0, 1.0, 128)
    ref = C.local_eig(oracle, "dirichlet", 1)[0][0]
    assert ref == pytest.approx(np.pi**2, rel=1e-3)
    assert abs(lam1 - ref) / ref < 0.10


def test_robin_requires_weight(forms_a1, kernel_a1):
    with pytest.raises(SP.RobinPreconditionError):
        SP.eig(forms_a1, "robin", k=1, beta=0.0,
               robin_weight=K.WeightSpec(kernel_a1, (0.25, 0.75), "essinf"))


def test_rayleigh_residual_exact_pairs(forms_a1):
    spec = SP.eig(forms_a1, "neumann", k=6)
    assert SP.rayleigh_residual(forms_a1, spec) <= 1e-9


def test_rayleigh_residual_detects_perturbation(forms_a1):
    spec = SP.eig(forms_a1, "neumann", k=4)
    rng = np.random.default_rng(0)
    spec.vectors[2].coeffs = spec.vectors[2].coeffs + 1e-3 * rng.standard_normal(
        spec.vectors[2].coeffs.size)
    assert SP.rayleigh_residual(forms_a1, spec) > 1e-5


def test_rayleigh_constant_mode_zero(forms_a1):
    spec = SP.eig(forms_a1, "neumann", k=1)
    assert abs(spec.values[0]) <= 1e-10 * np.abs(forms_a1.E).max()


def test_completeness_reconstruction(forms_a1, mesh32):
    spec = SP.eig(forms_a1, "neumann")       # full dimension
    rng = np.random.default_rng(1)
    u = rng.standard_normal(mesh32.n_nodes)
    V = np.column_stack([v.coeffs for v in spec.vectors])
    recon = V @ (V.T @ (forms_a1.M @ u))
    sup = mesh32.omega_support
    assert np.abs(recon[sup] - u[sup]).max() <= 1e-10 * max(1, np.abs(u).max())


def test_poincare_constants(forms_a1):
    c_n = SP.poincare_constant(forms_a1, "neumann_mean_zero")
    c_d = SP.poincare_constant(forms_a1, "dirichlet_friedrichs")
    mu1 = SP.eig(forms_a1, "neumann", k=2).values[1]
    lam1 = SP.eig(forms_a1, "dirichlet", k=1).values[0]
    assert c_n == pytest.approx(1.0 / mu1, rel=1e-12)
    assert c_d == pytest.approx(1.0 / lam1, rel=1e-12)


def test_poincare_near_local():
    mesh = A.build_mesh(0.0, 1.0, 128, 2.0)
    k = K.fractional_kernel(1.99, normalization="exact")
    forms = A.assemble_forms(mesh, k)
    c = SP.poincare_constant(forms, "neumann_mean_zero")
    assert abs(c - 1.0 / np.pi**2) / (1.0 / np.pi**2) < 0.10


# ---------------------------------------------------------------------------
# Dirichlet-to-Neumann
# ---------------------------------------------------------------------------

def test_dtn_symmetry_and_constants(forms_a1):
    dtn = SP.dtn_matrix(forms_a1, lam=0.0)
    D = dtn.matrix
    scale = np.abs(D).max()
    assert np.abs(D - D.T).max() <= 1e-10 * scale
    assert np.abs(D @ np.ones(D.shape[0])).max() <= 1e-10 * scale


def test_dtn_resonance_guard(forms_a1, mesh32):
    import scipy.linalg as sla

    vals = sla.eigh(forms_a1.E[np.ix_(mesh32.interior, mesh32.interior)],
                    forms_a1.M[np.ix_(mesh32.interior, mesh32.interior)],
                    eigvals_only=True)
    with pytest.raises(SP.ResonanceError):
        SP.dtn_matrix(forms_a1, lam=float(vals[0]))


def test_dtn_robin_spectrum_link(forms_a1, kernel_a1, mesh32):
    # (beta, g) with -D g = beta Mc g extends to a Robin-Helmholtz eigenpair
    w = K.WeightSpec(kernel_a1, (0.25, 0.75), "essinf")
    lam = 1.234
    dtn = SP.dtn_matrix(forms_a1, lam=lam)
    pairs = SP.robin_dtn_link_pairs(forms_a1, dtn, w, k=2)
    Cmat = SP._robin_matrix(forms_a1, 1.0, w)
    scale = np.abs(forms_a1.E).max()
    for beta, g in pairs:
        u = SP.harmonic_extension(forms_a1, dtn, g)
        res = (forms_a1.E + beta * Cmat - lam * forms_a1.M) @ u.coeffs
        assert np.linalg.norm(res) <= 1e-6 * scale * np.linalg.norm(u.coeffs)


def test_dtn_harmonic_extension_of_constant(forms_a1):
    dtn = SP.dtn_matrix(forms_a1, lam=0.0)
    g = np.ones(dtn.trace_nodes.size)
    u = SP.harmonic_extension(forms_a1, dtn, g)
    assert np.abs(u.coeffs - 1.0).max() <= 1e-10


# ---------------------------------------------------------------------------
# evolutions
# ---------------------------------------------------------------------------

@pytest.fixture(scope="module")
def heat_setup():
    mesh = A.build_mesh(0.0, 1.0, 48, 1.5)
    k = K.fractional_kernel(1.3, normalization="exact")
    forms = A.assemble_forms(mesh, k)
    spec = SP.eig(forms, "neumann")
    return forms, spec


def test_heat_single_mode(heat_setup):
    forms, spec = heat_setup
    mu1, phi1 = spec.pair(1)
    times, traj = SP.evolve_heat(spec, phi1, T=0.5, samples=8)
    for t, u in zip(times, traj):
        assert np.abs(u.coeffs - np.exp(-mu1 * t) * phi1.coeffs).max() <= 1e-10


def test_heat_mass_conservation(heat_setup):
    forms, spec = heat_setup
    rng = np.random.default_rng(2)
    u0 = A.DiscreteField(forms.mesh, rng.standard_normal(forms.mesh.n_nodes))
    m = forms.omega_mass_vector()
    times, traj = SP.evolve_heat(spec, u0, T=1.0, samples=10)
    mass0 = m @ traj[0].coeffs
    for u in traj:
        assert abs(m @ u.coeffs - mass0) <= 1e-10 * max(1.0, abs(mass0))


def test_heat_dissipation_bound(heat_setup):
    forms, spec = heat_setup
    rng = np.random.default_rng(3)
    u0 = A.DiscreteField(forms.mesh, rng.standard_normal(forms.mesh.n_nodes))
    m = forms.omega_mass_vector()
    omega_measure = m.sum()
    mu1 = spec.values[1]
    times, traj = SP.evolve_heat(spec, u0, T=1.0, samples=10)

    def deviation(u):
        mean = (m @ u.coeffs) / omega_measure
        d = u.coeffs - mean
        return np.sqrt(d @ forms.M @ d)

    d0 = deviation(traj[0])
    for t, u in zip(times, traj):
        assert deviation(u) <= np.exp(-mu1 * t) * d0 * (1 + 1e-10)


def test_heat_energy_decay(heat_setup):
    forms, spec = heat_setup
    rng = np.random.default_rng(4)
    u0 = A.DiscreteField(forms.mesh, rng.standard_normal(forms.mesh.n_nodes))
    _, traj = SP.evolve_heat(spec, u0, T=0.5, samples=10)
    energies = [u.coeffs @ forms.E @ u.coeffs for u in traj]
    assert all(a >= b - 1e-12 * abs(a) for a, b in zip(energies, energies[1:]))


def test_heat_duhamel_constant_forcing(heat_setup):
    # stationary forcing: u(t) -> the compatible Neumann solution profile
    forms, spec = heat_setup
    f_field = A.DiscreteField(forms.mesh,
                              np.sin(2 * np.pi * forms.mesh.nodes) * (forms.mesh.tags != 2))
    u0 = A.DiscreteField(forms.mesh, np.zeros(forms.mesh.n_nodes))
    times, traj = SP.evolve_heat(spec, u0, T=0.3, samples=3, f=f_field)
    # derivative check via a small explicit step of the mode ODE
    V = np.column_stack([v.coeffs for v in spec.vectors])
    fk = V.T @ (forms.M @ f_field.coeffs)
    mu = spec.values
    t = times[-1]
    with np.errstate(divide="ignore", invalid="ignore"):
        ck = np.where(mu > 0, fk * (1 - np.exp(-mu * t)) / np.where(mu > 0, mu, 1), fk * t)
    ref = V @ ck
    assert np.abs(traj[-1].coeffs - ref).max() <= 1e-10


def test_heat_duhamel_segmented_forcing(heat_setup):
    # forcing active only on [0, T/2]: per-mode closed form
    forms, spec = heat_setup
    mesh = forms.mesh
    f_field = A.DiscreteField(mesh, np.cos(2 * np.pi * mesh.nodes) * (mesh.tags != 2))
    u0 = A.DiscreteField(mesh, np.zeros(mesh.n_nodes))
    T = 0.8
    times, traj = SP.evolve_heat(spec, u0, T=T, samples=4,
                                 f=[(0.0, T / 2, f_field)])
    V = np.column_stack([v.coeffs for v in spec.vectors])
    fk = V.T @ (forms.M @ f_field.coeffs)
    mu = spec.values
    t = times[-1]
    lo, hi = 0.0, T / 2
    with np.errstate(divide="ignore", invalid="ignore"):
        seg = np.where(mu > 0,
                       (np.exp(-mu * (t - hi)) - np.exp(-mu * (t - lo))) / np.where(mu > 0, mu, 1),
                       hi - lo)
    assert np.abs(traj[-1].coeffs - V @ (fk * seg)).max() <= 1e-10


def test_robin_with_integral_weight(heat_setup):
    # the capped-integral complement weight is admissible for the Robin term
    forms, _ = heat_setup
    w = K.WeightSpec(forms.kernel, (0.25, 0.75), "integral")
    spec = SP.eig(forms, "robin", k=2, beta=1.0, robin_weight=w)
    assert spec.values[0] > 0
    assert SP.rayleigh_residual(forms, spec, beta=1.0, robin_weight=w) <= 1e-9


def test_schrodinger_unitary(heat_setup):
    forms, spec = heat_setup
    rng = np.random.default_rng(5)
    u0 = A.DiscreteField(forms.mesh, rng.standard_normal(forms.mesh.n_nodes))
    times, arr = SP.evolve_schrodinger(spec, u0, T=1.0, samples=9)
    norms = [np.sqrt(np.real(np.conj(row) @ forms.M @ row)) for row in arr]
    for nv in norms:
        assert nv == pytest.approx(norms[0], abs=1e-10 * max(1, norms[0]))


def test_schrodinger_single_mode_coefficient(heat_setup):
    forms, spec = heat_setup
    phi2 = spec.vectors[2]
    times, arr = SP.evolve_schrodinger(spec, phi2, T=0.7, samples=6)
    for row in arr:
        c = np.real(np.conj(row) @ forms.M @ phi2.coeffs)
        assert abs(abs(np.conj(row) @ forms.M @ phi2.coeffs) - 1.0) <= 1e-10
    assert np.abs(arr[0] - phi2.coeffs).max() <= 1e-12


def test_wave_single_mode(heat_setup):
    forms, spec = heat_setup
    mu1, phi1 = spec.pair(1)
    times, traj, vel = SP.evolve_wave(spec, phi1,
                                      A.DiscreteField(forms.mesh, np.zeros(forms.mesh.n_nodes)),
                                      T=1.0, samples=8)
    for t, u in zip(times, traj):
        assert np.abs(u.coeffs - np.cos(np.sqrt(mu1) * t) * phi1.coeffs).max() <= 1e-10


def test_wave_energy_constant(heat_setup):
    forms, spec = heat_setup
    rng = np.random.default_rng(6)
    u0 = A.DiscreteField(forms.mesh, rng.standard_normal(forms.mesh.n_nodes))
    u1 = A.DiscreteField(forms.mesh, rng.standard_normal(forms.mesh.n_nodes))
    times, traj, vel = SP.evolve_wave(spec, u0, u1, T=1.0, samples=9)
    E = [v.coeffs @ forms.M @ v.coeffs + u.coeffs @ forms.E @ u.coeffs
         for u, v in zip(traj, vel)]
    for e in E:
        assert e == pytest.approx(E[0], rel=1e-8)


def test_wave_zero_mode(heat_setup):
    forms, spec = heat_setup
    phi0 = spec.vectors[0]
    times, traj, _ = SP.evolve_wave(spec, phi0, phi0, T=2.0, samples=4)
    for t, u in zip(times, traj):
        assert np.abs(u.coeffs - (1 + t) * phi0.coeffs).max() <= 1e-9


def test_truncated_spectrum_warns(heat_setup):
    forms, spec = heat_setup
    small = SP.Spectrum(condition="neumann", values=spec.values[:3],
                        vectors=spec.vectors[:3], forms=forms)
    u0 = A.DiscreteField(forms.mesh, np.ones(forms.mesh.n_nodes))
    with pytest.warns(UserWarning):
        SP.evolve_heat(small, u0, T=0.1, samples=2)
