import numpy as np
import pytest

from nonlocal_cvp import assembly, kernels


@pytest.fixture(scope="session")
def mesh32():
    return assembly.build_mesh(0.0, 1.0, 32, 2.0)


@pytest.fixture(scope="session")
def kernel_a1():
    return kernels.fractional_kernel(1.0, normalization="exact")


@pytest.fixture(scope="session")
def forms_a1(mesh32, kernel_a1):
    return assembly.assemble_forms(mesh32, kernel_a1)


@pytest.fixture(scope="session")
def forms_a195():
    mesh = assembly.build_mesh(0.0, 1.0, 64, 2.0)
    k = kernels.fractional_kernel(1.95, normalization="exact")
    return assembly.assemble_forms(mesh, k)


def l2_omega(forms, coeffs):
    return float(np.sqrt(coeffs @ forms.M @ coeffs))
