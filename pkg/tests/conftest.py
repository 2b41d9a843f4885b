import numpy as np
import pytest

from kinetic_gpc import (affine_z_kernel, anisotropic_gaussian_kernel, build_basis,
                         build_velocity_grid, constant_kernel, nonlinear_z_kernel)


@pytest.fixture(scope="session")
def vgrid16():
    return build_velocity_grid(16)


@pytest.fixture(scope="session")
def legendre8():
    return build_basis("legendre", 8)


@pytest.fixture(scope="session")
def all_kernels():
    return (
        constant_kernel(1.0),
        affine_z_kernel(1.0, 0.5),
        anisotropic_gaussian_kernel(1.0, 0.2, 0.3, 0.5),
        nonlinear_z_kernel(2.0, 0.5),
    )


@pytest.fixture(scope="session")
def rng():
    return np.random.default_rng(20240817)
