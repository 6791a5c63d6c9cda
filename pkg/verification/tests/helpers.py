import numpy as np

from quantum_sdk.recoverability.quantum_objects import DensityMatrix, random_state


def mixed_state(dim, seed):
    """Random state with spectrum bounded below by ``1 / (2 dim)``."""
    rho = random_state(dim, dim, seed).matrix
    return DensityMatrix(0.5 * rho + 0.5 * np.eye(dim) / dim)


def gaussian(dim, seed):
    rng = np.random.default_rng(seed)
    return rng.standard_normal((dim, dim)) + 1j * rng.standard_normal((dim, dim))
