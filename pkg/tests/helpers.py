"""Random instances shared by the test modules."""
import numpy as np


def random_joint(rng, nx, ny):
    P = rng.random((nx, ny)) ** 2
    return P / P.sum()


def random_density(rng, dim, rank=None):
    rank = dim if rank is None else rank
    g = rng.normal(size=(dim, rank)) + 1j * rng.normal(size=(dim, rank))
    rho = g @ g.conj().T
    return rho / np.trace(rho).real
