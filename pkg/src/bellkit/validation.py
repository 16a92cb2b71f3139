"""Input validation helpers.

These mirror the ``check_array`` style of scikit-learn: every public entry
point funnels user input through one of them so that downstream code can
assume a contiguous complex ``ndarray`` of the right shape.
"""

import numpy as np

from .exceptions import DimensionMismatch, NotUnitary

CONSTRUCTION_TOL = 1e-10
ACCEPTANCE_TOL = 1e-8


def check_matrix(op, *, square=True, name="operator"):
    """Return ``op`` as a 2-D complex array, optionally requiring it square."""
    arr = np.asarray(op, dtype=complex)
    if arr.ndim != 2:
        raise DimensionMismatch(f"{name} must be 2-D, got shape {arr.shape}")
    if square and arr.shape[0] != arr.shape[1]:
        raise DimensionMismatch(f"{name} must be square, got shape {arr.shape}")
    return arr


def check_vector(vec, *, size=None, name="vector"):
    arr = np.asarray(vec, dtype=complex).reshape(-1)
    if size is not None and arr.size != size:
        raise DimensionMismatch(f"{name} has {arr.size} entries, expected {size}")
    return arr


def check_dims(*dims):
    out = []
    for d in dims:
        if int(d) != d or d < 1:
            raise DimensionMismatch(f"dimension must be a positive integer, got {d!r}")
        out.append(int(d))
    return tuple(out)


def op_norm(x):
    """Spectral norm; used for every operator residual."""
    x = np.asarray(x)
    if x.size == 0:
        return 0.0
    return float(np.linalg.norm(x, 2))


def is_unitary(op, tol=CONSTRUCTION_TOL):
    op = check_matrix(op)
    return op_norm(op.conj().T @ op - np.eye(op.shape[0])) <= tol


def is_hermitian(op, tol=CONSTRUCTION_TOL):
    op = check_matrix(op)
    return op_norm(op - op.conj().T) <= tol


def is_projector(op, tol=CONSTRUCTION_TOL):
    op = check_matrix(op)
    return is_hermitian(op, tol) and op_norm(op @ op - op) <= tol


def check_unitary(op, tol=CONSTRUCTION_TOL, name="operator"):
    op = check_matrix(op, name=name)
    err = op_norm(op.conj().T @ op - np.eye(op.shape[0]))
    if err > tol:
        raise NotUnitary(f"{name} is not unitary: ||U^dag U - I|| = {err:.3e} > {tol:.1e}")
    return op
