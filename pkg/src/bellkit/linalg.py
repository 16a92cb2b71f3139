"""Dense complex linear algebra on bipartite systems.

Composite index convention, used everywhere in the package: the basis vector
``|a>|b>`` of ``C^{d_A} (x) C^{d_B}`` sits at position ``a * d_B + b``. This is
exactly what ``numpy.kron`` and a C-order ``reshape(d_A, d_B)`` produce.
"""

from dataclasses import dataclass, field

import numpy as np

from .exceptions import DimensionMismatch, InvalidState, NotDthRoot, NotUnitary
from .validation import (
    CONSTRUCTION_TOL,
    check_dims,
    check_matrix,
    check_vector,
    op_norm,
)


def omega(d):
    """Primitive d-th root of unity exp(2 pi i / d)."""
    return np.exp(2j * np.pi / d)


def omega_power(q, d):
    """``omega(d) ** q`` on the principal branch, for rational (or real) ``q``."""
    return np.exp(2j * np.pi * q / d)


def tensor_product(*ops):
    """Kronecker product of any number of matrices or vectors."""
    out = np.asarray(ops[0], dtype=complex)
    for op in ops[1:]:
        out = np.kron(out, np.asarray(op, dtype=complex))
    return out


@dataclass(frozen=True)
class SchmidtSpectrum:
    """Nonincreasing Schmidt coefficients of a bipartite pure state."""

    coefficients: np.ndarray

    def __post_init__(self):
        c = np.sort(np.abs(np.asarray(self.coefficients, dtype=float)))[::-1]
        object.__setattr__(self, "coefficients", c)

    def rank(self, tol=1e-10):
        return int(np.count_nonzero(self.coefficients > tol))

    def nonzero(self, tol=1e-10):
        return self.coefficients[self.coefficients > tol]

    def __len__(self):
        return len(self.coefficients)


@dataclass(frozen=True)
class BipartiteState:
    """Unit vector in ``C^{d_A} (x) C^{d_B}``."""

    amplitudes: np.ndarray
    d_a: int
    d_b: int
    tol: float = field(default=1e-12, repr=False, compare=False)

    def __post_init__(self):
        d_a, d_b = check_dims(self.d_a, self.d_b)
        amps = check_vector(self.amplitudes, size=d_a * d_b, name="amplitudes")
        norm = np.linalg.norm(amps)
        if abs(norm - 1.0) > self.tol:
            raise InvalidState(f"state norm is {norm!r}, expected 1 within {self.tol:.0e}")
        amps.setflags(write=False)
        object.__setattr__(self, "amplitudes", amps)
        object.__setattr__(self, "d_a", d_a)
        object.__setattr__(self, "d_b", d_b)

    @classmethod
    def from_matrix(cls, matrix, normalize=False):
        """Build from the ``d_A x d_B`` coefficient matrix ``psi[a, b]``."""
        m = check_matrix(matrix, square=False, name="coefficient matrix")
        if normalize:
            m = m / np.linalg.norm(m)
        return cls(m.reshape(-1), m.shape[0], m.shape[1])

    @classmethod
    def product(cls, left, right):
        left = check_vector(left)
        right = check_vector(right)
        return cls(np.kron(left, right), left.size, right.size)

    def matrix(self):
        return self.amplitudes.reshape(self.d_a, self.d_b)

    def tensor(self, other):
        """``self (x) other`` regrouped as (A_self A_other) | (B_self B_other)."""
        m = np.einsum("ab,cd->acbd", self.matrix(), other.matrix())
        return BipartiteState.from_matrix(m.reshape(self.d_a * other.d_a, self.d_b * other.d_b))

    def expectation(self, op):
        op = check_matrix(op)
        if op.shape[0] != self.amplitudes.size:
            raise DimensionMismatch("operator does not act on the joint space")
        return complex(np.vdot(self.amplitudes, op @ self.amplitudes))


def maximally_entangled(d):
    """``|Phi_d> = d^{-1/2} sum_i |ii>``."""
    return BipartiteState.from_matrix(np.eye(d) / np.sqrt(d))


def _state_matrix(state, d_a=None, d_b=None):
    if isinstance(state, BipartiteState):
        return state.matrix()
    arr = np.asarray(state, dtype=complex)
    if arr.ndim == 2:
        return arr
    if d_a is None or d_b is None:
        raise DimensionMismatch("raw vectors need explicit (d_a, d_b)")
    return check_vector(arr, size=d_a * d_b).reshape(d_a, d_b)


def apply_local(op, side, state, d_a=None, d_b=None):
    """Return ``(op (x) I) psi`` for ``side='A'`` or ``(I (x) op) psi`` for ``'B'``.

    Works on the reshaped coefficient matrix, never materializing the Kronecker
    product. The result is a flat vector in the composite index convention.
    """
    m = _state_matrix(state, d_a, d_b)
    op = check_matrix(op)
    if side == "A":
        if op.shape[1] != m.shape[0]:
            raise DimensionMismatch(f"op is {op.shape}, side A has dimension {m.shape[0]}")
        return (op @ m).reshape(-1)
    if side == "B":
        if op.shape[1] != m.shape[1]:
            raise DimensionMismatch(f"op is {op.shape}, side B has dimension {m.shape[1]}")
        return (m @ op.T).reshape(-1)
    raise ValueError(f"side must be 'A' or 'B', got {side!r}")


def partial_trace(state, trace_out="B"):
    """Reduced density matrix after tracing out ``trace_out``."""
    m = _state_matrix(state)
    if trace_out == "B":
        return m @ m.conj().T
    if trace_out == "A":
        return (m.conj().T @ m).T
    raise ValueError(f"trace_out must be 'A' or 'B', got {trace_out!r}")


@dataclass(frozen=True)
class SchmidtDecomposition:
    spectrum: SchmidtSpectrum
    left: np.ndarray
    right: np.ndarray

    def reconstruct(self):
        c = self.spectrum.coefficients
        return (self.left * c) @ self.right.T


def schmidt_decompose(state):
    """SVD of the coefficient matrix: ``psi = sum_i c_i |u_i>|v_i>``.

    ``left[:, i]`` holds ``u_i`` and ``right[:, i]`` holds ``v_i``.
    """
    m = _state_matrix(state)
    u, s, vh = np.linalg.svd(m, full_matrices=False)
    return SchmidtDecomposition(SchmidtSpectrum(s), u, vh.T)


def schmidt_spectrum(state):
    return SchmidtSpectrum(np.linalg.svd(_state_matrix(state), compute_uv=False))


def support_isometry(rho, tol=1e-10):
    """Columns spanning the eigenvectors of ``rho`` with eigenvalue above ``tol``."""
    w, v = np.linalg.eigh(check_matrix(rho))
    keep = w > tol
    return v[:, keep][:, ::-1]


def projectors_from_observable(U, d, tol=CONSTRUCTION_TOL):
    """Spectral projectors ``P_a = (1/d) sum_l omega^{-a l} U^l`` of a d-th root of I."""
    U = check_matrix(U)
    n = U.shape[0]
    eye = np.eye(n, dtype=complex)
    unit_err = op_norm(U.conj().T @ U - eye)
    if unit_err > tol:
        raise NotUnitary(f"||U^dag U - I|| = {unit_err:.3e}")
    powers = [eye]
    for _ in range(d):
        powers.append(powers[-1] @ U)
    root_err = op_norm(powers[d] - eye)
    if root_err > tol:
        raise NotDthRoot(f"||U^{d} - I|| = {root_err:.3e}")
    w = omega(d)
    stack = np.stack(powers[:d])
    phases = w ** (-np.outer(np.arange(d), np.arange(d)))
    return list(np.einsum("al,lij->aij", phases, stack) / d)


def observable_from_projectors(projectors):
    d = len(projectors)
    w = omega(d)
    return sum(w**a * np.asarray(p, dtype=complex) for a, p in enumerate(projectors))


@dataclass(frozen=True)
class DValuedObservable:
    """Unitary ``O`` with ``O^d = I`` together with its eigenprojectors."""

    matrix: np.ndarray
    d: int
    projectors: tuple = field(default=None)

    def __post_init__(self):
        m = check_matrix(self.matrix)
        object.__setattr__(self, "matrix", m)
        if self.projectors is None:
            object.__setattr__(self, "projectors", tuple(projectors_from_observable(m, self.d)))

    @classmethod
    def from_projectors(cls, projectors):
        projectors = tuple(np.asarray(p, dtype=complex) for p in projectors)
        return cls(observable_from_projectors(projectors), len(projectors), projectors)

    def power(self, k):
        """``O^k`` for any integer ``k`` through the spectral decomposition."""
        w = omega(self.d)
        return sum(w ** (a * k) * p for a, p in enumerate(self.projectors))

    def check(self, tol=CONSTRUCTION_TOL):
        """Residuals of every defining invariant; all should be below ``tol``."""
        return observable_residuals(self.matrix, self.d, self.projectors)


def observable_residuals(U, d, projectors=None):
    """Largest violation of unitarity, ``U^d = I`` and projector algebra."""
    U = check_matrix(U)
    n = U.shape[0]
    eye = np.eye(n)
    if projectors is None:
        projectors = projectors_from_observable(U, d, tol=np.inf)
    res = {
        "unitarity": op_norm(U.conj().T @ U - eye),
        "dth_root": op_norm(np.linalg.matrix_power(U, d) - eye),
        "completeness": op_norm(sum(projectors) - eye),
        "reconstruction": op_norm(observable_from_projectors(projectors) - U),
    }
    herm = idem = orth = 0.0
    for a, p in enumerate(projectors):
        herm = max(herm, op_norm(p - p.conj().T))
        idem = max(idem, op_norm(p @ p - p))
        for q in projectors[a + 1:]:
            orth = max(orth, op_norm(p @ q))
    res.update(hermiticity=herm, idempotence=idem, orthogonality=orth)
    return res


def measurement_residual(projectors):
    """Largest violation of the projective-measurement axioms."""
    projectors = [check_matrix(p) for p in projectors]
    n = projectors[0].shape[0]
    worst = op_norm(sum(projectors) - np.eye(n))
    for a, p in enumerate(projectors):
        worst = max(worst, op_norm(p - p.conj().T), op_norm(p @ p - p))
        for q in projectors[a + 1:]:
            worst = max(worst, op_norm(p @ q))
    return worst


def random_unitary(n, rng):
    """Haar-random unitary from a ``numpy.random.Generator``."""
    z = (rng.standard_normal((n, n)) + 1j * rng.standard_normal((n, n))) / np.sqrt(2)
    q, r = np.linalg.qr(z)
    ph = np.diag(r) / np.abs(np.diag(r))
    return q * ph


def random_state(d_a, d_b, rng):
    amps = rng.standard_normal(d_a * d_b) + 1j * rng.standard_normal(d_a * d_b)
    return BipartiteState(amps / np.linalg.norm(amps), d_a, d_b)


def random_observable(n, d, rng):
    """Random ``n x n`` d-valued observable ``u diag(omega^k) u^dag`` with Haar ``u``."""
    u = random_unitary(n, rng)
    return (u * omega(d) ** rng.integers(0, d, size=n)) @ u.conj().T
