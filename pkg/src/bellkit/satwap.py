"""SATWAP Bell operator, its canonical optimal strategy and SOS certificate.

All fractional powers of omega are taken on the principal branch,
``omega^q = exp(2 pi i q / d)``.
"""

from dataclasses import dataclass

import numpy as np

from .exceptions import DimensionMismatch, NotDValuedObservable
from .linalg import (
    BipartiteState,
    maximally_entangled,
    observable_residuals,
    omega,
    omega_power,
)
from .scenario import Strategy, satwap_r
from .validation import CONSTRUCTION_TOL, check_matrix, op_norm


@dataclass(frozen=True)
class SatwapCoefficients:
    d: int
    r: np.ndarray  # r[k - 1] = r_k for k = 1..d-1

    @classmethod
    def build(cls, d):
        return cls(d, np.array([satwap_r(k, d) for k in range(1, d)]))

    def __getitem__(self, k):
        return self.r[k - 1]

    def residuals(self):
        d, w = self.d, omega(self.d)
        out = {"modulus": 0.0, "conjugate_symmetry": 0.0, "cancellation": 0.0,
               "alternate_form": 0.0}
        for k in range(1, d):
            r = self[k]
            out["modulus"] = max(out["modulus"], abs(abs(r) - 2**-0.5))
            out["conjugate_symmetry"] = max(out["conjugate_symmetry"], abs(np.conj(r) - self[d - k]))
            out["cancellation"] = max(out["cancellation"],
                                      abs(np.conj(r) ** 2 * w**k + r**2),
                                      abs(r**2 * w**-k + np.conj(r) ** 2))
            out["alternate_form"] = max(out["alternate_form"],
                                        abs(r - (1 - 1j) / 2 * omega_power(k / 4, d)))
        return out


def clock(d):
    """Generalized Pauli ``Z = sum_i omega^i |i><i|``."""
    return np.diag(omega(d) ** np.arange(d))


def shift(d):
    """``X|i> = |i + 1 mod d>``."""
    return np.roll(np.eye(d, dtype=complex), 1, axis=0)


def uniform_vector(d):
    """``|J> = d^{-1/2} sum_i |i>``."""
    return np.full(d, 1 / np.sqrt(d), dtype=complex)


def check_d_valued(U, d, tol=CONSTRUCTION_TOL, name="observable"):
    U = check_matrix(U, name=name)
    eye = np.eye(U.shape[0])
    err = max(op_norm(U.conj().T @ U - eye), op_norm(np.linalg.matrix_power(U, d) - eye))
    if err > tol:
        raise NotDValuedObservable(f"{name} is not a {d}-valued observable (residual {err:.3e})")
    return U


def _powers(U, d):
    """``[U^0, U^1, ..., U^{d-1}]``; ``U^{-k}`` is ``powers[(-k) % d]``."""
    out = [np.eye(U.shape[0], dtype=complex)]
    for _ in range(d - 1):
        out.append(out[-1] @ U)
    return out


def satwap_operator(d, A0, A1, B0, B1, tol=CONSTRUCTION_TOL):
    """``O_d = sum_k r_k A0^k B0^-k + conj(r_k) w^k A0^k B1^-k + conj(r_k) A1^k B0^-k + r_k A1^k B1^-k``."""
    A0, A1 = check_d_valued(A0, d, tol, "A0"), check_d_valued(A1, d, tol, "A1")
    B0, B1 = check_d_valued(B0, d, tol, "B0"), check_d_valued(B1, d, tol, "B1")
    w = omega(d)
    pa0, pa1, pb0, pb1 = (_powers(U, d) for U in (A0, A1, B0, B1))
    n = A0.shape[0] * B0.shape[0]
    out = np.zeros((n, n), dtype=complex)
    for k in range(1, d):
        r = satwap_r(k, d)
        rb = np.conj(r)
        out += r * np.kron(pa0[k], pb0[-k % d])
        out += rb * w**k * np.kron(pa0[k], pb1[-k % d])
        out += rb * np.kron(pa1[k], pb0[-k % d])
        out += r * np.kron(pa1[k], pb1[-k % d])
    return out


@dataclass(frozen=True)
class SatwapCanonical:
    d: int
    Z: np.ndarray
    X: np.ndarray
    J: np.ndarray
    A0: np.ndarray
    A1: np.ndarray
    B0: np.ndarray
    B1: np.ndarray
    state: BipartiteState

    @property
    def observables(self):
        return (self.A0, self.A1, self.B0, self.B1)

    @property
    def J_projector(self):
        return np.outer(self.J, self.J.conj())

    def operator(self):
        return satwap_operator(self.d, *self.observables)

    def value(self):
        return self.state.expectation(self.operator()).real

    def strategy(self):
        return Strategy.from_observables(self.state, [self.A0, self.A1], [self.B0, self.B1], self.d)

    def residuals(self):
        return {name: max(observable_residuals(U, self.d).values())
                for name, U in zip(("A0", "A1", "B0", "B1"), self.observables)}


def canonical_alice(d):
    Z, I = clock(d), np.eye(d)
    JJ = np.outer(uniform_vector(d), uniform_vector(d).conj())
    A0 = omega_power(-0.25, d) * Z @ (I - (1 - 1j) * JJ)
    A1 = omega_power(0.25, d) * Z @ (I - (1 + 1j) * JJ)
    return A0, A1


def canonical_bob(d):
    Z, I = clock(d), np.eye(d)
    JJ = np.outer(uniform_vector(d), uniform_vector(d).conj())
    return Z, omega_power(0.5, d) * (I - 2 * JJ) @ Z


def canonical_satwap(d):
    if d < 2:
        raise ValueError("d must be >= 2")
    A0, A1 = canonical_alice(d)
    B0, B1 = canonical_bob(d)
    return SatwapCanonical(d, clock(d), shift(d), uniform_vector(d), A0, A1, B0, B1,
                           maximally_entangled(d))


def c_operators(B0, B1, d):
    """``C[s][k]`` for ``k = 0..d-1`` (``C[s][0]`` unused and set to None).

    ``C_{0,k} = r_k B0^-k + conj(r_k) w^k B1^-k``, ``C_{1,k} = conj(r_k) B0^-k + r_k B1^-k``.
    """
    w = omega(d)
    pb0, pb1 = _powers(B0, d), _powers(B1, d)
    c0, c1 = [None], [None]
    for k in range(1, d):
        r = satwap_r(k, d)
        c0.append(r * pb0[-k % d] + np.conj(r) * w**k * pb1[-k % d])
        c1.append(np.conj(r) * pb0[-k % d] + r * pb1[-k % d])
    return c0, c1


@dataclass(frozen=True)
class SosCertificate:
    d: int
    value: float
    gap: float
    residuals: np.ndarray  # residuals[s, k-1] = || M_{s,k}^dag psi ||
    c_ops: tuple
    c_norm_residual: float

    @property
    def sos_gap(self):
        """``(1/2) sum ||M_{s,k}^dag psi||^2``; equals ``gap`` for every strategy."""
        return 0.5 * float(np.sum(self.residuals**2))

    @property
    def identity_residual(self):
        return abs(self.gap - self.sos_gap)

    def m_operators(self, A0, A1):
        """Dense ``M_{s,k} = A_s^k (x) I - I (x) C_{s,k}^dag`` (small dimensions only)."""
        out = {}
        nb = self.c_ops[0][1].shape[0]
        for s, A in enumerate((A0, A1)):
            pa = _powers(A, self.d)
            for k in range(1, self.d):
                out[s, k] = (np.kron(pa[k], np.eye(nb))
                             - np.kron(np.eye(A.shape[0]), self.c_ops[s][k].conj().T))
        return out


def sos_certificate(state, A0, A1, B0, B1, d, tol=CONSTRUCTION_TOL):
    """Evaluate the SOS decomposition on a concrete strategy.

    Residual ``||M_{s,k}^dag psi|| = ||(A_s^-k (x) I - I (x) C_{s,k}) psi||`` is
    computed on the coefficient matrix, and ``gap = 2(d-1) - <O_d>`` from the
    operator itself so the identity is checked between two independent routes.
    """
    A0, A1 = check_d_valued(A0, d, tol, "A0"), check_d_valued(A1, d, tol, "A1")
    B0, B1 = check_d_valued(B0, d, tol, "B0"), check_d_valued(B1, d, tol, "B1")
    if state.d_a != A0.shape[0] or state.d_b != B0.shape[0]:
        raise DimensionMismatch("observables do not act on the state's local spaces")
    m = state.matrix()
    c0, c1 = c_operators(B0, B1, d)
    res = np.zeros((2, d - 1))
    for s, (A, cs) in enumerate(((A0, c0), (A1, c1))):
        pa = _powers(A, d)
        for k in range(1, d):
            diff = pa[-k % d] @ m - m @ cs[k].T
            res[s, k - 1] = np.linalg.norm(diff)
    value = state.expectation(satwap_operator(d, A0, A1, B0, B1, tol)).real
    nb = B0.shape[0]
    c_sum = sum(c.conj().T @ c for c in c0[1:] + c1[1:])
    c_norm = op_norm(c_sum - 2 * (d - 1) * np.eye(nb))
    return SosCertificate(d, value, 2 * (d - 1) - value, res, (tuple(c0), tuple(c1)), c_norm)


def _sum_j_projectors(d, indices):
    Z = clock(d)
    J = uniform_vector(d)
    out = np.zeros((d, d), dtype=complex)
    for l in indices:
        v = np.linalg.matrix_power(Z, l % d) @ J
        out += np.outer(v, v.conj())
    return out


def power_identities(d):
    """Residuals of every closed-form identity behind the canonical SATWAP strategy.

    Keys map to the largest residual over the relevant range of ``k``.
    """
    canon = canonical_satwap(d)
    Z, J = canon.Z, canon.J
    I = np.eye(d)
    pa0, pa1, pb1 = _powers(canon.A0, d + 1), _powers(canon.A1, d + 1), _powers(canon.B1, d + 1)
    c0, c1 = c_operators(canon.B0, canon.B1, d)
    report = {k: 0.0 for k in ("A0_power", "A1_power", "B1_power", "C0_transpose",
                               "C1_transpose", "J_orthogonality", "J_basis", "C_sum",
                               "C_adjoint", "A_dth_root", "B_dth_root")}
    for k in range(1, d + 1):
        Zk = np.linalg.matrix_power(Z, k)
        S_minus = _sum_j_projectors(d, [-l for l in range(k)])
        S_plus = _sum_j_projectors(d, range(k))
        report["A0_power"] = max(report["A0_power"], op_norm(
            pa0[k] - omega_power(-k / 4, d) * Zk @ (I - (1 - 1j) * S_minus)))
        report["A1_power"] = max(report["A1_power"], op_norm(
            pa1[k] - omega_power(k / 4, d) * Zk @ (I - (1 + 1j) * S_minus)))
        report["B1_power"] = max(report["B1_power"], op_norm(
            pb1[k] - omega_power(k / 2, d) * (I - 2 * S_plus) @ Zk))
    for k in range(1, d):
        report["C0_transpose"] = max(report["C0_transpose"],
                                     op_norm(c0[k].T - np.linalg.matrix_power(canon.A0, d - k)))
        report["C1_transpose"] = max(report["C1_transpose"],
                                     op_norm(c1[k].T - np.linalg.matrix_power(canon.A1, d - k)))
        report["C_adjoint"] = max(report["C_adjoint"], op_norm(c0[k].conj().T - c0[d - k]),
                                  op_norm(c1[k].conj().T - c1[d - k]))
        report["J_orthogonality"] = max(report["J_orthogonality"],
                                        abs(np.vdot(J, np.linalg.matrix_power(Z, k) @ J)))
    basis = np.stack([np.linalg.matrix_power(Z, l) @ J for l in range(d)], axis=1)
    report["J_basis"] = op_norm(basis.conj().T @ basis - I)
    report["C_sum"] = op_norm(sum(c.conj().T @ c for c in c0[1:] + c1[1:]) - 2 * (d - 1) * I)
    report["A_dth_root"] = max(op_norm(pa0[d] - I), op_norm(pa1[d] - I))
    report["B_dth_root"] = op_norm(pb1[d] - I)
    report.update({f"r_{key}": v for key, v in SatwapCoefficients.build(d).residuals().items()})
    return report


def formula_local_bound(d):
    """``[2 cot(pi/4d) - cot(3 pi/4d) - 4] / 2``, reported next to brute force."""
    return (2 / np.tan(np.pi / (4 * d)) - 1 / np.tan(3 * np.pi / (4 * d)) - 4) / 2
