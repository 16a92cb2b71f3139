"""Self-testing extraction for maximal SATWAP violations.

Given a strategy that saturates ``<O_d> = 2(d-1)``, build local isometries
``U``, ``V`` bringing it to the canonical form ``Phi_d (x) junk``. Bob's
isometry comes from ``B0`` and the projector ``P_1`` hidden in ``B0 B1^-1``;
Alice's comes from the same construction applied to the operators her side
must reproduce through the transpose relations ``U A_s^-1 U^dag = (V C_{s,1} V^dag)^T``.
"""

from dataclasses import dataclass

import numpy as np
from scipy.linalg import qr
from sklearn.base import BaseEstimator
from sklearn.utils.validation import check_is_fitted

from .exceptions import NotMaximal, NotSelfAdjoint, NotUnitary, SupportMismatch
from .linalg import (
    BipartiteState,
    SchmidtSpectrum,
    maximally_entangled,
    omega,
    omega_power,
    partial_trace,
    projectors_from_observable,
    random_unitary,
    support_isometry,
)
from .satwap import canonical_alice, canonical_bob, canonical_satwap, clock, shift, sos_certificate
from .scenario import Strategy
from .validation import check_matrix, op_norm


def build_dk_pk(B0, B1, k, d, tol=1e-8):
    """``D_k = w^{k/2} B0^k B1^-k`` and ``P_k = (I - D_k) / 2``.

    ``D_k`` is self-adjoint only for maximally violating strategies; otherwise
    :class:`NotSelfAdjoint` is raised.
    """
    B0, B1 = check_matrix(B0, name="B0"), check_matrix(B1, name="B1")
    D = omega_power(k / 2, d) * np.linalg.matrix_power(B0, k) @ np.linalg.matrix_power(
        B1.conj().T, k)
    err = op_norm(D - D.conj().T)
    if err > tol:
        raise NotSelfAdjoint(f"||D_{k} - D_{k}^dag|| = {err:.3e}")
    return D, (np.eye(D.shape[0]) - D) / 2


def build_f(B0, P1, d, tol=1e-8):
    """``F = sum_l w^{-l} B0^l P1 B0^{-l}``; unitary with ``F^d = I`` under the hypotheses."""
    B0, P1 = check_matrix(B0, name="B0"), check_matrix(P1, name="P1")
    w = omega(d)
    F = np.zeros_like(B0)
    conj_l = np.eye(B0.shape[0], dtype=complex)
    for l in range(d):
        F += w**-l * conj_l @ P1 @ conj_l.conj().T
        conj_l = B0 @ conj_l
    eye = np.eye(F.shape[0])
    err = max(op_norm(F.conj().T @ F - eye), op_norm(np.linalg.matrix_power(F, d) - eye))
    if err > tol:
        raise NotUnitary(f"F fails unitarity / F^d = I by {err:.3e}")
    return F


def clock_shift_isometry(Zlike, F, d):
    """Isometry ``H -> C^d (x) H^(0)`` sending ``Zlike -> Z (x) I`` and ``F -> X (x) I``.

    ``H^(k)`` is the ``w^k`` eigenspace of ``Zlike`` and a vector ``w_k`` in it
    maps to ``|k> (x) F^{-k} w_k``. The basis of ``H^(0)`` is obtained by
    projecting the standard basis and orthonormalizing with pivoted QR.
    """
    n = Zlike.shape[0]
    if n % d:
        raise SupportMismatch(f"dimension {n} is not divisible by d={d}")
    m = n // d
    projs = projectors_from_observable(Zlike, d, tol=1e-6)
    ranks = [int(round(np.trace(p).real)) for p in projs]
    if any(r != m for r in ranks):
        raise SupportMismatch(f"eigenspace dimensions {ranks} are not all {m}")
    q, r, _ = qr(projs[0], pivoting=True)
    diag = np.diag(r)[:m]
    basis = q[:, :m] * np.where(np.abs(diag) > 0, diag / np.where(diag == 0, 1, np.abs(diag)), 1)
    Finv = F.conj().T
    blocks = []
    Fk = np.eye(n, dtype=complex)
    for k in range(d):
        blocks.append(basis.conj().T @ Fk @ projs[k])
        Fk = Finv @ Fk
    return np.vstack(blocks)


def _nearest_projector(P):
    """Round the spectrum of a near-projector to {0, 1}."""
    w, v = np.linalg.eigh((P + P.conj().T) / 2)
    keep = v[:, w > 0.5]
    return keep @ keep.conj().T


def _alice_clock_and_projector(A0, A1, d):
    """Alice-side operators that the transpose relations map to ``Z`` and ``|J><J|``."""
    x1 = omega_power(-0.25, d) * A0.conj().T
    x2 = omega_power(0.25, d) * A1.conj().T
    z_inv = ((1 - 1j) * x1 - (1 + 1j) * x2) / (-2j)
    y = (x1 - x2) / (-2j)
    z_hat = np.linalg.inv(z_inv)
    return z_hat, y @ z_hat


@dataclass(frozen=True)
class ExtractionResult:
    d: int
    gap: float
    U: np.ndarray
    V: np.ndarray
    F: np.ndarray
    P1: np.ndarray
    residual_B0: float
    residual_B1: float
    residual_F: float
    residual_A0: float
    residual_A1: float
    isometry_residual: float
    reduced_state_residual: float
    invariance_residual: float
    junk_state: np.ndarray
    junk_spectrum: SchmidtSpectrum
    state_fidelity: float
    support_dims: tuple

    @property
    def residuals(self):
        return {
            "B0": self.residual_B0,
            "B1": self.residual_B1,
            "F": self.residual_F,
            "A0": self.residual_A0,
            "A1": self.residual_A1,
            "isometry": self.isometry_residual,
            "reduced_state": self.reduced_state_residual,
            "invariance": self.invariance_residual,
        }

    @property
    def max_residual(self):
        return max(self.residuals.values())


def _as_observables(strategy, d):
    if isinstance(strategy, Strategy):
        A0, A1 = strategy.observables("A")
        B0, B1 = strategy.observables("B")
        return strategy.state, A0, A1, B0, B1
    state, A0, A1, B0, B1 = strategy
    return state, *(check_matrix(x) for x in (A0, A1, B0, B1))


def extract_isometry(strategy, d=3, gap_tol=1e-8, residual_tol=1e-7, support_tol=1e-10):
    """Run the full extraction; ``strategy`` is a Strategy or ``(state, A0, A1, B0, B1)``."""
    state, A0, A1, B0, B1 = _as_observables(strategy, d)
    cert = sos_certificate(state, A0, A1, B0, B1, d, tol=residual_tol)
    if cert.gap > gap_tol:
        raise NotMaximal(f"SATWAP gap {cert.gap:.3e} exceeds {gap_tol:.1e}")

    SA = support_isometry(partial_trace(state, "B"), support_tol)
    SB = support_isometry(partial_trace(state, "A"), support_tol)
    inv = 0.0
    for S, ops in ((SA, (A0, A1)), (SB, (B0, B1))):
        outside = np.eye(S.shape[0]) - S @ S.conj().T
        for op in ops:
            inv = max(inv, op_norm(outside @ op @ S), op_norm(outside @ op.conj().T @ S))
    if inv > residual_tol:
        raise SupportMismatch(f"local supports are not invariant (residual {inv:.3e})")
    A0t, A1t = (SA.conj().T @ X @ SA for X in (A0, A1))
    B0t, B1t = (SB.conj().T @ X @ SB for X in (B0, B1))
    m = SA.conj().T @ state.matrix() @ SB.conj()

    _, P1 = build_dk_pk(B0t, B1t, 1, d, tol=residual_tol)
    P1 = _nearest_projector(P1)
    F = build_f(B0t, P1, d, tol=residual_tol)
    V = clock_shift_isometry(B0t, F, d)

    z_hat, p_hat = _alice_clock_and_projector(A0t, A1t, d)
    f_hat = build_f(z_hat, _nearest_projector(p_hat), d, tol=residual_tol)
    U = clock_shift_isometry(z_hat, f_hat, d)

    mb, ma = V.shape[0] // d, U.shape[0] // d
    Z, X = clock(d), shift(d)
    can_a0, can_a1 = canonical_alice(d)
    _, can_b1 = canonical_bob(d)

    def conj_res(W, op, target, aux):
        return op_norm(W @ op @ W.conj().T - np.kron(target, np.eye(aux)))

    iso = max(op_norm(V.conj().T @ V - np.eye(V.shape[1])),
              op_norm(U.conj().T @ U - np.eye(U.shape[1])))

    out = (U @ m @ V.T).reshape(d, ma, d, mb)
    phi = maximally_entangled(d).matrix()
    junk = np.einsum("kl,kilj->ij", phi.conj(), out)
    fidelity = float(np.linalg.norm(junk) ** 2)
    junk_n = junk / np.linalg.norm(junk)

    rho_b = partial_trace(BipartiteState.from_matrix(out.reshape(d * ma, d * mb), normalize=True),
                          "A")
    rho_prime = np.einsum("kikj->ij", rho_b.reshape(d, mb, d, mb))
    red = op_norm(rho_b - np.kron(np.eye(d) / d, rho_prime))

    return ExtractionResult(
        d=d, gap=cert.gap, U=U, V=V, F=F, P1=P1,
        residual_B0=conj_res(V, B0t, Z, mb),
        residual_B1=conj_res(V, B1t, can_b1, mb),
        residual_F=conj_res(V, F, X, mb),
        residual_A0=conj_res(U, A0t, can_a0, ma),
        residual_A1=conj_res(U, A1t, can_a1, ma),
        isometry_residual=iso,
        reduced_state_residual=red,
        invariance_residual=inv,
        junk_state=junk_n,
        junk_spectrum=SchmidtSpectrum(np.linalg.svd(junk_n, compute_uv=False)),
        state_fidelity=fidelity,
        support_dims=(SA.shape[1], SB.shape[1]),
    )


class SatwapSelfTest(BaseEstimator):
    """Estimator wrapper around :func:`extract_isometry`.

    ``fit`` takes a strategy that maximally violates the SATWAP expression and
    learns the local isometries; ``transform`` maps states on the original
    local spaces to ``(C^d (x) A') (x) (C^d (x) B')`` coefficient matrices.

    Parameters
    ----------
    d : int
        Number of outcomes.
    gap_tol : float
        Largest accepted ``2(d-1) - <O_d>``.
    residual_tol : float
        Tolerance for every intermediate operator identity.
    support_tol : float
        Eigenvalue cut-off defining the local supports.
    """

    def __init__(self, d=3, gap_tol=1e-8, residual_tol=1e-7, support_tol=1e-10):
        self.d = d
        self.gap_tol = gap_tol
        self.residual_tol = residual_tol
        self.support_tol = support_tol

    def fit(self, X, y=None):
        state = _as_observables(X, self.d)[0]
        self.result_ = extract_isometry(X, self.d, self.gap_tol, self.residual_tol,
                                        self.support_tol)
        self.alice_support_ = support_isometry(partial_trace(state, "B"), self.support_tol)
        self.bob_support_ = support_isometry(partial_trace(state, "A"), self.support_tol)
        return self

    def transform(self, X):
        check_is_fitted(self, "result_")
        m = X.matrix() if isinstance(X, BipartiteState) else np.asarray(X)
        left = self.result_.U @ self.alice_support_.conj().T
        right = self.result_.V @ self.bob_support_.conj().T
        return left @ m @ right.T

    def score(self, X, y=None):
        """State fidelity of the fitted strategy with ``Phi_d (x) junk``."""
        check_is_fitted(self, "result_")
        return self.result_.state_fidelity


def planted_strategy(d=3, junk=(0.7, 0.3), seed=0):
    """Canonical SATWAP strategy tensored with a diagonal junk state, then hidden by random local unitaries.

    ``junk`` lists Schmidt weights (squared coefficients). Returns
    ``(state, A0, A1, B0, B1)`` plus the planted Schmidt coefficients.
    """
    weights = np.asarray(junk, dtype=float)
    if weights.ndim != 1 or weights.size < 1 or np.any(weights <= 0):
        raise ValueError("junk weights must be a nonempty list of positive numbers")
    coeffs = np.sqrt(weights / weights.sum())
    m = coeffs.size
    rng = np.random.default_rng(seed)
    canon = canonical_satwap(d)
    state = canon.state.tensor(BipartiteState.from_matrix(np.diag(coeffs)))
    ua, ub = random_unitary(d * m, rng), random_unitary(d * m, rng)
    state = BipartiteState.from_matrix(ua @ state.matrix() @ ub.T, normalize=True)
    eye = np.eye(m)
    hide = [(ua, canon.A0), (ua, canon.A1), (ub, canon.B0), (ub, canon.B1)]
    ops = [u @ np.kron(op, eye) @ u.conj().T for u, op in hide]
    return (state, *ops), np.sort(coeffs)[::-1]
