"""Tilted CHSH: parameter maps, the canonical optimal strategy, and sweeps."""

from dataclasses import dataclass
import math

import numpy as np

from .exceptions import NotBinaryObservable, OutOfRange
from .linalg import BipartiteState
from .scenario import (
    Correlation,
    Measurement,
    Strategy,
    bell_value,
    correlation_from_strategy,
    lhv_max_bruteforce,
    tilted_chsh_functional,
)
from .validation import CONSTRUCTION_TOL, check_matrix, op_norm

SIGMA_Z = np.array([[1, 0], [0, -1]], dtype=complex)
SIGMA_X = np.array([[0, 1], [1, 0]], dtype=complex)
IDENTITY_2 = np.eye(2, dtype=complex)


@dataclass(frozen=True)
class TiltedParams:
    """Equivalent parametrizations of one tilted CHSH instance.

    ``tan(mu) = sin(2 theta) = sqrt((4 - beta^2) / (4 + beta^2))`` and
    ``alpha = tan(theta)``.
    """

    beta: float
    theta: float
    mu: float
    alpha: float

    @classmethod
    def from_beta(cls, beta):
        if not 0.0 <= beta < 2.0:
            raise OutOfRange(f"beta must lie in [0, 2), got {beta!r}")
        s = math.sqrt((4.0 - beta**2) / (4.0 + beta**2))
        theta = 0.5 * math.asin(s)
        return cls(float(beta), theta, math.atan(s), math.tan(theta))

    @classmethod
    def from_alpha(cls, alpha):
        if not 0.0 < alpha <= 1.0:
            raise OutOfRange(f"alpha must lie in (0, 1], got {alpha!r}")
        theta = math.atan(alpha)
        s = 2.0 * alpha / (1.0 + alpha**2)
        beta = 2.0 * math.sqrt(max(0.0, (1.0 - s**2) / (1.0 + s**2)))
        return cls(beta, theta, math.atan(s), float(alpha))

    @property
    def quantum_value(self):
        return math.sqrt(8.0 + 2.0 * self.beta**2)

    @property
    def local_value(self):
        return 2.0 + self.beta

    def sigma_z_alpha(self):
        return math.cos(self.mu) * SIGMA_Z + math.sin(self.mu) * SIGMA_X

    def sigma_x_alpha(self):
        return math.cos(self.mu) * SIGMA_Z - math.sin(self.mu) * SIGMA_X

    def state(self):
        """``cos(theta)|00> + sin(theta)|11>``."""
        return BipartiteState(
            np.array([math.cos(self.theta), 0, 0, math.sin(self.theta)], dtype=complex), 2, 2)


def params_from_alpha(alpha):
    return TiltedParams.from_alpha(alpha)


def params_from_beta(beta):
    return TiltedParams.from_beta(beta)


def binary_projectors(A):
    """``A^{(a)} = (I + (-1)^a A) / 2``."""
    eye = np.eye(A.shape[0])
    return [(eye + A) / 2, (eye - A) / 2]


def check_binary(A, tol=CONSTRUCTION_TOL, name="observable"):
    A = check_matrix(A, name=name)
    eye = np.eye(A.shape[0])
    err = max(op_norm(A @ A - eye), op_norm(A - A.conj().T))
    if err > tol:
        raise NotBinaryObservable(f"{name}: ||A^2 - I|| or ||A - A^dag|| = {err:.3e}")
    return A


def tilted_operator(beta, A0, A1, B0, B1, tol=CONSTRUCTION_TOL):
    """``beta A0 (x) I + A0 (x) B0 + A0 (x) B1 + A1 (x) B0 - A1 (x) B1``."""
    A0, A1 = check_binary(A0, tol, "A0"), check_binary(A1, tol, "A1")
    B0, B1 = check_binary(B0, tol, "B0"), check_binary(B1, tol, "B1")
    eye_b = np.eye(B0.shape[0])
    return (beta * np.kron(A0, eye_b) + np.kron(A0, B0) + np.kron(A0, B1)
            + np.kron(A1, B0) - np.kron(A1, B1))


@dataclass(frozen=True)
class TiltedCanonicalStrategy:
    params: TiltedParams
    strategy: Strategy
    observables: tuple  # (A0, A1, B0, B1)

    def operator(self):
        return tilted_operator(self.params.beta, *self.observables)

    def value(self):
        return self.strategy.state.expectation(self.operator()).real

    def correlation(self):
        return correlation_from_strategy(self.strategy)


def canonical_strategy(params):
    """Optimal strategy: ``Phi^(alpha)``, ``A = (sigma_z, sigma_x)``, ``B = (sigma_z^a, sigma_x^a)``."""
    if not isinstance(params, TiltedParams):
        params = TiltedParams.from_beta(params)
    obs = (SIGMA_Z, SIGMA_X, params.sigma_z_alpha(), params.sigma_x_alpha())
    strategy = Strategy(
        params.state(),
        [Measurement(binary_projectors(obs[0])), Measurement(binary_projectors(obs[1]))],
        [Measurement(binary_projectors(obs[2])), Measurement(binary_projectors(obs[3]))],
    )
    return TiltedCanonicalStrategy(params, strategy, obs)


def canonical_correlation(params):
    return canonical_strategy(params).correlation()


def padded_table(corr, m_a, m_b):
    """Embed a binary table into ``m_a x m_b`` outcomes (extra outcomes get 0)."""
    t = corr.table if isinstance(corr, Correlation) else np.asarray(corr)
    out = np.zeros(t.shape[:2] + (m_a, m_b))
    out[:, :, : t.shape[2], : t.shape[3]] = t
    return out


@dataclass(frozen=True)
class SweepRow:
    beta: float
    alpha: float
    quantum_value: float
    local_bound: float
    gap: float
    operator_norm: float
    formula_value: float


def sweep(betas=None, points=17):
    """Canonical value, brute-force local bound and operator norm over a beta grid.

    The default grid is ``points`` evenly spaced values in ``[0, 2)``.
    """
    if betas is None:
        betas = np.linspace(0.0, 2.0, points, endpoint=False)
    rows = []
    for beta in betas:
        params = TiltedParams.from_beta(float(beta))
        canon = canonical_strategy(params)
        q = bell_value(tilted_chsh_functional(params.beta), canon.correlation())
        local = lhv_max_bruteforce(tilted_chsh_functional(params.beta)).value
        top = float(np.linalg.eigvalsh(canon.operator())[-1])
        rows.append(SweepRow(params.beta, params.alpha, q, local, q - local, top,
                             params.quantum_value))
    return rows
