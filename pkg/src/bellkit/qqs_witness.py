"""Two embedded tilted-CHSH games on a truncated doubly-infinite geometric state.

Index bookkeeping
-----------------
Basis vectors ``|i>_Z`` are kept for ``-2K <= i <= 2K + 1`` (array position
``i + 2K``). The state ``sum_i alpha^|i| |i>|i>`` is truncated to ``|i| <= K``.
On this window the pairing ``W0`` ({2j, 2j+1}) closes exactly, while ``W2``
({2j-1, 2j}) leaves ``-2K`` and ``2K+1`` unpaired; every ``W2``-built
observable acts as ``+1`` on those two vectors. Both lie outside the state's
support, so the boundary never enters a correlation.
"""

from dataclasses import dataclass, field
import math

import numpy as np

from .exceptions import OutOfRange
from .linalg import BipartiteState
from .scenario import Correlation, Measurement, Strategy, correlation_from_strategy, marginal
from .tilted_chsh import SIGMA_X, SIGMA_Z, TiltedParams, binary_projectors, canonical_correlation
from .validation import op_norm

BOUNDARY_POLICY = ("W2 leaves indices -2K and 2K+1 unpaired; W2-based observables act as +1 "
                   "there; the truncated state vanishes on both")


def pairing_index(variant, bit, j):
    """Image index of ``W_variant |bit>|j>`` on the full integer lattice."""
    if variant == 0:
        low, high = (2 * j, 2 * j + 1) if j >= 0 else (2 * j + 1, 2 * j)
    elif variant == 2:
        low, high = (2 * j - 1, 2 * j) if j > 0 else (2 * j, 2 * j - 1)
    else:
        raise ValueError(f"variant must be 0 or 2, got {variant!r}")
    return low if bit == 0 else high


def geometric_norm(alpha, K=None):
    """``sum_{|i| <= K} alpha^(2|i|)``; ``K=None`` gives ``(1 + a^2)/(1 - a^2)``."""
    a2 = alpha * alpha
    if K is None:
        return (1 + a2) / (1 - a2)
    return (1 + a2 - 2 * a2 ** (K + 1)) / (1 - a2)


@dataclass(frozen=True)
class TruncatedGeoState:
    alpha: float
    K: int
    C_K: float
    state: BipartiteState

    @property
    def dim(self):
        return self.state.d_a

    @property
    def offset(self):
        return 2 * self.K

    def indices(self):
        return np.arange(-2 * self.K, 2 * self.K + 2)

    def basis_projector(self, i):
        p = np.zeros((self.dim, self.dim))
        p[i + self.offset, i + self.offset] = 1.0
        return p


def _check(alpha, K):
    if not 0.0 < alpha < 1.0:
        raise OutOfRange(f"alpha must lie in (0, 1), got {alpha!r}")
    if int(K) != K or K < 2:
        raise OutOfRange(f"K must be an integer >= 2, got {K!r}")


def truncated_psi(alpha, K):
    _check(alpha, K)
    idx = np.arange(-2 * K, 2 * K + 2)
    amps = np.where(np.abs(idx) <= K, alpha ** np.abs(idx).astype(float), 0.0)
    c_k = geometric_norm(alpha, K)
    state = BipartiteState.from_matrix(np.diag(amps / math.sqrt(c_k)))
    return TruncatedGeoState(float(alpha), int(K), c_k, state)


@dataclass(frozen=True)
class PairingIsometry:
    """Matrix of ``W_variant`` from ``C^2 (x) span{|j>}`` into the index window.

    Domain column ``bit * n_j + (j - j_min)`` holds ``W|bit>|j>``.
    """

    variant: int
    K: int
    matrix: np.ndarray
    j_range: tuple
    unpaired: tuple = field(default=())

    def lift(self, op2):
        """``W (op2 (x) I) W^dag`` plus identity on unpaired indices."""
        n_j = self.j_range[1] - self.j_range[0] + 1
        W = self.matrix
        out = W @ np.kron(op2, np.eye(n_j)) @ W.conj().T
        for i in self.unpaired:
            out[i + 2 * self.K, i + 2 * self.K] += 1.0
        return out

    def range_projector(self):
        return self.matrix @ self.matrix.conj().T


def pairing_isometry(variant, K):
    if int(K) != K or K < 2:
        raise OutOfRange(f"K must be an integer >= 2, got {K!r}")
    j_lo, j_hi = (-K, K) if variant == 0 else (-K + 1, K)
    n_j = j_hi - j_lo + 1
    W = np.zeros((4 * K + 2, 2 * n_j))
    for bit in (0, 1):
        for j in range(j_lo, j_hi + 1):
            W[pairing_index(variant, bit, j) + 2 * K, bit * n_j + j - j_lo] = 1.0
    unpaired = () if variant == 0 else (-2 * K, 2 * K + 1)
    return PairingIsometry(variant, int(K), W, (j_lo, j_hi), unpaired)


@dataclass(frozen=True)
class WitnessObservables:
    params: TiltedParams
    A: tuple
    B: tuple
    W0: PairingIsometry
    W2: PairingIsometry


def witness_observables(alpha, K):
    """Observables ``W_r (sigma (x) I) W_r^dag`` for the two pairings."""
    params = TiltedParams.from_alpha(alpha)
    W0, W2 = pairing_isometry(0, K), pairing_isometry(2, K)
    alice = (W0.lift(SIGMA_Z), W0.lift(SIGMA_X), W2.lift(SIGMA_Z), W2.lift(SIGMA_X))
    bob = (W0.lift(params.sigma_z_alpha()), W0.lift(params.sigma_x_alpha()),
           W2.lift(params.sigma_z_alpha()), W2.lift(params.sigma_x_alpha()))
    return WitnessObservables(params, alice, bob, W0, W2)


def witness_strategy(alpha, K):
    """Truncated ``Psi`` with the four-by-four binary observables, scenario (4,4,2,2)."""
    psi = truncated_psi(alpha, K)
    obs = witness_observables(alpha, K)
    strategy = Strategy(
        psi.state,
        [Measurement(binary_projectors(A)) for A in obs.A],
        [Measurement(binary_projectors(B)) for B in obs.B],
        metadata={"boundary_policy": BOUNDARY_POLICY, "alpha": alpha, "K": K},
    )
    return strategy


def witness_correlation(alpha, K):
    return correlation_from_strategy(witness_strategy(alpha, K))


def _expect(state, X, Y):
    m = state.matrix()
    return float(np.vdot(m, X @ m @ Y.T).real)


def block_distances(p, alpha):
    """Sup distance of blocks {0,1} and {2,3} from the canonical tilted-CHSH table."""
    ref = canonical_correlation(TiltedParams.from_alpha(alpha))
    return {
        "block_01": p.restrict([0, 1], [0, 1]).distance(ref),
        "block_23": p.restrict([2, 3], [2, 3]).distance(ref),
    }


def block_marginal_consistency(p):
    """Alice's marginal from columns t in {0,1} versus t in {2,3}."""
    per = p.table.sum(axis=3)  # [s, t, a]
    return float(np.abs(per[:, :2, :].mean(axis=1) - per[:, 2:, :].mean(axis=1)).max())


def proof_identity_report(alpha, K):
    """Numerical values of every operator identity used in the non-membership argument."""
    psi = truncated_psi(alpha, K)
    obs = witness_observables(alpha, K)
    cos_mu = math.cos(obs.params.mu)
    p = witness_correlation(alpha, K)
    n = psi.dim
    eye = np.eye(n)
    in_range = obs.W2.range_projector()

    def compress(x):
        return in_range @ x @ in_range

    M = (obs.B[2] + obs.B[3]) / (2 * cos_mu)
    D0 = (eye + M) / 2
    zero = psi.basis_projector(0)
    A0_proj = binary_projectors(obs.A[0])
    d0_proj_form = obs.W2.matrix @ np.kron(np.diag([1.0, 0.0]), np.eye(
        obs.W2.j_range[1] - obs.W2.j_range[0] + 1)) @ obs.W2.matrix.T

    p_a1_s0 = float(marginal(p, "A")[0, 1])
    lhs = _expect(psi.state, A0_proj[1], D0)
    chain = 0.5 * p_a1_s0 + sum(p(1, 0, 0, t) - p(1, 1, 0, t) for t in (2, 3)) / (4 * cos_mu)
    value00 = _expect(psi.state, A0_proj[0], D0)
    c_inf = geometric_norm(alpha)
    return {
        "alpha": alpha,
        "K": K,
        "C_K": psi.C_K,
        "C": c_inf,
        "mu": obs.params.mu,
        "M_square_residual": op_norm(compress(M @ M - eye)),
        "M_structure_residual": op_norm(compress(M - obs.W2.lift(SIGMA_Z))),
        "D0_projector_residual": op_norm(compress(D0 - d0_proj_form)),
        "A0_1_identity_residual": op_norm(compress(A0_proj[1] - (D0 - zero))),
        "marginal_chain_residual": abs(lhs - chain),
        "marginal_identity_residual": abs(lhs - p_a1_s0),
        "A0_1_A0_1_residual": abs(_expect(psi.state, A0_proj[1], A0_proj[1]) - p_a1_s0),
        "A0_1_zero_overlap": _expect(psi.state, A0_proj[1], zero),
        "p_a1_s0": p_a1_s0,
        "p_a1_s0_limit": alpha**2 / (1 + alpha**2),
        "value_A0_0_D0": value00,
        "one_over_C_K": 1 / psi.C_K,
        "value_minus_one_over_C_K": value00 - 1 / psi.C_K,
        "one_over_C_squared": 1 / c_inf**2,
        "one_over_C_K_squared": 1 / psi.C_K**2,
        "lower_bound_holds": bool(value00 >= 1 / psi.C_K**2 - 1e-10),
    }


def convergence_report(alpha, Ks=(6, 8, 10, 12)):
    """Sup distance between consecutive truncations and the fitted ``c`` in ``c alpha^(2K)``."""
    rows = []
    prev = None
    for K in Ks:
        p = witness_correlation(alpha, K)
        if prev is not None:
            dist = p.distance(prev[1])
            rows.append({"K_from": prev[0], "K_to": K, "distance": dist,
                         "fitted_c": dist / alpha ** (2 * prev[0])})
        prev = (K, p)
    return rows


@dataclass(frozen=True)
class TernaryResult:
    q: Correlation
    p: Correlation
    relation_residuals: dict
    outcome2_residual: float
    completeness_residual: float


def ternary_projectors(alpha, K):
    """``{A~_*^(a)}``: ``W0(|0><0| (x) I)W0^dag - |0><0|``, ``W0(|1><1| (x) I)W0^dag``, ``|0><0|``."""
    psi = truncated_psi(alpha, K)
    W0 = pairing_isometry(0, K)
    zero = psi.basis_projector(0)
    return [W0.lift(np.diag([1.0, 0.0])) - zero, W0.lift(np.diag([0.0, 1.0])), zero]


def ternary_variant(alpha, K):
    """Correlation ``q`` in scenario (3,4,3,2); Alice's inputs are ordered (*, 1, 3)."""
    psi = truncated_psi(alpha, K)
    obs = witness_observables(alpha, K)
    n = psi.dim
    star = ternary_projectors(alpha, K)
    zero_op = np.zeros((n, n))
    alice = [star,
             binary_projectors(obs.A[1]) + [zero_op],
             binary_projectors(obs.A[3]) + [zero_op]]
    bob = [binary_projectors(B) for B in obs.B]
    q = correlation_from_strategy(Strategy(psi.state, alice, bob))
    p = witness_correlation(alpha, K)
    qt, pt = q.table, p.table
    rel = {
        "p(0,b|0,t)=q(0,b|*,t)+q(2,b|*,t)": np.abs(pt[0, :, 0] - qt[0, :, 0] - qt[0, :, 2]).max(),
        "p(1,b|0,t)=q(1,b|*,t)": np.abs(pt[0, :, 1] - qt[0, :, 1]).max(),
        "p(0,b|2,t)=q(1,b|*,t)+q(2,b|*,t)": np.abs(pt[2, :, 0] - qt[0, :, 1] - qt[0, :, 2]).max(),
        "p(1,b|2,t)=q(0,b|*,t)": np.abs(pt[2, :, 1] - qt[0, :, 0]).max(),
        "p(a,b|s,t)=q(a,b|s,t), s in {1,3}": max(np.abs(pt[1] - qt[1, :, :2]).max(),
                                               np.abs(pt[3] - qt[2, :, :2]).max()),
    }
    out2 = float(np.abs(qt[1:, :, 2, :]).max())
    complete = op_norm(sum(star) - np.eye(n))
    return TernaryResult(q, p, {k: float(v) for k, v in rel.items()}, out2, complete)


def operator_decomposition_residuals(alpha, K):
    """``A0^(0) = A~^(0) + A~^(2)``, ``A0^(1) = A~^(1)``, ``A2^(0) = A~^(1) + A~^(2)``, ``A2^(1) = A~^(0)``."""
    obs = witness_observables(alpha, K)
    t0, t1, t2 = ternary_projectors(alpha, K)
    a0 = binary_projectors(obs.A[0])
    a2 = binary_projectors(obs.A[2])
    return {
        "A0_0": op_norm(a0[0] - t0 - t2),
        "A0_1": op_norm(a0[1] - t1),
        "A2_0": op_norm(a2[0] - t1 - t2),
        "A2_1": op_norm(a2[1] - t0),
    }
