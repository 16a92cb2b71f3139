"""Embezzlement-based family ``p_n`` in scenario (4, 4, 3, 3).

Each party holds a game register ``C^3`` followed by ``n`` embezzling
registers; basis strings ``e0 e1 ... en`` are encoded with ``e0`` as the most
significant base-3 digit. The cyclic-shift unitaries are stored as index
permutations and never materialized densely.
"""

from dataclasses import dataclass
import math

import numpy as np

from .exceptions import OutOfRange, TooLarge
from .linalg import BipartiteState, SchmidtSpectrum, measurement_residual, projectors_from_observable
from .scenario import (
    Correlation,
    Measurement,
    Strategy,
    bell_value,
    correlation_from_strategy,
    marginal,
    satwap_functional,
)
from .satwap import canonical_alice, canonical_bob, canonical_satwap
from .tilted_chsh import SIGMA_X, SIGMA_Z, TiltedParams, canonical_correlation, padded_table

DEFAULT_CAP = 6
ALPHA = 1 / math.sqrt(2)


def _check_level(n, cap):
    if int(n) != n or n < 1:
        raise OutOfRange(f"n must be a positive integer, got {n!r}")
    if n > cap:
        raise TooLarge(f"n={n} exceeds the cap {cap} (dimension 3^{n + 1} per side)")
    return int(n)


def normalization(n):
    """``C_n = n + 2 sum_{j<j'} 2^{-(j'-j)/2}``."""
    return n + 2 * sum((n - g) * 2 ** (-g / 2) for g in range(1, n))


def epsilon_norm_sq(n):
    """``||eps_n||^2 = (2 - 2 * 2^{-n/2}) / C_n``."""
    return (2 - 2 * 2 ** (-n / 2)) / normalization(n)


def _digits_diag(n, vec1):
    out = np.ones(1)
    for _ in range(n):
        out = np.kron(out, vec1)
    return out


_ZERO_ZERO = np.array([1.0, 0.0, 0.0])      # matrix of |00> as a diagonal
_TAU = np.array([1.0, 0.0, 1.0]) / math.sqrt(2)


def chi_diagonal(n):
    """Diagonal of the (diagonal) coefficient matrix of ``chi_n``."""
    total = np.zeros(3**n)
    for j in range(1, n + 1):
        total += np.kron(_digits_diag(j, _ZERO_ZERO), _digits_diag(n - j, _TAU))
    return total / math.sqrt(normalization(n))


@dataclass(frozen=True)
class EmbezzleState:
    n: int
    chi: BipartiteState
    C_n: float
    psi_n: BipartiteState


def build_embezzle_state(n, cap=DEFAULT_CAP):
    n = _check_level(n, cap)
    chi_d = chi_diagonal(n)
    chi = BipartiteState.from_matrix(np.diag(chi_d))
    psi = BipartiteState.from_matrix(np.diag(np.kron(np.full(3, 1 / math.sqrt(3)), chi_d)))
    return EmbezzleState(n, chi, normalization(n), psi)


@dataclass(frozen=True)
class ShiftUnitary:
    """Permutation with ``U e_i = e_{image[i]}``."""

    n: int
    side: str
    image: np.ndarray

    @property
    def dim(self):
        return self.image.size

    def apply(self, rows):
        out = np.empty_like(rows)
        out[self.image] = rows
        return out

    def apply_adjoint(self, rows):
        return rows[self.image]

    def fixed_points(self):
        return np.flatnonzero(self.image == np.arange(self.dim))

    def dense(self):
        if self.dim > 3**5:
            raise TooLarge(f"refusing to build a dense {self.dim}x{self.dim} permutation")
        m = np.zeros((self.dim, self.dim))
        m[self.image, np.arange(self.dim)] = 1.0
        return m


def shift_unitary(n, side="A", cap=DEFAULT_CAP):
    """``e0 e1..en -> e1..en e0`` when every digit lies in {0, 2}; identity otherwise."""
    n = _check_level(n, cap)
    if side not in ("A", "B"):
        raise OutOfRange(f"side must be 'A' or 'B', got {side!r}")
    dim = 3 ** (n + 1)
    idx = np.arange(dim)
    digits = np.array([(idx // 3**k) % 3 for k in range(n + 1)])
    movable = np.all(digits != 1, axis=0)
    rest = 3**n
    shifted = (idx % rest) * 3 + idx // rest
    return ShiftUnitary(n, side, np.where(movable, shifted, idx))


def embezzle_identity_check(n, cap=DEFAULT_CAP):
    """Residuals of ``(G (x) L)(tau (x) chi_n) = 00 (x) chi_n + 00 (x) eps_n``.

    ``eps_n = (tau^n - 00^n) / sqrt(C_n)``; the opposite sign is reported as
    ``residual_flipped_sign`` for comparison.
    """
    state = build_embezzle_state(n, cap)
    G, L = shift_unitary(n, "A", cap), shift_unitary(n, "B", cap)
    chi = np.diag(chi_diagonal(n))
    lhs = G.apply(L.apply(np.kron(np.diag(_TAU), chi).T).T)
    eps = (np.diag(_digits_diag(n, _TAU)) - np.diag(_digits_diag(n, _ZERO_ZERO))) / math.sqrt(
        state.C_n)
    e00 = np.diag(_ZERO_ZERO)
    norm_sq = float(np.linalg.norm(eps) ** 2)
    return {
        "n": n,
        "C_n": state.C_n,
        "residual": float(np.linalg.norm(lhs - np.kron(e00, chi) - np.kron(e00, eps))),
        "residual_flipped_sign": float(np.linalg.norm(lhs - np.kron(e00, chi) + np.kron(e00, eps))),
        "epsilon_norm_sq": norm_sq,
        "epsilon_norm_sq_closed_form": epsilon_norm_sq(n),
        "epsilon_bound_sq": 2 / n,
        "within_bound": bool(norm_sq <= 2 / n),
    }


class RegisterMeasurement(Measurement):
    """Projectors ``S^dag (P_a (x) I) S`` with ``P_a`` on the game register and ``S`` a shift or identity."""

    def __init__(self, local_projectors, n, shift=None):
        self._local = tuple(np.asarray(p, dtype=complex) for p in local_projectors)
        self.n = n
        self.shift = shift

    @property
    def local_projectors(self):
        return self._local

    @property
    def num_outcomes(self):
        return len(self._local)

    @property
    def dim(self):
        return 3 ** (self.n + 1)

    @property
    def projectors(self):
        if self.dim > 3**5:
            raise TooLarge("dense projectors are only built for n <= 4")
        eye = np.eye(3**self.n)
        out = []
        for p in self._local:
            dense = np.kron(p, eye)
            if self.shift is not None:
                s = self.shift.dense()
                dense = s.T @ dense @ s
            out.append(dense)
        return tuple(out)

    def apply(self, a, rows):
        rows = np.asarray(rows)
        if self.shift is not None:
            rows = self.shift.apply(rows)
        shaped = rows.reshape(3, -1)
        out = (self._local[a] @ shaped).reshape(rows.shape)
        if self.shift is not None:
            out = self.shift.apply_adjoint(out)
        return out

    def residual(self):
        # conjugation by a permutation preserves every projector identity
        return measurement_residual(self._local)


def _padded_binary(op2):
    """Eigenprojectors of a binary 2x2 observable padded into C^3, plus ``|2><2|``."""
    eye = np.eye(2)
    out = []
    for sign in (1, -1):
        p = np.zeros((3, 3), dtype=complex)
        p[:2, :2] = (eye + sign * op2) / 2
        out.append(p)
    two = np.zeros((3, 3), dtype=complex)
    two[2, 2] = 1.0
    return out + [two]


def table2_measurements(n, cap=DEFAULT_CAP):
    n = _check_level(n, cap)
    params = TiltedParams.from_alpha(ALPHA)
    G, L = shift_unitary(n, "A", cap), shift_unitary(n, "B", cap)
    a0, a1 = canonical_alice(3)
    b0, b1 = canonical_bob(3)
    alice = [RegisterMeasurement(projectors_from_observable(a0, 3), n),
             RegisterMeasurement(projectors_from_observable(a1, 3), n),
             RegisterMeasurement(_padded_binary(SIGMA_Z), n, G),
             RegisterMeasurement(_padded_binary(SIGMA_X), n, G)]
    bob = [RegisterMeasurement(projectors_from_observable(b0, 3), n),
           RegisterMeasurement(projectors_from_observable(b1, 3), n),
           RegisterMeasurement(_padded_binary(params.sigma_z_alpha()), n, L),
           RegisterMeasurement(_padded_binary(params.sigma_x_alpha()), n, L)]
    return alice, bob


def table2_strategy(n, cap=DEFAULT_CAP):
    state = build_embezzle_state(n, cap)
    alice, bob = table2_measurements(n, cap)
    return Strategy(state.psi_n, alice, bob, metadata={"n": n, "alpha": ALPHA})


def tilted_reference():
    """Tilted-CHSH (alpha = 1/sqrt 2) table padded to three outcomes."""
    return padded_table(canonical_correlation(TiltedParams.from_alpha(ALPHA)), 3, 3)


def satwap_reference():
    return correlation_from_strategy(canonical_satwap(3).strategy())


@dataclass(frozen=True)
class EmbezzleCorrelation:
    n: int
    p: Correlation
    p11_20: float
    pa1_s2: float
    pb1_t0: float
    outcome2_max: float
    satwap_value: float
    satwap_block_distance: float
    tilted_block_distance: float
    epsilon_norm: float

    @property
    def error_bar(self):
        """Bound ``4 ||eps_n||`` on the tilted-block distance."""
        return 4 * self.epsilon_norm


def correlation_pn(n, cap=DEFAULT_CAP):
    n = _check_level(n, cap)
    p = correlation_from_strategy(table2_strategy(n, cap))
    t = p.table
    block01 = p.restrict([0, 1], [0, 1])
    return EmbezzleCorrelation(
        n=n,
        p=p,
        p11_20=float(t[2, 0, 1, 1]),
        pa1_s2=float(marginal(p, "A")[2, 1]),
        pb1_t0=float(marginal(p, "B")[0, 1]),
        outcome2_max=float(max(np.abs(t[2:, 2:, 2, :]).max(), np.abs(t[2:, 2:, :, 2]).max())),
        satwap_value=bell_value(satwap_functional(3), block01),
        satwap_block_distance=block01.distance(satwap_reference()),
        tilted_block_distance=p.restrict([2, 3], [2, 3]).distance(tilted_reference()),
        epsilon_norm=math.sqrt(epsilon_norm_sq(n)),
    )


def convergence_table(levels=(1, 2, 3, 4, 5), cap=DEFAULT_CAP):
    rows = []
    for n in levels:
        c = correlation_pn(n, cap)
        rows.append({"n": n, "distance": c.tilted_block_distance, "epsilon_norm": c.epsilon_norm,
                     "ratio": c.tilted_block_distance / c.epsilon_norm})
    return rows


def _multiset_distance(x, y):
    x, y = np.sort(x)[::-1], np.sort(y)[::-1]
    size = max(x.size, y.size)
    return float(np.abs(np.pad(x, (0, size - x.size)) - np.pad(y, (0, size - y.size))).max())


def schmidt_report(n, cap=DEFAULT_CAP, svd_check_max=3):
    """Schmidt spectra of ``chi_n``, ``psi_n`` and the shifted state, read off the monomial structure."""
    state = build_embezzle_state(n, cap)
    G, L = shift_unitary(n, "A", cap), shift_unitary(n, "B", cap)
    chi_d = chi_diagonal(n)
    psi_d = np.kron(np.full(3, 1 / math.sqrt(3)), chi_d)
    # a permutation of rows and columns of a diagonal matrix is monomial
    shifted = G.apply(L.apply(np.diag(psi_d).T).T)
    shifted_vals = np.abs(shifted[np.nonzero(shifted)])
    s_chi = SchmidtSpectrum(np.abs(chi_d))
    s_psi = SchmidtSpectrum(np.abs(psi_d))
    s_shift = SchmidtSpectrum(shifted_vals)
    product = np.concatenate([np.abs(chi_d) / math.sqrt(3)] * 3)
    tilted_mix = np.concatenate([math.sqrt(2 / 3) * np.abs(chi_d), np.abs(chi_d) / math.sqrt(3)])
    report = {
        "n": n,
        "chi_rank": s_chi.rank(),
        "psi_rank": s_psi.rank(),
        "chi_spectrum": s_chi.nonzero().tolist(),
        "psi_sup": float(s_psi.coefficients[0]),
        "chi_sup": float(s_chi.coefficients[0]),
        "product_rule_residual": _multiset_distance(product, np.abs(psi_d)),
        "unitary_invariance_residual": _multiset_distance(s_shift.nonzero(), s_psi.nonzero()),
        "sup_sqrt_two_thirds": math.sqrt(2 / 3) * float(s_chi.coefficients[0]),
        "sup_one_over_sqrt3": float(s_chi.coefficients[0]) / math.sqrt(3),
        "limit_multiset_defect": _multiset_distance(tilted_mix, product),
    }
    if n <= svd_check_max:
        svd = np.linalg.svd(state.psi_n.matrix(), compute_uv=False)
        report["svd_residual"] = _multiset_distance(svd, np.abs(psi_d))
    return report
