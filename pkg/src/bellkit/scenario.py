"""Bell scenarios: strategies, correlation tables, linear Bell functionals.

Correlation tables are stored as arrays indexed ``table[s, t, a, b]`` holding
``p(a, b | s, t)``; Bell functional coefficients use the same layout.
"""

from dataclasses import dataclass, field
import itertools

import numpy as np

from .exceptions import (
    DimensionMismatch,
    InvalidMeasurement,
    NonHermitianValue,
    ScenarioMismatch,
    SignalingDetected,
    TooLarge,
)
from .linalg import (
    BipartiteState,
    DValuedObservable,
    measurement_residual,
    omega,
    projectors_from_observable,
)
from .validation import CONSTRUCTION_TOL, check_matrix

CORRELATION_TOL = 1e-9
LHV_CAP = 10**8


@dataclass(frozen=True)
class Scenario:
    n_a: int
    n_b: int
    m_a: int
    m_b: int

    def __post_init__(self):
        for name in ("n_a", "n_b", "m_a", "m_b"):
            v = getattr(self, name)
            if int(v) != v or v < 2:
                raise ValueError(f"{name} must be an integer >= 2, got {v!r}")

    @property
    def shape(self):
        return (self.n_a, self.n_b, self.m_a, self.m_b)

    def __iter__(self):
        return iter(self.shape)


class Measurement:
    """Projective measurement given by a list of dense projectors.

    Subclasses may override :meth:`apply` to act without dense matrices; the
    correlation code only ever calls ``apply``.
    """

    def __init__(self, projectors):
        self._projectors = tuple(check_matrix(p, name="projector") for p in projectors)
        dims = {p.shape[0] for p in self._projectors}
        if len(dims) != 1:
            raise DimensionMismatch("projectors of one measurement must share a dimension")

    @classmethod
    def from_observable(cls, U, d):
        """Eigenprojectors of a d-valued observable (outcome a <-> eigenvalue omega^a)."""
        return cls(projectors_from_observable(U, d))

    @property
    def projectors(self):
        return self._projectors

    @property
    def num_outcomes(self):
        return len(self._projectors)

    @property
    def dim(self):
        return self._projectors[0].shape[0]

    def apply(self, a, rows):
        """Apply outcome-``a`` projector to the first axis of ``rows``."""
        return self._projectors[a] @ rows

    def residual(self):
        return measurement_residual(self._projectors)

    def observable(self):
        return DValuedObservable.from_projectors(self.projectors).matrix


def _as_measurement(m):
    if isinstance(m, Measurement):
        return m
    return Measurement(m)


@dataclass(frozen=True)
class Strategy:
    """Shared pure state plus one projective measurement per input and party."""

    state: BipartiteState
    alice: tuple
    bob: tuple
    tol: float = field(default=CONSTRUCTION_TOL, repr=False, compare=False)
    metadata: dict = field(default_factory=dict, repr=False, compare=False)

    def __post_init__(self):
        alice = tuple(_as_measurement(m) for m in self.alice)
        bob = tuple(_as_measurement(m) for m in self.bob)
        object.__setattr__(self, "alice", alice)
        object.__setattr__(self, "bob", bob)
        for side, ms, dim in (("A", alice, self.state.d_a), ("B", bob, self.state.d_b)):
            if len({m.num_outcomes for m in ms}) != 1:
                raise InvalidMeasurement(f"side {side}: all inputs need the same outcome count")
            for i, m in enumerate(ms):
                if m.dim != dim:
                    raise DimensionMismatch(f"side {side} input {i}: dim {m.dim} != {dim}")
                err = m.residual()
                if err > self.tol:
                    raise InvalidMeasurement(
                        f"side {side} input {i}: projective-measurement residual {err:.3e}"
                    )
        Scenario(len(alice), len(bob), alice[0].num_outcomes, bob[0].num_outcomes)

    @classmethod
    def from_observables(cls, state, alice_obs, bob_obs, d, d_b=None, **kw):
        """Strategy whose measurements are the eigenprojectors of d-valued observables."""
        d_b = d if d_b is None else d_b
        alice = [Measurement.from_observable(U, d) for U in alice_obs]
        bob = [Measurement.from_observable(U, d_b) for U in bob_obs]
        return cls(state, alice, bob, **kw)

    @property
    def scenario(self):
        return Scenario(len(self.alice), len(self.bob), self.alice[0].num_outcomes,
                        self.bob[0].num_outcomes)

    def observables(self, side):
        ms = self.alice if side == "A" else self.bob
        return [m.observable() for m in ms]

    def conjugate(self, u, v):
        """Same strategy seen through local unitaries ``u (x) v``."""
        m = u @ self.state.matrix() @ v.T
        state = BipartiteState.from_matrix(m)
        alice = [[u @ p @ u.conj().T for p in meas.projectors] for meas in self.alice]
        bob = [[v @ p @ v.conj().T for p in meas.projectors] for meas in self.bob]
        return Strategy(state, alice, bob, tol=self.tol)


@dataclass(frozen=True)
class Correlation:
    """Table ``p(a, b | s, t)`` stored as ``table[s, t, a, b]``."""

    table: np.ndarray
    tol: float = field(default=CORRELATION_TOL, repr=False, compare=False)
    validate: bool = field(default=True, repr=False, compare=False)

    def __post_init__(self):
        t = np.array(self.table, dtype=float)
        if t.ndim != 4:
            raise DimensionMismatch(f"correlation table must be 4-D, got shape {t.shape}")
        t.setflags(write=False)
        object.__setattr__(self, "table", t)
        Scenario(*t.shape)
        if self.validate:
            res = self.residuals()
            if res["range"] > self.tol or res["normalization"] > self.tol:
                raise ValueError(f"not a probability table: {res}")
            if res["no_signaling_a"] > self.tol or res["no_signaling_b"] > self.tol:
                raise SignalingDetected(f"table violates no-signaling: {res}")

    @property
    def scenario(self):
        return Scenario(*self.table.shape)

    def __call__(self, a, b, s, t):
        return float(self.table[s, t, a, b])

    def residuals(self):
        t = self.table
        alice = t.sum(axis=3)  # [s, t, a]
        bob = t.sum(axis=2)  # [s, t, b]
        return {
            "range": float(max(0.0, -t.min(), t.max() - 1.0)),
            "normalization": float(np.abs(t.sum(axis=(2, 3)) - 1.0).max()),
            "no_signaling_a": float(np.ptp(alice, axis=1).max()),
            "no_signaling_b": float(np.ptp(bob, axis=0).max()),
        }

    def restrict(self, inputs_a, inputs_b, outputs_a=None, outputs_b=None):
        t = self.table[np.ix_(list(inputs_a), list(inputs_b))]
        if outputs_a is not None:
            t = t[:, :, list(outputs_a), :]
        if outputs_b is not None:
            t = t[:, :, :, list(outputs_b)]
        return Correlation(t, validate=False)

    def distance(self, other):
        """Sup-norm distance between tables of the same shape."""
        other_t = other.table if isinstance(other, Correlation) else np.asarray(other)
        if other_t.shape != self.table.shape:
            raise ScenarioMismatch(f"{self.table.shape} vs {other_t.shape}")
        return float(np.abs(self.table - other_t).max())


def correlation_from_strategy(strategy, validate=True):
    """Exact ``p(a,b|s,t) = <psi| P_s^a (x) Q_t^b |psi>`` via local applications."""
    m = strategy.state.matrix()
    n_a, n_b, m_a, m_b = strategy.scenario
    table = np.empty((n_a, n_b, m_a, m_b))
    for t, qmeas in enumerate(strategy.bob):
        # (I (x) Q) psi has coefficient matrix M Q^T = (Q M^T)^T
        bob_imgs = [qmeas.apply(b, m.T).T for b in range(m_b)]
        for s, pmeas in enumerate(strategy.alice):
            for a in range(m_a):
                img = pmeas.apply(a, m)
                for b in range(m_b):
                    table[s, t, a, b] = np.vdot(img, bob_imgs[b]).real
    return Correlation(table, validate=validate)


def marginal(p, side="A", tol=CORRELATION_TOL):
    """One-party marginal ``p(a|s)`` (side A) or ``p(b|t)`` (side B).

    Raises :class:`SignalingDetected` if the marginal depends on the other
    party's input beyond ``tol``.
    """
    t = p.table
    per_input = t.sum(axis=3) if side == "A" else np.moveaxis(t.sum(axis=2), 0, 1)
    # per_input[x, y, o]: own input x, other input y, own outcome o
    spread = float(np.ptp(per_input, axis=1).max())
    if spread > tol:
        raise SignalingDetected(f"side {side} marginal varies by {spread:.3e} across inputs")
    return per_input[:, 0, :].copy()


@dataclass(frozen=True)
class BellFunctional:
    """Linear functional ``sum c(a,b,s,t) p(a,b|s,t)``; coefficients ``[s,t,a,b]``."""

    coefficients: np.ndarray
    hermitian: bool = True
    name: str = ""

    def __post_init__(self):
        c = np.array(self.coefficients, dtype=complex)
        c.setflags(write=False)
        object.__setattr__(self, "coefficients", c)
        Scenario(*c.shape)

    @property
    def scenario(self):
        return Scenario(*self.coefficients.shape)

    @property
    def real_coefficients(self):
        return self.coefficients.real

    def value(self, p):
        return bell_value(self, p)

    def operator(self, strategy):
        """Dense Hermitian Bell operator ``sum Re c * P_s^a (x) Q_t^b``."""
        if strategy.scenario != self.scenario:
            raise ScenarioMismatch(f"{strategy.scenario} vs {self.scenario}")
        c = self.real_coefficients
        da, db = strategy.state.d_a, strategy.state.d_b
        out = np.zeros((da * db, da * db), dtype=complex)
        n_a, n_b, m_a, m_b = self.scenario
        for s, t in itertools.product(range(n_a), range(n_b)):
            for b in range(m_b):
                left = sum(c[s, t, a, b] * strategy.alice[s].projectors[a] for a in range(m_a))
                out += np.kron(left, strategy.bob[t].projectors[b])
        return out

    def restrict(self, inputs_a, inputs_b):
        return BellFunctional(self.coefficients[np.ix_(list(inputs_a), list(inputs_b))],
                              self.hermitian, self.name)


def bell_value(f, p):
    """``sum Re[c * p]``; the imaginary part must vanish for Hermitian functionals."""
    if f.coefficients.shape != p.table.shape:
        raise ScenarioMismatch(f"functional {f.coefficients.shape} vs table {p.table.shape}")
    total = complex(np.sum(f.coefficients * p.table))
    if f.hermitian and abs(total.imag) > CORRELATION_TOL:
        raise NonHermitianValue(f"imaginary part {total.imag:.3e} on a Hermitian functional")
    return total.real


def correlator_coefficients(m_a=2, m_b=2):
    """``(-1)^(a+b)`` weights turning ``p(a,b|s,t)`` into ``<A_s B_t>``."""
    a = (-1.0) ** np.arange(m_a)
    b = (-1.0) ** np.arange(m_b)
    return np.outer(a, b)


def tilted_chsh_functional(beta):
    """``beta <A_0> + <A_0B_0> + <A_0B_1> + <A_1B_0> - <A_1B_1>``.

    The marginal term is read off the ``t = 0`` column, which is equivalent for
    any no-signaling table.
    """
    c = np.zeros((2, 2, 2, 2))
    corr = correlator_coefficients()
    for s, t in itertools.product(range(2), range(2)):
        c[s, t] = corr * (-1.0 if (s, t) == (1, 1) else 1.0)
    c[0, 0] += beta * np.array([[1.0, 1.0], [-1.0, -1.0]])
    return BellFunctional(c, name=f"tilted-chsh(beta={beta!r})")


def chsh_functional():
    return BellFunctional(tilted_chsh_functional(0.0).coefficients, name="chsh")


def satwap_r(k, d):
    """``r_k = 2^{-1/2} omega^{(2k - d)/8}``."""
    return np.exp(2j * np.pi * (2 * k - d) / (8 * d)) / np.sqrt(2)


def satwap_functional(d):
    """SATWAP expression as a correlation functional.

    Observable moments become ``<A_s^k B_t^{-k}> = sum_{a,b} omega^{k(a-b)} p``.
    """
    w = omega(d)
    c = np.zeros((2, 2, d, d), dtype=complex)
    phase = w ** np.subtract.outer(np.arange(d), np.arange(d))
    for k in range(1, d):
        r = satwap_r(k, d)
        weights = {(0, 0): r, (0, 1): np.conj(r) * w**k, (1, 0): np.conj(r), (1, 1): r}
        for (s, t), v in weights.items():
            c[s, t] += v * phase**k
    return BellFunctional(c, name=f"satwap(d={d})")


@dataclass(frozen=True)
class LocalBound:
    value: float
    alice: tuple
    bob: tuple
    strategies: int


def lhv_max_bruteforce(f, cap=LHV_CAP, chunk=1 << 16):
    """Exact maximum of ``Re f`` over deterministic local strategies.

    One party's assignments are enumerated explicitly; for each of them the
    other party's best response decomposes input by input, which is an exact
    maximization over that party's assignments.
    """
    n_a, n_b, m_a, m_b = f.scenario
    total = m_a**n_a * m_b**n_b
    if total > cap:
        raise TooLarge(f"{total} deterministic strategies exceed cap {cap}")
    c = f.real_coefficients
    swap = m_b**n_b < m_a**n_a
    if swap:
        c = np.transpose(c, (1, 0, 3, 2))
        n_a, n_b, m_a, m_b = n_b, n_a, m_b, m_a
    # by_input[s][a] -> (n_b, m_b) block
    by_input = np.transpose(c, (0, 2, 1, 3))
    best_val, best_a = -np.inf, None
    assignments = itertools.product(range(m_a), repeat=n_a)
    while True:
        block = np.array(list(itertools.islice(assignments, chunk)), dtype=int)
        if block.size == 0:
            break
        g = np.zeros((len(block), n_b, m_b))
        for s in range(n_a):
            g += by_input[s][block[:, s]]
        vals = g.max(axis=2).sum(axis=1)
        i = int(np.argmax(vals))
        if vals[i] > best_val:
            best_val, best_a = float(vals[i]), tuple(int(x) for x in block[i])
    g = sum(by_input[s][best_a[s]] for s in range(n_a))
    best_b = tuple(int(x) for x in g.argmax(axis=1))
    if swap:
        best_a, best_b = best_b, best_a
    return LocalBound(best_val, best_a, best_b, total)


def deterministic_correlation(alice, bob, m_a, m_b):
    """Table of the local deterministic strategy ``s -> alice[s]``, ``t -> bob[t]``."""
    t = np.zeros((len(alice), len(bob), m_a, m_b))
    for s, a in enumerate(alice):
        for u, b in enumerate(bob):
            t[s, u, a, b] = 1.0
    return Correlation(t)


def product_correlation(alice_marginals, bob_marginals):
    """``p(a|s) p(b|t)`` from marginal tables ``[s, a]`` and ``[t, b]``."""
    return Correlation(np.einsum("sa,tb->stab", alice_marginals, bob_marginals))
