"""See-saw maximization of Bell functionals over pure states and projective measurements.

Each measurement is stored as a unitary frame whose columns are split into
fixed rank classes, one class per outcome. A sweep alternates three exact or
ascent-only subproblems: top eigenvector for the state, then Alice's frames,
then Bob's. Every update is accepted only if it does not lower the objective,
so the value trace is monotone by construction.
"""

from concurrent.futures import ThreadPoolExecutor
from dataclasses import dataclass, field
import os

import numpy as np
from scipy.linalg import polar
from scipy.optimize import linear_sum_assignment
from sklearn.base import BaseEstimator
from sklearn.utils.validation import check_is_fitted

from .exceptions import InvalidParameter, NoConvergence
from .linalg import BipartiteState, random_state, random_unitary
from .scenario import BellFunctional, Measurement, Strategy

MONOTONE_TOL = 1e-12


def rank_classes(dim, outcomes):
    """Split ``range(dim)`` into ``outcomes`` contiguous classes of near-equal size."""
    if dim < outcomes:
        raise InvalidParameter("dims", f"each local dimension must be >= outcomes ({outcomes})")
    bounds = np.linspace(0, dim, outcomes + 1).round().astype(int)
    return [np.arange(bounds[a], bounds[a + 1]) for a in range(outcomes)]


def _projectors(frame, classes):
    return [frame[:, c] @ frame[:, c].conj().T for c in classes]


@dataclass(frozen=True)
class SeesawConfig:
    dims: tuple = (2, 2)
    max_iters: int = 500
    tol: float = 1e-12
    restarts: int = 20
    seed: int = 0
    exact_assignment: bool = False
    polar_steps: int = 20
    threads: int = 1

    def __post_init__(self):
        if self.tol <= 0:
            raise InvalidParameter("tol", "must be > 0")
        if len(self.dims) != 2 or min(self.dims) < 2:
            raise InvalidParameter("dims", "need two local dimensions, each >= 2")
        if self.restarts < 1:
            raise InvalidParameter("restarts", "must be >= 1")
        if self.max_iters < 1:
            raise InvalidParameter("max_iters", "must be >= 1")


@dataclass(frozen=True)
class SeesawResult:
    value: float
    strategy: Strategy
    trace: tuple
    converged: bool
    restart_values: tuple = ()
    seeds: tuple = ()
    half_steps: tuple = field(default=(), repr=False)

    def is_monotone(self, tol=MONOTONE_TOL):
        steps = np.diff(np.asarray(self.half_steps or self.trace))
        return bool(steps.size == 0 or steps.min() >= -tol)


def random_strategy(dims, d_outcomes, seed, n_inputs=(2, 2)):
    """Gaussian-amplitude pure state and random frames split into rank classes."""
    rng = np.random.default_rng(seed)
    d_a, d_b = dims
    state = random_state(d_a, d_b, rng)
    alice = [Measurement(_projectors(random_unitary(d_a, rng), rank_classes(d_a, d_outcomes)))
             for _ in range(n_inputs[0])]
    bob = [Measurement(_projectors(random_unitary(d_b, rng), rank_classes(d_b, d_outcomes)))
           for _ in range(n_inputs[1])]
    return Strategy(state, alice, bob)


class _Problem:
    """Bookkeeping for one restart."""

    def __init__(self, functional, config, rng):
        self.c = functional.real_coefficients
        self.n_a, self.n_b, self.m_a, self.m_b = functional.scenario
        self.config = config
        d_a, d_b = config.dims
        self.cls_a = rank_classes(d_a, self.m_a)
        self.cls_b = rank_classes(d_b, self.m_b)
        self.m = random_state(d_a, d_b, rng).matrix()
        self.fa = [random_unitary(d_a, rng) for _ in range(self.n_a)]
        self.fb = [random_unitary(d_b, rng) for _ in range(self.n_b)]

    def projectors(self):
        return ([_projectors(f, self.cls_a) for f in self.fa],
                [_projectors(f, self.cls_b) for f in self.fb])

    def operator(self):
        pa, pb = self.projectors()
        d_a, d_b = self.config.dims
        out = np.zeros((d_a * d_b, d_a * d_b), dtype=complex)
        for s in range(self.n_a):
            for t in range(self.n_b):
                for b in range(self.m_b):
                    left = sum(self.c[s, t, a, b] * pa[s][a] for a in range(self.m_a))
                    out += np.kron(left, pb[t][b])
        return out

    def value(self):
        v = self.m.reshape(-1)
        return float(np.vdot(v, self.operator() @ v).real)

    def effective(self, side):
        """``E[x][o]`` with objective ``sum_x sum_o tr(P_x^o E[x][o])`` for fixed other side."""
        pa, pb = self.projectors()
        m = self.m
        if side == "A":
            imgs = [[m @ q.T @ m.conj().T for q in qs] for qs in pb]
            return [[sum(self.c[s, t, a, b] * imgs[t][b] for t in range(self.n_b)
                         for b in range(self.m_b)) for a in range(self.m_a)]
                    for s in range(self.n_a)]
        imgs = [[m.T @ p.T @ m.conj() for p in ps] for ps in pa]
        return [[sum(self.c[s, t, a, b] * imgs[s][a] for s in range(self.n_a)
                     for a in range(self.m_a)) for b in range(self.m_b)]
                for t in range(self.n_b)]


def _frame_score(frame, classes, E):
    return float(sum(np.einsum("ij,ik,kj->", frame[:, c].conj(), E[o], frame[:, c]).real
                     for o, c in enumerate(classes)))


def _assign(scores, classes, exact):
    """Map outcome classes to eigenvector columns; ``scores[o, k] = v_k^dag E_o v_k``."""
    sizes = [len(c) for c in classes]
    rows = np.repeat(np.arange(len(classes)), sizes)
    cost = scores[rows]
    if exact:
        r, k = linear_sum_assignment(-cost)
        return [k[r == i] for i in range(len(rows))], rows
    order = np.dstack(np.unravel_index(np.argsort(-cost, axis=None), cost.shape))[0]
    taken_r, taken_k, pick = set(), set(), {}
    for r, k in order:
        if r not in taken_r and k not in taken_k:
            taken_r.add(r)
            taken_k.add(k)
            pick[r] = k
    return [np.array([pick[i]]) for i in range(len(rows))], rows


def _greedy_frame(E, classes, exact):
    best, best_score = None, -np.inf
    for Eo in E:
        _, vecs = np.linalg.eigh((Eo + Eo.conj().T) / 2)
        scores = np.einsum("ik,oij,jk->ok", vecs.conj(), np.asarray(E), vecs).real
        picks, _ = _assign(scores, classes, exact)
        frame = vecs[:, np.concatenate(picks)]
        score = _frame_score(frame, classes, E)
        if score > best_score:
            best, best_score = frame, score
    return best, best_score


def _polar_ascent(frame, classes, E, steps):
    """Ascent for the convex objective after shifting every ``E_o`` to be positive semidefinite."""
    shift = max(0.0, -min(float(np.linalg.eigvalsh((e + e.conj().T) / 2)[0]) for e in E))
    shifted = [e + shift * np.eye(e.shape[0]) for e in E]
    for _ in range(steps):
        grad = np.empty_like(frame)
        for o, c in enumerate(classes):
            grad[:, c] = shifted[o] @ frame[:, c]
        frame, _ = polar(grad)
    return frame


def _update_side(prob, side):
    frames, classes = (prob.fa, prob.cls_a) if side == "A" else (prob.fb, prob.cls_b)
    E_all = prob.effective(side)
    for x, E in enumerate(E_all):
        current = _frame_score(frames[x], classes, E)
        candidate, score = _greedy_frame(E, classes, prob.config.exact_assignment)
        start = candidate if score > current else frames[x]
        refined = _polar_ascent(start, classes, E, prob.config.polar_steps)
        for option in (refined, candidate):
            s = _frame_score(option, classes, E)
            if s >= current:
                frames[x], current = option, s


def _run_restart(functional, config, seed):
    rng = np.random.default_rng(seed)
    prob = _Problem(functional, config, rng)
    half = [prob.value()]
    trace = [half[0]]
    converged = False
    for _ in range(config.max_iters):
        w, v = np.linalg.eigh(prob.operator())
        if w[-1] >= half[-1]:
            prob.m = v[:, -1].reshape(config.dims)
        half.append(prob.value())
        _update_side(prob, "A")
        half.append(prob.value())
        _update_side(prob, "B")
        half.append(prob.value())
        trace.append(half[-1])
        if trace[-1] - trace[-2] < config.tol:
            converged = True
            break
    pa, pb = prob.projectors()
    strategy = Strategy(BipartiteState.from_matrix(prob.m, normalize=True), pa, pb)
    return trace, half, converged, strategy


def resolve_threads(threads=None):
    if threads is None:
        threads = int(os.environ.get("BELLKIT_THREADS", "1"))
    if threads < 1:
        raise InvalidParameter("threads", "must be >= 1")
    return threads


def seesaw_maximize(functional, config=None, raise_on_failure=False):
    """Best see-saw value of ``functional`` over ``config.restarts`` seeded restarts."""
    if not isinstance(functional, BellFunctional):
        raise InvalidParameter("functional", "must be a BellFunctional")
    config = config or SeesawConfig()
    seeds = tuple(int(s) for s in np.random.SeedSequence(config.seed).generate_state(
        config.restarts))
    threads = resolve_threads(config.threads)
    if threads > 1:
        with ThreadPoolExecutor(threads) as pool:
            runs = list(pool.map(lambda s: _run_restart(functional, config, s), seeds))
    else:
        runs = [_run_restart(functional, config, s) for s in seeds]
    values = tuple(r[0][-1] for r in runs)
    best = int(np.argmax(values))
    trace, half, converged, strategy = runs[best]
    result = SeesawResult(values[best], strategy, tuple(trace), converged, values, seeds,
                          tuple(half))
    if raise_on_failure and not converged:
        raise NoConvergence(f"best restart did not converge in {config.max_iters} sweeps")
    return result


class SeesawMaximizer(BaseEstimator):
    """Estimator front end for :func:`seesaw_maximize`; ``fit`` takes a BellFunctional.

    Attributes set by ``fit``: ``result_``, ``value_``, ``strategy_``.
    """

    def __init__(self, dims=(2, 2), max_iters=500, tol=1e-12, restarts=20, seed=0,
                 exact_assignment=False, polar_steps=20, threads=1):
        self.dims = dims
        self.max_iters = max_iters
        self.tol = tol
        self.restarts = restarts
        self.seed = seed
        self.exact_assignment = exact_assignment
        self.polar_steps = polar_steps
        self.threads = threads

    def fit(self, X, y=None):
        config = SeesawConfig(tuple(self.dims), self.max_iters, self.tol, self.restarts,
                              self.seed, self.exact_assignment, self.polar_steps, self.threads)
        self.result_ = seesaw_maximize(X, config)
        self.value_ = self.result_.value
        self.strategy_ = self.result_.strategy
        return self

    def score(self, X=None, y=None):
        check_is_fitted(self, "result_")
        return self.value_
