import math

import numpy as np
import pytest
from hypothesis import given, strategies as st

from bellkit.exceptions import NotBinaryObservable, OutOfRange
from bellkit.linalg import BipartiteState, random_unitary
from bellkit.scenario import bell_value, correlation_from_strategy, tilted_chsh_functional
from bellkit.tilted_chsh import (
    SIGMA_X,
    SIGMA_Z,
    TiltedParams,
    canonical_strategy,
    padded_table,
    sweep,
    tilted_operator,
)

BETAS = [0.25 * k for k in range(8)]


def test_symmetric_point():
    p = TiltedParams.from_alpha(1.0)
    assert p.beta == pytest.approx(0.0, abs=1e-12)
    assert p.theta == pytest.approx(math.pi / 4) and p.mu == pytest.approx(math.pi / 4)


def test_alpha_inverse_sqrt2():
    assert TiltedParams.from_alpha(1 / math.sqrt(2)).beta == pytest.approx(2 / math.sqrt(17),
                                                                           abs=1e-12)


def test_alpha_tends_to_zero():
    alphas = [TiltedParams.from_beta(b).alpha for b in (1.9, 1.99, 1.999, 1.9999)]
    assert all(x > y for x, y in zip(alphas, alphas[1:])) and alphas[-1] < 0.01


def test_out_of_range():
    for bad in (-0.1, 2.0, 3.0):
        with pytest.raises(OutOfRange):
            TiltedParams.from_beta(bad)
    for bad in (0.0, 1.5):
        with pytest.raises(OutOfRange):
            TiltedParams.from_alpha(bad)


@pytest.mark.parametrize("beta", BETAS)
def test_canonical_value_and_norm(beta):
    canon = canonical_strategy(beta)
    q = math.sqrt(8 + 2 * beta**2)
    assert canon.value() == pytest.approx(q, abs=1e-12)
    assert np.linalg.eigvalsh(canon.operator())[-1] == pytest.approx(q, abs=1e-9)
    assert bell_value(tilted_chsh_functional(beta), canon.correlation()) == pytest.approx(q,
                                                                                       abs=1e-12)


def test_named_values():
    assert canonical_strategy(TiltedParams.from_alpha(1.0)).value() == pytest.approx(
        2 * math.sqrt(2), abs=1e-12)
    assert canonical_strategy(TiltedParams.from_alpha(1 / math.sqrt(2))).value() == \
        pytest.approx(12 / math.sqrt(17), abs=1e-12)
    params = TiltedParams.from_alpha(0.5)
    a0 = params.state().expectation(np.kron(SIGMA_Z, np.eye(2))).real
    assert a0 == pytest.approx(0.6, abs=1e-12)


def test_product_state_respects_local_bound():
    for beta in BETAS:
        canon = canonical_strategy(beta)
        s00 = BipartiteState.product([1, 0], [1, 0])
        assert s00.expectation(canon.operator()).real <= 2 + beta + 1e-12


def test_tilted_operator_requires_binary():
    with pytest.raises(NotBinaryObservable):
        tilted_operator(0.0, 2 * SIGMA_Z, SIGMA_X, SIGMA_Z, SIGMA_X)


def test_sweep_rows():
    rows = sweep(points=5)
    assert len(rows) == 5
    for r in rows:
        assert r.quantum_value == pytest.approx(r.formula_value, abs=1e-12)
        assert r.local_bound == pytest.approx(2 + r.beta, abs=1e-12)
        assert r.operator_norm == pytest.approx(r.formula_value, abs=1e-9)


def test_padded_table():
    canon = canonical_strategy(0.5).correlation()
    t = padded_table(canon, 3, 3)
    assert t.shape == (2, 2, 3, 3) and t[:, :, 2, :].max() == 0 and np.allclose(
        t[:, :, :2, :2], canon.table)


@given(st.floats(0.0, 1.99), st.integers(0, 2**32 - 1))
def test_parameter_relations(beta, seed):
    p = TiltedParams.from_beta(beta)
    s = math.sqrt((4 - beta**2) / (4 + beta**2))
    assert math.tan(p.mu) == pytest.approx(s, abs=1e-12)
    assert math.sin(2 * p.theta) == pytest.approx(s, abs=1e-12)
    assert TiltedParams.from_alpha(p.alpha).alpha == pytest.approx(p.alpha, abs=1e-12)
    for op in (p.sigma_z_alpha(), p.sigma_x_alpha()):
        assert np.allclose(op @ op, np.eye(2), atol=1e-12)


@given(st.floats(0.0, 1.9), st.integers(0, 2**32 - 1))
def test_local_unitary_invariance(beta, seed):
    rng = np.random.default_rng(seed)
    canon = canonical_strategy(beta)
    moved = canon.strategy.conjugate(random_unitary(2, rng), random_unitary(2, rng))
    assert correlation_from_strategy(moved).distance(canon.correlation()) < 1e-10
