import itertools
import math

import numpy as np
import pytest
from hypothesis import given, strategies as st

from bellkit.exceptions import NonHermitianValue, ScenarioMismatch, SignalingDetected, TooLarge
from bellkit.linalg import BipartiteState, random_state, random_unitary
from bellkit.qqs_witness import witness_correlation
from bellkit.satwap import canonical_satwap
from bellkit.scenario import (
    BellFunctional,
    Correlation,
    Measurement,
    Scenario,
    Strategy,
    bell_value,
    chsh_functional,
    correlation_from_strategy,
    deterministic_correlation,
    lhv_max_bruteforce,
    marginal,
    product_correlation,
    satwap_functional,
    tilted_chsh_functional,
)
from bellkit.tilted_chsh import TiltedParams, canonical_correlation, canonical_strategy


def _random_measurement(dim, outcomes, rng):
    u = random_unitary(dim, rng)
    cuts = np.array_split(np.arange(dim), outcomes)
    return Measurement([u[:, c] @ u[:, c].conj().T for c in cuts])


def test_scenario_needs_two_of_everything():
    with pytest.raises(ValueError):
        Scenario(1, 2, 2, 2)


def test_product_state_factorizes(rng):
    state = BipartiteState.product(random_state(1, 3, rng).amplitudes,
                                   random_state(1, 4, rng).amplitudes)
    alice = [_random_measurement(3, 2, rng) for _ in range(2)]
    bob = [_random_measurement(4, 3, rng) for _ in range(3)]
    p = correlation_from_strategy(Strategy(state, alice, bob))
    pa, pb = marginal(p, "A"), marginal(p, "B")
    assert p.distance(product_correlation(pa, pb)) < 1e-10


def test_canonical_values():
    p = canonical_correlation(TiltedParams.from_alpha(1.0))
    assert bell_value(chsh_functional(), p) == pytest.approx(2 * math.sqrt(2), abs=1e-12)
    strat = canonical_satwap(3).strategy()
    assert bell_value(satwap_functional(3), correlation_from_strategy(strat)) == pytest.approx(
        4.0, abs=1e-12)
    p = canonical_correlation(TiltedParams.from_beta(0.5))
    assert bell_value(tilted_chsh_functional(0.5), p) == pytest.approx(math.sqrt(8.5), abs=1e-12)


def test_bell_value_examples():
    p = deterministic_correlation([0, 0], [0, 0], 2, 2)
    assert bell_value(BellFunctional(np.zeros((2, 2, 2, 2))), p) == 0
    assert bell_value(chsh_functional(), p) == pytest.approx(2.0)
    with pytest.raises(ScenarioMismatch):
        bell_value(satwap_functional(3), p)


def test_non_hermitian_functional_is_flagged():
    f = BellFunctional(1j * np.ones((2, 2, 2, 2)))
    with pytest.raises(NonHermitianValue):
        bell_value(f, deterministic_correlation([0, 0], [0, 0], 2, 2))


def test_lhv_examples():
    assert lhv_max_bruteforce(chsh_functional()).value == pytest.approx(2.0, abs=1e-12)
    assert lhv_max_bruteforce(tilted_chsh_functional(0.5)).value == pytest.approx(2.5, abs=1e-12)
    # frozen enumeration values for SATWAP
    expected = {2: math.sqrt(2), 3: (3 * math.sqrt(3) + 1) / 2}
    for d, v in expected.items():
        bound = lhv_max_bruteforce(satwap_functional(d))
        assert bound.value == pytest.approx(v, abs=1e-12)
        det = deterministic_correlation(bound.alice, bound.bob, d, d)
        assert bell_value(satwap_functional(d), det) == pytest.approx(bound.value, abs=1e-12)
    with pytest.raises(TooLarge):
        lhv_max_bruteforce(satwap_functional(3), cap=10)


def test_lhv_matches_naive_enumeration():
    f = satwap_functional(3)
    best = max(bell_value(f, deterministic_correlation(a, b, 3, 3))
               for a in itertools.product(range(3), repeat=2)
               for b in itertools.product(range(3), repeat=2))
    assert lhv_max_bruteforce(f).value == pytest.approx(best, abs=1e-12)


def test_lhv_monotone_under_restriction():
    f = BellFunctional(np.random.default_rng(3).standard_normal((3, 3, 2, 2)))
    assert lhv_max_bruteforce(f.restrict([0, 1], [0, 1])).value <= lhv_max_bruteforce(f).value


def test_marginal_examples():
    p = Correlation(np.full((2, 2, 2, 2), 0.25))
    assert np.allclose(marginal(p, "A"), 0.5)
    assert marginal(witness_correlation(0.5, 12), "A")[0, 1] == pytest.approx(0.2, abs=1e-6)
    assert marginal(canonical_correlation(TiltedParams.from_alpha(0.5)), "A")[0, 1] == \
        pytest.approx(0.2, abs=1e-12)


def test_signaling_table_is_rejected():
    t = np.zeros((2, 2, 2, 2))
    t[:, 0, 0, 0] = 1.0
    t[:, 1, 1, 0] = 1.0   # Alice's outcome follows Bob's input
    with pytest.raises(SignalingDetected):
        Correlation(t)
    with pytest.raises(SignalingDetected):
        marginal(Correlation(t, validate=False), "A")


def test_quantum_beats_local():
    for beta in np.linspace(0.1, 1.9, 7):
        q = TiltedParams.from_beta(beta).quantum_value
        assert q > lhv_max_bruteforce(tilted_chsh_functional(beta)).value
    assert 4 > lhv_max_bruteforce(satwap_functional(3)).value


@given(st.integers(2, 4), st.integers(2, 3), st.integers(2, 3), st.integers(0, 2**32 - 1))
def test_random_strategies_give_valid_correlations(dim, n_in, outcomes, seed):
    rng = np.random.default_rng(seed)
    dim = max(dim, outcomes)
    state = random_state(dim, dim, rng)
    alice = [_random_measurement(dim, outcomes, rng) for _ in range(n_in)]
    bob = [_random_measurement(dim, outcomes, rng) for _ in range(n_in)]
    p = correlation_from_strategy(Strategy(state, alice, bob))
    assert max(p.residuals().values()) < 1e-9


@given(st.integers(0, 2**32 - 1))
def test_hermitian_functional_is_real_on_quantum_tables(seed):
    rng = np.random.default_rng(seed)
    state = random_state(3, 3, rng)
    alice = [_random_measurement(3, 3, rng) for _ in range(2)]
    bob = [_random_measurement(3, 3, rng) for _ in range(2)]
    p = correlation_from_strategy(Strategy(state, alice, bob))
    f = satwap_functional(3)
    assert abs(np.sum(f.coefficients * p.table).imag) < 1e-9
