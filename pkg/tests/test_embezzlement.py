import math

import numpy as np
import pytest
from hypothesis import given, strategies as st

from bellkit.embezzlement import (
    RegisterMeasurement,
    _padded_binary,
    build_embezzle_state,
    chi_diagonal,
    convergence_table,
    correlation_pn,
    embezzle_identity_check,
    epsilon_norm_sq,
    normalization,
    schmidt_report,
    shift_unitary,
    table2_strategy,
)
from bellkit.exceptions import OutOfRange, TooLarge
from bellkit.linalg import schmidt_spectrum
from bellkit.tilted_chsh import SIGMA_Z


def _index(digits):
    return int("".join(map(str, digits)), 3)


def test_normalization_values():
    assert normalization(1) == 1
    assert normalization(2) == pytest.approx(2 + math.sqrt(2))
    for n in range(1, 7):
        assert normalization(n) >= n
        # independent oracle: squared norm of the unnormalized sum
        assert normalization(n) == pytest.approx(
            np.sum((chi_diagonal(n) * math.sqrt(normalization(n))) ** 2), rel=1e-12)


def test_state_structure():
    s = build_embezzle_state(1)
    assert np.allclose(s.chi.matrix(), np.diag([1, 0, 0]))
    s = build_embezzle_state(3)
    assert s.psi_n.d_a == 81
    assert abs(np.linalg.norm(s.psi_n.amplitudes) - 1) < 1e-12
    # game register is the most significant factor
    assert np.allclose(s.psi_n.matrix(), np.kron(np.eye(3) / math.sqrt(3), s.chi.matrix()))


def test_level_limits():
    with pytest.raises(TooLarge):
        build_embezzle_state(7)
    with pytest.raises(OutOfRange):
        build_embezzle_state(0)


def test_shift_examples():
    g = shift_unitary(1)
    assert g.image[_index([0, 2])] == _index([2, 0])
    assert g.image[_index([1, 0])] == _index([1, 0])
    dense = g.dense()
    assert np.allclose(dense @ dense.T, np.eye(9))
    assert set(np.unique(dense)) <= {0.0, 1.0}


@given(st.integers(1, 5))
def test_shift_fixed_points(n):
    g = shift_unitary(n)
    assert np.array_equal(np.sort(g.image), np.arange(3 ** (n + 1)))
    idx = np.arange(3 ** (n + 1))
    has_one = np.array([("1" in np.base_repr(i, 3)) for i in idx])
    moved = g.image != idx
    # strings over {0,2} that are not constant move; constant ones are cyclic fixed points
    constant = np.isin(idx, [0, 3 ** (n + 1) - 1])
    assert np.array_equal(moved, ~has_one & ~constant)


def test_identity_check():
    for n in range(1, 6):
        r = embezzle_identity_check(n)
        assert r["residual"] < 1e-12
        assert r["residual_flipped_sign"] > 0.1
        assert r["epsilon_norm_sq"] == pytest.approx(r["epsilon_norm_sq_closed_form"], abs=1e-14)
        assert r["epsilon_norm_sq"] <= 2 / n
    assert epsilon_norm_sq(2) == pytest.approx(1 / (2 + math.sqrt(2)))
    assert math.sqrt(epsilon_norm_sq(4)) <= math.sqrt(0.5)


def test_register_measurement_matches_dense():
    n = 2
    g = shift_unitary(n)
    m = RegisterMeasurement(_padded_binary(SIGMA_Z), n, g)
    rows = np.random.default_rng(0).standard_normal((27, 5))
    for a, P in enumerate(m.projectors):
        assert np.allclose(m.apply(a, rows), P @ rows)
    assert sum(m.projectors).shape == (27, 27)
    assert np.allclose(sum(m.projectors), np.eye(27))
    assert m.residual() < 1e-14


def test_table2_completeness():
    strat = table2_strategy(2)
    for meas in strat.alice + strat.bob:
        assert np.allclose(sum(meas.projectors), np.eye(27), atol=1e-12)


@pytest.mark.parametrize("n", [1, 2, 3, 4])
def test_exact_properties(n):
    c = correlation_pn(n)
    assert c.p11_20 == pytest.approx(1 / 3, abs=1e-12)
    assert c.pa1_s2 == pytest.approx(1 / 3, abs=1e-12)
    assert c.pb1_t0 == pytest.approx(1 / 3, abs=1e-12)
    assert c.outcome2_max < 1e-12
    assert c.satwap_value == pytest.approx(4, abs=1e-12)
    assert c.satwap_block_distance < 1e-12
    assert c.tilted_block_distance <= c.error_bar
    assert max(c.p.residuals().values()) < 1e-9


def test_satwap_block_identical_across_levels():
    tables = [correlation_pn(n).p.restrict([0, 1], [0, 1]) for n in (1, 2, 3)]
    assert tables[0].distance(tables[1]) < 1e-12 and tables[0].distance(tables[2]) < 1e-12


def test_convergence_is_monotone():
    rows = convergence_table((1, 2, 4))
    d = [r["distance"] for r in rows]
    assert d[2] < d[1] < d[0]


def test_schmidt_report():
    r = schmidt_report(3)
    assert r["product_rule_residual"] < 1e-15
    assert r["unitary_invariance_residual"] < 1e-15
    assert r["svd_residual"] < 1e-12
    assert r["psi_sup"] == pytest.approx(r["chi_sup"] / math.sqrt(3))
    assert r["sup_sqrt_two_thirds"] > r["sup_one_over_sqrt3"]
    assert r["psi_rank"] == 3 * r["chi_rank"]
    chi = build_embezzle_state(3).chi
    assert np.allclose(schmidt_spectrum(chi).nonzero(), r["chi_spectrum"], atol=1e-12)
