import math

import numpy as np
import pytest
from hypothesis import given, strategies as st

from bellkit.exceptions import NotDValuedObservable
from bellkit.linalg import maximally_entangled, random_observable, random_state
from bellkit.satwap import (
    SatwapCoefficients,
    power_identities,
    c_operators,
    canonical_satwap,
    formula_local_bound,
    satwap_operator,
    sos_certificate,
)
from bellkit.scenario import lhv_max_bruteforce, satwap_functional
from bellkit.validation import is_hermitian, op_norm


@pytest.mark.parametrize("d", [2, 3, 4, 5])
def test_canonical_value(d):
    canon = canonical_satwap(d)
    assert canon.value() == pytest.approx(2 * (d - 1), abs=1e-12)
    assert max(canon.residuals().values()) < 1e-10
    assert op_norm(np.linalg.matrix_power(canon.A0, d) - np.eye(d)) < 1e-12


def test_top_eigenvalue_d3():
    assert np.linalg.eigvalsh(canonical_satwap(3).operator())[-1] == pytest.approx(4, abs=1e-9)


def test_d2_reduces_to_chsh_form():
    rng = np.random.default_rng(1)
    A0, A1, B0, B1 = (random_observable(2, 2, rng) for _ in range(4))
    k = np.kron
    expected = (k(A0, B0) - k(A0, B1) + k(A1, B0) + k(A1, B1)) / math.sqrt(2)
    assert op_norm(satwap_operator(2, A0, A1, B0, B1) - expected) < 1e-12


def test_operator_rejects_non_observable():
    with pytest.raises(NotDValuedObservable):
        satwap_operator(3, np.eye(3) * 2, np.eye(3), np.eye(3), np.eye(3))


@pytest.mark.parametrize("d", [2, 3, 4, 5, 7])
def test_coefficient_identities(d):
    res = SatwapCoefficients.build(d).residuals()
    assert res["conjugate_symmetry"] < 1e-15
    assert res["cancellation"] < 1e-14
    assert max(res.values()) < 1e-14


def test_canonical_sos_residuals():
    canon = canonical_satwap(3)
    cert = sos_certificate(canon.state, canon.A0, canon.A1, canon.B0, canon.B1, 3)
    assert cert.residuals.shape == (2, 2)
    assert cert.residuals.max() < 1e-10
    assert cert.c_norm_residual < 1e-10


def test_m_operator_route_agrees():
    rng = np.random.default_rng(5)
    state = random_state(3, 3, rng)
    ops = [random_observable(3, 3, rng) for _ in range(4)]
    cert = sos_certificate(state, *ops, 3)
    for (s, k), M in cert.m_operators(ops[0], ops[1]).items():
        direct = np.linalg.norm(M.conj().T @ state.amplitudes)
        assert direct == pytest.approx(cert.residuals[s, k - 1], abs=1e-12)


@pytest.mark.parametrize("d", [2, 3, 4, 5])
def test_power_identities_hold(d):
    report = power_identities(d)
    assert max(report.values()) < 1e-12


def test_local_bound_vs_formula():
    # enumeration is authoritative; the closed form is reported, never asserted
    frozen = {2: math.sqrt(2), 3: (3 * math.sqrt(3) + 1) / 2}
    for d, v in frozen.items():
        assert lhv_max_bruteforce(satwap_functional(d)).value == pytest.approx(v, abs=1e-12)
    assert formula_local_bound(3) == pytest.approx((2 * math.sqrt(3) - 1) / 2, abs=1e-12)
    assert formula_local_bound(2) == pytest.approx((math.sqrt(2) - 1) / 2, abs=1e-12)


@given(st.integers(2, 4), st.integers(0, 2**32 - 1))
def test_gap_identity_random(d, seed):
    rng = np.random.default_rng(seed)
    dim = d + int(rng.integers(0, 2))
    state = random_state(dim, dim, rng)
    ops = [random_observable(dim, d, rng) for _ in range(4)]
    cert = sos_certificate(state, *ops, d)
    assert cert.identity_residual < 1e-9
    assert cert.value <= 2 * (d - 1) + 1e-9
    assert is_hermitian(satwap_operator(d, *ops))


@given(st.integers(2, 5), st.integers(0, 2**32 - 1))
def test_c_sum_identity_any_observables(d, seed):
    rng = np.random.default_rng(seed)
    B0, B1 = random_observable(d, d, rng), random_observable(d, d, rng)
    c0, c1 = c_operators(B0, B1, d)
    total = sum(c.conj().T @ c for c in c0[1:] + c1[1:])
    assert op_norm(total - 2 * (d - 1) * np.eye(d)) < 1e-10
