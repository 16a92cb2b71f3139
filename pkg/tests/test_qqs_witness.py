import math

import numpy as np
import pytest
from hypothesis import given, strategies as st

from bellkit.exceptions import OutOfRange
from bellkit.linalg import schmidt_spectrum
from bellkit.qqs_witness import (
    block_distances,
    block_marginal_consistency,
    convergence_report,
    geometric_norm,
    operator_decomposition_residuals,
    pairing_index,
    pairing_isometry,
    proof_identity_report,
    ternary_projectors,
    ternary_variant,
    truncated_psi,
    witness_correlation,
    witness_observables,
    witness_strategy,
)
from bellkit.scenario import bell_value, marginal, tilted_chsh_functional
from bellkit.tilted_chsh import TiltedParams
from bellkit.validation import op_norm


def test_normalizations():
    assert geometric_norm(0.5) == pytest.approx(5 / 3)
    assert geometric_norm(0.5, 2) == pytest.approx(1.625)
    psi = truncated_psi(0.5, 2)
    assert psi.C_K == pytest.approx(1.625)
    assert abs(np.linalg.norm(psi.state.amplitudes) - 1) < 1e-14


def test_schmidt_spectrum_of_truncated_state():
    psi = truncated_psi(0.3, 5)
    expected = sorted((0.3 ** abs(i) / math.sqrt(psi.C_K) for i in range(-5, 6)), reverse=True)
    assert np.allclose(schmidt_spectrum(psi.state).nonzero(), expected, atol=1e-14)


def test_bad_inputs():
    with pytest.raises(OutOfRange):
        truncated_psi(1.0, 5)
    with pytest.raises(OutOfRange):
        truncated_psi(0.5, 1)


def test_pairing_examples():
    assert pairing_index(0, 0, 3) == 6
    assert pairing_index(2, 1, -1) == -3
    for variant in (0, 2):
        W = pairing_isometry(variant, 6).matrix
        assert np.allclose(W.T @ W, np.eye(W.shape[1]))
    assert pairing_isometry(2, 6).unpaired == (-12, 13)
    assert pairing_isometry(0, 6).unpaired == ()


@given(st.integers(-200, 200))
def test_pairing_blocks(j):
    assert {pairing_index(0, 0, j), pairing_index(0, 1, j)} == {2 * j, 2 * j + 1}
    assert {pairing_index(2, 0, j), pairing_index(2, 1, j)} == {2 * j - 1, 2 * j}
    assert (pairing_index(0, 0, j) % 2 == 0) == (j >= 0)


def test_observables_are_binary():
    obs = witness_observables(0.5, 6)
    n = obs.A[0].shape[0]
    for op in obs.A + obs.B:
        assert op_norm(op @ op - np.eye(n)) < 1e-10
        assert op_norm(op - op.conj().T) < 1e-14


def test_witness_marginal_and_tables():
    p = witness_correlation(0.5, 12)
    assert max(p.residuals().values()) < 1e-9
    assert marginal(p, "A")[0, 1] == pytest.approx(0.2, abs=1e-6)
    dist = block_distances(p, 0.5)
    assert dist["block_01"] < 1e-5 and dist["block_23"] < 1e-5
    assert block_marginal_consistency(p) < 1e-8


def test_block_value_at_inverse_sqrt2():
    a = 1 / math.sqrt(2)
    f = tilted_chsh_functional(TiltedParams.from_alpha(a).beta)
    p = witness_correlation(a, 16)
    for block in ([0, 1], [2, 3]):
        assert bell_value(f, p.restrict(block, block)) == pytest.approx(12 / math.sqrt(17),
                                                                        abs=1e-5)
    # at K=12 the truncation error is still 7.9e-5 (it decays like alpha^(2K))
    p12 = witness_correlation(a, 12)
    gap = 12 / math.sqrt(17) - bell_value(f, p12.restrict([0, 1], [0, 1]))
    assert 5e-5 < gap < 1e-4


def test_boundary_policy_recorded():
    assert "unpaired" in witness_strategy(0.5, 4).metadata["boundary_policy"]


def test_proof_identities():
    r = proof_identity_report(0.5, 12)
    for key in ("M_square_residual", "M_structure_residual", "D0_projector_residual",
                "A0_1_identity_residual"):
        assert r[key] < 1e-12
    assert r["marginal_identity_residual"] < 1e-8
    assert r["marginal_chain_residual"] < 1e-8
    assert r["value_A0_0_D0"] == pytest.approx(1 / r["C_K"], abs=1e-10)
    assert r["value_A0_0_D0"] >= 0.36
    assert r["lower_bound_holds"]
    assert r["A0_1_zero_overlap"] == 0.0


def test_ternary_variant():
    res = ternary_variant(0.5, 10)
    assert res.outcome2_residual < 1e-12
    assert max(res.relation_residuals.values()) < 1e-10
    assert res.completeness_residual < 1e-12
    q2 = res.q.table[0, :, 2, :].sum(axis=1)
    assert np.allclose(q2, 1 / truncated_psi(0.5, 10).C_K, atol=1e-12)
    assert max(operator_decomposition_residuals(0.5, 10).values()) < 1e-12
    n = ternary_projectors(0.5, 10)[0].shape[0]
    assert op_norm(sum(ternary_projectors(0.5, 10)) - np.eye(n)) < 1e-12


def test_truncation_convergence():
    rows = convergence_report(0.5, Ks=(8, 10, 12))
    assert rows[-1]["distance"] < 1e-5
    cs = [r["fitted_c"] for r in rows]
    assert max(cs) / min(cs) < 1.01


@given(st.floats(0.2, 0.8), st.integers(3, 7))
def test_witness_correlation_valid(alpha, K):
    p = witness_correlation(alpha, K)
    assert max(p.residuals().values()) < 1e-9
    assert block_marginal_consistency(p) < 1e-8
