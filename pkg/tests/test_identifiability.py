import math
from fractions import Fraction

import numpy as np
import pytest
from hypothesis import given, settings, strategies as st

from sigpath.identifiability import (
    bareiss_det,
    bareiss_det_int,
    factor_small_primes,
    finite_stabilizer_certificate,
    is_symmetrically_concise,
    jacobian_j1,
    jacobian_j1_exact,
    kappa_bounds,
    kappa_xc_upper,
    nonconcise_witness,
    rank_mod_p,
)
from sigpath.signatures import core_axis, core_axis_exact, core_mono, core_mono_exact
from sigpath.tensor3 import DimensionError, congruence, frobenius


def rank_one(*vs):
    return np.einsum("i,j,k->ijk", *[np.asarray(v, dtype=float) for v in vs])


E1, E2 = [1.0, 0.0], [0.0, 1.0]


def test_conciseness_small_examples():
    assert is_symmetrically_concise(rank_one(E1, E2, [1.0, 1.0]))
    assert not is_symmetrically_concise(rank_one(E1, E1, E1))


@pytest.mark.parametrize("m", range(2, 16))
def test_axis_concise(m):
    assert is_symmetrically_concise(core_axis(m))
    assert nonconcise_witness(core_axis(m)) is None


def test_witness_e1_cubed():
    T = rank_one(E1, E1, E1)
    Z = nonconcise_witness(T)
    assert Z is not None
    np.testing.assert_allclose(congruence(T, Z), T, atol=1e-15)
    assert not np.allclose(Z, np.eye(2))


def test_witness_zero_tensor():
    T = np.zeros((3, 3, 3))
    Z = nonconcise_witness(T)
    assert Z is not None
    assert np.array_equal(congruence(T, Z), T)


@pytest.mark.parametrize("seed", range(10))
def test_witness_constructed_nonconcise(seed):
    # a generic tensor living on a random hyperplane of R^4
    r = np.random.default_rng(seed)
    B = np.linalg.qr(r.standard_normal((4, 3)))[0]
    T = congruence(r.standard_normal((3, 3, 3)), B)
    Z = nonconcise_witness(T)
    assert Z is not None
    assert not np.allclose(Z, np.eye(4))
    assert np.max(np.abs(congruence(T, Z) - T)) < 1e-10


def test_j1_one_by_one():
    np.testing.assert_allclose(jacobian_j1(np.array([[[2.5]]])), [[7.5]])


@pytest.mark.parametrize("seed", range(4))
def test_j1_finite_differences(seed):
    r = np.random.default_rng(seed)
    m = 3
    T = r.integers(-5, 6, (m, m, m)) / r.integers(1, 4, (m, m, m))
    h = 1e-5
    J = np.zeros((m * m, m * m))
    for col in range(m * m):
        E = np.zeros(m * m)
        E[col] = h
        E = E.reshape(m, m)
        plus = congruence(T, np.eye(m) + E)[:, :, 0]
        minus = congruence(T, np.eye(m) - E)[:, :, 0]
        J[:, col] = ((plus - minus) / (2 * h)).ravel()
    np.testing.assert_allclose(jacobian_j1(T), J, atol=1e-6)


@pytest.mark.parametrize("m", [2, 3, 5])
def test_j1_exact_matches_numeric(m):
    Je = np.array(jacobian_j1_exact(core_mono_exact(m)), dtype=object).astype(float)
    np.testing.assert_allclose(Je, jacobian_j1(core_mono(m)), atol=1e-15)


@pytest.mark.parametrize("m", range(1, 7))
def test_det_exact_vs_numeric(m):
    for exact, flt in ((core_mono_exact(m), core_mono(m)), (core_axis_exact(m), core_axis(m))):
        de = float(bareiss_det(jacobian_j1_exact(exact)))
        dn = np.linalg.det(jacobian_j1(flt))
        assert abs(dn - de) <= 1e-8 * abs(de)


def test_bareiss_small():
    assert bareiss_det_int([[2, 1], [1, 3]]) == 5
    assert bareiss_det_int([[0, 1], [1, 0]]) == -1
    assert bareiss_det_int([[1, 2], [2, 4]]) == 0
    assert bareiss_det([[Fraction(1, 2), 0], [0, Fraction(2, 3)]]) == Fraction(1, 3)
    with pytest.raises(DimensionError):
        bareiss_det([[1, 2]])


@settings(max_examples=30, deadline=None)
@given(st.lists(st.integers(-9, 9), min_size=16, max_size=16))
def test_bareiss_matches_cofactor_expansion(entries):
    M = [entries[i * 4:(i + 1) * 4] for i in range(4)]

    def det(A):
        if len(A) == 1:
            return A[0][0]
        return sum((-1) ** c * A[0][c] * det([r[:c] + r[c + 1:] for r in A[1:]]) for c in range(len(A)))

    assert bareiss_det_int(M) == det(M)


def test_factor_small_primes():
    assert factor_small_primes(2**5 * 3 * 19**2) == ({2: 5, 3: 1, 19: 2}, 1)
    assert factor_small_primes(-46) == ({2: 1}, 23)
    with pytest.raises(ValueError):
        factor_small_primes(0)


def test_rank_mod_p():
    assert rank_mod_p([[1, 2], [2, 4]]) == 1
    assert rank_mod_p([[1, 0, 0], [0, 0, 1]]) == 2
    assert rank_mod_p([[0, 0], [0, 0]]) == 0


def test_stabilizer_certificate_examples():
    assert not finite_stabilizer_certificate(rank_one(E1, E1, E1))
    assert not finite_stabilizer_certificate(rank_one(E1, E1, E1), exact=True)


@pytest.mark.parametrize("m", range(2, 16))
def test_axis_j1_is_singular(m):
    # the first slice of the axis core only holds c_111, so column (m, m)
    # of J1 vanishes and the criterion is inconclusive
    J = np.array(jacobian_j1_exact(core_axis_exact(m)), dtype=object)
    assert all(x == 0 for x in J[:, m * m - 1])
    assert not finite_stabilizer_certificate(core_axis_exact(m), exact=True)
    assert not finite_stabilizer_certificate(core_axis(m))


@pytest.mark.parametrize("m", range(2, 6))
def test_stabilizer_certificate_mono_numeric(m):
    # sigma_min / sigma_max of the float J1 drops below 1e-10 from m = 6 on
    assert finite_stabilizer_certificate(core_mono(m))


@pytest.mark.slow
@pytest.mark.parametrize("m", range(2, 31))
def test_stabilizer_certificate_mono_exact(m):
    assert finite_stabilizer_certificate(core_mono_exact(m), exact=True)


@pytest.mark.parametrize("m", [2, 5, 10])
def test_stabilizer_certificate_mono_exact_fast(m):
    assert finite_stabilizer_certificate(core_mono_exact(m), exact=True)


@pytest.mark.parametrize("m", range(2, 26))
def test_axis_upper_bound(m):
    rep = kappa_bounds(core_axis(m))
    assert rep.sigma_flat[1] >= 1 / 6 - 1e-12
    assert rep.upper_bound <= 6 * frobenius(core_axis(m)) * (1 + 1e-10)
    assert rep.lower_bound <= rep.upper_bound


def test_bounds_ordering_and_scale():
    r = np.random.default_rng(0)
    for C in (core_mono(5), core_axis(4), r.standard_normal((4, 4, 4))):
        rep = kappa_bounds(C)
        assert rep.lower_bound <= rep.upper_bound
        # powers of two scale every floating-point operation exactly
        for c in (2.0**-10, 8.0):
            scaled = kappa_bounds(c * C)
            assert scaled.upper_bound == rep.upper_bound
            assert scaled.lower_bound == rep.lower_bound
        scaled = kappa_bounds(7.3 * C)
        assert scaled.upper_bound == pytest.approx(rep.upper_bound, rel=1e-9)


def test_bounds_infinite_for_degenerate():
    rep = kappa_bounds(rank_one(E1, E1, E1))
    assert math.isinf(rep.upper_bound) and math.isinf(rep.lower_bound)


def test_bounds_report_serialization():
    rep = kappa_bounds(core_axis(3))
    assert len(rep.csv_row()) == 8
    assert rep.to_json()["m"] == 3


def test_kappa_xc_upper():
    C = core_axis(3)
    assert kappa_xc_upper(np.eye(3), C) == pytest.approx(27 * kappa_bounds(C).upper_bound)
    X = np.random.default_rng(2).standard_normal((5, 3))
    base = kappa_xc_upper(X, C)
    assert np.isfinite(base)
    Y = X.copy()
    Y[:, 0] *= 100
    assert kappa_xc_upper(Y, C) > base
    with pytest.raises(ValueError):
        kappa_xc_upper(np.ones((3, 3)), C)
    with pytest.raises(DimensionError):
        kappa_xc_upper(np.eye(2), C)
