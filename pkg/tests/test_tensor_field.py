import math

import numpy as np
import pytest
from hypothesis import given
from hypothesis import strategies as st

from moduliflow import initial
from moduliflow import tensor_field as tf
from moduliflow.geometry import make_grid
from moduliflow.tensor_field import GaugeRotation, SymTensorField, rotation

GRID2 = make_grid(2, 16, 2 * math.pi)
GRID1 = make_grid(1, 16, 2 * math.pi)

seeds = st.integers(0, 2**63 - 1)
angles = st.floats(0.0, 2 * math.pi, allow_nan=False)


def const(grid, M):
    return SymTensorField.constant(grid, M)


def cos_field(grid):
    (x,) = grid.coordinates()
    return SymTensorField(grid, np.cos(x)[None])


def test_storage_is_upper_triangle_and_read_only():
    A = const(GRID2, [[1.0, 2.0], [2.0, 3.0]])
    assert A.data.shape == (3, 16, 16)
    assert A.data[:, 0, 0].tolist() == [1.0, 2.0, 3.0]
    with pytest.raises(ValueError):
        A.data[0, 0, 0] = 5.0
    M = A.matrices()
    assert np.array_equal(M, np.swapaxes(M, -1, -2))


def test_non_finite_entries_rejected():
    data = np.zeros((3, 16, 16))
    data[1, 2, 3] = np.nan
    with pytest.raises(FloatingPointError):
        SymTensorField(GRID2, data)


def test_sym_product_examples():
    B = initial.random_smooth(GRID2, 4)
    Id = const(GRID2, np.eye(2))
    assert np.allclose(tf.sym_product(Id, B).data, B.data, atol=1e-15)
    D = const(GRID2, np.diag([1.0, 2.0]))
    assert np.allclose(tf.sym_product(D, D).data, const(GRID2, np.diag([1.0, 4.0])).data)
    P, Q = const(GRID2, np.diag([1.0, 0.0])), const(GRID2, np.diag([0.0, 1.0]))
    assert np.all(tf.sym_product(P, Q).data == 0)


def test_grid_mismatch():
    with pytest.raises(ValueError):
        tf.sym_product(SymTensorField.zeros(GRID2), SymTensorField.zeros(make_grid(2, 8, 1.0)))


def test_power_trace_identity():
    A = const(GRID2, np.diag([2.0, -1.0]))
    assert np.allclose(tf.matrix_power(A, 4).data, const(GRID2, np.diag([16.0, 1.0])).data)
    assert np.array_equal(tf.matrix_power(A, 1).data, A.data)
    assert np.all(tf.trace(const(GRID2, 3 * np.eye(2))) == 6.0)
    with pytest.raises(ValueError):
        tf.matrix_power(A, 0)
    s = np.linspace(0, 1, 256).reshape(16, 16)
    S = tf.identity_scale(s, GRID2)
    assert np.array_equal(tf.trace(S), 2 * s)


def test_conjugate_examples():
    A = const(GRID2, np.diag([1.0, 2.0]))
    assert np.array_equal(tf.conjugate(A, np.eye(2)).data, A.data)
    # hand computation: R = [[0,-1],[1,0]], R^T diag(1,2) R = diag(2,1)
    out = tf.conjugate(A, rotation(math.pi / 2))
    assert np.allclose(out.data, const(GRID2, np.diag([2.0, 1.0])).data, atol=1e-15)
    with pytest.raises(ValueError, match="orthogonal"):
        GaugeRotation(np.array([[1.0, 1.0], [0.0, 1.0]]))


def test_eigenvalues_match_numpy():
    A = initial.random_smooth(GRID2, 11, amplitude=2.0)
    ours = tf.eigenvalues(A)
    ref = np.moveaxis(np.linalg.eigvalsh(A.matrices()), -1, 0)
    assert np.allclose(ours, ref, atol=1e-13)


def test_moduli_distance_examples():
    A = initial.random_smooth(GRID2, 2)
    assert tf.moduli_distance(A, A) == 0.0
    assert tf.moduli_distance(A, tf.conjugate(A, rotation(0.7))) <= 1e-10
    g = make_grid(1, 64, 2 * math.pi)
    assert tf.moduli_distance(SymTensorField.zeros(g), cos_field(g)) == pytest.approx(math.sqrt(math.pi), rel=1e-12)


def test_norm_examples():
    g = make_grid(1, 64, 2 * math.pi)
    Z = SymTensorField.zeros(g)
    assert tf.l2_norm(Z) == tf.sup_norm(Z) == tf.gradient_l2_norm(Z) == 0.0
    A = cos_field(g)
    assert tf.l2_norm(A) == pytest.approx(math.sqrt(math.pi), rel=1e-12)
    assert tf.gradient_l2_norm(A) == pytest.approx(math.sqrt(math.pi), rel=1e-12)
    assert tf.gradient_l2_norm(const(GRID2, [[1.0, 0.5], [0.5, -2.0]])) < 1e-12


def test_gradient_pointwise_integrates_to_parseval_value():
    A = initial.random_smooth(GRID2, 5, amplitude=1.0)
    from moduliflow.geometry import integrate

    assert integrate(tf.gradient_sq_pointwise(A), GRID2) == pytest.approx(tf.gradient_sq_integral(A), rel=1e-10)


def test_sup_norm_is_frobenius_max():
    A = const(GRID2, [[3.0, 0.0], [0.0, 4.0]])
    assert tf.sup_norm(A) == pytest.approx(5.0)


@given(seed=seeds, angle=angles, reflect=st.booleans())
def test_gauge_invariance_of_norms(seed, angle, reflect):
    A = initial.random_smooth(GRID2, seed, amplitude=1.0)
    B = tf.conjugate(A, rotation(angle, reflect))
    for fn in (tf.l2_norm, tf.sup_norm, tf.gradient_l2_norm):
        assert fn(B) == pytest.approx(fn(A), rel=1e-10, abs=1e-14)
    assert np.allclose(tf.trace(B), tf.trace(A), atol=1e-12)
    assert np.allclose(tf.eigenvalues(B), tf.eigenvalues(A), atol=1e-12)


@given(s1=seeds, s2=seeds, s3=seeds)
def test_moduli_distance_pseudometric(s1, s2, s3):
    A, B, C = (initial.random_smooth(GRID2, s) for s in (s1, s2, s3))
    assert tf.moduli_distance(A, B) == pytest.approx(tf.moduli_distance(B, A), rel=1e-14)
    assert tf.moduli_distance(A, C) <= tf.moduli_distance(A, B) + tf.moduli_distance(B, C) + 1e-14


@given(s1=seeds, s2=seeds)
def test_trace_symmetry(s1, s2):
    A, B = initial.random_smooth(GRID2, s1), initial.random_smooth(GRID2, s2)
    assert np.allclose(tf.trace(tf.sym_product(A, B)), tf.trace(tf.sym_product(B, A)), atol=1e-15)


@given(seed=seeds)
def test_operations_stay_symmetric_and_finite(seed):
    A = initial.random_smooth(GRID2, seed, amplitude=1.0)
    for out in (tf.sym_product(A, A), tf.matrix_power(A, 3), tf.laplacian(A), A * 2.0 - A):
        M = out.matrices()
        assert np.array_equal(M, np.swapaxes(M, -1, -2))
        assert np.all(np.isfinite(out.data))


def test_one_dimensional_fields():
    A = cos_field(GRID1)
    assert np.allclose(tf.sym_product(A, A).data, A.data**2)
    assert np.allclose(tf.eigenvalues(A), A.data)
    assert np.allclose(tf.trace(A), A.data[0])
