import math

import numpy as np
import pytest

from moduliflow import initial
from moduliflow import tensor_field as tf
from moduliflow.flow import AmbientModel, FlowCoefficients, Schedule
from moduliflow.geometry import make_grid
from moduliflow.stability import (
    coercivity_constant,
    fit_decay_rate,
    linearize,
    perturbation_experiment,
    predicted_decay_rate,
    sym_basis,
)
from moduliflow.tensor_field import SymTensorField, rotation

FLAT = AmbientModel()
ZERO = FlowCoefficients.zero()
GRID1 = make_grid(1, 64, 2 * math.pi)
GRID2 = make_grid(2, 16, 2 * math.pi)


def test_basis_is_orthonormal():
    B = sym_basis(2)
    gram = np.array([[np.sum(a * b) for b in B] for a in B])
    assert np.allclose(gram, np.eye(3))


def test_symbol_at_zero_background_is_pure_bilaplacian():
    lin = linearize(np.zeros((2, 2)), FLAT, FlowCoefficients(), GRID2)
    for q, S in zip(lin.ksq, lin.symbols):
        assert np.allclose(S, -(q**2) * np.eye(3), atol=1e-12)


def test_scalar_symbol_oracle():
    a = 0.3
    t = FlowCoefficients(0.7, 1.3, 0.0, 0.9, 0.0)
    lin = linearize([[a]], FLAT, t, GRID1)
    for k in (1.0, 2.0, 5.0):
        expected = -(k**4) + t.theta1 * (-(k**2)) * 2 * a + t.theta2 * a**2 * (-(k**2)) + t.theta4 * 4 * a**3
        assert lin.symbol(k**2)[0, 0] == pytest.approx(expected, rel=1e-12)
    with pytest.raises(KeyError):
        lin.symbol(2.5)


def test_high_modes_follow_principal_part():
    M = np.array([[0.2, 0.1], [0.1, -0.3]])
    lin = linearize(M, AmbientModel(c=-1.0), FlowCoefficients(), make_grid(2, 64, 2 * math.pi))
    S = lin.symbols[-1] / lin.ksq[-1] ** 2
    assert np.allclose(S, -np.eye(3), atol=5e-3)


def test_linearization_matches_finite_difference_of_rhs():
    from moduliflow.flow import assemble_rhs

    M = np.array([[0.2, 0.1], [0.1, -0.3]])
    ambient, coeffs = AmbientModel(c=-1.0, trace_adjusted=True), FlowCoefficients()
    lin = linearize(M, ambient, coeffs, GRID2)
    X, Y = GRID2.coordinates()
    phase = np.cos(X + 2 * Y)  # |k|^2 = 5
    P = np.array([[0.3, -0.5], [-0.5, 0.8]])
    base = SymTensorField.constant(GRID2, M)
    pert = SymTensorField.from_matrices(GRID2, phase[..., None, None] * P)
    eps = 1e-6
    d = (assemble_rhs(base + eps * pert, ambient, coeffs) - assemble_rhs(base - eps * pert, ambient, coeffs)) * (0.5 / eps)
    coords = np.array([np.sum(P * e) for e in sym_basis(2)])
    image = sum(c * e for c, e in zip(lin.symbol(5.0) @ coords, sym_basis(2)))
    expected = SymTensorField.from_matrices(GRID2, phase[..., None, None] * image)
    assert np.max(np.abs(d.data - expected.data)) < 1e-6


def test_predicted_rates():
    assert predicted_decay_rate(linearize([[0.0]], FLAT, ZERO, GRID1)) == pytest.approx(2.0, rel=1e-14)
    assert predicted_decay_rate(linearize(np.zeros((2, 2)), FLAT, ZERO, GRID2)) == pytest.approx(2.0, rel=1e-14)
    lin = linearize(np.zeros((2, 2)), FLAT, FlowCoefficients(theta4=1.0), GRID2)
    assert predicted_decay_rate(lin, exclude_zero_mode=False) == 0.0


def test_fit_examples():
    t = np.linspace(0, 3, 100)
    beta, r2 = fit_decay_rate(t, np.exp(-2 * t))
    assert beta == pytest.approx(2.0, abs=1e-10) and r2 == pytest.approx(1.0, abs=1e-10)
    beta, _ = fit_decay_rate(t, 5 * np.exp(-3 * t))
    assert beta == pytest.approx(3.0, abs=1e-10)
    E = np.exp(-t)
    E[4] = 0.0
    with pytest.raises(ValueError):
        fit_decay_rate(t, E)
    with pytest.raises(ValueError):
        fit_decay_rate(t[:9], np.exp(-t[:9]))


def test_linear_experiment_recovers_rate():
    (x,) = GRID1.coordinates()
    P0 = SymTensorField(GRID1, np.cos(x)[None])
    report = perturbation_experiment([[0.0]], P0, 1e-3, FLAT, ZERO, t_end=5.0)
    assert report.beta_fitted == pytest.approx(2.0, rel=1e-6)
    assert report.beta_predicted == 2.0
    assert report.stable and report.samples >= 10
    assert set(report.as_dict()) >= {"beta_fitted", "beta_predicted", "fit_r2", "window"}


def test_experiment_errors():
    (x,) = GRID1.coordinates()
    P0 = SymTensorField(GRID1, np.cos(x)[None])
    with pytest.raises(ValueError, match="zero perturbation"):
        perturbation_experiment([[0.0]], P0, 0.0, FLAT, ZERO, t_end=1.0)
    with pytest.raises(ValueError, match="mean-free"):
        perturbation_experiment([[0.0]], P0 + SymTensorField.constant(GRID1, [[1.0]]), 1e-3, FLAT, ZERO, t_end=1.0)
    with pytest.raises(ValueError, match="linear-regime"):
        perturbation_experiment([[0.0]], P0, 0.5, FLAT, ZERO, t_end=1.0)


def test_decay_rate_is_gauge_covariant():
    M = np.array([[0.05, 0.02], [0.02, -0.03]])
    P0 = initial.single_mode(GRID2, (1, 0), (0, 1), 1.0)
    ambient, coeffs = AmbientModel(c=-1.0), FlowCoefficients()
    sched = Schedule(t_end=2.0)
    R = rotation(0.6)
    a = perturbation_experiment(M, P0, 1e-3, ambient, coeffs, 2.0, schedule=sched)
    b = perturbation_experiment(R.R.T @ M @ R.R, tf.conjugate(P0, R), 1e-3, ambient, coeffs, 2.0, schedule=sched)
    assert b.beta_fitted == pytest.approx(a.beta_fitted, rel=1e-8)


@pytest.mark.parametrize("L", [2 * math.pi, 4 * math.pi, 3.0])
def test_coercivity_constant(L):
    for m in (1, 2):
        grid = make_grid(m, 8, L)
        assert coercivity_constant(grid) == pytest.approx((2 * math.pi / L) ** 4, rel=1e-10)
