"""Acceptance criteria, each at its stated tolerance.

Every test appends one ``PASS``/``FAIL`` line that pytest prints in an
"acceptance criteria" section at the end of the run. Runtime budgets are
checked as part of each verdict.
"""

import math
import time

import numpy as np
import pytest

from moduliflow import initial
from moduliflow import tensor_field as tf
from moduliflow.config import parse_config
from moduliflow.entropy import monitor_entropy, zero_field_entropy
from moduliflow.experiments import run_experiment
from moduliflow.flow import AmbientModel, FlowCoefficients, FlowState, Schedule, run_flow
from moduliflow.functionals import gradient_fd_check, moduli_energy
from moduliflow.geometry import make_grid
from moduliflow.io import checkpoint_write, load_checkpoint
from moduliflow.stability import coercivity_constant, perturbation_experiment
from moduliflow.tensor_field import GaugeRotation, SymTensorField
from moduliflow.willmore import compare_profiles, scalar_baseline_step, willmore_energy

from conftest import ACCEPTANCE_LINES

pytestmark = pytest.mark.acceptance

TWO_PI = 2.0 * math.pi
DEFAULT = FlowCoefficients()
ZERO = FlowCoefficients.zero()


def verdict(tag: str, ok: bool, detail: str, started: float, budget: float):
    elapsed = time.perf_counter() - started
    in_time = elapsed < budget
    ok = ok and in_time
    line = f"{'PASS' if ok else 'FAIL'} criterion {tag}: {detail} [{elapsed:.2f}s / budget {budget:g}s]"
    ACCEPTANCE_LINES.append(line)
    print(line)
    assert ok, line


def small_data_setup(i: int):
    """Run ``i`` of the 10-run monotonicity family: c and trace_adjusted alternate."""
    grid = make_grid(2, 32, TWO_PI)
    c = 0.0 if i % 2 == 0 else -1.0
    ambient = AmbientModel(c=c, trace_adjusted=(i // 2) % 2 == 1)
    A0 = initial.random_smooth(grid, seed=i, amplitude=0.1)
    return A0, ambient


@pytest.fixture(scope="module")
def short_runs():
    started = time.perf_counter()
    runs = []
    for i in range(10):
        A0, ambient = small_data_setup(i)
        runs.append((ambient, run_flow(A0, ambient, DEFAULT, Schedule(t_end=1.0), keep_states=True)))
    return runs, time.perf_counter() - started


def test_criterion_1_linear_sector_oracle():
    started = time.perf_counter()
    grid = make_grid(1, 64, TWO_PI)
    (x,) = grid.coordinates()
    errors = {}
    for k in range(1, 9):
        A0 = SymTensorField(grid, np.cos(k * x)[None])
        run = run_flow(A0, AmbientModel(), ZERO, Schedule(t_end=0.1))
        exact = SymTensorField(grid, math.exp(-(k**4) * 0.1) * np.cos(k * x)[None])
        errors[k] = tf.l2_norm(run.final.A - exact) / tf.l2_norm(exact)
    failing = [k for k, e in errors.items() if not e <= 1e-10]
    listing = ", ".join(f"k={k}: {e:.1e}" for k, e in errors.items())
    verdict("1", not failing, f"relative L2 errors {listing} (tol 1e-10; failing k {failing})", started, 1.0)


def test_criterion_2_gradient_structure():
    started = time.perf_counter()
    grid = make_grid(2, 32, TWO_PI)
    worst, flagged = 0.0, True
    for i in range(20):
        A = initial.random_smooth(grid, 2 * i, amplitude=1.0)
        B = initial.random_smooth(grid, 2 * i + 1, amplitude=1.0)
        check = gradient_fd_check(A, B, [1e-5])
        worst = max(worst, check.max_rel_error)
        flagged = flagged and check.roundoff_dominated
    ok = worst <= 1e-6 and flagged
    verdict("2", ok, f"max relative error {worst:.3e} (tol 1e-6), roundoff flagged on all 20: {flagged}", started, 5.0)


def test_criterion_3_lyapunov_monotonicity(short_runs):
    started = time.perf_counter()
    runs, setup_time = short_runs
    worst_excess, late_rejections = -math.inf, []
    for _, run in runs:
        F = np.array([moduli_energy(s.A) for s in run.states])
        excess = np.diff(F) - 1e-12 * (1 + F[0])
        worst_excess = max(worst_excess, float(excess.max()))
        late_rejections += [s for s in run.rejected_steps if s > 5]
    ok = worst_excess <= 0 and not late_rejections
    detail = f"10 runs, max F increase minus allowance {worst_excess:.3e} (must be <= 0), late rejections {late_rejections}"
    verdict("3", ok, detail, started - setup_time, 60.0)


def test_criterion_4_global_run_converges():
    started = time.perf_counter()
    worst = 0.0
    for i in range(10):
        A0, ambient = small_data_setup(i)
        run = run_flow(A0, ambient, DEFAULT, Schedule(t_end=25.0), keep_states=False)
        assert run.final.t == pytest.approx(25.0, abs=1e-9)
        worst = max(worst, tf.gradient_l2_norm(run.final.A))
    verdict("4", worst <= 1e-8, f"10 runs to t=25 without dt underflow, max final gradient norm {worst:.3e} (tol 1e-8)", started, 120.0)


def test_criterion_5a_linear_decay_rate():
    started = time.perf_counter()
    grid = make_grid(1, 64, TWO_PI)
    P0 = initial.single_mode(grid, 1)
    report = perturbation_experiment([[0.0]], P0, 1e-3, AmbientModel(), ZERO, t_end=5.0)
    err = abs(report.beta_fitted - 2.0) / 2.0
    verdict("5a", err <= 1e-6, f"beta_fitted {report.beta_fitted:.15g} vs 2 (relative error {err:.2e}, tol 1e-6)", started, 30.0)


def test_criterion_5b_nonlinear_decay_rate():
    started = time.perf_counter()
    grid = make_grid(2, 32, TWO_PI)
    P0 = initial.single_mode(grid, (1, 0), (0, 0))
    report = perturbation_experiment(np.zeros((2, 2)), P0, 1e-3, AmbientModel(c=-1.0), DEFAULT, t_end=2.0)
    err = report.relative_error
    ok = err <= 0.1 and report.fit_r2 >= 0.999
    detail = (
        f"beta_fitted {report.beta_fitted:.6g} vs predicted {report.beta_predicted:.6g} "
        f"(relative error {err:.3e}, tol 0.1), r^2 {report.fit_r2:.6f} (>= 0.999)"
    )
    verdict("5b", ok, detail, started, 30.0)


def test_criterion_6_coercivity_constant():
    started = time.perf_counter()
    worst = 0.0
    for m, n, L in ((1, 64, TWO_PI), (2, 16, TWO_PI), (2, 16, 3.0), (1, 32, 5.0)):
        grid = make_grid(m, n, L)
        expected = (TWO_PI / L) ** 4
        worst = max(worst, abs(coercivity_constant(grid) - expected) / expected)
    verdict("6", worst <= 1e-10, f"max relative deviation from k_min^4 {worst:.3e} (tol 1e-10)", started, 1.0)


def _entropy_monitors(runs):
    return [monitor_entropy(run.states, T=2.0) for _, run in runs]


@pytest.fixture(scope="module")
def entropy_monitors(short_runs):
    runs, _ = short_runs
    started = time.perf_counter()
    return _entropy_monitors(runs), time.perf_counter() - started


def test_criterion_7a_weight_normalization(entropy_monitors):
    started = time.perf_counter()
    monitors, cost = entropy_monitors
    worst = max(mon.max_mass_error for mon in monitors)
    verdict("7a", worst <= 1e-9, f"max |int u - 1| over all steps {worst:.3e} (tol 1e-9)", started - cost, 60.0)


def test_criterion_7b_entropy_monotone(entropy_monitors):
    started = time.perf_counter()
    monitors, cost = entropy_monitors
    increases = [mon.max_increase for mon in monitors]
    ok = all(mon.monotone for mon in monitors)
    detail = f"W(t_j+1) <= W(t_j) + 1e-8 under the diffusive sign: largest per-step increase {max(increases):.3e}"
    verdict("7b", ok, detail, started - cost, 60.0)


def test_criterion_7c_zero_field_closed_form(short_runs):
    started = time.perf_counter()
    runs, _ = short_runs
    worst = 0.0
    for _, run in runs:
        grid = run.final.A.grid
        zero_traj = [FlowState(SymTensorField.zeros(grid), t=s.t) for s in run.states]
        mon = monitor_entropy(zero_traj, T=2.0)
        closed = np.array([zero_field_entropy(grid, 2.0 - t) for t in mon.times])
        worst = max(worst, float(np.max(np.abs(np.array(mon.values) - closed))))
    verdict("7c", worst <= 1e-10, f"max deviation from log(vol/(4 pi eta)^(m/2)) {worst:.3e} (tol 1e-10)", started, 60.0)


def test_criterion_8_gauge_equivariance():
    started = time.perf_counter()
    grid = make_grid(2, 32, TWO_PI)
    ambient = AmbientModel(c=-1.0)
    A0 = initial.random_smooth(grid, seed=42, amplitude=0.1)
    sched = Schedule(t_end=0.5)
    base = run_flow(A0, ambient, DEFAULT, sched, keep_states=True)
    W_base = monitor_entropy(base.states, T=1.0).values
    rng = np.random.Generator(np.random.Philox(key=8))
    worst_d = worst_F = worst_W = 0.0
    for i in range(5):
        q, r = np.linalg.qr(rng.standard_normal((2, 2)))
        R = GaugeRotation(q * np.sign(np.diag(r)))
        other = run_flow(tf.conjugate(A0, R), ambient, DEFAULT, sched, keep_states=True)
        worst_d = max(worst_d, tf.moduli_distance(tf.conjugate(base.final.A, R), other.final.A))
        worst_F = max(worst_F, abs(moduli_energy(base.final.A) - moduli_energy(other.final.A)))
        W_other = monitor_entropy(other.states, T=1.0).values
        worst_W = max(worst_W, abs(W_base[-1] - W_other[-1]))
    ok = worst_d <= 1e-10 and worst_F <= 1e-10 and worst_W <= 1e-10
    detail = f"5 rotations: moduli distance {worst_d:.2e}, |dF| {worst_F:.2e}, |dW| {worst_W:.2e} (tol 1e-10 each)"
    verdict("8", ok, detail, started, 30.0)


def test_criterion_9_willmore_baseline():
    started = time.perf_counter()
    grid = make_grid(2, 16, TWO_PI)
    A = initial.random_smooth(grid, seed=9, amplitude=1.0) + SymTensorField.constant(grid, 0.3 * np.eye(2))
    H0 = tf.trace(A)
    dt, trace_err = 1e-4, 0.0
    for step in range(1, 10001):
        A = scalar_baseline_step(A, dt)
        trace_err = max(trace_err, float(np.max(np.abs(tf.trace(A) - H0 * math.exp(-2 * grid.m * step * dt)))))

    line = make_grid(1, 64, TWO_PI)
    (x,) = line.coordinates()
    run = run_flow(SymTensorField(line, np.cos(x)[None]), AmbientModel(), ZERO, Schedule(t_end=1.0), keep_states=True)
    comp = compare_profiles(run.states)
    F_err = float(np.max(np.abs(comp.F - 0.5 * math.pi * np.exp(-2 * comp.t))))
    W_err = float(np.max(np.abs(comp.willmore - math.pi * np.exp(-2 * comp.t))))
    assert willmore_energy(run.states[0].A) == pytest.approx(math.pi, rel=1e-12)
    ok = trace_err <= 1e-8 and F_err <= 1e-8 and W_err <= 1e-8
    detail = f"trace decay error {trace_err:.2e}, F profile error {F_err:.2e}, Willmore profile error {W_err:.2e} (tol 1e-8 each)"
    verdict("9", ok, detail, started, 10.0)


CONFIG_10 = """
kind = {kind}
seed = 11
[grid]
m = 2
n = 16
[ambient]
c = -1
trace_adjusted = true
[schedule]
t_end = {t_end}
[entropy]
T = 2
[initial]
preset = random-smooth
"""


def test_criterion_10_infrastructure(tmp_path):
    started = time.perf_counter()
    grid = make_grid(2, 16, TWO_PI)
    ambient = AmbientModel(c=-1.0, trace_adjusted=True)

    # bit-exact checkpoint round trip, controller included
    A0 = initial.random_smooth(grid, seed=11, amplitude=0.1)
    full = run_flow(A0, ambient, DEFAULT, Schedule(t_end=0.5), keep_states=True)
    mid = full.states[37]
    first = run_flow(A0, ambient, DEFAULT, Schedule(t_end=mid.t))
    path = checkpoint_write(first.final, tmp_path / "mid.ck", controller=first.controller)
    ck = load_checkpoint(path)
    round_trip = (
        np.array_equal(ck.state.A.data, first.final.A.data)
        and (ck.state.t, ck.state.step, ck.state.dt_last) == (first.final.t, first.final.step, first.final.dt_last)
        and ck.controller == first.controller
    )

    # resume equivalence on every diagnostic
    resumed = run_flow(ck.state, ambient, DEFAULT, Schedule(t_end=0.5), controller=ck.controller)
    a, b = resumed.records[-1].as_dict(), full.records[-1].as_dict()
    resume_err = max(abs(a[k] - b[k]) for k in a if a[k] is not None)

    # byte-identical artifacts for identical (config, seed), two kinds
    identical = True
    for kind, t_end in (("flow", 0.2), ("entropy", 0.2)):
        cfg = parse_config(CONFIG_10.format(kind=kind, t_end=t_end))
        outs = []
        for rep in ("a", "b"):
            run_experiment(cfg, tmp_path / f"{kind}_{rep}")
            outs.append([(tmp_path / f"{kind}_{rep}" / f).read_bytes() for f in ("timeseries.csv", "summary.json")])
        identical = identical and outs[0] == outs[1]

    ok = round_trip and resume_err <= 1e-12 and identical
    detail = f"round trip bit-exact {round_trip}, resume max diagnostic deviation {resume_err:.2e} (tol 1e-12), byte-identical outputs {identical}"
    verdict("10", ok, detail, started, 5.0)
