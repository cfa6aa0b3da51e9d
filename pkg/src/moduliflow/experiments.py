"""Run configured experiments and write their artifacts.

Every kind writes ``summary.json``; kinds that integrate the flow also
write the diagnostics time series. Output is byte-identical for identical
configuration and seed.
"""

from __future__ import annotations

import json
import math
from dataclasses import replace
from pathlib import Path

import numpy as np

from . import initial as presets
from .config import ConfigError, ExperimentConfig
from .entropy import EntropyHorizonError, entropy_value, evolve_f, initial_entropy_state
from .flow import FlowState, detect_stationary, run_flow
from .functionals import gradient_fd_check
from .geometry import integrate
from .io import checkpoint_write, load_checkpoint, write_table, write_timeseries
from .stability import perturbation_experiment
from .tensor_field import SymTensorField
from .willmore import compare_profiles

__all__ = ["run_experiment", "initial_field", "STATIONARY_TOL"]

STATIONARY_TOL = 1e-8
RESUMABLE = ("flow", "entropy", "willmore-compare")


def _clean(value):
    """JSON-safe copy: numpy scalars to Python, non-finite floats to ``None``."""
    if isinstance(value, dict):
        return {str(k): _clean(v) for k, v in value.items()}
    if isinstance(value, (list, tuple)):
        return [_clean(v) for v in value]
    if isinstance(value, (bool, np.bool_)):
        return bool(value)
    if isinstance(value, (int, np.integer)):
        return int(value)
    if isinstance(value, (float, np.floating)):
        value = float(value)
        return value if math.isfinite(value) else None
    return value


def write_json(path, payload: dict) -> Path:
    path = Path(path)
    path.write_text(json.dumps(_clean(payload), sort_keys=True, indent=2, allow_nan=False) + "\n", encoding="utf-8")
    return path


def initial_field(config: ExperimentConfig) -> SymTensorField:
    spec, grid = config.initial, config.grid
    if spec.preset == "zero":
        return presets.zero(grid)
    if spec.preset == "single-mode":
        amp = 1.0 if spec.amplitude is None else spec.amplitude
        return presets.single_mode(grid, spec.k, spec.component, amp)
    if spec.preset == "random-smooth":
        amp = 0.1 if spec.amplitude is None else spec.amplitude
        seed = config.seed if spec.seed is None else spec.seed
        return presets.random_smooth(grid, seed, spec.cutoff, amp)
    return presets.constant(grid, spec.entries)


def _final_norms(record) -> dict:
    keys = ("grad_A_l2", "lap_A_l2", "A_l2", "A_sup", "mean_trace", "eig_min", "eig_max")
    return {k: getattr(record, k) for k in keys}


def _monotone(values, tol) -> tuple[bool, float]:
    diffs = np.diff(np.asarray(values, dtype=float))
    worst = float(diffs.max()) if diffs.size else 0.0
    return bool(worst <= tol), worst


def _header(config: ExperimentConfig, kind: str) -> dict:
    g = config.grid
    return {"kind": kind, "seed": config.seed, "grid": {"m": g.m, "n": g.n, "L": g.L}}


def _start(config: ExperimentConfig, resume):
    """Initial state, controller and stored entropy data (when resuming)."""
    if resume is None:
        return FlowState(A=initial_field(config)), None, None
    ck = load_checkpoint(resume)
    g, cg = config.grid, ck.state.A.grid
    if (g.m, g.n) != (cg.m, cg.n) or g.L != cg.L:
        raise ConfigError(f"checkpoint grid (m={cg.m}, n={cg.n}, L={cg.L}) does not match the configuration")
    if ck.state.t >= config.schedule.t_end:
        raise ConfigError(f"checkpoint time {ck.state.t!r} is not before t_end = {config.schedule.t_end!r}")
    return ck.state, ck.controller, ck


def _flow_like(config: ExperimentConfig, out: Path, kind: str, checkpoint, resume) -> dict:
    state, controller, ck = _start(config, resume)
    schedule = config.schedule
    ent = None
    W_at = {}
    if kind == "entropy":
        T = config.entropy.T
        if ck is not None:
            if ck.entropy_f is None:
                raise ConfigError("checkpoint has no entropy weight; cannot resume an entropy run")
            if ck.entropy_T != T:
                raise ConfigError(f"checkpoint terminal time {ck.entropy_T!r} differs from T = {T!r}")
            ent = initial_entropy_state(config.grid, T, t=state.t, f=ck.entropy_f)
            ent = replace(ent, shift=ck.entropy_shift)
        else:
            ent = initial_entropy_state(config.grid, T, t=state.t)
        masses = [integrate(ent.u, ent.grid)]
        W_at[state.step] = entropy_value(state.A, ent)
        holder = {"ent": ent}

        def on_step(prev: FlowState, new: FlowState):
            e = evolve_f(holder["ent"], prev.A, new.t - prev.t, config.entropy.adjoint_sign)
            holder["ent"] = e
            masses.append(integrate(e.u, e.grid))
            W_at[new.step] = entropy_value(new.A, e)

        callback = on_step
    else:
        callback = None

    keep = kind == "willmore-compare"
    run = run_flow(state, config.ambient, config.coeffs, schedule, controller=controller, keep_states=keep, callback=callback)

    records = run.records
    if kind == "entropy":
        # records carry t only; rebuild the step index they were taken at
        steps = _record_steps(run, state.step, schedule.diag_every)
        records = [replace(r, W=W_at[s]) for r, s in zip(records, steps)]
    write_timeseries(records, out / config.output["csv"])

    F = [r.F for r in records]
    tol = schedule.energy_tol * (1.0 + run.controller.f_ref)
    F_mono, F_worst = _monotone(F, tol)
    summary = _header(config, kind)
    summary.update(
        {
            "status": "ok",
            "t_start": state.t,
            "t_final": run.final.t,
            "steps": run.final.step - state.step,
            "rejections": len(run.rejected_steps),
            "rejected_steps": run.rejected_steps,
            "F_initial": F[0],
            "F_final": F[-1],
            "F_monotone": F_mono,
            "F_max_increase": F_worst,
            "final": _final_norms(records[-1]),
            "stationary": detect_stationary(run.final, config.ambient, config.coeffs, STATIONARY_TOL),
        }
    )
    if kind == "entropy":
        Ws = [W_at[k] for k in sorted(W_at)]
        W_mono, W_worst = _monotone(Ws, config.entropy.tol_W)
        summary["entropy"] = {
            "T": config.entropy.T,
            "adjoint_sign": config.entropy.adjoint_sign,
            "W_initial": Ws[0],
            "W_final": Ws[-1],
            "W_monotone": W_mono,
            "W_max_increase": W_worst,
            "max_mass_error": max(abs(m - 1.0) for m in masses),
            "f_shift": holder["ent"].shift,
        }
        ent = holder["ent"]
    if kind == "willmore-compare":
        comp = compare_profiles(run.states)
        write_table(out / "willmore.csv", ("t", "F", "willmore"), comp.rows())
        summary["willmore"] = comp.summary()
    if checkpoint is not None:
        checkpoint_write(run.final, checkpoint, controller=run.controller, entropy=ent)
    return summary


def _record_steps(run, start_step: int, every: int) -> list[int]:
    steps = [start_step]
    last = run.final.step
    steps.extend(s for s in range(start_step + 1, last + 1) if s % every == 0)
    if steps[-1] != last:
        steps.append(last)
    if len(steps) != len(run.records):
        raise RuntimeError("diagnostics records out of step with the accepted steps")
    return steps


def _stability(config: ExperimentConfig, out: Path) -> dict:
    spec, grid = config.stability, config.grid
    if not any(spec.mode):
        raise ConfigError("stability mode must be nonzero (the perturbation must be mean-free)", key="mode")
    A_inf = np.zeros((grid.m, grid.m))
    if spec.a_inf is not None:
        A_inf = presets.constant(grid, spec.a_inf).matrices()[(0,) * grid.m]
    P0 = presets.single_mode(grid, spec.mode, spec.component, 1.0)
    report = perturbation_experiment(
        A_inf, P0, spec.amplitude, config.ambient, config.coeffs, config.schedule.t_end, schedule=config.schedule
    )
    write_timeseries(report.run.records, out / config.output["csv"])
    write_table(out / "decay.csv", ("t", "E"), zip(report.times.tolist(), report.energies.tolist()))
    summary = _header(config, "stability")
    summary.update(
        {
            "status": "ok",
            "A_inf": A_inf.tolist(),
            "mode": list(spec.mode),
            "component": list(spec.component),
            "decay": report.as_dict(),
            "relative_error": report.relative_error,
            "final": _final_norms(report.run.records[-1]),
        }
    )
    return summary


def _gradcheck(config: ExperimentConfig, out: Path) -> dict:
    spec, grid = config.gradcheck, config.grid
    rows, pairs = [], []
    for i in range(spec.pairs):
        # distinct Philox keys per draw, derived from the run seed
        A = presets.random_smooth(grid, config.seed * 2**32 + 2 * i, spec.cutoff, spec.amplitude)
        B = presets.random_smooth(grid, config.seed * 2**32 + 2 * i + 1, spec.cutoff, spec.amplitude)
        check = gradient_fd_check(A, B, spec.eps)
        rows.extend((i, e, r) for e, r in zip(check.eps, check.rel_errors))
        pairs.append(
            {
                "pair": i,
                "directional": check.directional,
                "max_rel_error": check.max_rel_error,
                "order": check.order,
                "roundoff_dominated": check.roundoff_dominated,
            }
        )
    write_table(out / "gradcheck.csv", ("pair", "eps", "rel_error"), rows)
    summary = _header(config, "gradcheck")
    summary.update(
        {
            "status": "ok",
            "eps": list(spec.eps),
            "max_rel_error": max(p["max_rel_error"] for p in pairs),
            "all_roundoff_dominated": all(p["roundoff_dominated"] for p in pairs),
            "pairs": pairs,
        }
    )
    return summary


def run_experiment(config: ExperimentConfig, out_dir=".", kind: str | None = None, checkpoint=None, resume=None) -> dict:
    """Run ``config`` and write its artifacts into ``out_dir``; returns the summary.

    ``kind`` overrides (and must agree with) the kind named in the config.
    ``checkpoint`` receives the final state; ``resume`` restarts from one.
    """
    kind = kind or config.kind
    if kind is None:
        raise ConfigError("experiment kind not given", key="kind")
    if config.kind is not None and config.kind != kind:
        raise ConfigError(f"config declares kind {config.kind!r} but {kind!r} was requested", key="kind")
    if kind == "entropy" and config.entropy.T <= config.schedule.t_end:
        raise ConfigError("T must exceed t_end for entropy runs", key="T")
    if (checkpoint is not None or resume is not None) and kind not in RESUMABLE:
        raise ConfigError(f"checkpointing is only supported for {', '.join(RESUMABLE)} runs")
    out = Path(out_dir)
    out.mkdir(parents=True, exist_ok=True)
    if kind in RESUMABLE:
        try:
            summary = _flow_like(config, out, kind, checkpoint, resume)
        except EntropyHorizonError as exc:
            raise ConfigError(str(exc), key="T") from None
    elif kind == "stability":
        summary = _stability(config, out)
    else:
        summary = _gradcheck(config, out)
    write_json(out / config.output["summary"], summary)
    return summary
