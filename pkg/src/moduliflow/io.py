"""Time-series CSV and plain-text checkpoints.

Checkpoint layout (one token group per line)::

    MFLOW1 m n L t step
    <component values>                # component-major, grid points in C order
    CONTROLLER dt streak f_ref rejections dt_last
    ENTROPY T shift                   # optional, followed by the f values

Components are the upper triangle in row-major order, so ``(00, 01, 11)``
for ``m = 2``. Floats are written with ``repr`` and read back bit-exactly.
"""

from __future__ import annotations

import csv
from dataclasses import dataclass
from pathlib import Path

import numpy as np

from .flow import FlowState, StepController
from .geometry import make_grid
from .tensor_field import SymTensorField, n_components

__all__ = [
    "CSV_HEADER",
    "Checkpoint",
    "CheckpointError",
    "write_timeseries",
    "write_table",
    "read_timeseries",
    "checkpoint_write",
    "checkpoint_read",
    "load_checkpoint",
]

CSV_HEADER = ("t", "F", "W", "grad_A_l2", "lap_A_l2", "A_l2", "A_sup", "mean_trace", "eig_min", "eig_max", "dt")
TAG = "MFLOW1"


class CheckpointError(ValueError):
    """Malformed checkpoint or unsupported format version."""


def _fmt(x) -> str:
    if x is None:
        return ""
    if isinstance(x, (int, np.integer)) and not isinstance(x, bool):
        return str(int(x))
    return repr(float(x))


def write_table(path, header, rows) -> Path:
    path = Path(path)
    with path.open("w", newline="", encoding="utf-8") as fh:
        writer = csv.writer(fh, lineterminator="\n")
        writer.writerow(header)
        for row in rows:
            writer.writerow([_fmt(v) for v in row])
    return path


def write_timeseries(records, path) -> Path:
    """Write diagnostics records under ``CSV_HEADER``; ``W`` is blank when unset."""
    records = list(records)
    if not records:
        raise ValueError("no diagnostics records to write")
    rows = (
        (r.t, r.F, r.W, r.grad_A_l2, r.lap_A_l2, r.A_l2, r.A_sup, r.mean_trace, r.eig_min, r.eig_max, r.dt_last)
        for r in records
    )
    return write_table(path, CSV_HEADER, rows)


def read_timeseries(path) -> dict[str, np.ndarray]:
    """Columns of a time-series CSV as float arrays (blank cells become ``nan``)."""
    with Path(path).open(newline="", encoding="utf-8") as fh:
        reader = csv.reader(fh)
        header = next(reader)
        rows = [[float(v) if v else np.nan for v in row] for row in reader]
    data = np.array(rows, dtype=float).reshape(len(rows), len(header))
    return {name: data[:, i] for i, name in enumerate(header)}


@dataclass(frozen=True)
class Checkpoint:
    state: FlowState
    controller: StepController | None = None
    entropy_T: float | None = None
    entropy_shift: float = 0.0
    entropy_f: np.ndarray | None = None


def checkpoint_write(
    state: FlowState,
    path,
    controller: StepController | None = None,
    entropy=None,
) -> Path:
    """Write ``state`` (plus optional controller and entropy weight) to ``path``.

    ``entropy`` is an object with ``f``, ``T`` and ``shift`` attributes.
    """
    grid = state.A.grid
    lines = [f"{TAG} {grid.m} {grid.n} {_fmt(grid.L)} {_fmt(state.t)} {state.step}"]
    lines.extend(_fmt(v) for v in state.A.data.ravel())
    if controller is not None:
        lines.append(
            f"CONTROLLER {_fmt(controller.dt)} {controller.streak} {_fmt(controller.f_ref)} "
            f"{controller.rejections} {_fmt(state.dt_last)}"
        )
    if entropy is not None:
        lines.append(f"ENTROPY {_fmt(entropy.T)} {_fmt(entropy.shift)}")
        lines.extend(_fmt(v) for v in np.asarray(entropy.f).ravel())
    path = Path(path)
    path.write_text("\n".join(lines) + "\n", encoding="utf-8")
    return path


def load_checkpoint(path) -> Checkpoint:
    """Read everything stored in a checkpoint."""
    lines = Path(path).read_text(encoding="utf-8").splitlines()
    if not lines:
        raise CheckpointError("empty checkpoint")
    head = lines[0].split()
    if not head or head[0] != TAG:
        raise CheckpointError(f"unsupported checkpoint version {head[0] if head else ''!r}; expected {TAG}")
    if len(head) != 6:
        raise CheckpointError("checkpoint header must be 'MFLOW1 m n L t step'")
    try:
        grid = make_grid(int(head[1]), int(head[2]), float(head[3]))
        t, step = float(head[4]), int(head[5])
        count = n_components(grid.m) * grid.n**grid.m
        body = lines[1 : 1 + count]
        if len(body) != count:
            raise CheckpointError(f"expected {count} field values, found {len(body)}")
        data = np.array([float(v) for v in body]).reshape((n_components(grid.m),) + grid.shape)
    except ValueError as exc:
        if isinstance(exc, CheckpointError):
            raise
        raise CheckpointError(f"malformed checkpoint: {exc}") from None

    controller, dt_last = None, 0.0
    entropy_T, shift, f = None, 0.0, None
    rest = lines[1 + count :]
    try:
        while rest:
            tokens = rest[0].split()
            if not tokens:
                rest = rest[1:]
            elif tokens[0] == "CONTROLLER":
                controller = StepController(
                    dt=float(tokens[1]), streak=int(tokens[2]), f_ref=float(tokens[3]), rejections=int(tokens[4])
                )
                dt_last = float(tokens[5])
                rest = rest[1:]
            elif tokens[0] == "ENTROPY":
                entropy_T, shift = float(tokens[1]), float(tokens[2])
                npts = grid.n**grid.m
                values = rest[1 : 1 + npts]
                if len(values) != npts:
                    raise CheckpointError(f"expected {npts} entropy weight values, found {len(values)}")
                f = np.array([float(v) for v in values]).reshape(grid.shape)
                rest = rest[1 + npts :]
            else:
                raise CheckpointError(f"unexpected checkpoint line {rest[0]!r}")
    except (IndexError, ValueError) as exc:
        if isinstance(exc, CheckpointError):
            raise
        raise CheckpointError(f"malformed checkpoint trailer: {exc}") from None

    state = FlowState(A=SymTensorField(grid, data), t=t, step=step, dt_last=dt_last)
    return Checkpoint(state=state, controller=controller, entropy_T=entropy_T, entropy_shift=shift, entropy_f=f)


def checkpoint_read(path) -> FlowState:
    return load_checkpoint(path).state
