"""Experiment configuration: ``key = value`` lines with ``[section]`` headers.

Keys before the first header belong to the top level (``kind``, ``seed``).
``#`` starts a comment. Unknown sections or keys are errors; omitted
optional keys take the defaults listed in ``SCHEMA``.
"""

from __future__ import annotations

import configparser
import math
from dataclasses import dataclass, field

from .entropy import ADJOINT_SIGNS
from .flow import AmbientModel, FlowCoefficients, Schedule
from .geometry import Grid, make_grid

__all__ = ["ConfigError", "ExperimentConfig", "parse_config", "load_config", "KINDS", "SCHEMA"]

KINDS = ("flow", "stability", "entropy", "gradcheck", "willmore-compare")
PRESETS = ("zero", "single-mode", "random-smooth", "constant")
TOP = "experiment"
REQUIRED = object()

SCHEMA: dict[str, dict[str, object]] = {
    TOP: {"kind": None, "seed": 0},
    "grid": {"m": REQUIRED, "n": REQUIRED, "L": 2.0 * math.pi},
    "ambient": {"c": 0.0, "Lambda": None, "trace_adjusted": False},
    "coefficients": {f"theta{i}": 1.0 for i in range(1, 6)},
    "schedule": {
        "t_end": REQUIRED,
        "dt_init": 1e-3,
        "dt_min": 1e-10,
        "dt_max": 0.05,
        "safety": 0.9,
        "diag_every": 1,
        "energy_tol": 1e-12,
        "enforce_monotone": True,
    },
    "entropy": {"T": None, "adjoint_sign": "diffusive", "tol_W": 1e-8},
    "stability": {"amplitude": 1e-3, "mode": "1", "component": "0,0", "a_inf": None},
    "initial": {
        "preset": "zero",
        "k": "1",
        "component": "0,0",
        "amplitude": None,
        "cutoff": 3.0,
        "seed": None,
        "entries": None,
    },
    "gradcheck": {"pairs": 20, "eps": "1e-3,1e-4,1e-5", "cutoff": 3.0, "amplitude": 1.0},
    "output": {"csv": "timeseries.csv", "summary": "summary.json"},
}


class ConfigError(ValueError):
    """Invalid configuration; ``line`` is set for syntax errors."""

    def __init__(self, message: str, line: int | None = None, key: str | None = None):
        if line is not None:
            message = f"line {line}: {message}"
        super().__init__(message)
        self.line = line
        self.key = key


@dataclass(frozen=True)
class InitialSpec:
    preset: str = "zero"
    k: tuple[int, ...] = (1,)
    component: tuple[int, int] = (0, 0)
    amplitude: float | None = None
    cutoff: float = 3.0
    seed: int | None = None
    entries: tuple[float, ...] | None = None


@dataclass(frozen=True)
class EntropySpec:
    T: float
    adjoint_sign: str = "diffusive"
    tol_W: float = 1e-8


@dataclass(frozen=True)
class StabilitySpec:
    amplitude: float = 1e-3
    mode: tuple[int, ...] = (1,)
    component: tuple[int, int] = (0, 0)
    a_inf: tuple[float, ...] | None = None


@dataclass(frozen=True)
class GradcheckSpec:
    pairs: int = 20
    eps: tuple[float, ...] = (1e-3, 1e-4, 1e-5)
    cutoff: float = 3.0
    amplitude: float = 1.0


@dataclass(frozen=True)
class ExperimentConfig:
    kind: str | None
    seed: int
    grid: Grid
    ambient: AmbientModel
    coeffs: FlowCoefficients
    schedule: Schedule
    entropy: EntropySpec
    stability: StabilitySpec
    initial: InitialSpec
    gradcheck: GradcheckSpec
    output: dict = field(default_factory=dict)


def _bool(key: str, raw: str) -> bool:
    low = raw.strip().lower()
    if low in ("1", "true", "yes", "on"):
        return True
    if low in ("0", "false", "no", "off"):
        return False
    raise ConfigError(f"{key} must be a boolean, got {raw!r}", key=key)


def _float(key: str, raw) -> float:
    try:
        value = float(raw)
    except (TypeError, ValueError):
        raise ConfigError(f"{key} must be a number, got {raw!r}", key=key) from None
    if not math.isfinite(value):
        raise ConfigError(f"{key} must be finite", key=key)
    return value


def _int(key: str, raw) -> int:
    if isinstance(raw, int):
        return raw
    try:
        return int(str(raw).strip())
    except ValueError:
        raise ConfigError(f"{key} must be an integer, got {raw!r}", key=key) from None


def _floats(key: str, raw) -> tuple[float, ...]:
    parts = [p for p in str(raw).replace(" ", ",").split(",") if p]
    if not parts:
        raise ConfigError(f"{key} must be a comma-separated list of numbers", key=key)
    return tuple(_float(key, p) for p in parts)


def _ints(key: str, raw) -> tuple[int, ...]:
    return tuple(_int(key, p) for p in [p for p in str(raw).replace(" ", ",").split(",") if p])


def _read(text: str) -> dict[str, dict[str, str]]:
    parser = configparser.ConfigParser(
        delimiters=("=",),
        comment_prefixes=("#",),
        inline_comment_prefixes=("#",),
        interpolation=None,
        default_section="__defaults__",
        empty_lines_in_values=False,
    )
    parser.optionxform = str
    try:
        # the implicit header shifts every reported line number by one
        parser.read_string(f"[{TOP}]\n" + text)
    except configparser.DuplicateSectionError as exc:
        raise ConfigError(f"duplicate section [{exc.section}]", line=(exc.lineno or 1) - 1) from None
    except configparser.DuplicateOptionError as exc:
        raise ConfigError(f"duplicate key {exc.option!r}", line=(exc.lineno or 1) - 1, key=exc.option) from None
    except configparser.ParsingError as exc:
        lineno, line = exc.errors[0]
        raise ConfigError(f"syntax error in {str(line).strip()}", line=lineno - 1) from None
    except configparser.Error as exc:
        raise ConfigError(f"syntax error: {exc}") from None
    raw: dict[str, dict[str, str]] = {}
    for section in parser.sections():
        if section not in SCHEMA:
            raise ConfigError(f"unknown section [{section}]", key=section)
        raw[section] = dict(parser.items(section))
        for key in raw[section]:
            if key not in SCHEMA[section]:
                where = "" if section == TOP else f" in [{section}]"
                raise ConfigError(f"unknown key {key!r}{where}", key=key)
    return raw


def parse_config(text: str) -> ExperimentConfig:
    """Parse and validate an experiment configuration."""
    raw = _read(text)

    def get(section, key):
        value = raw.get(section, {}).get(key, SCHEMA[section][key])
        if value is REQUIRED:
            raise ConfigError(f"missing required key {key!r} in [{section}]", key=key)
        return value

    kind = get(TOP, "kind")
    if kind is not None:
        kind = kind.strip()
        if kind not in KINDS:
            raise ConfigError(f"kind must be one of {', '.join(KINDS)}, got {kind!r}", key="kind")
    seed = _int("seed", get(TOP, "seed"))
    if not 0 <= seed < 2**64:
        raise ConfigError("seed must be a 64-bit unsigned integer", key="seed")

    m, n, L = _int("m", get("grid", "m")), _int("n", get("grid", "n")), _float("L", get("grid", "L"))
    try:
        grid = make_grid(m, n, L)
    except ValueError as exc:
        raise ConfigError(str(exc), key="grid") from None

    c = _float("c", get("ambient", "c"))
    if c > 0:
        raise ConfigError(f"c must be <= 0, got {c}", key="c")
    lam = get("ambient", "Lambda")
    lam = None if lam is None else _float("Lambda", lam)
    if lam is not None and lam < abs(c):
        raise ConfigError("Lambda must be >= |c|", key="Lambda")
    ambient = AmbientModel(c=c, Lambda=lam, trace_adjusted=_as_bool("trace_adjusted", get("ambient", "trace_adjusted")))

    coeffs = FlowCoefficients(*(_float(f"theta{i}", get("coefficients", f"theta{i}")) for i in range(1, 6)))

    sched = {key: get("schedule", key) for key in SCHEMA["schedule"]}
    t_end = _float("t_end", sched["t_end"])
    if t_end <= 0:
        raise ConfigError("t_end must be > 0", key="t_end")
    dt_init, dt_min, dt_max = (_float(k, sched[k]) for k in ("dt_init", "dt_min", "dt_max"))
    if not 0 < dt_min <= dt_init <= dt_max:
        raise ConfigError("need 0 < dt_min <= dt_init <= dt_max", key="dt_init")
    safety = _float("safety", sched["safety"])
    if not 0 < safety <= 1:
        raise ConfigError("safety must be in (0, 1]", key="safety")
    diag_every = _int("diag_every", sched["diag_every"])
    if diag_every < 1:
        raise ConfigError("diag_every must be >= 1", key="diag_every")
    energy_tol = _float("energy_tol", sched["energy_tol"])
    if energy_tol < 0:
        raise ConfigError("energy_tol must be >= 0", key="energy_tol")
    schedule = Schedule(
        t_end=t_end,
        dt_init=dt_init,
        dt_min=dt_min,
        dt_max=dt_max,
        safety=safety,
        diag_every=diag_every,
        energy_tol=energy_tol,
        enforce_monotone=_as_bool("enforce_monotone", sched["enforce_monotone"]),
    )

    T = get("entropy", "T")
    T = 2.0 * t_end if T is None else _float("T", T)
    if kind == "entropy" and T <= t_end:
        raise ConfigError(f"T must exceed t_end for entropy runs (T={T}, t_end={t_end})", key="T")
    sign = get("entropy", "adjoint_sign").strip()
    if sign not in ADJOINT_SIGNS:
        raise ConfigError(f"adjoint_sign must be one of {sorted(ADJOINT_SIGNS)}", key="adjoint_sign")
    tol_W = _float("tol_W", get("entropy", "tol_W"))
    if tol_W < 0:
        raise ConfigError("tol_W must be >= 0", key="tol_W")
    entropy = EntropySpec(T=T, adjoint_sign=sign, tol_W=tol_W)

    amp = _float("amplitude", get("stability", "amplitude"))
    if not 0 < abs(amp) <= 1e-2:
        raise ConfigError("stability amplitude must satisfy 0 < |amplitude| <= 1e-2", key="amplitude")
    a_inf = get("stability", "a_inf")
    stability = StabilitySpec(
        amplitude=amp,
        mode=_wave(grid, "mode", get("stability", "mode")),
        component=_component(grid, "component", get("stability", "component")),
        a_inf=None if a_inf is None else _entries(grid, "a_inf", a_inf),
    )

    preset = get("initial", "preset").strip()
    if preset not in PRESETS:
        raise ConfigError(f"preset must be one of {', '.join(PRESETS)}, got {preset!r}", key="preset")
    iamp = get("initial", "amplitude")
    iseed = get("initial", "seed")
    entries = get("initial", "entries")
    if preset == "constant" and entries is None:
        raise ConfigError("constant preset needs 'entries'", key="entries")
    cutoff = _float("cutoff", get("initial", "cutoff"))
    if cutoff < 1:
        raise ConfigError("cutoff must be >= 1", key="cutoff")
    init = InitialSpec(
        preset=preset,
        k=_wave(grid, "k", get("initial", "k")),
        component=_component(grid, "component", get("initial", "component")),
        amplitude=None if iamp is None else _float("amplitude", iamp),
        cutoff=cutoff,
        seed=None if iseed is None else _int("seed", iseed),
        entries=None if entries is None else _entries(grid, "entries", entries),
    )

    pairs = _int("pairs", get("gradcheck", "pairs"))
    if pairs < 1:
        raise ConfigError("pairs must be >= 1", key="pairs")
    eps = _floats("eps", get("gradcheck", "eps"))
    if any(e <= 0 for e in eps) or any(b >= a for a, b in zip(eps, eps[1:])):
        raise ConfigError("eps values must be positive and strictly decreasing", key="eps")
    gradcheck = GradcheckSpec(
        pairs=pairs,
        eps=eps,
        cutoff=_float("cutoff", get("gradcheck", "cutoff")),
        amplitude=_float("amplitude", get("gradcheck", "amplitude")),
    )

    output = {key: get("output", key).strip() for key in SCHEMA["output"]}
    return ExperimentConfig(
        kind=kind,
        seed=seed,
        grid=grid,
        ambient=ambient,
        coeffs=coeffs,
        schedule=schedule,
        entropy=entropy,
        stability=stability,
        initial=init,
        gradcheck=gradcheck,
        output=output,
    )


def _as_bool(key, value) -> bool:
    return value if isinstance(value, bool) else _bool(key, value)


def _wave(grid: Grid, key: str, raw) -> tuple[int, ...]:
    k = _ints(key, raw)
    if len(k) == 1:
        k = k + (0,) * (grid.m - 1)
    if len(k) != grid.m:
        raise ConfigError(f"{key} needs {grid.m} wave indices", key=key)
    if any(abs(j) >= grid.n // 2 for j in k):
        raise ConfigError(f"{key} must stay below the Nyquist index {grid.n // 2}", key=key)
    return k


def _component(grid: Grid, key: str, raw) -> tuple[int, int]:
    comp = _ints(key, raw)
    if len(comp) != 2 or not all(0 <= c < grid.m for c in comp):
        raise ConfigError(f"{key} must be 'i,j' with 0 <= i,j < {grid.m}", key=key)
    return comp


def _entries(grid: Grid, key: str, raw) -> tuple[float, ...]:
    values = _floats(key, raw)
    need = grid.m * (grid.m + 1) // 2
    if len(values) != need:
        raise ConfigError(f"{key} needs {need} upper-triangle entries", key=key)
    return values


def load_config(path) -> ExperimentConfig:
    with open(path, encoding="utf-8") as fh:
        return parse_config(fh.read())
