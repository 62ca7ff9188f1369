"""
Run configuration: parsing, validation and initial conditions.

Config files are flat UTF-8 text with one ``key = value`` per line, ``#``
comments and dotted keys for nesting, for example::

    model = ds2
    grid.nx = 64
    grid.Lx = 20
    params.gamma = -2.0
    g.term.2.1 = 1.0        # coefficient of u^2 (u*)^1 in a general system
    sweep.params.gamma = -1, -2, -4

Every validation error names the offending key.
"""
import math
import re
from dataclasses import dataclass, field
from itertools import product
from typing import Dict, List, Optional, Tuple

import numpy as np

from .ds2_model import DS2Params
from .errors import ConfigurationError
from .general_system import DispersionPolynomial, GeneralSystemSpec, PowerSeries
from .snapshot import read_snapshot
from .spectral import AXIS_NAMES, PeriodicGrid, SpectralField, forward_transform, make_grid
from .timestepper import PicardConfig

MODELS = ("ds2", "general")
MODES = ("run", "estimate-t", "sweep")
FAMILIES = ("gaussian", "plane_wave", "ring", "snapshot")

TWO_PI = repr(2.0 * math.pi)

DEFAULTS: Dict[str, str] = {
    "model": "ds2",
    "mode": "run",
    "dealias": "false",
    "params.p": "1.5",
    "initial.family": "gaussian",
    "initial.A": "1",
    "picard.quad_nodes": "8",
    "picard.tol": "1e-10",
    "picard.theta": "0.5",
    "picard.max_iters": "50",
    "picard.retry_halvings": "0",
    "output.dir": "ds2_output",
    "output.snapshot_every": "0",
    "output.images": "false",
    "output.chart": "true",
    "diagnostics.leak_threshold": "1e-8",
    "estimate.T_max": "1",
}

DS2_DEFAULTS = {"params.gamma": "0", "params.lambda": "0", "params.mu": "0"}
GENERAL_DEFAULTS = {"general.n": "2", "general.max_degree": "5", "P.c": "0"}

FAMILY_KEYS = {
    "gaussian": {"initial.sx": "1", "initial.sy": "1", "initial.sz": "1",
                 "initial.x0": "0", "initial.y0": "0", "initial.z0": "0"},
    "plane_wave": {"initial.j": "0", "initial.l": "0", "initial.q": "0"},
    "ring": {"initial.r0": "1", "initial.w": "1"},
    "snapshot": {},
}

FIXED_KEYS = set(DEFAULTS) | set(DS2_DEFAULTS) | set(GENERAL_DEFAULTS) | {
    "grid.nx", "grid.ny", "grid.nz", "grid.Lx", "grid.Ly", "grid.Lz",
    "time.dt", "time.t_end", "initial.path", "sweep.workers",
} | {key for keys in FAMILY_KEYS.values() for key in keys}

PATTERN_KEYS = (
    re.compile(r"omega\.term(\.\d+)+"),
    re.compile(r"P\.a\.\d+\.\d+"),
    re.compile(r"P\.b\.\d+"),
    re.compile(r"g\.term\.\d+\.\d+"),
    re.compile(r"[fh]\.\d+\.term\.\d+\.\d+"),
)


def _known_key(key: str) -> bool:
    return key in FIXED_KEYS or any(p.fullmatch(key) for p in PATTERN_KEYS)


def parse_config_text(text: str, source: str = "<config>") -> Dict[str, str]:
    """Parse config text into a flat key -> raw value dictionary."""
    entries: Dict[str, str] = {}
    for number, raw_line in enumerate(text.splitlines(), start=1):
        line = raw_line.split("#", 1)[0].strip()
        if not line:
            continue
        if "=" not in line:
            raise ConfigurationError(f"{source}:{number}: expected 'key = value', got {raw_line.strip()!r}")
        key, value = (part.strip() for part in line.split("=", 1))
        if not key:
            raise ConfigurationError(f"{source}:{number}: missing key")
        if key in entries:
            raise ConfigurationError(f"{source}:{number}: duplicate key", key=key)
        entries[key] = value
    return entries


def _float(entries: Dict[str, str], key: str) -> float:
    try:
        value = float(entries[key])
    except KeyError:
        raise ConfigurationError("required key is missing", key=key) from None
    except ValueError:
        raise ConfigurationError(f"expected a number, got {entries[key]!r}", key=key) from None
    if not math.isfinite(value):
        raise ConfigurationError(f"must be finite, got {entries[key]!r}", key=key)
    return value


def _int(entries: Dict[str, str], key: str) -> int:
    try:
        return int(entries[key])
    except KeyError:
        raise ConfigurationError("required key is missing", key=key) from None
    except ValueError:
        raise ConfigurationError(f"expected an integer, got {entries[key]!r}", key=key) from None


def _complex(entries: Dict[str, str], key: str) -> complex:
    try:
        return complex(entries[key].replace(" ", ""))
    except ValueError:
        raise ConfigurationError(f"expected a complex number such as 1.5-2j, got {entries[key]!r}", key=key) from None


def _bool(entries: Dict[str, str], key: str) -> bool:
    value = entries[key].strip().lower()
    if value in ("true", "yes", "on", "1"):
        return True
    if value in ("false", "no", "off", "0"):
        return False
    raise ConfigurationError(f"expected true or false, got {entries[key]!r}", key=key)


def _choice(entries: Dict[str, str], key: str, choices: Tuple[str, ...]) -> str:
    value = entries[key]
    if value not in choices:
        raise ConfigurationError(f"must be one of {', '.join(choices)}, got {value!r}", key=key)
    return value


@dataclass(frozen=True)
class InitialCondition:
    """Named initial-condition family with its parameters."""

    family: str
    amplitude: float = 1.0
    widths: Tuple[float, ...] = (1.0, 1.0, 1.0)
    center: Tuple[float, ...] = (0.0, 0.0, 0.0)
    modes: Tuple[int, ...] = (0, 0, 0)
    r0: float = 1.0
    w: float = 1.0
    path: Optional[str] = None

    def build(self, grid: PeriodicGrid) -> SpectralField:
        """Sample the family on a grid and transform it."""
        n = grid.ndim
        if self.family == "plane_wave":
            return SpectralField.single_mode(grid, self.modes[:n], self.amplitude)
        if self.family == "snapshot":
            field_hat, _ = read_snapshot(self.path, expected_shape=grid.shape)
            if not field_hat.grid.compatible(grid):
                raise ConfigurationError(
                    f"snapshot periods {field_hat.grid.lengths} differ from grid periods {grid.lengths}",
                    key="initial.path",
                )
            return SpectralField(grid, field_hat.coeffs)
        mesh = grid.mesh
        if self.family == "gaussian":
            exponent = sum(((x - c) / s) ** 2 for x, c, s in zip(mesh, self.center[:n], self.widths[:n]))
            values = self.amplitude * np.exp(-exponent)
        else:
            radius = np.sqrt(sum(x ** 2 for x in mesh))
            values = self.amplitude * np.exp(-(((radius - self.r0) / self.w) ** 2))
        return forward_transform(values.astype(np.complex128), grid)


@dataclass(frozen=True)
class RunConfig:
    """Validated configuration of one run, estimate or sweep."""

    model: str
    mode: str
    grid: PeriodicGrid
    params: Optional[DS2Params]
    system: Optional[GeneralSystemSpec]
    initial: InitialCondition
    dt: Optional[float]
    t_end: Optional[float]
    picard: PicardConfig
    output_dir: str
    snapshot_every: int
    images: bool
    chart: bool
    leak_threshold: float
    T_max: float
    dealias: bool
    sweep: Tuple[Tuple[str, Tuple[str, ...]], ...] = ()
    workers: Optional[int] = None
    entries: Dict[str, str] = field(default_factory=dict, compare=False, hash=False)

    @property
    def p(self) -> float:
        return self.picard.p

    @property
    def model_params(self):
        return self.params if self.model == "ds2" else self.system

    def normalized(self) -> str:
        """Every effective key, sorted, one 'key = value' per line."""
        return "".join(f"{key} = {self.entries[key]}\n" for key in sorted(self.entries))

    def sweep_members(self) -> List[Tuple[str, Dict[str, str]]]:
        """(label, overrides) for every point of the sweep's cartesian product."""
        if not self.sweep:
            return [("member_000", {})]
        keys = [key for key, _ in self.sweep]
        members = []
        for number, values in enumerate(product(*(values for _, values in self.sweep))):
            members.append((f"member_{number:03d}", dict(zip(keys, values))))
        return members


def _build_grid(entries: Dict[str, str], ndim: int) -> PeriodicGrid:
    points = []
    lengths = []
    for axis in AXIS_NAMES[:ndim]:
        points.append(_int(entries, f"grid.n{axis}"))
        lengths.append(_float(entries, f"grid.L{axis}"))
    return make_grid(points, lengths)


def _series(entries: Dict[str, str], prefix: str) -> PowerSeries:
    pattern = re.compile(re.escape(prefix) + r"\.term\.(\d+)\.(\d+)")
    terms = []
    for key in sorted(entries):
        match = pattern.fullmatch(key)
        if match:
            terms.append(((int(match.group(1)), int(match.group(2))), _complex(entries, key)))
    return PowerSeries(tuple(terms))


def _build_system(entries: Dict[str, str], p: float, dealias: bool) -> GeneralSystemSpec:
    n = _int(entries, "general.n")
    if n not in (1, 2, 3):
        raise ConfigurationError(f"must be 1, 2 or 3, got {n}", key="general.n")
    omega_terms = []
    for key in sorted(entries):
        if key.startswith("omega.term."):
            exponents = tuple(int(e) for e in key[len("omega.term."):].split("."))
            if len(exponents) != n:
                raise ConfigurationError(f"needs {n} exponents", key=key)
            omega_terms.append((exponents, _complex(entries, key)))
    a = [[0.0] * n for _ in range(n)]
    b = [0.0] * n
    for key in entries:
        if key.startswith("P.a."):
            i, j = (int(x) for x in key[4:].split("."))
            if i >= n or j >= n:
                raise ConfigurationError(f"index out of range for n = {n}", key=key)
            a[i][j] = _float(entries, key)
        elif key.startswith("P.b."):
            i = int(key[4:])
            if i >= n:
                raise ConfigurationError(f"index out of range for n = {n}", key=key)
            b[i] = _float(entries, key)
    for key in entries:
        match = re.fullmatch(r"([fh])\.(\d+)\.term\.\d+\.\d+", key)
        if match and int(match.group(2)) >= n:
            raise ConfigurationError(f"component index out of range for n = {n}", key=key)
    return GeneralSystemSpec(
        n=n,
        omega=DispersionPolynomial(tuple(omega_terms)),
        a=tuple(tuple(row) for row in a),
        b=tuple(b),
        c=_complex(entries, "P.c"),
        g=_series(entries, "g"),
        f_bar=tuple(_series(entries, f"f.{j}") for j in range(n)),
        h_bar=tuple(_series(entries, f"h.{j}") for j in range(n)),
        p=p,
        max_degree=_int(entries, "general.max_degree"),
        dealias=dealias,
    )


def _effective_entries(raw: Dict[str, str]) -> Dict[str, str]:
    entries = dict(DEFAULTS)
    model = raw.get("model", DEFAULTS["model"])
    entries.update(DS2_DEFAULTS if model == "ds2" else GENERAL_DEFAULTS)
    family = raw.get("initial.family", DEFAULTS["initial.family"])
    entries.update(FAMILY_KEYS.get(family, {}))
    ndim = 2
    if model == "general":
        try:
            ndim = int(raw.get("general.n", GENERAL_DEFAULTS["general.n"]))
        except ValueError:
            raise ConfigurationError(f"expected an integer, got {raw['general.n']!r}", key="general.n") from None
    for axis in AXIS_NAMES[:max(1, min(ndim, 3))]:
        entries[f"grid.L{axis}"] = TWO_PI
    entries.update(raw)
    return entries


def build_config(raw: Dict[str, str], mode: Optional[str] = None) -> RunConfig:
    """Validate raw entries and build a RunConfig.

    Args:
        raw: Parsed key -> value entries
        mode: Overrides the config's mode key (the CLI subcommand)

    Raises:
        ConfigurationError: Naming the first offending key
    """
    sweep: List[Tuple[str, Tuple[str, ...]]] = []
    plain: Dict[str, str] = {}
    for key, value in raw.items():
        if key.startswith("sweep.") and key != "sweep.workers":
            target = key[len("sweep."):]
            if not _known_key(target) or target.startswith("sweep.") or target in ("mode", "output.dir"):
                raise ConfigurationError(f"cannot sweep over {target!r}", key=key)
            values = tuple(v.strip() for v in value.split(",") if v.strip())
            if not values:
                raise ConfigurationError("sweep needs at least one value", key=key)
            sweep.append((target, values))
        elif not _known_key(key):
            raise ConfigurationError("unknown configuration key", key=key)
        else:
            plain[key] = value
    if mode is not None:
        plain["mode"] = mode

    entries = _effective_entries(plain)
    model = _choice(entries, "model", MODELS)
    run_mode = _choice(entries, "mode", MODES)
    family = _choice(entries, "initial.family", FAMILIES)
    for other, keys in FAMILY_KEYS.items():
        for key in sorted(keys):
            if key in plain and key not in FAMILY_KEYS[family]:
                raise ConfigurationError(f"only valid with initial.family = {other}", key=key)
    dealias = _bool(entries, "dealias")
    p = _float(entries, "params.p")

    params = None
    system = None
    if model == "ds2":
        for key in entries:
            if key.startswith(("general.", "omega.", "P.", "g.", "f.", "h.")):
                raise ConfigurationError("only valid with model = general", key=key)
        params = DS2Params(
            gamma=_float(entries, "params.gamma"),
            lam=_float(entries, "params.lambda"),
            mu=_float(entries, "params.mu"),
            p=p,
            dealias=dealias,
        )
        grid = _build_grid(entries, 2)
    else:
        for key in ("params.gamma", "params.lambda", "params.mu"):
            if key in entries:
                raise ConfigurationError("only valid with model = ds2; use series terms instead", key=key)
        system = _build_system(entries, p, dealias)
        grid = _build_grid(entries, system.n)
        system.check_grid(grid)

    picard = PicardConfig(
        quad_nodes=_int(entries, "picard.quad_nodes"),
        tol=_float(entries, "picard.tol"),
        theta=_float(entries, "picard.theta"),
        max_iters=_int(entries, "picard.max_iters"),
        p=p,
        retry_halvings=_int(entries, "picard.retry_halvings"),
    )

    dt = t_end = None
    if run_mode in ("run", "sweep"):
        dt = _float(entries, "time.dt")
        t_end = _float(entries, "time.t_end")
        if dt <= 0:
            raise ConfigurationError(f"must be positive, got {dt}", key="time.dt")
        if t_end <= 0:
            raise ConfigurationError(f"must be positive, got {t_end}", key="time.t_end")
    T_max = _float(entries, "estimate.T_max")
    if T_max <= 0:
        raise ConfigurationError(f"must be positive, got {T_max}", key="estimate.T_max")

    if family == "snapshot" and "initial.path" not in entries:
        raise ConfigurationError("snapshot initial condition needs a path", key="initial.path")
    if family == "snapshot" and grid.ndim != 2:
        raise ConfigurationError("snapshot initial conditions are two-dimensional", key="initial.family")
    initial = InitialCondition(
        family=family,
        amplitude=_float(entries, "initial.A"),
        widths=tuple(_float(entries, k) for k in ("initial.sx", "initial.sy", "initial.sz")) if family == "gaussian" else (1.0, 1.0, 1.0),
        center=tuple(_float(entries, k) for k in ("initial.x0", "initial.y0", "initial.z0")) if family == "gaussian" else (0.0, 0.0, 0.0),
        modes=tuple(_int(entries, k) for k in ("initial.j", "initial.l", "initial.q")) if family == "plane_wave" else (0, 0, 0),
        r0=_float(entries, "initial.r0") if family == "ring" else 1.0,
        w=_float(entries, "initial.w") if family == "ring" else 1.0,
        path=entries.get("initial.path"),
    )
    if family == "gaussian" and any(s <= 0 for s in initial.widths):
        raise ConfigurationError("Gaussian widths must be positive", key="initial.sx")
    if family == "ring" and initial.w <= 0:
        raise ConfigurationError(f"must be positive, got {initial.w}", key="initial.w")

    snapshot_every = _int(entries, "output.snapshot_every")
    if snapshot_every < 0:
        raise ConfigurationError(f"must be >= 0, got {snapshot_every}", key="output.snapshot_every")
    leak_threshold = _float(entries, "diagnostics.leak_threshold")
    if leak_threshold <= 0:
        raise ConfigurationError(f"must be positive, got {leak_threshold}", key="diagnostics.leak_threshold")

    workers = None
    if "sweep.workers" in entries:
        workers = _int(entries, "sweep.workers")
        if workers < 1:
            raise ConfigurationError(f"must be >= 1, got {workers}", key="sweep.workers")
    if run_mode == "sweep":
        for target, values in sweep:
            for value in values:
                build_config({**plain, target: value}, mode="run")

    return RunConfig(
        model=model,
        mode=run_mode,
        grid=grid,
        params=params,
        system=system,
        initial=initial,
        dt=dt,
        t_end=t_end,
        picard=picard,
        output_dir=entries["output.dir"],
        snapshot_every=snapshot_every,
        images=_bool(entries, "output.images"),
        chart=_bool(entries, "output.chart"),
        leak_threshold=leak_threshold,
        T_max=T_max,
        dealias=dealias,
        sweep=tuple(sweep),
        workers=workers,
        entries={**entries, **{f"sweep.{k}": ", ".join(v) for k, v in sweep}},
    )


def load_config(path: str, mode: Optional[str] = None) -> RunConfig:
    """Read, parse and validate a config file.

    Raises:
        ConfigurationError: On grammar or validation errors
        OSError: If the file cannot be read
    """
    with open(path, "r", encoding="utf-8") as f:
        text = f.read()
    return build_config(parse_config_text(text, source=path), mode=mode)


def member_config(config: RunConfig, overrides: Dict[str, str], output_dir: str) -> RunConfig:
    """Config of one sweep member: base entries plus overrides, run mode, own directory."""
    raw = {k: v for k, v in config.entries.items() if not k.startswith("sweep.")}
    raw.update(overrides)
    raw["output.dir"] = output_dir
    return build_config(raw, mode="run")
