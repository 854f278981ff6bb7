"""Grid scans over position and photon energy, written as plot-ready CSV.

Two modes, selected by the quantity list. A pointwise scan samples field
quantities (LDOS, photon numbers, effective temperatures, energy density,
pressure, force densities) on a position grid. A slab scan sweeps the
width of the central layer of a five-layer template, keeping the wall
separation fixed and the slab centered, and reports the net spectral
force on the slab from the pressure difference at the midpoints of the
two host segments.

Output is deterministic: fixed column order, x-major rows, 9 significant
digits, and a metadata block whose embedded spec suffices to reproduce
the data section byte for byte.
"""

from __future__ import annotations

import dataclasses
import hashlib
import json
import os
from concurrent.futures import ProcessPoolExecutor
from dataclasses import dataclass
from functools import cached_property
from pathlib import Path

import numpy as np
import yaml

from . import __version__
from .errors import ConfigError, PhotonStackError
from .greens import solve_bases
from .mechanics import energy_pressure, force_density, net_force
from .spectral import effective_temperatures, ldos, photon_numbers
from .stack import (
    Layer,
    LayerStack,
    TemperatureProfile,
    build_stack,
    serialize_stack,
)
from .thermo import solve_self_consistent
from .units import LDOS_UNIT, MICRON, omega_from_ev

POINTWISE_QUANTITIES = (
    "ldos_e", "ldos_m", "ldos_tot",
    "n_e", "n_m", "n_tot",
    "T_e", "T_m", "T_tot",
    "u", "p", "zcf", "tcf", "ncf",
)
SLAB_QUANTITIES = ("slab_force",)
QUANTITIES = POINTWISE_QUANTITIES + SLAB_QUANTITIES

_FORCE_QUANTITIES = frozenset({"zcf", "tcf", "ncf"})

# (paper-units tag, SI tag); only the LDOS columns differ between modes
_UNIT_TAGS = {
    "ldos_e": ("2/(pi c S)", "s/m^3"),
    "ldos_m": ("2/(pi c S)", "s/m^3"),
    "ldos_tot": ("2/(pi c S)", "s/m^3"),
    "n_e": ("1", "1"),
    "n_m": ("1", "1"),
    "n_tot": ("1", "1"),
    "T_e": ("K", "K"),
    "T_m": ("K", "K"),
    "T_tot": ("K", "K"),
    "u": ("J s/m^3", "J s/m^3"),
    "p": ("N s/m^2", "N s/m^2"),
    "zcf": ("N s/m^3", "N s/m^3"),
    "tcf": ("N s/m^3", "N s/m^3"),
    "ncf": ("N s/m^3", "N s/m^3"),
    "slab_force": ("N s/m^2", "N s/m^2"),
}

_BALANCE_DEFAULTS = {
    "slices": 16,
    "tolerance_K": 1e-3,
    "max_iterations": 100,
    "relaxation": 0.5,
}

_INTERFACE_CLEARANCE = 1e-12  # meters; force probes must stay off boundaries


@dataclass(frozen=True)
class GridSpec:
    """Inclusive 1D grid; log scale spaces points geometrically."""

    start: float
    stop: float
    count: int
    scale: str = "linear"

    @classmethod
    def from_mapping(cls, data, where: str) -> "GridSpec":
        if not isinstance(data, dict):
            raise ConfigError(f"{where}: grid must be a mapping")
        unknown = set(data) - {"start", "stop", "count", "scale"}
        if unknown:
            raise ConfigError(f"{where}: unknown grid keys {sorted(unknown)}")
        try:
            start = float(data["start"])
            stop = float(data["stop"])
            count = int(data["count"])
        except (KeyError, TypeError, ValueError) as exc:
            raise ConfigError(f"{where}: grid needs numeric start/stop/count ({exc})") from None
        scale = data.get("scale", "linear")
        if scale not in ("linear", "log"):
            raise ConfigError(f"{where}: scale must be 'linear' or 'log'")
        if count < 1:
            raise ConfigError(f"{where}: count must be >= 1")
        if count > 1 and not stop > start:
            raise ConfigError(f"{where}: stop must exceed start")
        if count == 1 and stop != start:
            raise ConfigError(f"{where}: a single-point grid needs stop == start")
        if scale == "log" and start <= 0.0:
            raise ConfigError(f"{where}: log grids need start > 0")
        return cls(start, stop, count, scale)

    def values(self) -> np.ndarray:
        if self.scale == "log":
            return np.geomspace(self.start, self.stop, self.count)
        return np.linspace(self.start, self.stop, self.count)

    def mapping(self) -> dict:
        return {
            "start": float(self.start),
            "stop": float(self.stop),
            "count": int(self.count),
            "scale": self.scale,
        }


_SPEC_KEYS = {"stack", "quantities", "positions", "energies", "widths",
              "units", "balance", "output"}


@dataclass(frozen=True)
class ScanSpec:
    """A validated scan request with the stack config embedded inline."""

    stack: dict
    quantities: tuple[str, ...]
    energies: GridSpec
    positions: GridSpec | None = None
    widths: GridSpec | None = None
    units: str = "paper"
    balance: dict = dataclasses.field(default_factory=lambda: dict(_BALANCE_DEFAULTS))
    output: str | None = None

    @property
    def mode(self) -> str:
        return "slab" if "slab_force" in self.quantities else "pointwise"

    @classmethod
    def from_mapping(cls, data, *, base_dir=None) -> "ScanSpec":
        if not isinstance(data, dict):
            raise ConfigError("scan spec must be a mapping")
        unknown = set(data) - _SPEC_KEYS
        if unknown:
            raise ConfigError(f"unknown scan keys {sorted(unknown)}")

        raw_stack = data.get("stack")
        base = Path(base_dir) if base_dir is not None else None
        if isinstance(raw_stack, str):
            path = Path(raw_stack)
            if base is not None and not path.is_absolute():
                path = base / path
            try:
                stack_data = yaml.safe_load(path.read_text())
            except OSError as exc:
                raise ConfigError(f"cannot read stack config {path}: {exc}") from None
            except yaml.YAMLError as exc:
                raise ConfigError(f"invalid YAML in {path}: {exc}") from None
            stack = build_stack(stack_data, base_dir=path.parent)
        elif isinstance(raw_stack, dict):
            stack = build_stack(raw_stack, base_dir=base)
        else:
            raise ConfigError("scan spec needs 'stack': a config path or inline mapping")
        normalized = serialize_stack(stack)

        quantities = data.get("quantities")
        if not isinstance(quantities, list) or not quantities:
            raise ConfigError("scan spec needs a nonempty 'quantities' list")
        bad = [q for q in quantities if q not in QUANTITIES]
        if bad:
            raise ConfigError(f"unknown quantities {bad}; valid: {list(QUANTITIES)}")
        if len(set(quantities)) != len(quantities):
            raise ConfigError("duplicate quantities in scan spec")
        quantities = tuple(quantities)

        if "energies" not in data:
            raise ConfigError("scan spec needs an 'energies' grid (eV)")
        energies = GridSpec.from_mapping(data["energies"], "energies")
        if energies.start <= 0.0:
            raise ConfigError("energies: photon energies must be positive")

        positions = widths = None
        if "positions" in data:
            positions = GridSpec.from_mapping(data["positions"], "positions")
        if "widths" in data:
            widths = GridSpec.from_mapping(data["widths"], "widths")
            if widths.start < 0.0:
                raise ConfigError("widths: slab widths must be >= 0")

        if "slab_force" in quantities:
            if len(quantities) != 1:
                raise ConfigError("slab_force cannot be combined with pointwise quantities")
            if widths is None:
                raise ConfigError("slab_force scans need a 'widths' grid (um)")
            if positions is not None:
                raise ConfigError("slab_force scans take no 'positions' grid")
        else:
            if positions is None:
                raise ConfigError("pointwise scans need a 'positions' grid (um)")
            if widths is not None:
                raise ConfigError("'widths' only applies to slab_force scans")

        units = data.get("units", "paper")
        if units not in ("paper", "si"):
            raise ConfigError("units must be 'paper' or 'si'")

        balance = dict(_BALANCE_DEFAULTS)
        if "balance" in data:
            overrides = data["balance"]
            if not isinstance(overrides, dict):
                raise ConfigError("balance settings must be a mapping")
            unknown = set(overrides) - set(_BALANCE_DEFAULTS)
            if unknown:
                raise ConfigError(f"unknown balance keys {sorted(unknown)}")
            balance.update(overrides)
        balance["slices"] = int(balance["slices"])
        balance["tolerance_K"] = float(balance["tolerance_K"])
        balance["max_iterations"] = int(balance["max_iterations"])
        balance["relaxation"] = float(balance["relaxation"])
        if balance["slices"] < 1 or balance["max_iterations"] < 1:
            raise ConfigError("balance slices and max_iterations must be >= 1")
        if not 0.0 < balance["tolerance_K"]:
            raise ConfigError("balance tolerance_K must be positive")
        if not 0.0 < balance["relaxation"] <= 1.0:
            raise ConfigError("balance relaxation must lie in (0, 1]")

        output = data.get("output")
        if output is not None and not isinstance(output, str):
            raise ConfigError("output must be a path string")
        if output is not None and base is not None and not Path(output).is_absolute():
            output = str(base / output)

        return cls(normalized, quantities, energies, positions, widths,
                   units, balance, output)

    @classmethod
    def from_file(cls, path) -> "ScanSpec":
        p = Path(path)
        try:
            data = yaml.safe_load(p.read_text())
        except OSError as exc:
            raise ConfigError(f"cannot read scan spec {p}: {exc}") from None
        except yaml.YAMLError as exc:
            raise ConfigError(f"invalid YAML in {p}: {exc}") from None
        return cls.from_mapping(data, base_dir=p.parent)

    @classmethod
    def from_metadata(cls, csv_path) -> "ScanSpec":
        """Rebuild the spec embedded in a scan's own metadata block."""
        p = Path(csv_path)
        try:
            lines = p.read_text(encoding="utf-8").splitlines()
        except OSError as exc:
            raise ConfigError(f"cannot read scan output {p}: {exc}") from None
        for line in lines:
            if not line.startswith("#"):
                break
            body = line.lstrip("#").strip()
            if body.startswith("spec: "):
                try:
                    data = json.loads(body[len("spec: "):])
                except json.JSONDecodeError as exc:
                    raise ConfigError(f"corrupt spec metadata in {p}: {exc}") from None
                return cls.from_mapping(data)
        raise ConfigError(f"no spec metadata block found in {p}")

    def canonical_mapping(self) -> dict:
        out = {
            "stack": self.stack,
            "quantities": list(self.quantities),
            "energies": self.energies.mapping(),
            "positions": self.positions.mapping() if self.positions else None,
            "widths": self.widths.mapping() if self.widths else None,
            "units": self.units,
            "balance": dict(self.balance),
        }
        return {k: v for k, v in out.items() if v is not None}

    def canonical_json(self) -> str:
        return json.dumps(self.canonical_mapping(), sort_keys=True,
                          separators=(",", ":"))

    def stack_sha256(self) -> str:
        blob = json.dumps(self.stack, sort_keys=True, separators=(",", ":"))
        return hashlib.sha256(blob.encode("utf-8")).hexdigest()


@dataclass(frozen=True, eq=False)
class ScanResult:
    """In-memory copy of one finished scan: data[axis, energy, quantity]."""

    spec: ScanSpec
    axis_name: str
    axis_values: np.ndarray
    energies_ev: np.ndarray
    quantities: tuple[str, ...]
    data: np.ndarray
    metadata: tuple[str, ...]
    path: Path | None
    fd_residual_max: float | None = None


class _PointValues:
    """Lazy per-position evaluation; each group is computed once."""

    def __init__(self, stack, bases, profile, x, fd_check):
        self.stack = stack
        self.bases = bases
        self.profile = profile
        self.x = x
        self.fd_check = fd_check

    @cached_property
    def densities(self):
        return ldos(self.stack, self.bases, self.x)

    @cached_property
    def numbers(self):
        return photon_numbers(self.stack, self.bases.normal, self.profile, self.x)

    @cached_property
    def temperatures(self):
        return effective_temperatures(self.numbers, self.bases.omega)

    @cached_property
    def energy(self):
        return energy_pressure(self.stack, self.bases, self.profile, self.x)

    @cached_property
    def force(self):
        return force_density(self.stack, self.bases, self.profile, self.x,
                             fd_check=self.fd_check)


_GETTERS = {
    "ldos_e": lambda pv: pv.densities.electric,
    "ldos_m": lambda pv: pv.densities.magnetic,
    "ldos_tot": lambda pv: pv.densities.total,
    "n_e": lambda pv: pv.numbers.electric,
    "n_m": lambda pv: pv.numbers.magnetic,
    "n_tot": lambda pv: pv.numbers.total,
    "T_e": lambda pv: pv.temperatures.electric,
    "T_m": lambda pv: pv.temperatures.magnetic,
    "T_tot": lambda pv: pv.temperatures.total,
    "u": lambda pv: pv.energy.energy_density,
    "p": lambda pv: pv.energy.pressure,
    "zcf": lambda pv: pv.force.zero_point,
    "tcf": lambda pv: pv.force.thermal,
    "ncf": lambda pv: pv.force.occupation,
}


def _pointwise_chunk(payload):
    """Evaluate every position for one energy chunk; top-level for pickling."""
    stack, profile, omega, xs, quantities, units, fd_check = payload
    bases = solve_bases(stack, omega)
    block = np.empty((len(xs), omega.size, len(quantities)))
    fd_max = 0.0
    ldos_scale = LDOS_UNIT if units == "paper" else 1.0
    for i, x in enumerate(xs):
        pv = _PointValues(stack, bases, profile, x, fd_check)
        for q_i, q in enumerate(quantities):
            vals = _GETTERS[q](pv)
            if q.startswith("ldos_"):
                vals = vals / ldos_scale
            block[i, :, q_i] = vals
        if fd_check and _FORCE_QUANTITIES & set(quantities):
            fd = pv.force.fd_residual
            if fd is not None:
                fd_max = max(fd_max, float(np.max(np.abs(fd))))
    return block, fd_max


@dataclass(frozen=True)
class _SlabTemplate:
    """Five-layer wall/host/slab/host/wall geometry with a fixed wall gap."""

    wall_left: Layer
    wall_right: Layer
    host: Layer
    slab: Layer
    gap: float

    @classmethod
    def from_stack(cls, stack: LayerStack) -> "_SlabTemplate":
        layers = stack.layers
        if len(layers) != 5:
            raise ConfigError(
                "slab_force scans need a five-layer stack: wall, host, slab, host, wall"
            )
        left, host_l, slab, host_r, right = layers
        problems = []
        if host_l.lossy or host_r.lossy:
            problems.append("host layers (1 and 3) must be lossless")
        if host_l.index != host_r.index:
            problems.append("host layers (1 and 3) must share one index")
        if slab.self_consistent and slab.semi_infinite:
            problems.append("the slab cannot be semi-infinite")
        if problems:
            raise ConfigError("; ".join(problems))
        gap = host_l.thickness + slab.thickness + host_r.thickness
        return cls(left, right, host_l, slab, gap)

    def at_width(self, width: float) -> LayerStack:
        if not 0.0 <= width < self.gap:
            raise ConfigError(
                f"slab width {width / MICRON:g} um must lie in [0, {self.gap / MICRON:g}) um"
            )
        if width == 0.0:
            layers = [
                self.wall_left,
                dataclasses.replace(self.host, thickness=self.gap),
                self.wall_right,
            ]
        else:
            side = 0.5 * (self.gap - width)
            layers = [
                self.wall_left,
                dataclasses.replace(self.host, thickness=side),
                dataclasses.replace(self.slab, thickness=width),
                dataclasses.replace(self.host, thickness=side),
                self.wall_right,
            ]
        return LayerStack.assemble(layers)

    def probes(self, width: float) -> tuple[float, float]:
        # midpoints of the two host segments, measured from the left wall
        quarter = 0.25 * (self.gap - width)
        return quarter, self.gap - quarter


def _slab_chunk(payload):
    template, widths, omega, balance = payload
    block = np.empty((len(widths), omega.size, 1))
    for i, w in enumerate(widths):
        stack = template.at_width(w)
        if any(layer.self_consistent for layer in stack.layers):
            profile = solve_self_consistent(stack, **balance).profile
        else:
            profile = TemperatureProfile.from_stack(stack)
        bases = solve_bases(stack, omega)
        x1, x2 = template.probes(w)
        block[i, :, 0] = net_force(stack, bases, profile, x1, x2)
    return block, 0.0


def _format_value(v: float) -> str:
    if v == 0.0:
        return "0"
    return "%.9g" % v


def _chunks(values, n: int):
    bounds = np.linspace(0, len(values), n + 1).astype(int)
    return [values[a:b] for a, b in zip(bounds[:-1], bounds[1:]) if b > a]


def _run_chunks(worker, payloads, threads: int):
    if threads <= 1 or len(payloads) <= 1:
        return [worker(p) for p in payloads]
    with ProcessPoolExecutor(max_workers=threads) as pool:
        return list(pool.map(worker, payloads))


def run_scan(
    spec: ScanSpec,
    *,
    output=None,
    threads: int = 1,
    fd_check: bool = False,
) -> ScanResult:
    """Execute a scan and write its CSV.

    ``threads`` splits the work across processes (energy chunks for
    pointwise scans, width chunks for slab scans); assembly is ordered,
    so the output bytes do not depend on the thread count. A failed run
    leaves no partial output file behind.
    """
    target = output if output is not None else spec.output
    if target is None:
        raise ConfigError("scan spec has no output path and none was given")
    target = Path(target)

    stack = build_stack(spec.stack)
    energies_ev = spec.energies.values()
    omega = omega_from_ev(energies_ev)
    meta = [
        f"photonstack {__version__} scan",
        f"stack-sha256: {spec.stack_sha256()}",
        f"mode: {spec.mode}",
        f"units: {spec.units}",
    ]
    fd_max = None

    if spec.mode == "slab":
        template = _SlabTemplate.from_stack(stack)
        widths_um = spec.widths.values()
        widths_m = widths_um * MICRON
        if widths_um[-1] * MICRON >= template.gap:
            raise ConfigError(
                f"widths reach {widths_um[-1]:g} um but the wall gap is only "
                f"{template.gap / MICRON:g} um"
            )
        if template.slab.self_consistent:
            bal = spec.balance
            meta.append(
                "solver: slices={slices} tolerance_K={tolerance_K:g} "
                "max_iterations={max_iterations} relaxation={relaxation:g}".format(**bal)
            )
        payloads = [
            (template, chunk, omega, spec.balance)
            for chunk in _chunks(widths_m, max(1, threads))
        ]
        results = _run_chunks(_slab_chunk, payloads, threads)
        data = np.concatenate([r[0] for r in results], axis=0)
        axis_name, axis_values = "width_um", widths_um
    else:
        xs_um = spec.positions.values()
        xs_m = xs_um * MICRON
        if _FORCE_QUANTITIES & set(spec.quantities):
            for x_um, x in zip(xs_um, xs_m):
                if min(abs(x - b) for b in stack.interfaces) < _INTERFACE_CLEARANCE:
                    raise ConfigError(
                        f"position {x_um:g} um lies on a layer interface; force "
                        "densities are undefined there (shift the grid)"
                    )
        if any(layer.self_consistent for layer in stack.layers):
            bal = spec.balance
            profile = solve_self_consistent(stack, **bal).profile
            meta.append(
                "solver: slices={slices} tolerance_K={tolerance_K:g} "
                "max_iterations={max_iterations} relaxation={relaxation:g}".format(**bal)
            )
        else:
            profile = TemperatureProfile.from_stack(stack)
        payloads = [
            (stack, profile, chunk, xs_m, spec.quantities, spec.units, fd_check)
            for chunk in _chunks(omega, max(1, threads))
        ]
        results = _run_chunks(_pointwise_chunk, payloads, threads)
        data = np.concatenate([r[0] for r in results], axis=1)
        if fd_check:
            fd_max = max(r[1] for r in results)
            meta.append(f"fd-check: max-rel-residual={fd_max:.3e}")
        axis_name, axis_values = "x_um", xs_um

    if not np.isfinite(data).all():
        raise PhotonStackError("scan produced non-finite values; refusing to write")

    tag = 0 if spec.units == "paper" else 1
    col_units = [f"{axis_name} [um]", "E_eV [eV]"]
    col_units += [f"{q} [{_UNIT_TAGS[q][tag]}]" for q in spec.quantities]
    meta.append("columns: " + ", ".join(col_units))
    meta.append("spec: " + spec.canonical_json())

    _write_csv(target, meta, axis_name, axis_values, energies_ev,
               spec.quantities, data)
    return ScanResult(spec, axis_name, axis_values, energies_ev,
                      spec.quantities, data, tuple(meta), target, fd_max)


def _write_csv(target: Path, meta, axis_name, axis_values, energies_ev,
               quantities, data) -> None:
    tmp = target.with_name(target.name + ".part")
    try:
        with open(tmp, "w", encoding="utf-8", newline="\n") as f:
            for line in meta:
                f.write(f"# {line}\n")
            f.write(",".join([axis_name, "E_eV", *quantities]) + "\n")
            for i, a in enumerate(axis_values):
                for j, e in enumerate(energies_ev):
                    cells = [_format_value(a), _format_value(e)]
                    cells += [_format_value(v) for v in data[i, j]]
                    f.write(",".join(cells) + "\n")
        os.replace(tmp, target)
    except BaseException:
        tmp.unlink(missing_ok=True)
        raise


def read_scan_csv(path):
    """Read back a scan CSV: (metadata lines, header columns, float array)."""
    meta, header, rows = [], None, []
    with open(path, encoding="utf-8") as f:
        for line in f:
            line = line.rstrip("\n")
            if line.startswith("#"):
                meta.append(line.lstrip("#").strip())
            elif header is None:
                header = line.split(",")
            elif line:
                rows.append([float(v) for v in line.split(",")])
    if header is None:
        raise ConfigError(f"{path} has no header row")
    return meta, header, np.array(rows)
