"""Batch experiment runner: fidelity scans as CSV files plus a run manifest.

Subcommands
-----------
ground-state      solve one model, report energy and resource diagnostics
fidelity-rz       z-rotation gate fidelities on one resource state
fidelity-unitary  blocked-protocol fidelities for U = Rx Ry Rz angle triples
scan              sweep alpha, J, or D, evaluating the gate list at each point
oracle-check      formula fidelities against the dense measurement oracle
aklt-closed-form  computed z-rotation curve next to the analytic one

Every subcommand reads one TOML config (``--config``) and writes
``<subcommand>.csv`` plus ``manifest.json`` into ``--out``.  The CSV column
set is fixed (see ``CSV_COLUMNS``); one row per (grid point, gate, method);
floats are formatted with ``%.12g`` so reruns of the same config and seed are
byte-identical apart from ``wall_time_ms``.  ``--jobs N`` evaluates scan
points in worker processes; row order does not depend on it.  ``--cache DIR``
reuses ground states across runs keyed by model, solver settings, and seed.
``--plot`` also renders a PNG for subcommands with a natural scan axis
(needs matplotlib, the ``plot`` extra).

Exit codes: 0 success, 1 oracle-check beyond tolerance, 2 invalid
configuration or arguments, 3 I/O failure (including an unreadable config
file; a malformed one is 2).

Config layout (TOML)::

    seed = 7                     # optional, --seed wins

    [model]
    kind = "xxz"                 # aklt | blbq | xxz | blocked
    L = 12
    J = 1.0                      # xxz, blocked
    D = 0.0                      # xxz, blocked
    # alpha = 0.0                # blbq
    # N = 1                      # blocked junction sites

    [dmrg]                       # optional, defaults from DmrgConfig
    max_bond = 100
    cutoff = 1e-10

    [gates]
    kind = "rz"                  # rz | unitary
    theta = [0.0, 1.5707963267948966]          # list or {start, stop, steps}
    methods = ["expansion", "haldane_closed_form"]  # rz default: ["expansion"]
    # kind = "unitary"
    # angles = [[1.5707, 1.5707, 1.5707]]      # [theta, phi, lambda] triples

    [scan]                       # scan subcommand only
    parameter = "D"              # alpha | J | D
    values = { start = -4.0, stop = 0.0, steps = 41 }

    [oracle]                     # oracle-check only
    tolerance = 1e-6
"""

from __future__ import annotations

import argparse
import csv
import dataclasses
import hashlib
import json
import math
import sys
import time
from concurrent.futures import ProcessPoolExecutor
from pathlib import Path
from typing import Any, Sequence

try:
    import tomllib
except ModuleNotFoundError:  # Python 3.10
    import tomli as tomllib  # type: ignore[no-redef]

import numpy as np

from . import __version__, fidelity, model
from .dmrg import DmrgConfig, energy_variance, ground_state
from .model import HamiltonianSpec, blocked_layout, build_mpo, expect_mpo
from .mps import Mps, aklt_mps, load_mps, save_mps, to_dense
from .oracle import DenseState, rz_fidelity_oracle, unitary_fidelity_oracle
from .spin_ops import AXES

__all__ = ["CSV_COLUMNS", "main"]

CSV_COLUMNS = [
    "model",
    "L",
    "N",
    "alpha",
    "J",
    "D",
    "theta",
    "phi",
    "lambda",
    "method",
    "fidelity",
    "g_corr",
    "g_fail",
    "O_x",
    "O_y",
    "O_z",
    "energy",
    "variance",
    "converged",
    "seed",
    "wall_time_ms",
]

EXIT_OK = 0
EXIT_CHECK_FAILED = 1
EXIT_BAD_CONFIG = 2
EXIT_IO = 3

_MODEL_KINDS = {
    "aklt": (model.Aklt, ("L",)),
    "blbq": (model.Blbq, ("L", "alpha")),
    "xxz": (model.Xxz, ("L", "J", "D")),
    "blocked": (model.Blocked, ("L", "N", "J", "D")),
}
_RZ_METHODS = ("expansion", "haldane_closed_form")
_UNITARY_METHODS = ("expansion",)
_SCAN_PARAMETERS = ("alpha", "J", "D")


class ConfigError(ValueError):
    """Anything wrong with the config file or its combination of tables."""


def _fmt(value: Any) -> str:
    if value is None:
        return ""
    if isinstance(value, bool):
        return "true" if value else "false"
    if isinstance(value, float):
        return f"{value:.12g}"
    return str(value)


def _as_float(value: Any, what: str) -> float:
    if isinstance(value, bool) or not isinstance(value, (int, float)):
        raise ConfigError(f"{what} must be a number, got {value!r}")
    out = float(value)
    if not math.isfinite(out):
        raise ConfigError(f"{what} must be finite, got {value!r}")
    return out


def _expand_grid(node: Any, what: str) -> list[float]:
    """A parameter grid: an explicit list or {start, stop, steps}."""
    if isinstance(node, list):
        if not node:
            raise ConfigError(f"{what} must not be empty")
        return [_as_float(v, what) for v in node]
    if isinstance(node, dict):
        extra = set(node) - {"start", "stop", "steps"}
        if extra:
            raise ConfigError(f"{what} has unknown grid keys: {sorted(extra)}")
        try:
            start, stop, steps = node["start"], node["stop"], node["steps"]
        except KeyError as exc:
            raise ConfigError(f"{what} grid needs start, stop, steps") from exc
        if isinstance(steps, bool) or not isinstance(steps, int) or steps < 1:
            raise ConfigError(f"{what} steps must be a positive integer")
        lo, hi = _as_float(start, f"{what}.start"), _as_float(stop, f"{what}.stop")
        return [float(x) for x in np.linspace(lo, hi, steps)]
    raise ConfigError(f"{what} must be a list or a {{start, stop, steps}} table")


@dataclasses.dataclass
class ExperimentConfig:
    """Validated contents of the config file plus effective CLI overrides."""

    kind: str
    model_params: dict[str, Any]
    dmrg: DmrgConfig
    seed: int
    gate_kind: str | None = None
    thetas: list[float] | None = None
    angles: list[tuple[float, float, float]] | None = None
    methods: list[str] = dataclasses.field(default_factory=list)
    scan_parameter: str | None = None
    scan_values: list[float] | None = None
    oracle_tolerance: float = 1e-6

    def build_spec(self, scan_value: float | None = None) -> HamiltonianSpec:
        params = dict(self.model_params)
        if scan_value is not None:
            assert self.scan_parameter is not None
            params[self.scan_parameter] = scan_value
        cls, _ = _MODEL_KINDS[self.kind]
        try:
            return cls(**params)
        except (TypeError, ValueError) as exc:
            raise ConfigError(f"invalid model parameters: {exc}") from exc


def _parse_model(table: Any) -> tuple[str, dict[str, Any]]:
    if not isinstance(table, dict):
        raise ConfigError("[model] table is required")
    kind = table.get("kind")
    if kind not in _MODEL_KINDS:
        raise ConfigError(f"model.kind must be one of {sorted(_MODEL_KINDS)}, got {kind!r}")
    _, fields = _MODEL_KINDS[kind]
    extra = set(table) - {"kind", *fields}
    if extra:
        raise ConfigError(f"[model] has keys {sorted(extra)} not used by kind {kind!r}")
    params: dict[str, Any] = {}
    for name in fields:
        if name not in table:
            raise ConfigError(f"[model] kind {kind!r} needs {name}")
        value = table[name]
        if name in ("L", "N"):
            if isinstance(value, bool) or not isinstance(value, int):
                raise ConfigError(f"model.{name} must be an integer")
            params[name] = value
        else:
            params[name] = _as_float(value, f"model.{name}")
    return kind, params


def _parse_dmrg(table: Any, seed: int) -> DmrgConfig:
    if table is None:
        return DmrgConfig(seed=seed)
    if not isinstance(table, dict):
        raise ConfigError("[dmrg] must be a table")
    if "seed" in table:
        raise ConfigError("set the top-level seed (or --seed), not dmrg.seed")
    allowed = {f.name for f in dataclasses.fields(DmrgConfig)} - {"seed"}
    extra = set(table) - allowed
    if extra:
        raise ConfigError(f"[dmrg] has unknown keys: {sorted(extra)}")
    kwargs = dict(table)
    if "noise" in kwargs:
        noise = kwargs["noise"]
        if not isinstance(noise, list):
            raise ConfigError("dmrg.noise must be a list of amplitudes")
        kwargs["noise"] = tuple(_as_float(v, "dmrg.noise") for v in noise)
    try:
        return DmrgConfig(seed=seed, **kwargs)
    except (TypeError, ValueError) as exc:
        raise ConfigError(f"invalid [dmrg] table: {exc}") from exc


def _parse_gates(table: Any) -> tuple[str, list[float] | None, list | None, list[str]]:
    if not isinstance(table, dict):
        raise ConfigError("[gates] table is required for this subcommand")
    kind = table.get("kind")
    if kind == "rz":
        if "theta" not in table:
            raise ConfigError("[gates] kind rz needs theta")
        thetas = _expand_grid(table["theta"], "gates.theta")
        methods = table.get("methods", ["expansion"])
        if not isinstance(methods, list) or not methods:
            raise ConfigError("gates.methods must be a non-empty list")
        for m in methods:
            if m not in _RZ_METHODS:
                raise ConfigError(f"unknown rz method {m!r}; choose from {_RZ_METHODS}")
        extra = set(table) - {"kind", "theta", "methods"}
        if extra:
            raise ConfigError(f"[gates] has unknown keys: {sorted(extra)}")
        return "rz", thetas, None, list(methods)
    if kind == "unitary":
        raw = table.get("angles")
        if not isinstance(raw, list) or not raw:
            raise ConfigError("[gates] kind unitary needs a non-empty angles list")
        angles = []
        for i, triple in enumerate(raw):
            if not isinstance(triple, list) or len(triple) != 3:
                raise ConfigError(f"gates.angles[{i}] must be [theta, phi, lambda]")
            angles.append(tuple(_as_float(v, f"gates.angles[{i}]") for v in triple))
        methods = table.get("methods", ["expansion"])
        if not isinstance(methods, list) or any(m not in _UNITARY_METHODS for m in methods):
            raise ConfigError(f"unitary methods must be from {_UNITARY_METHODS}")
        extra = set(table) - {"kind", "angles", "methods"}
        if extra:
            raise ConfigError(f"[gates] has unknown keys: {sorted(extra)}")
        return "unitary", None, angles, list(methods)
    raise ConfigError(f"gates.kind must be 'rz' or 'unitary', got {kind!r}")


def load_config(path: Path, seed_override: int | None, *, need_gates: bool) -> ExperimentConfig:
    """Read and validate the TOML config.  I/O errors propagate as OSError."""
    raw = path.read_bytes()
    try:
        doc = tomllib.loads(raw.decode("utf-8"))
    except (tomllib.TOMLDecodeError, UnicodeDecodeError) as exc:
        raise ConfigError(f"cannot parse {path}: {exc}") from exc

    known = {"seed", "model", "dmrg", "gates", "scan", "oracle"}
    extra = set(doc) - known
    if extra:
        raise ConfigError(f"unknown top-level keys: {sorted(extra)}")

    seed = doc.get("seed", 0)
    if isinstance(seed, bool) or not isinstance(seed, int):
        raise ConfigError("seed must be an integer")
    if seed_override is not None:
        seed = seed_override

    kind, params = _parse_model(doc.get("model"))
    cfg = ExperimentConfig(
        kind=kind,
        model_params=params,
        dmrg=_parse_dmrg(doc.get("dmrg"), seed),
        seed=seed,
    )

    if need_gates or "gates" in doc:
        cfg.gate_kind, cfg.thetas, cfg.angles, cfg.methods = _parse_gates(doc.get("gates"))
        if cfg.gate_kind == "unitary" and kind != "blocked":
            raise ConfigError("unitary gates need model.kind = 'blocked'")
        if cfg.gate_kind == "rz" and kind == "blocked":
            raise ConfigError("rz gates run on plain chains, not blocked models")

    if "scan" in doc:
        table = doc["scan"]
        if not isinstance(table, dict):
            raise ConfigError("[scan] must be a table")
        parameter = table.get("parameter")
        if parameter not in _SCAN_PARAMETERS:
            raise ConfigError(f"scan.parameter must be one of {_SCAN_PARAMETERS}")
        if parameter not in params:
            raise ConfigError(f"model.kind {kind!r} has no parameter {parameter!r}")
        if "values" not in table:
            raise ConfigError("[scan] needs values (list or grid table)")
        extra = set(table) - {"parameter", "values"}
        if extra:
            raise ConfigError(f"[scan] has unknown keys: {sorted(extra)}")
        cfg.scan_parameter = parameter
        cfg.scan_values = _expand_grid(table["values"], "scan.values")

    if "oracle" in doc:
        table = doc["oracle"]
        if not isinstance(table, dict) or set(table) - {"tolerance"}:
            raise ConfigError("[oracle] accepts only a tolerance key")
        if "tolerance" in table:
            cfg.oracle_tolerance = _as_float(table["tolerance"], "oracle.tolerance")
            if cfg.oracle_tolerance <= 0:
                raise ConfigError("oracle.tolerance must be positive")
    return cfg


# --- resource states and caching -------------------------------------------


def _cache_key(kind: str, spec: HamiltonianSpec, dmrg: DmrgConfig, seed: int) -> str:
    payload = {
        "model": {"kind": kind, **dataclasses.asdict(spec)},
        "dmrg": dataclasses.asdict(dataclasses.replace(dmrg, seed=seed)),
        "seed": seed,
    }
    canonical = json.dumps(payload, sort_keys=True, separators=(",", ":"))
    return hashlib.sha256(canonical.encode()).hexdigest()


def _resource_state(
    kind: str,
    spec: HamiltonianSpec,
    dmrg: DmrgConfig,
    seed: int,
    cache_dir: str | None,
) -> tuple[Mps, dict[str, Any], bool]:
    """State plus solver metadata; the bool reports a cache hit."""
    if kind == "aklt":
        state = aklt_mps(spec.L)
        mpo = build_mpo(spec)
        meta = {
            "energy": float(expect_mpo(state, mpo).real),
            "variance": energy_variance(state, mpo),
            "converged": True,
            "sweeps": 0,
        }
        return state, meta, False

    key = _cache_key(kind, spec, dmrg, seed)
    if cache_dir is not None:
        base = Path(cache_dir) / key
        if base.with_suffix(".mps").exists() and base.with_suffix(".json").exists():
            meta = json.loads(base.with_suffix(".json").read_text())
            return load_mps(str(base.with_suffix(".mps"))), meta, True

    result = ground_state(spec, dataclasses.replace(dmrg, seed=seed))
    meta = {
        "energy": result.energy,
        "variance": energy_variance(result.state, spec),
        "converged": result.converged,
        "sweeps": result.sweeps,
        "max_discarded_weight": result.max_discarded_weight,
    }
    if cache_dir is not None:
        base = Path(cache_dir) / key
        base.parent.mkdir(parents=True, exist_ok=True)
        tmp = base.with_suffix(".mps.tmp")
        save_mps(result.state, str(tmp))
        tmp.replace(base.with_suffix(".mps"))
        base.with_suffix(".json").write_text(json.dumps(meta, sort_keys=True) + "\n")
    return result.state, meta, False


# --- row production ----------------------------------------------------------


def _base_row(cfg: ExperimentConfig, spec: HamiltonianSpec) -> dict[str, Any]:
    return {
        "model": cfg.kind,
        "L": spec.L,
        "N": getattr(spec, "N", None),
        "alpha": getattr(spec, "alpha", None),
        "J": getattr(spec, "J", None),
        "D": getattr(spec, "D", None),
        "theta": None,
        "phi": None,
        "lambda": None,
        "method": "",
        "fidelity": None,
        "seed": cfg.seed,
    }


def _diagnose(state: Mps, meta: dict[str, Any]) -> dict[str, Any]:
    orders = {w: fidelity.string_order(state, w) for w in AXES}
    return {
        "g_corr": fidelity.g_corr(state),
        "g_fail": fidelity.g_fail(state),
        "O_x": orders["x"],
        "O_y": orders["y"],
        "O_z": orders["z"],
        "energy": meta["energy"],
        "variance": meta["variance"],
        "converged": bool(meta["converged"]),
    }


def _point_rows(
    cfg: ExperimentConfig, scan_value: float | None, cache_dir: str | None, as_ground_state: bool
) -> tuple[list[dict[str, Any]], bool]:
    """All CSV rows for one grid point.  Runs inside worker processes."""
    t0 = time.perf_counter()
    spec = cfg.build_spec(scan_value)
    state, meta, hit = _resource_state(cfg.kind, spec, cfg.dmrg, cfg.seed, cache_dir)
    diag = _diagnose(state, meta)
    rows: list[dict[str, Any]] = []

    if as_ground_state:
        row = _base_row(cfg, spec) | diag
        row["method"] = "ground_state"
        row["fidelity"] = 0.25 + 0.25 * (diag["O_x"] + diag["O_y"] + diag["O_z"])
        rows.append(row)
    elif cfg.gate_kind == "rz":
        assert cfg.thetas is not None
        for theta in cfg.thetas:
            for method in cfg.methods:
                row = _base_row(cfg, spec) | diag
                row["theta"] = theta
                row["method"] = method
                if method == "expansion":
                    row["fidelity"] = fidelity.rz_fidelity_expansion(state, theta)
                else:
                    report = fidelity.rz_fidelity_haldane(state, theta)
                    row["fidelity"] = report.fidelity
                    row["_warnings"] = len(report.warnings)
                rows.append(row)
    else:
        assert cfg.angles is not None
        layout = blocked_layout(spec)
        for theta, phi, lam in cfg.angles:
            for method in cfg.methods:
                row = _base_row(cfg, spec) | diag
                row["theta"], row["phi"], row["lambda"] = theta, phi, lam
                row["method"] = method
                row["fidelity"] = fidelity.unitary_fidelity(state, layout, theta, phi, lam)
                rows.append(row)

    wall = int(round((time.perf_counter() - t0) * 1000))
    for row in rows:
        row["wall_time_ms"] = wall
    return rows, hit


def _run_points(
    cfg: ExperimentConfig,
    values: Sequence[float | None],
    cache_dir: str | None,
    jobs: int,
    as_ground_state: bool = False,
) -> tuple[list[dict[str, Any]], int]:
    """Evaluate grid points, possibly in parallel; row order follows values."""
    rows: list[dict[str, Any]] = []
    hits = 0
    if jobs > 1 and len(values) > 1:
        with ProcessPoolExecutor(max_workers=jobs) as pool:
            results = pool.map(
                _point_rows,
                [cfg] * len(values),
                values,
                [cache_dir] * len(values),
                [as_ground_state] * len(values),
            )
            for point_rows, hit in results:
                rows.extend(point_rows)
                hits += hit
    else:
        for value in values:
            point_rows, hit = _point_rows(cfg, value, cache_dir, as_ground_state)
            rows.extend(point_rows)
            hits += hit
    return rows, hits


# --- output ------------------------------------------------------------------


def _write_csv(path: Path, rows: list[dict[str, Any]]) -> int:
    warn_rows = sum(1 for row in rows if row.pop("_warnings", 0))
    with path.open("w", encoding="utf-8", newline="") as fh:
        writer = csv.writer(fh, lineterminator="\n")
        writer.writerow(CSV_COLUMNS)
        for row in rows:
            writer.writerow([_fmt(row.get(column)) for column in CSV_COLUMNS])
    return warn_rows


def _write_manifest(
    out_dir: Path, command: str, config_path: Path, csv_name: str, rows: int, args: Any, seed: int
) -> None:
    manifest = {
        "format_version": 1,
        "command": command,
        "library_version": __version__,
        "config_sha256": hashlib.sha256(config_path.read_bytes()).hexdigest(),
        "seed": seed,
        "jobs": args.jobs,
        "csv": csv_name,
        "rows": rows,
    }
    path = out_dir / "manifest.json"
    path.write_text(json.dumps(manifest, indent=2, sort_keys=True) + "\n")


def _render_plot(
    rows: list[dict[str, Any]], x_column: str, out_path: Path, group_keys: Sequence[str]
) -> None:
    try:
        import matplotlib
    except ImportError as exc:
        raise ConfigError("--plot needs matplotlib (pip install 'haldane-mbqc[plot]')") from exc
    matplotlib.use("Agg")
    import matplotlib.pyplot as plt

    series: dict[str, tuple[list[float], list[float]]] = {}
    for row in rows:
        if row.get(x_column) is None or row.get("fidelity") is None:
            continue
        label = ", ".join(
            f"{key}={_fmt(row[key])}" for key in group_keys if row.get(key) is not None
        )
        xs, ys = series.setdefault(label or row["method"], ([], []))
        xs.append(float(row[x_column]))
        ys.append(float(row["fidelity"]))

    fig, ax = plt.subplots(figsize=(6.0, 4.0))
    for label, (xs, ys) in series.items():
        order = np.argsort(xs)
        ax.plot(np.asarray(xs)[order], np.asarray(ys)[order], marker="o", ms=3, label=label)
    ax.set_xlabel(x_column)
    ax.set_ylabel("fidelity")
    ax.grid(True, alpha=0.3)
    if series:
        ax.legend(fontsize=8)
    fig.tight_layout()
    fig.savefig(out_path, dpi=150)
    plt.close(fig)


# --- subcommands -------------------------------------------------------------


def _finish(
    args: Any,
    command: str,
    rows: list[dict[str, Any]],
    hits: int = 0,
    plot_x: str | None = None,
    plot_groups: Sequence[str] = (),
) -> None:
    out_dir = Path(args.out)
    out_dir.mkdir(parents=True, exist_ok=True)
    csv_name = command.replace("-", "_") + ".csv"
    if args.plot and plot_x is not None:
        _render_plot(rows, plot_x, out_dir / (command.replace("-", "_") + ".png"), plot_groups)
    seed = rows[0]["seed"] if rows else (args.seed or 0)
    warn_rows = _write_csv(out_dir / csv_name, rows)
    _write_manifest(out_dir, command, Path(args.config), csv_name, len(rows), args, seed)
    if hits:
        print(f"cache hit: reused {hits} ground state{'s' if hits > 1 else ''}")
    if warn_rows:
        print(
            f"note: {warn_rows} haldane_closed_form row{'s' if warn_rows > 1 else ''} "
            "outside the Haldane phase (identity fidelity < 0.999); treat as advisory"
        )
    print(f"wrote {out_dir / csv_name} ({len(rows)} rows)")


def _cmd_ground_state(args: Any) -> int:
    cfg = load_config(Path(args.config), args.seed, need_gates=False)
    rows, hits = _run_points(cfg, [None], args.cache, args.jobs, as_ground_state=True)
    row = rows[0]
    print(
        f"E = {row['energy']:.12g}  variance = {row['variance']:.3e}  "
        f"converged = {_fmt(row['converged'])}  F_identity = {row['fidelity']:.10g}"
    )
    _finish(args, "ground-state", rows, hits)
    return EXIT_OK


def _cmd_fidelity_rz(args: Any) -> int:
    cfg = load_config(Path(args.config), args.seed, need_gates=True)
    if cfg.gate_kind != "rz":
        raise ConfigError("fidelity-rz needs [gates] kind = 'rz'")
    rows, hits = _run_points(cfg, [None], args.cache, args.jobs)
    _finish(args, "fidelity-rz", rows, hits, plot_x="theta", plot_groups=("method",))
    return EXIT_OK


def _cmd_fidelity_unitary(args: Any) -> int:
    cfg = load_config(Path(args.config), args.seed, need_gates=True)
    if cfg.gate_kind != "unitary":
        raise ConfigError("fidelity-unitary needs [gates] kind = 'unitary'")
    rows, hits = _run_points(cfg, [None], args.cache, args.jobs)
    for row in rows:
        print(
            f"U({_fmt(row['theta'])}, {_fmt(row['phi'])}, {_fmt(row['lambda'])}) "
            f"fidelity = {row['fidelity']:.10g}"
        )
    _finish(args, "fidelity-unitary", rows, hits)
    return EXIT_OK


def _cmd_scan(args: Any) -> int:
    cfg = load_config(Path(args.config), args.seed, need_gates=True)
    if cfg.scan_parameter is None or cfg.scan_values is None:
        raise ConfigError("scan needs a [scan] table with parameter and values")
    rows, hits = _run_points(cfg, cfg.scan_values, args.cache, args.jobs)
    print(f"{len(cfg.scan_values)} points along {cfg.scan_parameter}")
    _finish(
        args,
        "scan",
        rows,
        hits,
        plot_x=cfg.scan_parameter,
        plot_groups=("method", "theta", "phi", "lambda"),
    )
    return EXIT_OK


def _cmd_oracle_check(args: Any) -> int:
    cfg = load_config(Path(args.config), args.seed, need_gates=True)
    rows, hits = _run_points(cfg, [None], args.cache, args.jobs)

    spec = cfg.build_spec()
    state, _, _ = _resource_state(cfg.kind, spec, cfg.dmrg, cfg.seed, args.cache)
    vec = to_dense(state)
    dense = DenseState(vec / np.linalg.norm(vec), model.chain_dims(spec))

    worst = 0.0
    oracle_rows: list[dict[str, Any]] = []
    checked: set[tuple] = set()
    for row in rows:
        gate = (row["theta"], row["phi"], row["lambda"])
        if gate in checked:
            continue
        checked.add(gate)
        if cfg.gate_kind == "rz":
            reference = rz_fidelity_oracle(dense, gate[0])
        else:
            reference = unitary_fidelity_oracle(dense, blocked_layout(spec), *gate)
        oracle_row = dict(row)
        oracle_row["method"] = "oracle"
        oracle_row["fidelity"] = reference
        oracle_row.pop("_warnings", None)
        oracle_rows.append(oracle_row)
        for other in rows:
            if (other["theta"], other["phi"], other["lambda"]) == gate:
                delta = abs(other["fidelity"] - reference)
                worst = max(worst, delta)
                label = f"theta={_fmt(gate[0])}" if cfg.gate_kind == "rz" else f"U{gate}"
                print(f"{label} {other['method']}: |formula - oracle| = {delta:.3e}")

    ok = worst <= cfg.oracle_tolerance
    print(
        f"max delta = {worst:.3e} (tolerance {cfg.oracle_tolerance:.1e}): "
        f"{'ok' if ok else 'FAILED'}"
    )
    _finish(args, "oracle-check", rows + oracle_rows, hits)
    return EXIT_OK if ok else EXIT_CHECK_FAILED


def _cmd_aklt_closed_form(args: Any) -> int:
    cfg = load_config(Path(args.config), args.seed, need_gates=True)
    if cfg.kind != "aklt" or cfg.gate_kind != "rz":
        raise ConfigError("aklt-closed-form needs model.kind 'aklt' and rz gates")
    assert cfg.thetas is not None
    spec = cfg.build_spec()
    state, meta, _ = _resource_state("aklt", spec, cfg.dmrg, cfg.seed, None)
    diag = _diagnose(state, meta)

    rows: list[dict[str, Any]] = []
    print(f"{'theta':>12}  {'computed':>18}  {'analytic':>18}  {'|delta|':>10}")
    worst = 0.0
    for theta in cfg.thetas:
        computed = fidelity.rz_fidelity_expansion(state, theta)
        analytic = fidelity.aklt_rz_fidelity(spec.L, theta)
        worst = max(worst, abs(computed - analytic))
        print(f"{theta:12.6f}  {computed:18.14f}  {analytic:18.14f}  {abs(computed - analytic):10.2e}")
        for method, value in (("expansion", computed), ("closed_form", analytic)):
            row = _base_row(cfg, spec) | diag
            row["theta"], row["method"], row["fidelity"] = theta, method, value
            row["wall_time_ms"] = 0
            rows.append(row)
    print(f"max |computed - analytic| = {worst:.3e}")
    _finish(args, "aklt-closed-form", rows, plot_x="theta", plot_groups=("method",))
    return EXIT_OK


_COMMANDS = {
    "ground-state": _cmd_ground_state,
    "fidelity-rz": _cmd_fidelity_rz,
    "fidelity-unitary": _cmd_fidelity_unitary,
    "scan": _cmd_scan,
    "oracle-check": _cmd_oracle_check,
    "aklt-closed-form": _cmd_aklt_closed_form,
}


def _build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(
        prog="haldane-mbqc",
        description="Gate-fidelity experiments on spin-1 chain resource states.",
    )
    parser.add_argument("--version", action="version", version=f"%(prog)s {__version__}")
    shared = argparse.ArgumentParser(add_help=False)
    shared.add_argument("--config", required=True, help="TOML experiment config")
    shared.add_argument("--out", default=".", help="output directory (default: .)")
    shared.add_argument("--jobs", type=int, default=1, help="parallel grid workers")
    shared.add_argument("--seed", type=int, default=None, help="override the config seed")
    shared.add_argument("--cache", default=None, help="ground-state cache directory")
    shared.add_argument("--plot", action="store_true", help="also render a PNG")
    sub = parser.add_subparsers(dest="command", required=True, metavar="SUBCOMMAND")
    for name in _COMMANDS:
        sub.add_parser(name, parents=[shared], help=f"run {name.replace('-', ' ')}")
    return parser


def main(argv: Sequence[str] | None = None) -> int:
    args = _build_parser().parse_args(argv)
    if args.jobs < 1:
        print("error: --jobs must be >= 1", file=sys.stderr)
        return EXIT_BAD_CONFIG
    try:
        return _COMMANDS[args.command](args)
    except ConfigError as exc:
        print(f"error: {exc}", file=sys.stderr)
        return EXIT_BAD_CONFIG
    except OSError as exc:
        print(f"I/O error: {exc}", file=sys.stderr)
        return EXIT_IO


if __name__ == "__main__":
    sys.exit(main())
