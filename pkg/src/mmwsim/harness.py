"""Deterministic Monte Carlo sweep harness.

A sweep is the Cartesian product of parameter axes (dotted config-field
paths with value lists) crossed with independent trials.  Every (cell,
trial) pair derives its own PRNG seed from the master seed with a
splitmix64 avalanche mix, so results are independent of execution order
and worker count, and any single trial can be reproduced in isolation.
Results serialize to a stable CSV schema and to deterministic SVG line
plots.
"""

from __future__ import annotations

import copy
import csv
import logging
import time
from concurrent.futures import ProcessPoolExecutor
from dataclasses import dataclass, field, fields, is_dataclass

import numpy as np

from .scenario import ScenarioConfig, draw_scenario, evaluate_scenario
from .svgplot import render_line_plot

__all__ = [
    "PRNG_NAME",
    "SEED_MIX_NAME",
    "CSV_COLUMNS",
    "splitmix64",
    "derive_seed",
    "SweepSpec",
    "ResultRecord",
    "run_sweep",
    "run_trial",
    "write_csv",
    "read_csv",
    "emit_plot",
]

log = logging.getLogger(__name__)

# Names recorded in output metadata so a result file documents how its
# randomness was produced.
PRNG_NAME = "numpy-PCG64"
SEED_MIX_NAME = "splitmix64"

CSV_COLUMNS = (
    "cell_index",
    "trial_index",
    "derived_seed",
    "n_tx",
    "n_rx",
    "n_users",
    "n_streams",
    "scheme",
    "n_clusters",
    "n_rays",
    "distance_m",
    "transmit_power_w",
    "noise_variance_w",
    "circuit_power_w",
    "amp_inefficiency",
    "per_user_ase",
    "sum_ase_bps_hz",
    "asee_bpj_hz",
    "error",
    "wall_time_ms",
)

_MASK64 = (1 << 64) - 1


def splitmix64(value: int) -> int:
    """One avalanche step of the splitmix64 mixer (public-domain constants).

    Maps any 64-bit input to a well-scrambled 64-bit output; consecutive
    inputs give statistically unrelated outputs, which is exactly what the
    seed-derivation scheme needs.
    """
    value = (value + 0x9E3779B97F4A7C15) & _MASK64
    value = ((value ^ (value >> 30)) * 0xBF58476D1CE4E5B9) & _MASK64
    value = ((value ^ (value >> 27)) * 0x94D049BB133111EB) & _MASK64
    return (value ^ (value >> 31)) & _MASK64


def derive_seed(master_seed: int, cell_index: int, trial_index: int) -> int:
    """Per-trial seed: ``mix(mix(mix(master) ^ cell) ^ trial)``.

    Purely a function of its three arguments, so a trial reruns
    identically no matter which worker executes it or in what order.
    """
    if master_seed < 0 or cell_index < 0 or trial_index < 0:
        raise ValueError("master_seed, cell_index and trial_index must be non-negative")
    mixed = splitmix64(master_seed & _MASK64)
    mixed = splitmix64(mixed ^ (cell_index & _MASK64))
    return splitmix64(mixed ^ (trial_index & _MASK64))


def _resolve_field(config: ScenarioConfig, path: str):
    """Walk a dotted field path; return (parent_object, leaf_field_name)."""
    if not path:
        raise ValueError("axis path must be a non-empty dotted field path")
    obj = config
    parts = path.split(".")
    for depth, part in enumerate(parts):
        if not is_dataclass(obj):
            prefix = ".".join(parts[:depth])
            raise ValueError(
                f"axis path {path!r}: {prefix!r} is not a configuration section"
            )
        names = [f.name for f in fields(obj)]
        if part not in names:
            prefix = ".".join(parts[:depth])
            where = f"section {prefix!r}" if prefix else "the scenario config"
            raise ValueError(
                f"axis path {path!r}: unknown field {part!r} in {where}; "
                f"available fields: {', '.join(names)}"
            )
        if depth < len(parts) - 1:
            obj = getattr(obj, part)
    return obj, parts[-1]


@dataclass
class SweepSpec:
    """A base scenario, the axes that vary it, and the trial/seed plan.

    Each axis is a ``(path, values)`` pair where ``path`` is a dotted
    scenario-config field path (e.g. ``"tx_geometry.n_elements"`` or
    ``"power.transmit_power"``).  Cells enumerate the Cartesian product of
    all axis values in row-major order: the first axis varies slowest.
    """

    base: ScenarioConfig = field(default_factory=ScenarioConfig)
    axes: list[tuple[str, list]] = field(default_factory=list)
    n_trials: int = 1
    master_seed: int = 0

    def __post_init__(self) -> None:
        self.axes = [(path, list(values)) for path, values in self.axes]
        self.validate()

    def validate(self) -> None:
        self.base.validate()
        if self.n_trials < 1:
            raise ValueError(f"n_trials must be >= 1, got {self.n_trials}")
        if self.master_seed < 0:
            raise ValueError(f"master_seed must be >= 0, got {self.master_seed}")
        seen = set()
        for path, values in self.axes:
            _resolve_field(self.base, path)
            if path in seen:
                raise ValueError(f"duplicate axis path {path!r}")
            seen.add(path)
            if not values:
                raise ValueError(f"axis {path!r} has an empty value list")

    def n_cells(self) -> int:
        return int(np.prod([len(values) for _, values in self.axes], dtype=int)) \
            if self.axes else 1

    def cell_overrides(self, cell_index: int) -> list[tuple[str, object]]:
        """The (path, value) overrides that define one cell."""
        n = self.n_cells()
        if not (0 <= cell_index < n):
            raise ValueError(f"cell_index must lie in [0, {n}), got {cell_index}")
        if not self.axes:
            return []
        shape = tuple(len(values) for _, values in self.axes)
        indices = np.unravel_index(cell_index, shape)
        return [
            (path, values[int(idx)])
            for (path, values), idx in zip(self.axes, indices)
        ]

    def cell_config(self, cell_index: int) -> ScenarioConfig:
        """The fully resolved scenario config of one cell."""
        config = copy.deepcopy(self.base)
        for path, value in self.cell_overrides(cell_index):
            parent, name = _resolve_field(config, path)
            current = getattr(parent, name)
            # TOML integers are a convenience for float-typed fields.
            if isinstance(current, float) and isinstance(value, int) \
                    and not isinstance(value, bool):
                value = float(value)
            if isinstance(current, tuple) and isinstance(value, list):
                value = tuple(value)
            setattr(parent, name, value)
        config.validate()
        return config


@dataclass
class ResultRecord:
    """One (cell, trial) outcome plus the config values that produced it.

    ``wall_time_ms`` and ``dominant_angles`` are in-memory diagnostics:
    they are carried on the record but never serialized with a value,
    because output files must be byte-identical across reruns and worker
    counts.
    """

    cell_index: int
    trial_index: int
    derived_seed: int
    n_tx: int
    n_rx: int
    n_users: int
    n_streams: int
    scheme: str
    n_clusters: int
    n_rays: int
    distance_m: "float | str"
    transmit_power_w: float
    noise_variance_w: float
    circuit_power_w: float
    amp_inefficiency: float
    per_user_ase: tuple[float, ...] | None = None
    sum_ase: float | None = None
    asee: float | None = None
    error: str = ""
    wall_time_ms: float | None = None
    dominant_angles: tuple[tuple[float, float], ...] | None = None

    def to_row(self) -> dict[str, str]:
        """Serialize to the stable CSV schema (all values as strings)."""
        return {
            "cell_index": str(self.cell_index),
            "trial_index": str(self.trial_index),
            "derived_seed": str(self.derived_seed),
            "n_tx": str(self.n_tx),
            "n_rx": str(self.n_rx),
            "n_users": str(self.n_users),
            "n_streams": str(self.n_streams),
            "scheme": self.scheme,
            "n_clusters": str(self.n_clusters),
            "n_rays": str(self.n_rays),
            "distance_m": _format_number(self.distance_m),
            "transmit_power_w": _format_number(self.transmit_power_w),
            "noise_variance_w": _format_number(self.noise_variance_w),
            "circuit_power_w": _format_number(self.circuit_power_w),
            "amp_inefficiency": _format_number(self.amp_inefficiency),
            "per_user_ase": ";".join(format(v, ".9g") for v in self.per_user_ase)
            if self.per_user_ase is not None else "",
            "sum_ase_bps_hz": _format_number(self.sum_ase),
            "asee_bpj_hz": _format_number(self.asee),
            "error": self.error,
            # Timing varies run to run; the column stays empty on disk.
            "wall_time_ms": "",
        }


def _format_number(value) -> str:
    if value is None:
        return ""
    if isinstance(value, str):
        return value
    if isinstance(value, (int, np.integer)) and not isinstance(value, bool):
        return str(int(value))
    # 9 significant digits: compact, and round-trips through re-parsing
    # to the same printed form.
    return format(float(value), ".9g")


def _distance_label(config: ScenarioConfig) -> "float | str":
    if config.fixed_distance is not None:
        return float(config.fixed_distance)
    lo, hi = config.distance_range
    return f"{_format_number(float(lo))}:{_format_number(float(hi))}"


def run_trial(spec: SweepSpec, cell_index: int, trial_index: int) -> ResultRecord:
    """Execute one (cell, trial) pair; failures become error records.

    Any exception from drawing or evaluating the scenario is captured as
    ``type: message`` in the record's ``error`` field with the metric
    fields left empty, so one bad cell never aborts a sweep.
    """
    config = spec.cell_config(cell_index)
    seed = derive_seed(spec.master_seed, cell_index, trial_index)
    record = ResultRecord(
        cell_index=cell_index,
        trial_index=trial_index,
        derived_seed=seed,
        n_tx=config.tx_geometry.n_elements,
        n_rx=config.rx_geometry.n_elements,
        n_users=config.n_users,
        n_streams=config.n_streams,
        scheme=config.scheme,
        n_clusters=config.channel_params.n_clusters,
        n_rays=config.channel_params.n_rays_per_cluster,
        distance_m=_distance_label(config),
        transmit_power_w=config.power.transmit_power,
        noise_variance_w=config.power.noise_variance,
        circuit_power_w=config.power.per_antenna_circuit_power,
        amp_inefficiency=config.power.amp_inefficiency,
    )
    started = time.perf_counter()
    try:
        rng = np.random.default_rng(seed)
        realization = draw_scenario(config, rng)
        result = evaluate_scenario(realization, config)
    except Exception as exc:  # error rows must not kill the sweep
        record.error = f"{type(exc).__name__}: {exc}"
        log.debug("cell %d trial %d failed: %s", cell_index, trial_index, record.error)
    else:
        record.per_user_ase = tuple(result.per_user_ase)
        record.sum_ase = result.sum_ase
        record.asee = result.asee
        record.dominant_angles = tuple(realization.dominant_angles)
    record.wall_time_ms = (time.perf_counter() - started) * 1e3
    return record


def _run_trial_item(spec: SweepSpec, item: tuple[int, int]) -> ResultRecord:
    return run_trial(spec, item[0], item[1])


def run_sweep(spec: SweepSpec, jobs: int = 1) -> list[ResultRecord]:
    """Run all cells x trials; records return sorted by (cell, trial).

    ``jobs > 1`` distributes trials over a process pool.  Results are
    identical for any worker count because every trial derives its own
    seed and the output order is canonical.

    Every cell's config is resolved and validated before any trial runs,
    so an axis value that produces an invalid configuration fails fast as
    a ValueError instead of surfacing mid-sweep.  (Failures while *running*
    a valid cell still become error records, not exceptions.)
    """
    spec.validate()
    if jobs < 1:
        raise ValueError(f"jobs must be >= 1, got {jobs}")
    for cell in range(spec.n_cells()):
        spec.cell_config(cell)
    work = [
        (cell, trial)
        for cell in range(spec.n_cells())
        for trial in range(spec.n_trials)
    ]
    log.info(
        "sweep: %d cells x %d trials = %d runs on %d worker(s)",
        spec.n_cells(), spec.n_trials, len(work), jobs,
    )
    if jobs == 1 or len(work) == 1:
        records = [run_trial(spec, cell, trial) for cell, trial in work]
    else:
        chunksize = max(1, len(work) // (jobs * 4))
        run_one = _TrialRunner(spec)
        with ProcessPoolExecutor(max_workers=jobs) as pool:
            records = list(pool.map(run_one, work, chunksize=chunksize))
    records.sort(key=lambda r: (r.cell_index, r.trial_index))
    n_failed = sum(1 for r in records if r.error)
    if n_failed:
        log.info("sweep: %d of %d runs produced error records", n_failed, len(records))
    return records


class _TrialRunner:
    """Picklable callable binding a spec for process-pool workers."""

    def __init__(self, spec: SweepSpec):
        self.spec = spec

    def __call__(self, item: tuple[int, int]) -> ResultRecord:
        return _run_trial_item(self.spec, item)


def write_csv(
    records: list[ResultRecord],
    path: str,
    metadata: list[str] | None = None,
) -> None:
    """Write records to ``path`` in the stable CSV schema.

    UTF-8, LF line endings, header row, fixed column order.  Optional
    ``metadata`` lines are written first as ``# ...`` comments.  An empty
    record list is an error: no file is created.
    """
    if not records:
        raise ValueError("no records to write; refusing to create an empty results file")
    rows = [record.to_row() for record in records]
    _write_rows(path, list(CSV_COLUMNS), rows, metadata or [])


def _write_rows(
    path: str,
    columns: list[str],
    rows: list[dict[str, str]],
    metadata: list[str],
) -> None:
    try:
        with open(path, "w", encoding="utf-8", newline="") as handle:
            for line in metadata:
                handle.write(f"# {line}\n" if line else "#\n")
            writer = csv.DictWriter(handle, fieldnames=columns, lineterminator="\n")
            writer.writeheader()
            writer.writerows(rows)
    except OSError as exc:
        raise OSError(f"cannot write results to {path!r}: {exc}") from exc


def read_csv(path: str) -> tuple[list[str], list[dict[str, str]]]:
    """Read a results file back: (metadata lines, rows as string dicts).

    Inverse of :func:`write_csv` at the byte level: writing the returned
    metadata and rows back out reproduces the file exactly.
    """
    try:
        with open(path, encoding="utf-8", newline="") as handle:
            lines = handle.read().split("\n")
    except OSError as exc:
        raise OSError(f"cannot read results from {path!r}: {exc}") from exc
    metadata: list[str] = []
    body_start = 0
    for line in lines:
        if line.startswith("#"):
            metadata.append(line[2:] if line.startswith("# ") else line[1:])
            body_start += 1
        else:
            break
    body = "\n".join(lines[body_start:])
    reader = csv.DictReader(body.splitlines(), lineterminator="\n")
    if reader.fieldnames is None:
        raise ValueError(f"results file {path!r} has no header row")
    missing = [c for c in CSV_COLUMNS if c not in reader.fieldnames]
    if missing:
        raise ValueError(
            f"results file {path!r} is missing expected columns: {', '.join(missing)}"
        )
    return metadata, list(reader)


def rewrite_csv(
    path: str,
    metadata: list[str],
    rows: list[dict[str, str]],
) -> None:
    """Write previously read rows back out (round-trip counterpart)."""
    if not rows:
        raise ValueError("no rows to write; refusing to create an empty results file")
    _write_rows(path, list(CSV_COLUMNS), rows, metadata)


def emit_plot(
    records: "list[ResultRecord] | list[dict[str, str]]",
    x_field: str,
    y_field: str,
    group_field: str | None,
    path: str,
) -> None:
    """Render trial means of ``y_field`` against ``x_field`` to an SVG file.

    Rows are grouped by ``group_field`` (one polyline and one legend entry
    per distinct value; a single unlabeled group when None), y values are
    averaged over trials at each x, and points are sorted by x.  Error
    rows are skipped.  Identical inputs produce byte-identical files.
    """
    rows = [
        record.to_row() if isinstance(record, ResultRecord) else dict(record)
        for record in records
    ]
    if not rows:
        raise ValueError("nothing to plot: no records")
    available = ", ".join(rows[0].keys())
    for name, label in ((x_field, "x"), (y_field, "y"), (group_field, "group")):
        if name is not None and name not in rows[0]:
            raise ValueError(
                f"unknown {label} field {name!r}; available fields: {available}"
            )

    def numeric(row: dict[str, str], fieldname: str) -> float:
        raw = row[fieldname]
        try:
            return float(raw)
        except (TypeError, ValueError):
            raise ValueError(
                f"field {fieldname!r} has non-numeric value {raw!r}; "
                f"pick a numeric column for plotting"
            ) from None

    buckets: dict[tuple[str, float], list[float]] = {}
    kept = 0
    for row in rows:
        if row.get("error"):
            continue
        if row.get(y_field, "") == "":
            continue
        group = row[group_field] if group_field is not None else y_field
        buckets.setdefault((group, numeric(row, x_field)), []).append(numeric(row, y_field))
        kept += 1
    if not kept:
        raise ValueError("nothing to plot: every record is an error row")

    def group_key(label: str):
        try:
            return (0, float(label), "")
        except ValueError:
            return (1, 0.0, label)

    groups = sorted({g for g, _ in buckets}, key=group_key)
    series = []
    for group in groups:
        points = sorted(
            (x, float(np.mean(ys)))
            for (g, x), ys in buckets.items()
            if g == group
        )
        label = group if group_field is None else f"{group_field}={group}"
        series.append((label, points))

    svg = render_line_plot(series, x_label=x_field, y_label=y_field,
                           title=f"{y_field} vs {x_field}")
    try:
        with open(path, "w", encoding="utf-8", newline="") as handle:
            handle.write(svg)
    except OSError as exc:
        raise OSError(f"cannot write plot to {path!r}: {exc}") from exc
