"""TOML configuration: strict parsing and effective-config dumping.

The file format mirrors the configuration dataclasses field for field.
Unknown keys are hard errors (misspelled parameters must not silently
fall back to defaults).  The dump side emits every resolved value as
dotted-key TOML, which is both valid input (the dump re-parses to an
equal configuration) and usable line by line as results-file metadata.
"""

from __future__ import annotations

import json
from dataclasses import dataclass, field

try:
    import tomllib
except ModuleNotFoundError:  # Python 3.10
    import tomli as tomllib

from .channel import ArrayGeometry, ChannelParams, LosProbabilityModel, PathLossModel
from .harness import SweepSpec
from .metrics import PowerModel
from .scenario import HybridParams, ScenarioConfig

__all__ = ["RunConfig", "parse_config", "load_config", "dump_effective_config"]


@dataclass
class RunConfig:
    """Everything a CLI invocation needs: scenario, optional sweep, seed."""

    scenario: ScenarioConfig = field(default_factory=ScenarioConfig)
    sweep: SweepSpec | None = None
    seed: int = 0


def _check_keys(table: dict, allowed: set[str], context: str) -> None:
    unknown = sorted(set(table) - allowed)
    if unknown:
        raise ValueError(
            f"unknown configuration key(s) in {context}: {', '.join(unknown)}; "
            f"allowed keys: {', '.join(sorted(allowed))}"
        )


def _get_int(table: dict, key: str, default: int, context: str) -> int:
    value = table.get(key, default)
    if isinstance(value, bool) or not isinstance(value, int):
        raise ValueError(f"{context}.{key} must be an integer, got {value!r}")
    return value


def _get_float(table: dict, key: str, default: float, context: str) -> float:
    value = table.get(key, default)
    if isinstance(value, bool) or not isinstance(value, (int, float)):
        raise ValueError(f"{context}.{key} must be a number, got {value!r}")
    return float(value)


def _get_str(table: dict, key: str, default: str, context: str) -> str:
    value = table.get(key, default)
    if not isinstance(value, str):
        raise ValueError(f"{context}.{key} must be a string, got {value!r}")
    return value


def _build_geometry(table: dict, context: str, default_elements: int) -> ArrayGeometry:
    _check_keys(table, {"n_elements", "spacing_wavelengths"}, context)
    return ArrayGeometry(
        n_elements=_get_int(table, "n_elements", default_elements, context),
        spacing_wavelengths=_get_float(table, "spacing_wavelengths", 0.5, context),
    )


def _build_channel_params(table: dict, context: str) -> ChannelParams:
    _check_keys(
        table,
        {"n_clusters", "n_rays_per_cluster", "gain_variance", "angle_spread",
         "path_loss_model", "los_probability_model"},
        context,
    )
    defaults = ChannelParams()
    pl_table = table.get("path_loss_model", {})
    _check_keys(pl_table, {"intercept_db", "exponent"}, f"{context}.path_loss_model")
    los_table = table.get("los_probability_model", {})
    _check_keys(
        los_table,
        {"full_prob_distance", "decay_distance", "fixed_probability"},
        f"{context}.los_probability_model",
    )
    fixed_prob = los_table.get("fixed_probability")
    if fixed_prob is not None:
        fixed_prob = _get_float(
            los_table, "fixed_probability", 0.0, f"{context}.los_probability_model"
        )
    return ChannelParams(
        n_clusters=_get_int(table, "n_clusters", defaults.n_clusters, context),
        n_rays_per_cluster=_get_int(
            table, "n_rays_per_cluster", defaults.n_rays_per_cluster, context
        ),
        gain_variance=_get_float(table, "gain_variance", defaults.gain_variance, context),
        angle_spread=_get_float(table, "angle_spread", defaults.angle_spread, context),
        path_loss_model=PathLossModel(
            intercept_db=_get_float(pl_table, "intercept_db", 70.0,
                                    f"{context}.path_loss_model"),
            exponent=_get_float(pl_table, "exponent", 3.4, f"{context}.path_loss_model"),
        ),
        los_probability_model=LosProbabilityModel(
            full_prob_distance=_get_float(los_table, "full_prob_distance", 10.0,
                                          f"{context}.los_probability_model"),
            decay_distance=_get_float(los_table, "decay_distance", 60.0,
                                      f"{context}.los_probability_model"),
            fixed_probability=fixed_prob,
        ),
    )


def _build_power(table: dict, context: str) -> PowerModel:
    _check_keys(
        table,
        {"transmit_power", "noise_variance", "per_antenna_circuit_power",
         "amp_inefficiency"},
        context,
    )
    defaults = PowerModel()
    return PowerModel(
        transmit_power=_get_float(table, "transmit_power", defaults.transmit_power, context),
        noise_variance=_get_float(table, "noise_variance", defaults.noise_variance, context),
        per_antenna_circuit_power=_get_float(
            table, "per_antenna_circuit_power", defaults.per_antenna_circuit_power, context
        ),
        amp_inefficiency=_get_float(
            table, "amp_inefficiency", defaults.amp_inefficiency, context
        ),
    )


def _build_hybrid(table: dict, context: str) -> HybridParams:
    _check_keys(table, {"n_rf_tx", "n_rf_rx", "tol", "max_iter"}, context)
    n_rf_tx = table.get("n_rf_tx")
    if n_rf_tx is not None:
        n_rf_tx = _get_int(table, "n_rf_tx", 0, context)
    n_rf_rx = table.get("n_rf_rx")
    if n_rf_rx is not None:
        n_rf_rx = _get_int(table, "n_rf_rx", 0, context)
    return HybridParams(
        n_rf_tx=n_rf_tx,
        n_rf_rx=n_rf_rx,
        tol=_get_float(table, "tol", 1e-6, context),
        max_iter=_get_int(table, "max_iter", 200, context),
    )


def _build_scenario(table: dict) -> ScenarioConfig:
    context = "scenario"
    _check_keys(
        table,
        {"n_users", "n_streams", "scheme", "min_separation", "distance_range",
         "fixed_distance", "tx_geometry", "rx_geometry", "channel_params",
         "power", "hybrid_params"},
        context,
    )
    defaults = ScenarioConfig()
    distance_range = table.get("distance_range", list(defaults.distance_range))
    if (not isinstance(distance_range, list) or len(distance_range) != 2
            or any(isinstance(v, bool) or not isinstance(v, (int, float))
                   for v in distance_range)):
        raise ValueError(
            f"{context}.distance_range must be a two-element numeric array, "
            f"got {distance_range!r}"
        )
    fixed_distance = table.get("fixed_distance")
    if fixed_distance is not None:
        fixed_distance = _get_float(table, "fixed_distance", 0.0, context)
    return ScenarioConfig(
        n_users=_get_int(table, "n_users", defaults.n_users, context),
        n_streams=_get_int(table, "n_streams", defaults.n_streams, context),
        tx_geometry=_build_geometry(
            table.get("tx_geometry", {}), f"{context}.tx_geometry",
            defaults.tx_geometry.n_elements,
        ),
        rx_geometry=_build_geometry(
            table.get("rx_geometry", {}), f"{context}.rx_geometry",
            defaults.rx_geometry.n_elements,
        ),
        channel_params=_build_channel_params(
            table.get("channel_params", {}), f"{context}.channel_params"
        ),
        power=_build_power(table.get("power", {}), f"{context}.power"),
        scheme=_get_str(table, "scheme", defaults.scheme, context),
        hybrid_params=_build_hybrid(
            table.get("hybrid_params", {}), f"{context}.hybrid_params"
        ),
        min_separation=_get_float(table, "min_separation", defaults.min_separation, context),
        distance_range=(float(distance_range[0]), float(distance_range[1])),
        fixed_distance=fixed_distance,
    )


def _build_sweep(table: dict, scenario: ScenarioConfig) -> SweepSpec:
    context = "sweep"
    _check_keys(table, {"n_trials", "master_seed", "axes"}, context)
    raw_axes = table.get("axes", [])
    if not isinstance(raw_axes, list):
        raise ValueError(f"{context}.axes must be an array of tables, got {raw_axes!r}")
    axes: list[tuple[str, list]] = []
    for index, entry in enumerate(raw_axes):
        where = f"{context}.axes[{index}]"
        if not isinstance(entry, dict):
            raise ValueError(f"{where} must be a table with 'path' and 'values'")
        _check_keys(entry, {"path", "values"}, where)
        path = entry.get("path")
        values = entry.get("values")
        if not isinstance(path, str) or not path:
            raise ValueError(f"{where}.path must be a non-empty string")
        if not isinstance(values, list) or not values:
            raise ValueError(f"{where}.values must be a non-empty array")
        axes.append((path, list(values)))
    return SweepSpec(
        base=scenario,
        axes=axes,
        n_trials=_get_int(table, "n_trials", 1, context),
        master_seed=_get_int(table, "master_seed", 0, context),
    )


def parse_config(text: str) -> RunConfig:
    """Parse TOML text into a validated :class:`RunConfig`."""
    try:
        data = tomllib.loads(text)
    except tomllib.TOMLDecodeError as exc:
        raise ValueError(f"invalid TOML: {exc}") from None
    _check_keys(data, {"seed", "scenario", "sweep"}, "the top level")
    seed = _get_int(data, "seed", 0, "top level")
    if seed < 0:
        raise ValueError(f"seed must be >= 0, got {seed}")
    scenario_table = data.get("scenario", {})
    if not isinstance(scenario_table, dict):
        raise ValueError("scenario must be a table")
    scenario = _build_scenario(scenario_table)
    sweep = None
    if "sweep" in data:
        if not isinstance(data["sweep"], dict):
            raise ValueError("sweep must be a table")
        sweep = _build_sweep(data["sweep"], scenario)
    return RunConfig(scenario=scenario, sweep=sweep, seed=seed)


def load_config(path: str) -> RunConfig:
    """Read and parse a TOML configuration file."""
    try:
        with open(path, encoding="utf-8") as handle:
            text = handle.read()
    except OSError as exc:
        raise ValueError(f"cannot read config file {path!r}: {exc}") from exc
    try:
        return parse_config(text)
    except ValueError as exc:
        raise ValueError(f"{path}: {exc}") from None


def _toml_value(value) -> str:
    if isinstance(value, bool):
        return "true" if value else "false"
    if isinstance(value, int):
        return str(value)
    if isinstance(value, float):
        return repr(value)  # shortest round-trip form, valid TOML
    if isinstance(value, str):
        return json.dumps(value)
    if isinstance(value, (list, tuple)):
        return "[" + ", ".join(_toml_value(v) for v in value) + "]"
    raise TypeError(f"cannot render {value!r} as TOML")


def dump_effective_config(config: RunConfig) -> str:
    """Render the fully resolved configuration as dotted-key TOML.

    Every line is ``dotted.path = value`` with all defaults filled in, so
    the text is simultaneously a complete re-parseable config file and a
    set of self-describing metadata lines.  Unset optional fields are
    omitted (absent means unset).
    """
    s = config.scenario
    lines = [
        f"seed = {_toml_value(config.seed)}",
        f"scenario.n_users = {_toml_value(s.n_users)}",
        f"scenario.n_streams = {_toml_value(s.n_streams)}",
        f"scenario.scheme = {_toml_value(s.scheme)}",
        f"scenario.min_separation = {_toml_value(s.min_separation)}",
        f"scenario.distance_range = {_toml_value(list(s.distance_range))}",
    ]
    if s.fixed_distance is not None:
        lines.append(f"scenario.fixed_distance = {_toml_value(s.fixed_distance)}")
    for name, geom in (("tx_geometry", s.tx_geometry), ("rx_geometry", s.rx_geometry)):
        lines.append(f"scenario.{name}.n_elements = {_toml_value(geom.n_elements)}")
        lines.append(
            f"scenario.{name}.spacing_wavelengths = {_toml_value(geom.spacing_wavelengths)}"
        )
    cp = s.channel_params
    lines.extend([
        f"scenario.channel_params.n_clusters = {_toml_value(cp.n_clusters)}",
        f"scenario.channel_params.n_rays_per_cluster = {_toml_value(cp.n_rays_per_cluster)}",
        f"scenario.channel_params.gain_variance = {_toml_value(cp.gain_variance)}",
        f"scenario.channel_params.angle_spread = {_toml_value(cp.angle_spread)}",
        f"scenario.channel_params.path_loss_model.intercept_db = "
        f"{_toml_value(cp.path_loss_model.intercept_db)}",
        f"scenario.channel_params.path_loss_model.exponent = "
        f"{_toml_value(cp.path_loss_model.exponent)}",
        f"scenario.channel_params.los_probability_model.full_prob_distance = "
        f"{_toml_value(cp.los_probability_model.full_prob_distance)}",
        f"scenario.channel_params.los_probability_model.decay_distance = "
        f"{_toml_value(cp.los_probability_model.decay_distance)}",
    ])
    if cp.los_probability_model.fixed_probability is not None:
        lines.append(
            f"scenario.channel_params.los_probability_model.fixed_probability = "
            f"{_toml_value(cp.los_probability_model.fixed_probability)}"
        )
    pw = s.power
    lines.extend([
        f"scenario.power.transmit_power = {_toml_value(pw.transmit_power)}",
        f"scenario.power.noise_variance = {_toml_value(pw.noise_variance)}",
        f"scenario.power.per_antenna_circuit_power = "
        f"{_toml_value(pw.per_antenna_circuit_power)}",
        f"scenario.power.amp_inefficiency = {_toml_value(pw.amp_inefficiency)}",
    ])
    hp = s.hybrid_params
    if hp.n_rf_tx is not None:
        lines.append(f"scenario.hybrid_params.n_rf_tx = {_toml_value(hp.n_rf_tx)}")
    if hp.n_rf_rx is not None:
        lines.append(f"scenario.hybrid_params.n_rf_rx = {_toml_value(hp.n_rf_rx)}")
    lines.append(f"scenario.hybrid_params.tol = {_toml_value(hp.tol)}")
    lines.append(f"scenario.hybrid_params.max_iter = {_toml_value(hp.max_iter)}")
    if config.sweep is not None:
        sw = config.sweep
        lines.append(f"sweep.n_trials = {_toml_value(sw.n_trials)}")
        lines.append(f"sweep.master_seed = {_toml_value(sw.master_seed)}")
        if sw.axes:
            rendered = ", ".join(
                "{path = " + _toml_value(path) + ", values = " + _toml_value(values) + "}"
                for path, values in sw.axes
            )
            lines.append(f"sweep.axes = [{rendered}]")
    return "\n".join(lines) + "\n"
