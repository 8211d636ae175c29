"""Scenario configuration: strict JSON schema with named-field errors.

Unknown keys are rejected everywhere; a silent typo in a scientific
config is worse than a loud failure. Flag overrides are applied on top
of the parsed file and the effective config is echoed next to the
outputs so any run can be reproduced exactly.
"""
import json
import os
from dataclasses import dataclass, field

from .assignment import AssignmentParams
from .errors import ConfigError
from .orbits import GroundStation, WalkerShell
from .protocol import DelayProfile, Protocol

_NUM = (int, float)

_SHELL_KEYS = {
    "planes": int,
    "sats_per_plane": int,
    "inclination_deg": _NUM,
    "altitude_km": _NUM,
    "phasing_factor": int,
    "raan_span_deg": _NUM,
}
_STATION_KEYS = {"name": str, "latitude_deg": _NUM, "longitude_deg": _NUM, "altitude_m": _NUM}
_TOPOLOGY_KEYS = {
    "snapshot_dt_s": _NUM,
    "min_elevation_deg": _NUM,
    "isl_mode": str,
    "gsl_limit": (int, type(None)),
    "terrestrial_factor": _NUM,
}
_PLACEMENT_KEYS = {"k": int, "clusters": int, "method": str, "eval_on_full": bool}
_ASSIGNMENT_KEYS = {"sample_dt_s": _NUM, "decide_dt_s": _NUM, "delta": _NUM, "metric": str}
_DELAY_KEYS = {
    "controller_process": _NUM,
    "persist": _NUM,
    "client_init": _NUM,
    "status_report_process": _NUM,
    "pod_stop": _NUM,
    "pod_start": _NUM,
    "drain_per_pod": _NUM,
    "register": _NUM,
    "legacy_cleanup": _NUM,
    "auth_roundtrips": int,
}
_OPT_NUM = _NUM + (type(None),)
_PROTOCOL_KEYS = {
    "type": str,
    "report_interval_s": _NUM,
    "grace_s": _OPT_NUM,
    "pods_per_sat": int,
    "delays": dict,
    "constant_latency_ms": _OPT_NUM,
}
_SIM_KEYS = {"duration_s": _NUM}
_TOP_KEYS = {
    "seed": int,
    "shell": dict,
    "stations": (list, dict),
    "topology": dict,
    "placement": dict,
    "assignment": dict,
    "protocol": dict,
    "sim": dict,
}

_METHODS = {"cnpa", "exhaustive", "random", "single"}


@dataclass
class ScenarioConfig:
    seed: int
    shell: WalkerShell
    stations: list
    snapshot_dt_s: float
    min_elevation_deg: float
    isl_mode: str
    gsl_limit: int | None
    terrestrial_factor: float
    k: int
    clusters: int
    method: str
    eval_on_full: bool
    assignment: AssignmentParams
    metric: str
    protocol: Protocol
    report_interval_s: float
    grace_s: float | None
    pods_per_sat: int
    delays: DelayProfile
    constant_latency_ms: float | None
    duration_s: float
    raw: dict = field(repr=False, default_factory=dict)


def _check_keys(section: dict, allowed: dict, where: str, required=()):
    for key in section:
        if key not in allowed:
            raise ConfigError(f"unknown key {key!r} in {where}")
        expected = allowed[key]
        kinds = expected if isinstance(expected, tuple) else (expected,)
        if isinstance(section[key], bool) and bool not in kinds:
            raise ConfigError(f"{where}.{key} must not be a bool")
        if not isinstance(section[key], expected):
            raise ConfigError(f"{where}.{key} has wrong type {type(section[key]).__name__}")
    for key in required:
        if key not in section:
            raise ConfigError(f"missing required key {key!r} in {where}")


def _load_stations(raw, base_dir):
    if isinstance(raw, dict):
        _check_keys(raw, {"file": str}, "stations", required=("file",))
        path = raw["file"]
        if not os.path.isabs(path):
            path = os.path.join(base_dir, path)
        if not os.path.exists(path):
            raise ConfigError(f"stations.file does not exist: {path}")
        with open(path) as fh:
            raw = json.load(fh)
    if not isinstance(raw, list) or not raw:
        raise ConfigError("stations must be a non-empty list")
    stations = []
    for i, st in enumerate(raw):
        _check_keys(st, _STATION_KEYS, f"stations[{i}]",
                    required=("name", "latitude_deg", "longitude_deg"))
        try:
            stations.append(
                GroundStation(
                    gs_id=i,
                    name=st["name"],
                    latitude_deg=float(st["latitude_deg"]),
                    longitude_deg=float(st["longitude_deg"]),
                    altitude_m=float(st.get("altitude_m", 0.0)),
                )
            )
        except ValueError as exc:
            raise ConfigError(f"stations[{i}]: {exc}") from exc
    return stations


def parse_config(raw: dict, base_dir: str = ".") -> ScenarioConfig:
    _check_keys(raw, _TOP_KEYS, "config", required=("shell", "stations", "sim"))

    shell_raw = raw["shell"]
    _check_keys(shell_raw, _SHELL_KEYS, "shell",
                required=("planes", "sats_per_plane", "inclination_deg", "altitude_km"))
    try:
        shell = WalkerShell(
            planes=shell_raw["planes"],
            sats_per_plane=shell_raw["sats_per_plane"],
            inclination_deg=float(shell_raw["inclination_deg"]),
            altitude_km=float(shell_raw["altitude_km"]),
            phasing_factor=shell_raw.get("phasing_factor", 0),
            raan_span_deg=float(shell_raw.get("raan_span_deg", 360.0)),
        )
    except ValueError as exc:
        raise ConfigError(f"shell: {exc}") from exc

    stations = _load_stations(raw["stations"], base_dir)

    topo = raw.get("topology", {})
    _check_keys(topo, _TOPOLOGY_KEYS, "topology")
    isl_mode = topo.get("isl_mode", "fixed_grid")
    if isl_mode not in ("fixed_grid", "nearest"):
        raise ConfigError(f"topology.isl_mode must be fixed_grid or nearest, got {isl_mode!r}")

    plc = raw.get("placement", {})
    _check_keys(plc, _PLACEMENT_KEYS, "placement")
    method = plc.get("method", "cnpa")
    if method not in _METHODS:
        raise ConfigError(f"placement.method must be one of {sorted(_METHODS)}, got {method!r}")
    k = plc.get("k", 1)
    clusters = plc.get("clusters", 1)
    if not 1 <= k <= len(stations):
        raise ConfigError(f"placement.k must be in [1, {len(stations)}]")

    asg = raw.get("assignment", {})
    _check_keys(asg, _ASSIGNMENT_KEYS, "assignment")
    metric = asg.get("metric", "geometric")
    if metric not in ("geometric", "network"):
        raise ConfigError(f"assignment.metric must be geometric or network, got {metric!r}")
    sim_raw = raw["sim"]
    _check_keys(sim_raw, _SIM_KEYS, "sim", required=("duration_s",))
    duration = float(sim_raw["duration_s"])
    if duration <= 0:
        raise ConfigError("sim.duration_s must be positive")
    try:
        assignment = AssignmentParams(
            horizon_s=duration,
            sample_dt_s=min(float(asg.get("sample_dt_s", 60.0)), duration),
            decide_dt_s=float(asg.get("decide_dt_s", 1.0)),
            delta=float(asg.get("delta", 0.9)),
        )
    except ValueError as exc:
        raise ConfigError(f"assignment: {exc}") from exc

    proto = raw.get("protocol", {})
    _check_keys(proto, _PROTOCOL_KEYS, "protocol")
    proto_type = proto.get("type", "seamless")
    if proto_type not in ("seamless", "legacy"):
        raise ConfigError(f"protocol.type must be seamless or legacy, got {proto_type!r}")
    delays_raw = proto.get("delays", {})
    _check_keys(delays_raw, _DELAY_KEYS, "protocol.delays")
    try:
        delays = DelayProfile(**{**_delay_defaults(), **delays_raw})
    except (TypeError, ValueError) as exc:
        raise ConfigError(f"protocol.delays: {exc}") from exc

    snapshot_dt = float(topo.get("snapshot_dt_s", 60.0))
    if snapshot_dt <= 0 or snapshot_dt > duration:
        raise ConfigError("topology.snapshot_dt_s must be in (0, sim.duration_s]")

    return ScenarioConfig(
        seed=raw.get("seed", 0),
        shell=shell,
        stations=stations,
        snapshot_dt_s=snapshot_dt,
        min_elevation_deg=float(topo.get("min_elevation_deg", 25.0)),
        isl_mode=isl_mode,
        gsl_limit=topo.get("gsl_limit"),
        terrestrial_factor=float(topo.get("terrestrial_factor", 2.0)),
        k=k,
        clusters=clusters,
        method=method,
        eval_on_full=plc.get("eval_on_full", False),
        assignment=assignment,
        metric=metric,
        protocol=Protocol(proto_type),
        report_interval_s=float(proto.get("report_interval_s", 10.0)),
        grace_s=proto.get("grace_s"),
        pods_per_sat=proto.get("pods_per_sat", 1),
        delays=delays,
        constant_latency_ms=proto.get("constant_latency_ms"),
        duration_s=duration,
        raw=raw,
    )


def _delay_defaults() -> dict:
    d = DelayProfile()
    return {k: getattr(d, k) for k in _DELAY_KEYS}


def load_config(path: str) -> ScenarioConfig:
    try:
        with open(path) as fh:
            raw = json.load(fh)
    except FileNotFoundError as exc:
        raise ConfigError(f"config file not found: {path}") from exc
    except json.JSONDecodeError as exc:
        raise ConfigError(f"config is not valid JSON: {exc}") from exc
    return parse_config(raw, base_dir=os.path.dirname(os.path.abspath(path)))


def apply_overrides(raw: dict, overrides: dict) -> dict:
    """Fold non-None CLI flags into the raw config dict."""
    out = json.loads(json.dumps(raw))  # deep copy
    if overrides.get("seed") is not None:
        out["seed"] = overrides["seed"]
    if overrides.get("protocol") is not None:
        out.setdefault("protocol", {})["type"] = overrides["protocol"]
    if overrides.get("method") is not None:
        out.setdefault("placement", {})["method"] = overrides["method"]
    if overrides.get("k") is not None:
        out.setdefault("placement", {})["k"] = overrides["k"]
    if overrides.get("clusters") is not None:
        out.setdefault("placement", {})["clusters"] = overrides["clusters"]
    if overrides.get("delta") is not None:
        out.setdefault("assignment", {})["delta"] = overrides["delta"]
    return out


def stage_seed(seed: int, stage: str) -> int:
    """Deterministic per-stage seed derived from the top-level seed."""
    import hashlib

    digest = hashlib.sha256(f"{seed}:{stage}".encode()).digest()
    return int.from_bytes(digest[:8], "big")
