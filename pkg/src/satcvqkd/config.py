"""JSON run-configuration schema with the reference link parameters baked in.

A minimal config only picks a protocol and a sweep; every other knob
defaults to the reference values (1550 nm, 0.3 m / 1 m apertures, 0.9
optics efficiencies, 0.1 pointing loss, 20 km atmosphere, daylight noise
budget, 50 MHz repetition rate, N = 1e11, good atmosphere).
"""

from __future__ import annotations

import json
import re
from dataclasses import dataclass, field
from typing import Any

from .channel import AtmosphericConditions, OpticalTerminals
from .errors import ConfigError
from .finite_size import MD, MLC_MSD, FiniteSizeParams
from .gaussian import DAYLIGHT_NOISE, Detection, NoiseBudget
from .pipeline import LinkSetup, ProtocolSpec, ReconciliationSpec
from .qam import Binomial, DiscreteGaussian

SCHEMA_VERSION = 1

GOOD_CONDITIONS = AtmosphericConditions(visibility_km=200.0, cn2=1e-16)
BAD_CONDITIONS = AtmosphericConditions(visibility_km=20.0, cn2=1e-13)

DEFAULT_MODULATION_VARIANCE = {"gm": 5.0, "psk": 0.5, "qam": 2.0}
DEFAULT_DETECTION = {
    "gm": Detection.HOMODYNE,
    "psk": Detection.HOMODYNE,
    "qam": Detection.HETERODYNE,
}

_PROTOCOL_SHORTHAND = re.compile(r"^(gm|psk(2|4|8)|qam(16|64|256))$")


@dataclass(frozen=True)
class SweepSpec:
    altitudes_m: tuple[float, ...]
    elevations_deg: tuple[float, ...]


@dataclass(frozen=True)
class PassSpec:
    satellite_altitude_m: float
    profile_path: str | None = None
    synth_max_elevation_deg: float | None = None
    synth_sample_dt_s: float = 1.0
    ogs_altitude_m: float = 0.0
    keyhole_ceiling_deg: float | None = None
    bin_width_deg: float = 1.0

    @property
    def synthesized(self) -> bool:
        return self.profile_path is None


@dataclass(frozen=True)
class RunPlan:
    """A fully resolved configuration, ready to execute."""

    protocols: tuple[ProtocolSpec, ...]
    setup: LinkSetup
    reconciliation: ReconciliationSpec
    finite: FiniteSizeParams
    sweep: SweepSpec | None = None
    pass_spec: PassSpec | None = None
    resolved: dict[str, Any] = field(default_factory=dict)  # canonical echo


def _expect_mapping(value: Any, where: str) -> dict:
    if not isinstance(value, dict):
        raise ConfigError(f"{where} must be an object, got {type(value).__name__}")
    return value


def _get_number(mapping: dict, key: str, default: float, where: str) -> float:
    value = mapping.get(key, default)
    if not isinstance(value, (int, float)) or isinstance(value, bool):
        raise ConfigError(f"{where}.{key} must be a number, got {value!r}")
    return float(value)


def _parse_protocol(raw: Any) -> ProtocolSpec:
    if isinstance(raw, str):
        token = raw.strip().lower().replace("-", "")
        if not _PROTOCOL_SHORTHAND.match(token):
            raise ConfigError(
                f"unknown protocol {raw!r}; use gm, psk2/psk4/psk8, "
                "qam16/qam64/qam256 or an object"
            )
        if token == "gm":
            raw = {"kind": "gm"}
        elif token.startswith("psk"):
            raw = {"kind": "psk", "states": int(token[3:])}
        else:
            m_total = int(token[3:])
            raw = {"kind": "qam", "states": m_total}
    mapping = _expect_mapping(raw, "protocol")
    kind = mapping.get("kind")
    if kind not in ("gm", "psk", "qam"):
        raise ConfigError(f"protocol.kind must be gm/psk/qam, got {kind!r}")

    detection_raw = mapping.get("detection")
    if detection_raw is None:
        detection = DEFAULT_DETECTION[kind]
    else:
        try:
            detection = Detection(detection_raw)
        except ValueError:
            raise ConfigError(f"protocol.detection must be homodyne/heterodyne, got {detection_raw!r}")
    v_a = _get_number(
        mapping, "modulation_variance_snu", DEFAULT_MODULATION_VARIANCE[kind], "protocol"
    )

    if kind == "gm":
        return ProtocolSpec(kind="gm", detection=detection, modulation_variance=v_a)
    if kind == "psk":
        states = mapping.get("states")
        if states not in (2, 4, 8):
            raise ConfigError(f"protocol.states must be 2, 4 or 8 for psk, got {states!r}")
        return ProtocolSpec(
            kind="psk", detection=detection, modulation_variance=v_a, psk_states=states
        )
    states = mapping.get("states")
    if states is not None:
        side = int(round(states**0.5))
        if side * side != states or side < 2:
            raise ConfigError(f"protocol.states must be a square >= 4 for qam, got {states!r}")
    else:
        side = mapping.get("side")
        if not isinstance(side, int) or side < 2:
            raise ConfigError("qam protocol needs states (square) or side >= 2")
    dist_raw = mapping.get("distribution", "binomial")
    if dist_raw == "binomial":
        distribution: Any = Binomial()
    elif isinstance(dist_raw, dict) and dist_raw.get("kind") == "discrete_gaussian":
        distribution = DiscreteGaussian(nu=_get_number(dist_raw, "nu", 1.0, "distribution"))
    else:
        raise ConfigError(
            f"protocol.distribution must be 'binomial' or "
            f"{{kind: discrete_gaussian, nu: ...}}, got {dist_raw!r}"
        )
    return ProtocolSpec(
        kind="qam",
        detection=detection,
        modulation_variance=v_a,
        qam_side=side,
        qam_distribution=distribution,
    )


def _parse_conditions(raw: Any) -> AtmosphericConditions:
    if raw is None or raw == "good":
        return GOOD_CONDITIONS
    if raw == "bad":
        return BAD_CONDITIONS
    mapping = _expect_mapping(raw, "conditions")
    try:
        return AtmosphericConditions(
            visibility_km=_get_number(mapping, "visibility_km", 200.0, "conditions"),
            cn2=_get_number(mapping, "cn2", 1e-16, "conditions"),
            outage_probability=_get_number(
                mapping, "outage_probability", 1e-6, "conditions"
            ),
        )
    except ValueError as exc:
        raise ConfigError(str(exc))


def _parse_terminals(raw: Any) -> OpticalTerminals:
    if raw is None:
        return OpticalTerminals()
    mapping = _expect_mapping(raw, "terminals")
    try:
        return OpticalTerminals(
            wavelength_m=_get_number(mapping, "wavelength_nm", 1550.0, "terminals") * 1e-9,
            transmitter_aperture_m=_get_number(
                mapping, "transmitter_aperture_m", 0.3, "terminals"
            ),
            receiver_aperture_m=_get_number(
                mapping, "receiver_aperture_m", 1.0, "terminals"
            ),
            transmitter_efficiency=_get_number(
                mapping, "transmitter_efficiency", 0.9, "terminals"
            ),
            receiver_efficiency=_get_number(
                mapping, "receiver_efficiency", 0.9, "terminals"
            ),
            pointing_loss=_get_number(mapping, "pointing_loss", 0.1, "terminals"),
        )
    except ValueError as exc:
        raise ConfigError(str(exc))


def _parse_noise(raw: Any) -> NoiseBudget:
    if raw is None:
        return DAYLIGHT_NOISE
    mapping = _expect_mapping(raw, "noise")
    try:
        return NoiseBudget(
            channel_excess=_get_number(
                mapping, "channel_excess_snu", DAYLIGHT_NOISE.channel_excess, "noise"
            ),
            detector_excess=_get_number(
                mapping, "detector_excess_snu", DAYLIGHT_NOISE.detector_excess, "noise"
            ),
            detector_efficiency=_get_number(mapping, "detector_efficiency", 1.0, "noise"),
        )
    except ValueError as exc:
        raise ConfigError(str(exc))


def _parse_reconciliation(raw: Any) -> ReconciliationSpec:
    if raw is None:
        return ReconciliationSpec(kind="asymptotic", beta_asymptotic=0.9)
    if isinstance(raw, str):
        raw = {"kind": raw}
    mapping = _expect_mapping(raw, "reconciliation")
    kind = str(mapping.get("kind", "asymptotic")).lower().replace("-", "_")
    if kind == "asymptotic":
        return ReconciliationSpec(
            kind="asymptotic",
            beta_asymptotic=_get_number(mapping, "beta", 0.9, "reconciliation"),
        )
    if kind == "md":
        return ReconciliationSpec(kind="finite", model=MD)
    if kind == "mlc_msd":
        return ReconciliationSpec(kind="finite", model=MLC_MSD)
    raise ConfigError(
        f"reconciliation.kind must be asymptotic/md/mlc_msd, got {mapping.get('kind')!r}"
    )


def _parse_finite(raw: Any) -> FiniteSizeParams:
    if raw is None:
        return FiniteSizeParams()
    mapping = _expect_mapping(raw, "finite_size")
    try:
        return FiniteSizeParams(
            repetition_rate_hz=_get_number(mapping, "repetition_rate_hz", 50e6, "finite_size"),
            discretisation=int(_get_number(mapping, "discretisation", 5, "finite_size")),
            smoothing=_get_number(mapping, "smoothing", 2e-10, "finite_size"),
            security=_get_number(mapping, "security", 1e-9, "finite_size"),
            total_symbols=_get_number(mapping, "total_symbols", 1e11, "finite_size"),
        )
    except ValueError as exc:
        raise ConfigError(str(exc))


def _parse_sweep(raw: Any) -> SweepSpec:
    mapping = _expect_mapping(raw, "sweep")
    alt_raw = mapping.get("altitude_km")
    if isinstance(alt_raw, list):
        altitudes_km = [float(a) for a in alt_raw]
    elif isinstance(alt_raw, dict):
        start = _get_number(alt_raw, "start", 200.0, "sweep.altitude_km")
        stop = _get_number(alt_raw, "stop", 1000.0, "sweep.altitude_km")
        step = _get_number(alt_raw, "step", 50.0, "sweep.altitude_km")
        if step <= 0.0 or stop < start:
            raise ConfigError("sweep.altitude_km needs step > 0 and stop >= start")
        count = int((stop - start) / step + 1e-9) + 1
        altitudes_km = [start + i * step for i in range(count)]
    else:
        raise ConfigError("sweep.altitude_km must be a list or {start, stop, step}")
    elevations = mapping.get("elevation_deg", [90.0])
    if not isinstance(elevations, list) or not elevations:
        raise ConfigError("sweep.elevation_deg must be a non-empty list")
    return SweepSpec(
        altitudes_m=tuple(a * 1000.0 for a in altitudes_km),
        elevations_deg=tuple(float(e) for e in elevations),
    )


def _parse_pass(raw: Any) -> PassSpec:
    mapping = _expect_mapping(raw, "pass")
    profile_path = mapping.get("profile_csv")
    synth = mapping.get("synthesize")
    if (profile_path is None) == (synth is None):
        raise ConfigError("pass needs exactly one of profile_csv or synthesize")
    keyhole = mapping.get("keyhole_ceiling_deg")
    if keyhole is not None:
        keyhole = float(keyhole)
    ogs_km = _get_number(mapping, "ogs_altitude_km", 0.0, "pass")
    bin_width = _get_number(mapping, "bin_width_deg", 1.0, "pass")
    if synth is not None:
        synth = _expect_mapping(synth, "pass.synthesize")
        return PassSpec(
            satellite_altitude_m=_get_number(
                synth, "altitude_km", 417.5, "pass.synthesize"
            ) * 1000.0,
            synth_max_elevation_deg=_get_number(
                synth, "max_elevation_deg", 87.6, "pass.synthesize"
            ),
            synth_sample_dt_s=_get_number(synth, "sample_dt_s", 1.0, "pass.synthesize"),
            ogs_altitude_m=ogs_km * 1000.0,
            keyhole_ceiling_deg=keyhole,
            bin_width_deg=bin_width,
        )
    if "altitude_km" not in mapping:
        raise ConfigError("pass over a measured profile needs pass.altitude_km")
    return PassSpec(
        satellite_altitude_m=_get_number(mapping, "altitude_km", 0.0, "pass") * 1000.0,
        profile_path=str(profile_path),
        ogs_altitude_m=ogs_km * 1000.0,
        keyhole_ceiling_deg=keyhole,
        bin_width_deg=bin_width,
    )


def resolve(config: dict[str, Any], need: str) -> RunPlan:
    """Validate a configuration mapping and fill in all defaults.

    ``need`` is "sweep", "pass" or "compare" and controls which sections are
    required.
    """
    if not isinstance(config, dict):
        raise ConfigError("configuration must be a JSON object")
    version = config.get("schema_version", SCHEMA_VERSION)
    if version != SCHEMA_VERSION:
        raise ConfigError(f"unsupported schema_version {version!r} (expected {SCHEMA_VERSION})")
    known = {
        "schema_version", "protocol", "protocols", "conditions", "terminals",
        "noise", "geometry", "reconciliation", "finite_size", "sweep", "pass",
    }
    unknown = set(config) - known
    if unknown:
        raise ConfigError(f"unknown configuration keys: {sorted(unknown)}")

    if need == "compare":
        raw_protocols = config.get("protocols")
        if not isinstance(raw_protocols, list) or not raw_protocols:
            raise ConfigError("compare needs a non-empty 'protocols' list")
        protocols = tuple(_parse_protocol(p) for p in raw_protocols)
    else:
        if "protocol" not in config:
            raise ConfigError("configuration needs a 'protocol'")
        protocols = (_parse_protocol(config["protocol"]),)

    geometry = _expect_mapping(config.get("geometry", {}), "geometry")
    setup = LinkSetup(
        terminals=_parse_terminals(config.get("terminals")),
        conditions=_parse_conditions(config.get("conditions")),
        noise=_parse_noise(config.get("noise")),
        ogs_altitude_m=_get_number(geometry, "ogs_altitude_km", 0.0, "geometry") * 1000.0,
        atmosphere_thickness_m=_get_number(
            geometry, "atmosphere_thickness_km", 20.0, "geometry"
        ) * 1000.0,
        earth_radius_m=_get_number(geometry, "earth_radius_km", 6371.0, "geometry") * 1000.0,
    )
    reconciliation = _parse_reconciliation(config.get("reconciliation"))
    finite = _parse_finite(config.get("finite_size"))

    if reconciliation.kind == "finite":
        for protocol in protocols:
            if protocol.kind != "gm":
                raise ConfigError(
                    "finite-size reconciliation is only established for the GM "
                    f"protocol; remove {protocol.label} or use asymptotic"
                )

    sweep = None
    pass_spec = None
    if need in ("sweep", "compare"):
        if "sweep" not in config:
            raise ConfigError(f"{need} needs a 'sweep' section")
        sweep = _parse_sweep(config["sweep"])
    if need == "pass":
        if "pass" not in config:
            raise ConfigError("pass needs a 'pass' section")
        pass_spec = _parse_pass(config["pass"])
        if len(protocols) != 1:
            raise ConfigError("pass supports a single protocol")

    resolved = _echo(protocols, setup, reconciliation, finite, sweep, pass_spec)
    return RunPlan(
        protocols=protocols,
        setup=setup,
        reconciliation=reconciliation,
        finite=finite,
        sweep=sweep,
        pass_spec=pass_spec,
        resolved=resolved,
    )


def _echo(protocols, setup, reconciliation, finite, sweep, pass_spec) -> dict[str, Any]:
    """Canonical JSON-ready snapshot of the resolved configuration."""
    out: dict[str, Any] = {
        "schema_version": SCHEMA_VERSION,
        "protocols": [
            {
                "kind": p.kind,
                "label": p.label,
                "detection": p.detection.value,
                "modulation_variance_snu": p.modulation_variance,
                "states": p.psk_states if p.kind == "psk" else (
                    p.qam_side**2 if p.kind == "qam" else None
                ),
            }
            for p in protocols
        ],
        "terminals": {
            "wavelength_nm": round(setup.terminals.wavelength_m * 1e9, 6),
            "transmitter_aperture_m": setup.terminals.transmitter_aperture_m,
            "receiver_aperture_m": setup.terminals.receiver_aperture_m,
            "transmitter_efficiency": setup.terminals.transmitter_efficiency,
            "receiver_efficiency": setup.terminals.receiver_efficiency,
            "pointing_loss": setup.terminals.pointing_loss,
        },
        "conditions": {
            "visibility_km": setup.conditions.visibility_km,
            "cn2": setup.conditions.cn2,
            "outage_probability": setup.conditions.outage_probability,
        },
        "noise": {
            "channel_excess_snu": setup.noise.channel_excess,
            "detector_excess_snu": setup.noise.detector_excess,
            "detector_efficiency": setup.noise.detector_efficiency,
        },
        "geometry": {
            "ogs_altitude_km": setup.ogs_altitude_m / 1000.0,
            "atmosphere_thickness_km": setup.atmosphere_thickness_m / 1000.0,
            "earth_radius_km": setup.earth_radius_m / 1000.0,
        },
        "reconciliation": (
            {"kind": "asymptotic", "beta": reconciliation.beta_asymptotic}
            if reconciliation.kind == "asymptotic"
            else {"kind": reconciliation.model.name}
        ),
        "finite_size": {
            "repetition_rate_hz": finite.repetition_rate_hz,
            "discretisation": finite.discretisation,
            "smoothing": finite.smoothing,
            "security": finite.security,
            "total_symbols": finite.total_symbols,
            "fit_block_length_note": "efficiency/FER fits obtained at N=1e6",
        },
    }
    if sweep is not None:
        out["sweep"] = {
            "altitude_km": [a / 1000.0 for a in sweep.altitudes_m],
            "elevation_deg": list(sweep.elevations_deg),
        }
    if pass_spec is not None:
        out["pass"] = {
            "profile_csv": pass_spec.profile_path,
            "altitude_km": pass_spec.satellite_altitude_m / 1000.0,
            "synthesize": (
                None
                if not pass_spec.synthesized
                else {
                    "max_elevation_deg": pass_spec.synth_max_elevation_deg,
                    "sample_dt_s": pass_spec.synth_sample_dt_s,
                }
            ),
            "ogs_altitude_km": pass_spec.ogs_altitude_m / 1000.0,
            "keyhole_ceiling_deg": pass_spec.keyhole_ceiling_deg,
            "bin_width_deg": pass_spec.bin_width_deg,
        }
    return out


def load(path: str, need: str) -> RunPlan:
    """Read and resolve a JSON configuration file."""
    try:
        with open(path, "r", encoding="utf-8") as handle:
            raw = json.load(handle)
    except OSError as exc:
        raise ConfigError(f"cannot read config {path}: {exc}")
    except json.JSONDecodeError as exc:
        raise ConfigError(f"config {path} is not valid JSON: {exc}")
    return resolve(raw, need)
