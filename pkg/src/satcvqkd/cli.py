"""Command-line front end: sweeps, pass budgets and protocol comparisons.

Output is CSV with a '#'-prefixed echo of the resolved configuration;
identical configs produce byte-identical files regardless of worker count.
The SATCVQKD_WORKERS environment variable is the only out-of-config knob.
"""

from __future__ import annotations

import argparse
import json
import os
import sys
from concurrent.futures import ThreadPoolExecutor
from typing import Iterable, Sequence

from . import config as config_mod
from .errors import ConfigError, SatCvqkdError
from .finite_size import FiniteSizeParams
from .pass_analysis import integrate_key_bits, load_profile, synthesize_circular_pass
from .pipeline import LinkSetup, PointResult, ProtocolSpec, ReconciliationSpec, \
    evaluate_point

SWEEP_COLUMNS = (
    "protocol",
    "detection",
    "modulation_variance_snu",
    "altitude_km",
    "elevation_deg",
    "l_tot_km",
    "l_atm_eff_km",
    "a_geo_db",
    "a_scat_db",
    "a_sci_db",
    "a_tot_db",
    "transmittance",
    "snr_db",
    "beta",
    "beta_valid",
    "fer",
    "fer_raw",
    "i_ab_bits_per_pulse",
    "s_be_bits_per_pulse",
    "privacy_bits_per_pulse",
    "skr_bits_per_pulse",
    "skr_bits_per_second",
    "far_field_ok",
    "status",
)


def _fmt(value) -> str:
    if value is None:
        return ""
    if isinstance(value, bool):
        return "true" if value else "false"
    if isinstance(value, float):
        return repr(value)
    return str(value)


def _row(point: PointResult) -> str:
    values = (
        point.protocol,
        point.detection,
        point.modulation_variance,
        point.altitude_m / 1000.0,
        point.elevation_deg,
        None if point.l_tot_m is None else point.l_tot_m / 1000.0,
        None if point.l_atm_eff_m is None else point.l_atm_eff_m / 1000.0,
        point.a_geo_db,
        point.a_scat_db,
        point.a_sci_db,
        point.a_tot_db,
        point.transmittance,
        point.snr_db,
        point.beta_value,
        point.beta_valid,
        point.fer_value,
        point.fer_raw,
        point.mutual_information,
        point.holevo,
        point.privacy,
        point.skr_asymptotic_per_pulse,
        point.skr_bits_per_second,
        point.far_field_ok,
        point.status,
    )
    return ",".join(_fmt(v) for v in values)


def _worker_count() -> int:
    raw = os.environ.get("SATCVQKD_WORKERS", "1")
    try:
        count = int(raw)
    except ValueError:
        raise ConfigError(f"SATCVQKD_WORKERS must be an integer, got {raw!r}")
    if count < 1:
        raise ConfigError(f"SATCVQKD_WORKERS must be >= 1, got {count}")
    return count


def _config_echo_lines(resolved: dict) -> list[str]:
    payload = json.dumps(resolved, sort_keys=True)
    return [f"# satcvqkd config {payload}"]


def _evaluate_points(
    setup: LinkSetup,
    tasks: Sequence[tuple[ProtocolSpec, float, float]],
    reconciliation: ReconciliationSpec,
    finite: FiniteSizeParams,
) -> Iterable[PointResult]:
    def run(task: tuple[ProtocolSpec, float, float]) -> PointResult:
        spec, altitude_m, elevation = task
        return evaluate_point(setup, spec, altitude_m, elevation, reconciliation, finite)

    workers = _worker_count()
    if workers == 1:
        return [run(task) for task in tasks]
    # Warm per-constellation caches serially so parallel workers reuse them.
    seen: set[str] = set()
    for task in tasks:
        if task[0].kind == "qam" and task[0].label not in seen:
            seen.add(task[0].label)
            run(task)
    with ThreadPoolExecutor(max_workers=workers) as pool:
        return list(pool.map(run, tasks))


def _emit(lines: Iterable[str], output: str | None) -> None:
    text = "\n".join(lines) + "\n"
    if output is None:
        sys.stdout.write(text)
    else:
        with open(output, "w", encoding="utf-8", newline="\n") as handle:
            handle.write(text)


def _run_sweep(plan: config_mod.RunPlan, output: str | None) -> None:
    # Row order is deterministic: altitude major, elevation minor, protocol last.
    tasks = [
        (spec, altitude, elevation)
        for altitude in plan.sweep.altitudes_m
        for elevation in plan.sweep.elevations_deg
        for spec in plan.protocols
    ]
    points = _evaluate_points(plan.setup, tasks, plan.reconciliation, plan.finite)
    lines = _config_echo_lines(plan.resolved)
    lines.append(",".join(SWEEP_COLUMNS))
    lines.extend(_row(p) for p in points)
    _emit(lines, output)


def _run_pass(plan: config_mod.RunPlan, output: str | None) -> None:
    spec = plan.protocols[0]
    pass_spec = plan.pass_spec
    altitude_m = pass_spec.satellite_altitude_m
    if pass_spec.profile_path is not None:
        profile = load_profile(pass_spec.profile_path, pass_spec.ogs_altitude_m)
    else:
        profile = synthesize_circular_pass(
            altitude_m,
            pass_spec.synth_max_elevation_deg,
            pass_spec.synth_sample_dt_s,
            ogs_altitude_m=pass_spec.ogs_altitude_m,
            earth_radius_m=plan.setup.earth_radius_m,
        )

    if plan.reconciliation.kind == "finite":
        # Always report both fitted models so the summaries are comparable.
        from .finite_size import MD, MLC_MSD

        reconciliations = [
            ReconciliationSpec(kind="finite", model=MD),
            ReconciliationSpec(kind="finite", model=MLC_MSD),
        ]
    else:
        reconciliations = [plan.reconciliation]
    result = integrate_key_bits(
        profile,
        plan.setup,
        spec,
        reconciliations,
        plan.finite,
        satellite_altitude_m=altitude_m,
        bin_width_deg=pass_spec.bin_width_deg,
        keyhole_ceiling_deg=pass_spec.keyhole_ceiling_deg,
    )

    lines = _config_echo_lines(plan.resolved)
    for name, model in sorted(result.models.items()):
        lines.append(
            f"# summary model={name} total_key_bits={model.total_key_bits!r} "
            f"excluded_bins={len(model.excluded_bins_deg)}"
        )
    lines.append("time_s,elevation_deg," + ",".join(
        f"skr_bits_per_second[{name}]" for name in sorted(result.models)
    ))
    n = len(profile.times_s)
    series = {name: dict(model.skr_series) for name, model in result.models.items()}
    if n >= 2:
        for t, e in zip(profile.times_s, profile.elevations_deg):
            row = [repr(float(t)), repr(float(e))]
            row.extend(repr(float(series[name].get(t, 0.0))) for name in sorted(series))
            lines.append(",".join(row))
    _emit(lines, output)
    for name, model in sorted(result.models.items()):
        if model.excluded_bins_deg:
            print(
                f"note: {name}: {len(model.excluded_bins_deg)} elevation bins excluded "
                "(far field or keyhole)",
                file=sys.stderr,
            )


def main(argv: Sequence[str] | None = None) -> int:
    parser = argparse.ArgumentParser(
        prog="satcvqkd",
        description="Satellite-to-ground CV-QKD secret key rate calculator",
    )
    sub = parser.add_subparsers(dest="command", required=True)

    for name, help_text in (
        ("sweep", "evaluate one protocol over an altitude/elevation grid"),
        ("pass", "budget the key over a satellite pass"),
        ("compare", "evaluate several protocols on the same grid"),
        ("validate-config", "check a configuration file and echo the resolved values"),
    ):
        cmd = sub.add_parser(name, help=help_text)
        cmd.add_argument("--config", required=True, help="path to a JSON configuration")
        if name != "validate-config":
            cmd.add_argument(
                "--output", default=None, help="output CSV path (default: stdout)"
            )

    args = parser.parse_args(argv)
    need = {"sweep": "sweep", "pass": "pass", "compare": "compare",
            "validate-config": "sweep"}[args.command]

    try:
        if args.command == "validate-config":
            # Accept any run type: try sweep first, then pass, then compare.
            last_error: ConfigError | None = None
            for candidate in ("sweep", "pass", "compare"):
                try:
                    plan = config_mod.load(args.config, candidate)
                    break
                except ConfigError as exc:
                    last_error = exc
            else:
                raise last_error
            print(json.dumps(plan.resolved, sort_keys=True, indent=2))
            return 0
        plan = config_mod.load(args.config, need)
        if args.command == "pass":
            _run_pass(plan, args.output)
        else:  # sweep and compare share the grid runner
            _run_sweep(plan, args.output)
        return 0
    except ConfigError as exc:
        print(f"config error: {exc}", file=sys.stderr)
        return 1
    except SatCvqkdError as exc:
        print(f"numerical failure: {exc}", file=sys.stderr)
        return 2


if __name__ == "__main__":
    sys.exit(main())
