import json
import subprocess
import sys

from satcvqkd.cli import main


def _write_config(tmp_path, name, payload):
    path = tmp_path / name
    path.write_text(json.dumps(payload), encoding="utf-8")
    return str(path)


def _read_rows(path):
    lines = path.read_text(encoding="utf-8").splitlines()
    data = [line for line in lines if not line.startswith("#")]
    header = data[0].split(",")
    return header, [dict(zip(header, line.split(","))) for line in data[1:]]


SWEEP_CONFIG = {
    "protocol": "gm",
    "reconciliation": {"kind": "asymptotic", "beta": 0.9},
    "sweep": {
        "altitude_km": {"start": 200, "stop": 1000, "step": 50},
        "elevation_deg": [30, 60, 90],
    },
}


def test_validate_config_ok(tmp_path, capsys):
    path = _write_config(tmp_path, "ok.json", SWEEP_CONFIG)
    assert main(["validate-config", "--config", path]) == 0
    echoed = json.loads(capsys.readouterr().out)
    assert echoed["protocols"][0]["label"] == "GM"
    assert echoed["protocols"][0]["modulation_variance_snu"] == 5.0
    assert echoed["finite_size"]["total_symbols"] == 1e11


def test_validate_config_rejects_unknown_key(tmp_path, capsys):
    path = _write_config(tmp_path, "bad.json", {**SWEEP_CONFIG, "typo_key": 1})
    assert main(["validate-config", "--config", path]) == 1


def test_config_error_exit_code(tmp_path):
    path = _write_config(
        tmp_path, "bad2.json", {"protocol": "psk3", "sweep": SWEEP_CONFIG["sweep"]}
    )
    assert main(["sweep", "--config", path]) == 1


def test_finite_size_non_gm_rejected(tmp_path):
    payload = {
        "protocol": "qam64",
        "reconciliation": {"kind": "md"},
        "sweep": SWEEP_CONFIG["sweep"],
    }
    path = _write_config(tmp_path, "bad3.json", payload)
    assert main(["sweep", "--config", path]) == 1


def test_sweep_cardinality_and_columns(tmp_path):
    config = _write_config(tmp_path, "sweep.json", SWEEP_CONFIG)
    out = tmp_path / "out.csv"
    assert main(["sweep", "--config", config, "--output", str(out)]) == 0
    header, rows = _read_rows(out)
    assert len(rows) == 17 * 3
    assert "skr_bits_per_pulse" in header
    assert rows[0]["protocol"] == "GM"
    # deterministic ordering: altitude major, elevation minor
    assert [r["elevation_deg"] for r in rows[:3]] == ["30.0", "60.0", "90.0"]
    assert rows[3]["altitude_km"] == "250.0"


def test_two_psk_sweep_never_positive(tmp_path):
    payload = {**SWEEP_CONFIG, "protocol": "psk2"}
    config = _write_config(tmp_path, "psk2.json", payload)
    out = tmp_path / "psk2.csv"
    assert main(["sweep", "--config", config, "--output", str(out)]) == 0
    _header, rows = _read_rows(out)
    assert len(rows) == 51
    for row in rows:
        assert float(row["skr_bits_per_pulse"]) <= 0.0


def test_far_field_exclusion_rows(tmp_path):
    payload = {
        **SWEEP_CONFIG,
        "terminals": {"receiver_aperture_m": 2.0},
        "sweep": {"altitude_km": [300, 350, 400, 500], "elevation_deg": [90]},
    }
    config = _write_config(tmp_path, "wide.json", payload)
    out = tmp_path / "wide.csv"
    assert main(["sweep", "--config", config, "--output", str(out)]) == 0
    _header, rows = _read_rows(out)
    by_alt = {row["altitude_km"]: row for row in rows}
    assert by_alt["300.0"]["status"] == "far_field_excluded"
    assert by_alt["350.0"]["status"] == "far_field_excluded"
    assert by_alt["400.0"]["status"] == "ok"
    assert by_alt["300.0"]["far_field_ok"] == "false"
    assert by_alt["300.0"]["skr_bits_per_pulse"] == ""


def test_compare_orderings_and_shared_channel(tmp_path):
    payload = {
        "protocols": ["gm", "qam256", "psk8"],
        "reconciliation": {"kind": "asymptotic", "beta": 0.9},
        "sweep": {"altitude_km": [500], "elevation_deg": [90]},
    }
    config = _write_config(tmp_path, "compare.json", payload)
    out = tmp_path / "compare.csv"
    assert main(["compare", "--config", config, "--output", str(out)]) == 0
    _header, rows = _read_rows(out)
    assert len(rows) == 3
    assert len({row["transmittance"] for row in rows}) == 1
    skr = {row["protocol"]: float(row["skr_bits_per_pulse"]) for row in rows}
    assert skr["GM"] >= skr["256-QAM[binomial]"] >= skr["8-PSK"]


def test_pass_summary_contains_both_models(tmp_path):
    payload = {
        "protocol": "gm",
        "terminals": {"receiver_aperture_m": 2.0},
        "reconciliation": {"kind": "md"},
        "pass": {
            "synthesize": {"altitude_km": 417.5, "max_elevation_deg": 87.6, "sample_dt_s": 2.0},
            "ogs_altitude_km": 1.029,
        },
    }
    config = _write_config(tmp_path, "pass.json", payload)
    out = tmp_path / "pass.csv"
    assert main(["pass", "--config", config, "--output", str(out)]) == 0
    text = out.read_text(encoding="utf-8")
    assert "# summary model=MD total_key_bits=" in text
    assert "# summary model=MLC-MSD total_key_bits=" in text
    md_total = float(
        [l for l in text.splitlines() if "model=MD " in l][0]
        .split("total_key_bits=")[1].split()[0]
    )
    mlc_total = float(
        [l for l in text.splitlines() if "model=MLC-MSD " in l][0]
        .split("total_key_bits=")[1].split()[0]
    )
    assert md_total >= mlc_total > 0.0


def test_measured_profile_pass(tmp_path):
    profile = tmp_path / "profile.csv"
    profile.write_text("0,30\n60,60\n120,88\n180,60\n240,30\n", encoding="utf-8")
    payload = {
        "protocol": "gm",
        "terminals": {"receiver_aperture_m": 2.0},
        "reconciliation": {"kind": "md"},
        "pass": {
            "profile_csv": str(profile),
            "altitude_km": 417.5,
            "ogs_altitude_km": 1.029,
        },
    }
    config = _write_config(tmp_path, "pass2.json", payload)
    out = tmp_path / "pass2.csv"
    assert main(["pass", "--config", config, "--output", str(out)]) == 0
    header_line = [
        l for l in out.read_text(encoding="utf-8").splitlines()
        if l.startswith("time_s")
    ][0]
    assert "skr_bits_per_second[MD]" in header_line


def test_determinism_across_worker_counts(tmp_path, monkeypatch):
    payload = {
        **SWEEP_CONFIG,
        "reconciliation": {"kind": "md"},
        "sweep": {
            "altitude_km": {"start": 200, "stop": 1000, "step": 50},
            "elevation_deg": [30, 60, 90],
        },
    }
    config = _write_config(tmp_path, "det.json", payload)
    outputs = []
    for workers, name in (("1", "a.csv"), ("8", "b.csv"), ("8", "c.csv")):
        monkeypatch.setenv("SATCVQKD_WORKERS", workers)
        out = tmp_path / name
        assert main(["sweep", "--config", config, "--output", str(out)]) == 0
        outputs.append(out.read_bytes())
    assert outputs[0] == outputs[1] == outputs[2]


def test_console_entry_point_runs():
    result = subprocess.run(
        [sys.executable, "-m", "satcvqkd.cli", "--help"],
        capture_output=True, text=True,
    )
    assert result.returncode == 0
    assert "sweep" in result.stdout
