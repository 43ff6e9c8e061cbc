import json
import os

import pytest

from edrsim.cli import main
from edrsim.config import ConfigError, load_config
from edrsim.trace import read_trace_arrays

BASE_CONFIG = """
[geometry]
l2_size_kb = 64
associativity = 8
block_bytes = 64
page_kb = 1
bank_kb = 32

[timing]
clock_ghz = 2.0

[energy]
builtin = EDRAM_2MB

[run]
warmup_fraction = 0.1
interval_instructions = 100000

[trace]
synthetic = true

[synthetic]
seed = 5
accesses_per_kilo_instr = 20
phases = 400000:24576:0.3:0.2; 400000:8192:0.3:0.2

[scheme.baseline]
kind = baseline_edram
retention_period_us = 1

[scheme.rpv]
kind = rpv
retention_period_us = 1
phases = 4

[scheme.sram]
kind = sram
energy_builtin = SRAM_2MB

[scheme.dcr]
kind = dcr
retention_period_us = 1
delta = 4
sampling_ratio_denom = 2
"""


@pytest.fixture
def config_file(tmp_path):
    path = tmp_path / "run.cfg"
    path.write_text(BASE_CONFIG)
    return str(path)


def test_load_config_round_trip(config_file):
    cfg = load_config(config_file)
    assert cfg.geometry.color_count == 8
    assert cfg.timing.clock_ghz == 2.0
    assert [s.name for s in cfg.schemes] == ["baseline", "rpv", "sram", "dcr"]
    assert cfg.schemes[1].refresh.phases == 4
    assert cfg.schemes[3].controller is not None
    assert cfg.schemes[3].controller.interval_instructions == 100_000
    assert cfg.synthetic is not None and len(cfg.synthetic.phases) == 2


def test_unknown_key_rejected(tmp_path):
    path = tmp_path / "bad.cfg"
    path.write_text(BASE_CONFIG.replace("[timing]\nclock_ghz = 2.0",
                                        "[timing]\nclock_gz = 2.0"))
    with pytest.raises(ConfigError, match="clock_gz"):
        load_config(str(path))


def test_unknown_section_rejected(tmp_path):
    path = tmp_path / "bad.cfg"
    path.write_text(BASE_CONFIG + "\n[typo]\nx = 1\n")
    with pytest.raises(ConfigError, match="typo"):
        load_config(str(path))


def test_energy_overrides_need_all_eight(tmp_path):
    path = tmp_path / "bad.cfg"
    path.write_text(BASE_CONFIG.replace("builtin = EDRAM_2MB",
                                        "e_dyn_l2 = 0.648"))
    with pytest.raises(ConfigError, match="missing"):
        load_config(str(path))


def test_energy_override_block(tmp_path):
    overrides = """e_dyn_l2 = 0.648
p_leak_l2 = 0.162
e_dyn_dram = 70
p_leak_dram = 0.18
e_transition = 2
e_dyn_prof = 0.0031
p_leak_prof = 0.005
clock_ghz = 2.0"""
    path = tmp_path / "ok.cfg"
    path.write_text(BASE_CONFIG.replace("builtin = EDRAM_2MB", overrides))
    cfg = load_config(str(path))
    assert cfg.energy.p_leak_l2 == 0.162


def test_gen_trace_and_determinism(config_file, tmp_path):
    out_a = str(tmp_path / "a.trace")
    out_b = str(tmp_path / "b.trace")
    assert main(["gen-trace", "--config", config_file, "--out", out_a]) == 0
    assert main(["gen-trace", "--config", config_file, "--out", out_b]) == 0
    with open(out_a, "rb") as fh:
        bytes_a = fh.read()
    with open(out_b, "rb") as fh:
        bytes_b = fh.read()
    assert bytes_a == bytes_b
    with open(out_a, "rb") as fh:
        header, arrays = read_trace_arrays(fh)
    assert header.record_count == len(arrays) > 0
    assert arrays.instructions == 800_000


def test_run_command_writes_reports(config_file, tmp_path):
    out = str(tmp_path / "out")
    assert main(["run", "--config", config_file, "--out", out]) == 0
    for name in ("baseline", "rpv", "sram", "dcr"):
        path = os.path.join(out, f"report-{name}.json")
        assert os.path.exists(path)
        with open(path) as fh:
            doc = json.load(fh)
        assert doc["scheme"] == name
        assert doc["instructions"] > 0
        assert os.path.exists(os.path.join(out, f"report-{name}.intervals.csv"))


def test_run_on_pregenerated_trace(config_file, tmp_path):
    trace_path = str(tmp_path / "t.trace")
    assert main(["gen-trace", "--config", config_file, "--out", trace_path]) == 0
    cfg_text = BASE_CONFIG.replace(
        "[trace]\nsynthetic = true",
        f"[trace]\npath = {trace_path}")
    path = tmp_path / "file.cfg"
    path.write_text(cfg_text)
    out = str(tmp_path / "out2")
    assert main(["run", "--config", str(path), "--out", out]) == 0


def test_compare_command(config_file, tmp_path):
    out = str(tmp_path / "cmp")
    assert main(["compare", "--config", config_file, "--out", out]) == 0
    with open(os.path.join(out, "comparison.json")) as fh:
        doc = json.load(fh)
    assert doc["baseline"] == "baseline"
    assert [r["scheme"] for r in doc["rows"]] == ["rpv", "sram", "dcr"]
    csv_path = os.path.join(out, "comparison.csv")
    with open(csv_path) as fh:
        lines = fh.read().splitlines()
    assert lines[0].startswith("scheme,")
    assert len(lines) == 4  # header + three non-baseline schemes


def test_compare_missing_baseline_is_config_error(tmp_path):
    text = BASE_CONFIG.replace("[scheme.baseline]\nkind = baseline_edram\nretention_period_us = 1\n", "")
    path = tmp_path / "nobase.cfg"
    path.write_text(text)
    out = str(tmp_path / "never")
    rc = main(["compare", "--config", str(path), "--out", out])
    assert rc != 0
    assert not os.path.exists(os.path.join(out, "comparison.json"))


def test_invalid_config_creates_no_output(tmp_path):
    path = tmp_path / "bad.cfg"
    path.write_text(BASE_CONFIG + "\n[typo]\nx = 1\n")
    out = str(tmp_path / "outdir")
    rc = main(["run", "--config", str(path), "--out", out])
    assert rc == 2
    assert not os.path.exists(out)


def test_domain_validation_failures_are_config_errors(tmp_path):
    path = tmp_path / "bad.cfg"
    path.write_text(BASE_CONFIG.replace("l2_size_kb = 64", "l2_size_kb = 48"))
    out = str(tmp_path / "outdir")
    rc = main(["run", "--config", str(path), "--out", out])  # not a power of two
    assert rc == 2
    assert not os.path.exists(out)
    with pytest.raises(ConfigError):
        load_config(str(path))


def test_sweep_command(config_file, tmp_path):
    out = str(tmp_path / "sweep")
    assert main(["sweep", "--config", config_file, "--out", out,
                 "--parameter", "refresh_period_us", "--values", "1,2"]) == 0
    with open(os.path.join(out, "sweep.csv")) as fh:
        lines = fh.read().splitlines()
    assert lines[0].startswith("parameter,value,scheme")
    # 2 values x (baseline + 3 rows)
    assert len(lines) == 1 + 2 * 4


def test_sweep_rejects_unknown_parameter(config_file, tmp_path):
    rc = main(["sweep", "--config", config_file, "--out", str(tmp_path / "x"),
               "--parameter", "voltage", "--values", "1"])
    assert rc == 2


def test_seed_flag_overrides_config(config_file, tmp_path):
    a = str(tmp_path / "a.trace")
    b = str(tmp_path / "b.trace")
    assert main(["gen-trace", "--config", config_file, "--out", a,
                 "--seed", "99"]) == 0
    assert main(["gen-trace", "--config", config_file, "--out", b]) == 0
    with open(a, "rb") as fh:
        ba = fh.read()
    with open(b, "rb") as fh:
        bb = fh.read()
    assert ba != bb
