import csv
import json

import numpy as np
import pytest

from quditbell import BellKind, bell_state, evaluate, optimal_settings
from quditbell.cli import SpecError, build_spec, main

SCHEMAS = {
    "fig1": ["l", "I", "Id"],
    "fig2": ["l", "p_violation_I", "std_error_I", "p_violation_Id", "std_error_Id"],
    "fig3": ["bin_lo", "bin_hi", "count"],
    "fig4": ["epsilon", "max_value", "p_violation"],
    "fig5": ["l", "eps_star_I_bilocal", "eps_star_Id_bilocal", "eps_star_I_global", "eps_star_Id_global"],
    "fig6": ["bin_lo", "bin_hi", "count"],
    "fig7": ["l", "I_opt", "Id_opt"],
    "fig8": ["l", "I_entangled", "Id_entangled", "I_product", "Id_product"],
    "appendix": ["d", "epsilon", "bound_main", "bound_median",
                 "empirical_fraction", "empirical_mean", "empirical_median"],
}

FAST_ARGS = {
    "fig1": ["--l-max", "1.5"],
    "fig2": ["--l-max", "1.5", "--samples", "60", "--epsilon", "0.2"],
    "fig3": ["--l", "0.5", "--samples", "80", "--epsilon", "0.25"],
    "fig4": ["--l", "0.5", "--samples", "40", "--epsilon-grid", "0.1:0.4:2.0"],
    "fig5": ["--l-max", "0.5", "--samples", "30"],
    "fig6": ["--l", "0.5", "--samples", "60"],
    "fig7": ["--l-max", "0.5", "--restarts", "2", "--max-evals", "800"],
    "fig8": ["--l-max", "0.5", "--restarts", "1", "--max-evals", "600"],
    "appendix": ["--l", "1", "--l-max", "1", "--samples", "50"],
}


def run_cli(tmp_path, experiment, extra, name="out.csv"):
    out = tmp_path / name
    code = main([experiment, *FAST_ARGS[experiment], "--output", str(out), *extra])
    assert code == 0
    return out


@pytest.mark.parametrize("experiment", sorted(SCHEMAS))
def test_schema_snapshot(tmp_path, experiment):
    out = run_cli(tmp_path, experiment, ["--seed", "5"])
    with open(out, newline="") as handle:
        rows = list(csv.reader(handle))
    assert rows[0] == SCHEMAS[experiment]
    assert len(rows) > 1
    meta = json.loads((tmp_path / "out.csv.meta.json").read_text())
    assert meta["experiment"] == experiment
    assert meta["seed"] == 5
    assert meta["parameters"]["samples"] >= 1
    assert "version" in meta and "timestamp" in meta


def test_fig1_matches_library_values(tmp_path):
    out = run_cli(tmp_path, "fig1", [])
    with open(out, newline="") as handle:
        rows = list(csv.reader(handle))[1:]
    for row in rows:
        l, value_i, value_id = (float(cell) for cell in row)
        d = int(round(2 * l + 1))
        state, settings = bell_state(d), optimal_settings(d)
        assert value_i == evaluate(BellKind.I, state, settings).value
        assert value_id == evaluate(BellKind.ID, state, settings).value


def test_fig3_counts_sum_to_samples(tmp_path):
    out = run_cli(tmp_path, "fig3", ["--seed", "7"])
    with open(out, newline="") as handle:
        rows = list(csv.reader(handle))[1:]
    assert sum(int(row[2]) for row in rows) == 80


def test_determinism_across_thread_counts(tmp_path):
    first = run_cli(tmp_path, "fig3", ["--seed", "3", "--threads", "1"], name="a.csv")
    second = run_cli(tmp_path, "fig3", ["--seed", "3", "--threads", "8"], name="b.csv")
    assert first.read_bytes() == second.read_bytes()


def test_json_format(tmp_path):
    out = tmp_path / "data.json"
    code = main(["fig1", "--l-max", "1", "--output", str(out), "--format", "json"])
    assert code == 0
    document = json.loads(out.read_text())
    assert document["columns"] == SCHEMAS["fig1"]
    assert len(document["rows"]) == 2


def test_config_file_with_flag_override(tmp_path):
    config = tmp_path / "spec.json"
    config.write_text(json.dumps({"l": 0.5, "samples": 44, "seed": 19, "epsilon": 0.3}))
    out = tmp_path / "cfg.csv"
    code = main(["fig3", "--config", str(config), "--samples", "33", "--output", str(out)])
    assert code == 0
    meta = json.loads((tmp_path / "cfg.csv.meta.json").read_text())
    assert meta["parameters"]["samples"] == 33  # flag overrides config
    assert meta["parameters"]["seed"] == 19  # config overrides default
    with open(out, newline="") as handle:
        rows = list(csv.reader(handle))[1:]
    assert sum(int(row[2]) for row in rows) == 33


def test_invalid_spec_names_field(tmp_path, capsys):
    code = main(["fig3", "--l", "0.7", "--output", str(tmp_path / "x.csv")])
    assert code == 2
    assert "invalid l" in capsys.readouterr().err

    code = main(["fig3", "--samples", "0", "--output", str(tmp_path / "x.csv")])
    assert code == 2
    assert "invalid samples" in capsys.readouterr().err

    code = main(["fig6", "--samples", "2", "--output", str(tmp_path / "x.csv")])
    assert code == 2
    assert "invalid samples" in capsys.readouterr().err


def test_unwritable_output_fails(tmp_path):
    code = main(["fig1", "--l-max", "0.5", "--output", str(tmp_path / "missing" / "out.csv")])
    assert code == 1


def test_build_spec_resolution_order():
    spec = build_spec(["fig3"])
    assert spec.l == 1.0 and spec.epsilon == 0.233 and spec.samples == 100_000
    spec = build_spec(["fig3", "--epsilon", "0.4"])
    assert spec.epsilon == 0.4


def test_unknown_config_key_is_rejected(tmp_path):
    config = tmp_path / "bad.json"
    config.write_text(json.dumps({"bogus": 1}))
    with pytest.raises(SpecError):
        build_spec(["fig3", "--config", str(config)])


def test_csv_uses_full_precision(tmp_path):
    out = run_cli(tmp_path, "fig1", [])
    with open(out, newline="") as handle:
        rows = list(csv.reader(handle))[1:]
    value = float(rows[0][1])
    d = 2
    exact = evaluate(BellKind.I, bell_state(d), optimal_settings(d)).value
    assert value == exact  # 17 significant digits round-trip


def test_fig8_product_stays_classical(tmp_path):
    out = run_cli(tmp_path, "fig8", ["--seed", "2"])
    with open(out, newline="") as handle:
        rows = list(csv.reader(handle))[1:]
    for row in rows:
        assert float(row[3]) <= 3.0 + 1e-9
        assert float(row[4]) <= 2.0 + 1e-9
    assert np.isfinite([float(cell) for row in rows for cell in row]).all()
