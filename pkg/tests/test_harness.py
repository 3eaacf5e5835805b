"""Robustness scans, table/figure reproduction, serialization, and the CLI."""

import json
import math

import numpy as np
import pytest

from rydex.atoms import QuantumDefectModel
from rydex.cli import main
from rydex.harness import (
    FidelityHistogram,
    RobustnessConfig,
    _batched_pulse3_fidelities,
    dumps_json,
    histogram_payload,
    histogram_rows,
    pair_couplings,
    robustness_scan,
    rows_to_csv,
    run_figure,
    run_table,
    to_jsonable,
    write_csv,
    write_json,
)
from rydex.protocols import swap_gate
from rydex.vdw import interaction_matrix

MODEL = QuantumDefectModel.default()

# computed couplings of the default (73, 75) pair at 15 um
V_PLUS = 4.86528311708787
V_MINUS = 711.2447292433305
CORNER = 534.6498677117698
NOMINAL_OMEGA = 58.82522395456994


def _default_couplings():
    return pair_couplings(MODEL, 73, 75, 15.0)


# ---------------------------------------------------------------------------
# pair couplings


def test_pair_couplings_frozen_values():
    coup = _default_couplings()
    assert coup.v_plus_khz == pytest.approx(V_PLUS, rel=1e-12)
    assert coup.v_minus_khz == pytest.approx(V_MINUS, rel=1e-12)
    assert coup.corner_khz == pytest.approx(CORNER, rel=1e-12)
    assert coup.nominal_omega_khz == pytest.approx(NOMINAL_OMEGA, rel=1e-12)


def test_pair_couplings_match_interaction_matrix():
    coup = _default_couplings()
    inter = interaction_matrix(MODEL, 73, 75, 15.0)
    assert coup.v_plus_khz == inter.vs_khz + inter.vc_khz
    assert coup.v_minus_khz == inter.vs_khz - inter.vc_khz
    assert coup.corner_khz == inter.v1_khz[0, 0]
    assert coup.nominal_omega_khz == math.sqrt(
        abs(coup.v_plus_khz * coup.v_minus_khz)
    )


# ---------------------------------------------------------------------------
# robustness configuration and histogram invariants


@pytest.mark.parametrize(
    "kwargs, fragment",
    [
        (dict(epsilon=-0.1), "epsilon"),
        (dict(epsilon=1.0), "epsilon"),
        (dict(samples=0), "samples"),
        (dict(seed=-1), "64 unsigned bits"),
        (dict(seed=2**64), "64 unsigned bits"),
    ],
)
def test_robustness_config_validation(kwargs, fragment):
    base = dict(
        epsilon=0.1,
        samples=10,
        seed=0,
        omega_khz=NOMINAL_OMEGA,
        v_plus_khz=V_PLUS,
        v_minus_khz=V_MINUS,
    )
    base.update(kwargs)
    with pytest.raises(ValueError, match=fragment):
        RobustnessConfig(**base)


def test_histogram_counts_must_sum_to_samples():
    with pytest.raises(ValueError, match="do not sum"):
        FidelityHistogram(
            bin_edges=(0.8, 0.9, 1.0),
            counts=(0, 1, 1),
            fraction_above={},
            samples=5,
            mean=0.95,
            minimum=0.9,
        )


def _scan(epsilon, samples, seed, omega=NOMINAL_OMEGA):
    cfg = RobustnessConfig(
        epsilon=epsilon,
        samples=samples,
        seed=seed,
        omega_khz=omega,
        v_plus_khz=V_PLUS,
        v_minus_khz=V_MINUS,
    )
    return cfg, robustness_scan(cfg)


def test_robustness_scan_frozen_smoke():
    """Small scan at a fixed seed reproduces frozen statistics."""
    _, hist = _scan(0.1, 200, 7, omega=58.8)
    assert hist.mean == pytest.approx(0.9711168559720206, rel=1e-12)
    assert hist.minimum == pytest.approx(0.9460998592277354, rel=1e-12)
    assert hist.fraction_above[0.85] == 1.0
    assert hist.fraction_above[0.90] == 1.0
    assert hist.fraction_above[0.95] == 0.995


def test_robustness_counts_sum_and_layout():
    _, hist = _scan(0.1, 200, 7)
    assert len(hist.bin_edges) == 201
    assert len(hist.counts) == 201
    assert sum(hist.counts) == 200
    assert hist.bin_edges[0] == 0.8
    assert hist.bin_edges[-1] == 1.0


def test_fraction_above_is_monotone():
    _, hist = _scan(0.2, 500, 21)
    assert (
        hist.fraction_above[0.85]
        >= hist.fraction_above[0.90]
        >= hist.fraction_above[0.95]
    )


def test_zero_dispersion_collapses_to_a_point():
    """With epsilon = 0 every draw is the nominal frequency."""
    _, hist = _scan(0.0, 4, 0, omega=58.8)
    assert hist.minimum == hist.mean
    assert sum(1 for c in hist.counts if c) == 1


def test_scan_is_deterministic_to_the_byte():
    cfg, hist_a = _scan(0.15, 300, 11, omega=60.0)
    _, hist_b = _scan(0.15, 300, 11, omega=60.0)
    assert dumps_json(histogram_payload(cfg, hist_a)) == dumps_json(
        histogram_payload(cfg, hist_b)
    )


def test_mean_fidelity_is_seed_insensitive():
    """Different seeds agree on the mean to sampling accuracy."""
    _, h1 = _scan(0.1, 4000, 1)
    _, h2 = _scan(0.1, 4000, 2)
    assert h1.mean == pytest.approx(0.9707125435520011, rel=1e-12)
    assert h2.mean == pytest.approx(0.9707437626811373, rel=1e-12)
    assert abs(h1.mean - h2.mean) < 5e-4


def test_batched_fidelities_ignore_chunk_size():
    rng = np.random.Generator(np.random.Philox(key=[99, 0]))
    psi2 = rng.normal(size=8) + 1j * rng.normal(size=8)
    psi2 /= np.linalg.norm(psi2)
    omegas = 58.8 * rng.uniform(0.9, 1.1, size=(40, 4))
    small = _batched_pulse3_fidelities(psi2, omegas, 358.05, -353.19, 8.5, chunk=7)
    full = _batched_pulse3_fidelities(psi2, omegas, 358.05, -353.19, 8.5)
    assert np.array_equal(small, full)


def test_histogram_payload_and_rows():
    cfg, hist = _scan(0.1, 150, 5)
    payload = histogram_payload(cfg, hist)
    assert payload["schema"] == "rydex/1"
    assert payload["command"] == "robustness"
    assert payload["samples"] == 150
    assert set(payload["fraction_above"]) == {"0.85", "0.90", "0.95"}
    assert len(payload["counts"]) == 201

    columns, rows = histogram_rows(hist)
    assert columns == ["bin_lo", "bin_hi", "count"]
    assert len(rows) == 201
    assert rows[0] == [0.0, 0.8, hist.counts[0]]
    assert rows[1][0] == 0.8
    assert sum(r[2] for r in rows) == 150


# ---------------------------------------------------------------------------
# table reproduction


def test_table_i_rows_deviations():
    data = run_table("I", MODEL)
    assert data["table"] == "I"
    rows = data["rows"]
    assert len(rows) == 4
    assert [(r["n_a"], r["n_b"]) for r in rows] == [
        (59, 61), (73, 75), (97, 100), (121, 124),
    ]
    for row in rows:
        assert math.copysign(1, row["c6_computed"]) == math.copysign(
            1, row["c6_reference"]
        )
        assert math.copysign(1, row["c6_exchange_computed"]) == math.copysign(
            1, row["c6_exchange_reference"]
        )
        assert abs(row["c6_rel_dev"]) < 0.10
        assert abs(row["c6_exchange_rel_dev"]) < 0.10
        assert abs(row["ratio_difference"]) < 0.02
    assert data["columns"] == list(rows[0].keys())


def test_table_ii_rows_deviations():
    data = run_table("II", MODEL)
    rows = data["rows"]
    assert [r["dn_cutoff"] for r in rows] == [1, 2, 3, 6, 10, 15, 20]
    for row in rows:
        assert abs(row["rel_dev"]) < 0.02


@pytest.mark.parametrize("table_id, expected_rows", [("III", 12), ("IV", 7)])
def test_channel_tables_match_reference(table_id, expected_rows):
    """Energy defects within 3 MHz and radial factors within tolerance."""
    data = run_table(table_id, MODEL)
    rows = data["rows"]
    assert len(rows) == expected_rows
    for row in rows:
        assert abs(row["defect_mhz_deviation"]) < 3.0
        limit = 0.50 if row["rr_ghz_um3_reference"] < 1.0 else 0.05
        assert abs(row["rr_rel_dev"]) < limit


def test_table_id_is_case_insensitive():
    assert run_table("iii", MODEL) == run_table("III", MODEL)


def test_unknown_table_rejected():
    with pytest.raises(ValueError, match="unknown table id"):
        run_table("V", MODEL)


def test_table_rerun_is_byte_identical():
    assert dumps_json(run_table("I", MODEL)) == dumps_json(run_table("I", MODEL))


# ---------------------------------------------------------------------------
# figure reproduction


def test_trajectory_figure_populations():
    data = run_figure(3, MODEL, samples_per_pulse=60)
    assert data["figure"] == 3
    assert data["columns"] == ["t_us", "p_bell_ground", "p_bell_rydberg", "p_other"]
    rows = data["rows"]
    assert len(rows) == 119
    for t, p_g, p_r, p_o in rows:
        assert p_o > -1e-9
        assert p_g + p_r + p_o == pytest.approx(1.0, abs=1e-9)
    assert rows[0][0] == 0.0
    b0, b1, b2 = data["pulse_boundaries_us"]
    assert b0 == 0.0
    assert 0.0 < b1 < b2
    assert rows[-1][0] == pytest.approx(b2, rel=1e-12)
    assert data["final_bell_ground"] == pytest.approx(0.9903991610746705, rel=1e-9)


def test_histogram_figure_structure():
    data = run_figure(4, MODEL, samples=120, seed=3)
    assert data["figure"] == 4
    assert data["columns"] == ["bin_lo", "bin_hi", "count_eps_0.1", "count_eps_0.2"]
    assert len(data["rows"]) == 201
    assert sum(r[2] for r in data["rows"]) == 120
    assert sum(r[3] for r in data["rows"]) == 120
    assert set(data["fraction_above"]) == {"eps_0.1", "eps_0.2"}
    assert data["omega_khz"] == pytest.approx(NOMINAL_OMEGA, rel=1e-12)


def test_unknown_figure_rejected():
    with pytest.raises(ValueError, match="unknown figure id"):
        run_figure(5, MODEL)


# ---------------------------------------------------------------------------
# serialization


def test_to_jsonable_conversions():
    out = to_jsonable(
        {
            "f": 0.12345678912345,
            "c": 1.5 + 2.5j,
            "a": np.array([[1, 2], [3, 4]]),
            "b": np.bool_(True),
            "i": np.int64(7),
            "t": (1.0, 2.0),
        }
    )
    assert out["f"] == 0.123456789
    assert out["c"] == {"re": 1.5, "im": 2.5}
    assert out["a"] == [[1, 2], [3, 4]]
    assert out["b"] is True
    assert out["i"] == 7
    assert isinstance(out["i"], int)
    assert out["t"] == [1.0, 2.0]


def test_dumps_json_sorted_and_terminated():
    text = dumps_json({"b": 1, "a": 2})
    assert text.endswith("\n")
    assert text.index('"a"') < text.index('"b"')
    assert json.loads(text) == {"a": 2, "b": 1}


def test_rows_to_csv_formats_cells():
    text = rows_to_csv(
        ["name", "value", "flag"],
        [
            {"name": "x", "value": 0.12345678912345, "flag": True},
            ["y", 2, False],
        ],
    )
    lines = text.splitlines()
    assert lines[0] == "name,value,flag"
    assert lines[1] == "x,0.123456789,true"
    assert lines[2] == "y,2,false"
    assert text.endswith("\n")


def test_write_json_and_csv_round_trip(tmp_path):
    jpath = tmp_path / "out.json"
    write_json({"x": 1.5}, str(jpath))
    assert json.loads(jpath.read_text()) == {"x": 1.5}
    assert jpath.read_text().endswith("\n")

    cpath = tmp_path / "out.csv"
    write_csv(["a", "b"], [[1, 2]], str(cpath))
    assert cpath.read_text() == "a,b\n1,2\n"


# ---------------------------------------------------------------------------
# command line


def _run_cli(capsys, argv):
    rc = main(argv)
    captured = capsys.readouterr()
    return rc, captured.out, captured.err


def test_cli_coeffs_json(capsys):
    rc, out, err = _run_cli(capsys, ["coeffs", "--na", "73", "--nb", "75"])
    assert rc == 0
    assert err == ""
    data = json.loads(out)
    assert data["schema"] == "rydex/1"
    assert data["command"] == "coeffs"
    assert data["c6_ghz_um6"] == pytest.approx(4078.470304771446, rel=1e-8)
    assert data["c6_exchange_ghz_um6"] == pytest.approx(-4023.051689265867, rel=1e-8)
    assert set(data["channel_sums_ghz_um6"]) == {"1", "2", "3", "4"}


def test_cli_coeffs_csv_flattens_payload(capsys):
    rc, out, _ = _run_cli(
        capsys, ["coeffs", "--na", "73", "--nb", "75", "--dn", "2", "--format", "csv"]
    )
    assert rc == 0
    lines = out.splitlines()
    assert lines[0] == "key,value"
    keys = [line.split(",")[0] for line in lines[1:]]
    assert "c6_ghz_um6" in keys
    assert "channel_sums_ghz_um6.1" in keys


def test_cli_out_file_reruns_byte_identical(capsys, tmp_path):
    argv = ["critical-radius", "--na", "73", "--nb", "75"]
    path_a = tmp_path / "a.json"
    path_b = tmp_path / "b.json"
    assert main(argv + ["--out", str(path_a)]) == 0
    assert main(argv + ["--out", str(path_b)]) == 0
    capsys.readouterr()
    assert path_a.read_bytes() == path_b.read_bytes()
    data = json.loads(path_a.read_text())
    assert data["radius_um"] == pytest.approx(6.086205115301881, rel=1e-8)


def test_cli_config_fills_gaps_and_flags_win(capsys, tmp_path):
    cfg = tmp_path / "run.cfg"
    cfg.write_text(
        "# settings for a coefficient run\n"
        "na 97\n"
        "nb = 100\n"
        "dn 3\n"
        "format csv\n"
    )
    rc, out, _ = _run_cli(capsys, ["coeffs", "--config", str(cfg)])
    assert rc == 0
    assert out.splitlines()[0] == "key,value"
    assert "n_a,97" in out

    rc, out, _ = _run_cli(
        capsys,
        ["coeffs", "--config", str(cfg), "--na", "73", "--nb", "75",
         "--format", "json"],
    )
    assert rc == 0
    data = json.loads(out)
    assert data["n_a"] == 73
    assert data["n_b"] == 75
    assert data["dn_cutoff"] == 3


@pytest.mark.parametrize(
    "content",
    ["frobnicate 3\n", "na notanint\n", "justakey\n"],
)
def test_cli_bad_config_exits_2(capsys, tmp_path, content):
    cfg = tmp_path / "bad.cfg"
    cfg.write_text(content)
    with pytest.raises(SystemExit) as exc:
        main(["coeffs", "--na", "73", "--nb", "75", "--config", str(cfg)])
    assert exc.value.code == 2
    capsys.readouterr()


def test_cli_missing_pair_exits_2(capsys):
    with pytest.raises(SystemExit) as exc:
        main(["coeffs"])
    assert exc.value.code == 2
    capsys.readouterr()


@pytest.mark.parametrize(
    "argv",
    [
        ["coeffs", "--na", "73", "--nb", "73"],
        ["coeffs", "--na", "73", "--nb", "75", "--defects", "/nonexistent.txt"],
        ["swap-sim", "--v-plus", "5"],
        ["swap-sim", "--v-plus", "5", "--v-minus", "711"],
    ],
)
def test_cli_computation_errors_return_1(capsys, argv):
    rc, out, err = _run_cli(capsys, argv)
    assert rc == 1
    assert out == ""
    assert err.startswith("error:")


def test_cli_swap_sim_injected_matches_library(capsys):
    rc, out, _ = _run_cli(
        capsys,
        ["swap-sim", "--v-plus", "5", "--v-minus", "711",
         "--v-blockade", "535", "--omega", "89", "--t2pi", "11.12"],
    )
    assert rc == 0
    data = json.loads(out)
    result = swap_gate(89.0, 5.0, 711.0, 535.0, 11.12)
    assert data["gate_fidelity"] == pytest.approx(result.gate_fidelity, rel=1e-8)
    assert data["basis_fidelities"]["du"] == pytest.approx(
        result.basis_fidelities["du"], rel=1e-8
    )
    assert data["v_blockade_khz"] == 535.0
    assert data["total_duration_us"] == 11.12


def test_cli_pair_sim_default_point(capsys):
    rc, out, _ = _run_cli(capsys, ["pair-sim"])
    assert rc == 0
    data = json.loads(out)
    assert data["v_plus_khz"] == pytest.approx(V_PLUS, rel=1e-8)
    assert data["v_minus_khz"] == pytest.approx(V_MINUS, rel=1e-8)
    assert data["omega_pulse2_khz"] == pytest.approx(NOMINAL_OMEGA, rel=1e-8)
    assert 0.9 < data["fidelity"] < 1.0
    assert data["total_duration_us"] == pytest.approx(
        sum(data["per_pulse_durations_us"]), rel=1e-8
    )


def test_cli_pair_sim_optimize(capsys):
    rc, out, _ = _run_cli(capsys, ["pair-sim", "--optimize", "--seed", "1"])
    assert rc == 0
    data = json.loads(out)
    assert data["optimizer"]["converged"] is True
    assert data["optimizer"]["seed"] == 1
    assert data["fidelity"] >= data["optimizer"]["start_fidelity"]
    assert data["fidelity"] > 0.98


def test_cli_chain_injected_inputs(capsys):
    rc, out, _ = _run_cli(
        capsys,
        ["chain", "--f1", "0.9906", "--fswap", "0.9831", "--tau", "6.3699"],
    )
    assert rc == 0
    data = json.loads(out)
    assert data["fidelity"] == pytest.approx(0.8861532700907033, rel=1e-8)
    assert data["pairwise_ops"] == 2
    assert data["swap_ops"] == 1
    assert data["schedule"]["pulse_count"] == 9
    assert data["spectator"]["negligible"] is True


def test_cli_chain_derives_exposure_from_protocols(capsys):
    """Without overrides the chain command simulates its own inputs."""
    rc, out, _ = _run_cli(capsys, ["chain"])
    assert rc == 0
    data = json.loads(out)
    assert 0.9 < data["f1"] < 1.0
    assert 0.9 < data["f_swap"] < 1.0
    assert 0.0 < data["tau_us"] < 20.0
    assert 0.0 < data["fidelity"] < data["f1"]


def test_cli_robustness_small_run(capsys):
    rc, out, _ = _run_cli(
        capsys, ["robustness", "--samples", "50", "--seed", "3"]
    )
    assert rc == 0
    data = json.loads(out)
    assert data["samples"] == 50
    assert sum(data["counts"]) == 50
    assert 0.9 < data["mean"] <= 1.0
    assert data["omega_khz"] == pytest.approx(NOMINAL_OMEGA, rel=1e-8)


def test_cli_robustness_csv_rows(capsys):
    rc, out, _ = _run_cli(
        capsys,
        ["robustness", "--samples", "40", "--seed", "3", "--format", "csv"],
    )
    assert rc == 0
    lines = out.splitlines()
    assert lines[0] == "bin_lo,bin_hi,count"
    assert len(lines) == 202
    assert sum(int(line.split(",")[2]) for line in lines[1:]) == 40


def test_cli_table_csv(capsys):
    rc, out, _ = _run_cli(capsys, ["table", "I", "--format", "csv"])
    assert rc == 0
    lines = out.splitlines()
    assert len(lines) == 5
    header = lines[0].split(",")
    assert header[:4] == ["n_a", "n_b", "c6_computed", "c6_reference"]
    assert lines[1].startswith("59,61,")


def test_cli_figure_trajectory(capsys):
    rc, out, _ = _run_cli(capsys, ["figure", "3"])
    assert rc == 0
    data = json.loads(out)
    assert data["figure"] == 3
    assert len(data["rows"]) == 799
    assert data["final_bell_ground"] == pytest.approx(0.9906, abs=0.003)


def test_cli_rejects_unknown_table(capsys):
    with pytest.raises(SystemExit) as exc:
        main(["table", "V"])
    assert exc.value.code == 2
    capsys.readouterr()
