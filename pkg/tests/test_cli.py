import csv
import json
import subprocess
import sys

import numpy as np
import pytest

from qpolar import cli, fock, io
from qpolar.prep import named_state, noon3


def run(capsys, *argv):
    code = cli.main([str(a) for a in argv])
    out = capsys.readouterr()
    return code, out.out, out.err


def run_json(capsys, *argv):
    code, out, err = run(capsys, *argv)
    assert code == 0, err
    return json.loads(out)


def read_csv(path):
    with open(path) as fh:
        return list(csv.DictReader(fh))


# --- state -------------------------------------------------------------------

def test_state_noon(capsys):
    doc = run_json(capsys, "state", "noon3")
    assert doc["N"] == 3 and doc["kind"] == "mixed"
    np.testing.assert_allclose(io.state_from_dict(doc), named_state("noon3"), atol=1e-15)


def test_state_identity_quarter(capsys):
    doc = run_json(capsys, "state", "identity_quarter")
    np.testing.assert_allclose(io.state_from_dict(doc), np.eye(4) / 4)


def test_state_bad_name_exits_usage(capsys):
    code, out, err = run(capsys, "state", "cat_state")
    assert code == 2 and out == "" and "unknown state" in err


def test_state_from_file_and_invalid_file(tmp_path, capsys):
    good = tmp_path / "good.json"
    io.write_state(noon3(), good)
    doc = run_json(capsys, "state", "--file", good)
    assert doc["kind"] == "pure"
    bad = tmp_path / "bad.json"
    bad.write_text(json.dumps(io.state_to_dict(np.diag([0.6, 0.6, -0.2, 0.0]))))
    code, _, err = run(capsys, "classify", "--state", bad)
    assert code == 3


def test_missing_required_flag_exits_usage(capsys):
    with pytest.raises(SystemExit) as e:
        cli.main(["classify"])
    assert e.value.code == 2


# --- moments and classification ----------------------------------------------

def test_moments_identity_quarter_constant_five(tmp_path, capsys):
    path = tmp_path / "f.csv"
    doc = run_json(capsys, "moments", "--state", "identity_quarter", "--order", 2, "--csv", path)
    rows = read_csv(path)
    assert len(rows) == 2048
    vals = np.array([float(r["value"]) for r in rows])
    np.testing.assert_allclose(vals, 5, atol=1e-9)
    assert doc["field"]["min"] == pytest.approx(5) and doc["field"]["max"] == pytest.approx(5)
    assert set(rows[0]) == {"nx", "ny", "nz", "theta", "phi", "value", "abs_value"}


def test_moments_h3_dipole(tmp_path, capsys):
    path = tmp_path / "f.csv"
    doc = run_json(capsys, "moments", "--state", "h3", "--order", 1, "--csv", path,
                   "--grid", "theta_phi", "--resolution", 512)
    rows = read_csv(path)
    best = max(rows, key=lambda r: float(r["value"]))
    assert float(best["value"]) == pytest.approx(3)
    assert float(best["nz"]) == pytest.approx(1)
    assert doc["field"]["max"] == pytest.approx(3)
    assert doc["tensors"]["mean"] == pytest.approx([0, 0, 3])


def test_moments_xox_constant(tmp_path, capsys):
    path = tmp_path / "f.csv"
    run_json(capsys, "moments", "--state", "xox_mix", "--order", 2, "--csv", path, "--resolution", 256)
    vals = np.array([float(r["value"]) for r in read_csv(path)])
    np.testing.assert_allclose(vals, 14 / 3, atol=1e-9)


def test_moments_bad_order(capsys):
    code, _, _ = run(capsys, "moments", "--state", "h3", "--order", 4)
    assert code == 2


@pytest.mark.parametrize("name,cls", [("noon3", "OXX"), ("identity_quarter", "OOO"), ("h3", "XXX")])
def test_classify(capsys, name, cls):
    doc = run_json(capsys, "classify", "--state", name)
    assert doc["class"] == cls


def test_classify_experimental_profile(capsys):
    doc = run_json(capsys, "classify", "--state", "oox_mix", "--tol-profile", "experimental")
    assert doc["class"] == "OOX" and doc["tol"] == 0.15


def test_bounds_h3(capsys):
    doc = run_json(capsys, "bounds", "--state", "h3")
    assert doc["variance_sum"] == pytest.approx(6)
    assert doc["label"] == "minimum"
    assert doc["uncertainty"]["12"]["saturated"]


# --- prep, calibration, noise ------------------------------------------------

def test_prep_noon_with_target(capsys):
    doc = run_json(capsys, "prep", "--qwp1", 45, "--hwp2", -85.7 / 4, "--target", "noon3")
    assert doc["fidelity"] == pytest.approx(1, abs=1e-9)
    assert doc["herald_probability"] == pytest.approx(4 / 27)


def test_prep_chain_file(tmp_path, capsys):
    chain = tmp_path / "chain.json"
    chain.write_text(json.dumps({"input": "double_pair", "target": "one_two", "elements": [
        {"kind": "HWP", "angle": 0}, {"kind": "PPBS", "phi": -85.7}]}))
    doc = run_json(capsys, "prep", "--chain", chain)
    assert doc["fidelity"] == pytest.approx(1)
    assert doc["herald_probability"] == pytest.approx(4 / 9)


def test_prep_invalid_chain_exits_validation(tmp_path, capsys):
    chain = tmp_path / "chain.json"
    chain.write_text(json.dumps({"elements": [{"kind": "HWP", "angle": 0}]}))
    code, _, _ = run(capsys, "prep", "--chain", chain)
    assert code == 3


def test_prep_output_feeds_other_commands(tmp_path, capsys):
    out = tmp_path / "prep.json"
    run(capsys, "prep", "--qwp1", 45, "--hwp2", -85.7 / 4, "--out", out)
    assert run_json(capsys, "classify", "--state", out)["class"] == "OXX"
    doc = run_json(capsys, "moments", "--state", out, "--order", 2)
    assert doc["tensors"]["cov"][2][2] == pytest.approx(9)
    counts = tmp_path / "counts.json"
    assert run(capsys, "tomo-sim", "--state", out, "--shots", 500, "--out", counts)[0] == 0
    assert len(json.loads(counts.read_text())) == 16


def test_calibrate(capsys):
    doc = run_json(capsys, "calibrate", "--theta-step", 0.5)
    assert abs(doc["phi_estimate"] + 85.7) <= 2
    noisy = run_json(capsys, "calibrate", "--shots", 10000, "--seed", 4)
    assert abs(noisy["phi_estimate"] + 85.7) <= 1
    code, _, _ = run(capsys, "calibrate", "--theta-step", 0)
    assert code == 2


def test_noise(capsys):
    doc = run_json(capsys, "noise")
    assert doc["snr"] == pytest.approx(30)
    assert doc["signal_rate_hz"] == pytest.approx(48_000)
    free = run_json(capsys, "noise", "--p3", 0)
    assert free["noise_free"] and free["snr"] is None


# --- tomography --------------------------------------------------------------

def test_tomo_round_trip(tmp_path, capsys):
    counts = tmp_path / "counts.json"
    assert run(capsys, "tomo-sim", "--state", "noon3", "--shots", 10000, "--out", counts)[0] == 0
    doc = run_json(capsys, "tomo-fit", "--counts", counts, "--target", "noon3")
    assert doc["converged"]
    assert doc["metrics"]["fidelity"] >= 0.99
    rho = io.state_from_dict(doc["state"])
    assert fock.validate(rho).ok


def test_tomo_fit_non_convergence_exit_code(tmp_path, capsys):
    counts = tmp_path / "counts.json"
    run(capsys, "tomo-sim", "--state", "noon3", "--shots", 1000, "--out", counts)
    code, out, _ = run(capsys, "tomo-fit", "--counts", counts, "--max-iter", 1)
    assert code == 4
    assert json.loads(out)["converged"] is False


def test_determinism_byte_identical(tmp_path, capsys):
    outs = []
    for i in range(2):
        path = tmp_path / f"c{i}.json"
        run(capsys, "tomo-sim", "--state", "xox_mix", "--shots", 2000, "--seed", 99, "--out", path)
        outs.append(path.read_bytes())
    assert outs[0] == outs[1]
    csvs = []
    for i in range(2):
        path = tmp_path / f"m{i}.csv"
        run(capsys, "moments", "--state", "noon3", "--order", 3, "--csv", path)
        csvs.append(path.read_bytes())
    assert csvs[0] == csvs[1]
    a = run(capsys, "calibrate", "--shots", 1000, "--seed", 5)[1]
    b = run(capsys, "calibrate", "--shots", 1000, "--seed", 5)[1]
    assert a == b


# --- spectral ----------------------------------------------------------------

def test_spectral(tmp_path, capsys):
    jsa_csv, hom_csv = tmp_path / "jsa.csv", tmp_path / "hom.csv"
    doc = run_json(capsys, "spectral", "--points", 128, "--jsa-csv", jsa_csv, "--hom-csv", hom_csv,
                   "--raw-visibility", 0.95)
    assert doc["schmidt_K"] <= 1.05
    assert doc["hom_visibility"] >= 0.99
    assert doc["noise_subtracted_visibility"] == pytest.approx(0.996, abs=0.01)
    assert len(read_csv(jsa_csv)) == 128 * 128
    assert list(read_csv(hom_csv)[0]) == ["delay_fs", "rate", "fit"]


# --- io ----------------------------------------------------------------------

def test_io_roundtrip(tmp_path):
    rng = np.random.default_rng(0)
    for state in (fock.random_pure(3, rng), fock.random_density(3, rng), fock.random_density(5, rng)):
        back = io.loads_state(io.dumps_state(state))
        np.testing.assert_array_equal(back, state)
    path = tmp_path / "s.json"
    io.write_state(noon3(), path)
    np.testing.assert_array_equal(io.read_state(path), noon3())


@pytest.mark.parametrize("doc", [
    {"N": 3, "kind": "other", "amplitudes": []},
    {"N": 2, "kind": "pure", "amplitudes": [[1, 0], [0, 0], [0, 0], [0, 0]]},
    {"N": 1, "kind": "pure", "amplitudes": [[1, 0], [1, 0]]},
    {"N": 1, "kind": "pure", "amplitudes": [1, 0]},
])
def test_io_rejects_bad_documents(doc):
    with pytest.raises(ValueError):
        io.state_from_dict(doc)


def test_console_entry_point():
    r = subprocess.run([sys.executable, "-m", "qpolar", "classify", "--state", "noon3"],
                       capture_output=True, text=True, check=True)
    assert json.loads(r.stdout)["class"] == "OXX"
