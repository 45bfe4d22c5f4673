"""End-to-end driver tests: documents, determinism, exit codes."""

import json

import numpy as np
import pytest

from qestgeo import cli
from qestgeo.cli import main, parse_model_spec, render_document
from qestgeo.errors import SpecFormatError


@pytest.fixture
def pm_spec(tmp_path):
    path = tmp_path / "pm.json"
    path.write_text(json.dumps({
        "kind": "catalog",
        "name": "position_momentum_shift",
        "params": {"profile": "gaussian",
                   "grid": {"n": 512, "lower": -10, "upper": 10}},
    }))
    return str(path)


@pytest.fixture
def two_well_spec(tmp_path):
    path = tmp_path / "tw.json"
    path.write_text(json.dumps({
        "kind": "catalog",
        "name": "two_well",
        "params": {"alpha": np.pi / 2,
                   "grid": {"n": 1024, "lower": -8, "upper": 8}},
    }))
    return str(path)


def run_to_doc(capsys, argv):
    code = main(argv)
    out = capsys.readouterr().out
    assert code == 0, out
    return json.loads(out)


class TestReport:
    def test_gaussian_report_values(self, capsys, pm_spec):
        doc = run_to_doc(capsys, [
            "report", "--model", pm_spec, "--theta", "0,0", "--weight", "js",
        ])
        entry = doc["entries"][0]
        assert np.allclose(entry["sld_fisher"], [[2, 0], [0, 2]], atol=1e-6)
        assert entry["betas"][0] == pytest.approx(1.0, abs=1e-6)
        assert entry["attainable_cr_js"] == pytest.approx(4.0, abs=1e-3)
        assert entry["sld_bound_js"] == pytest.approx(2.0, abs=1e-12)
        assert entry["sld_bound_weight"] == pytest.approx(2.0, abs=1e-12)
        assert entry["quasi_classical"] is False
        assert doc["summary"]["max_beta"] == pytest.approx(1.0, abs=1e-6)

    def test_determinism_byte_identical(self, capsys, pm_spec, tmp_path):
        argv = ["report", "--model", pm_spec, "--theta", "0.1,0.2;0.3,-0.4"]
        out1 = tmp_path / "a.json"
        out2 = tmp_path / "b.json"
        assert main(argv + ["--out", str(out1)]) == 0
        assert main(argv + ["--out", str(out2)]) == 0
        assert out1.read_bytes() == out2.read_bytes()

    def test_float_precision_17_digits(self, capsys, pm_spec):
        doc_text = render_document({"x": 1.0 / 3.0})
        assert "0.33333333333333331" in doc_text

    def test_diag_weight(self, capsys, pm_spec):
        doc = run_to_doc(capsys, [
            "report", "--model", pm_spec, "--theta", "0,0",
            "--weight", "diag:1,0",
        ])
        assert doc["entries"][0]["sld_bound_weight"] == pytest.approx(0.5)


class TestModelSpecParsing:
    def test_catalog_spin_dimension(self):
        built, echo = parse_model_spec({
            "kind": "catalog", "name": "spin_jz",
            "params": {"amplitudes": [0.5, 0.7071067811865475, 0.5]},
        })
        assert built.space.dim == 3
        assert echo["name"] == "spin_jz"

    def test_tabulated_row_length_mismatch_names_row(self):
        spec = {
            "kind": "tabulated",
            "space": {"type": "basis", "dimension": 2},
            "thetas": [0.0, 0.1, 0.2],
            "amplitudes": [
                [[1.0, 0.0], [0.0, 0.0]],
                [[1.0, 0.0]],
                [[1.0, 0.0], [0.0, 0.0]],
            ],
        }
        with pytest.raises(SpecFormatError) as err:
            parse_model_spec(spec)
        assert "amplitudes[1]" in str(err.value)

    def test_tabulated_nonuniform_grid_rejected(self):
        spec = {
            "kind": "tabulated",
            "space": {"type": "basis", "dimension": 2},
            "thetas": [0.0, 0.1, 0.35],
            "amplitudes": [[[1.0, 0.0], [0.0, 0.0]]] * 3,
        }
        with pytest.raises(SpecFormatError):
            parse_model_spec(spec)

    def test_tabulated_matches_catalog(self, capsys, tmp_path):
        # cross-check: a gaussian family tabulated on a coarse theta grid
        # reproduces the catalog metric within finite-difference error
        import qestgeo as qg

        cat = qg.catalog("position_shift", {"grid": {"n": 256, "lower": -10, "upper": 10}})
        thetas = np.linspace(-0.02, 0.02, 5)
        rows = []
        for t in thetas:
            amp = cat.evaluate((t,)).amplitudes
            rows.append([[float(a.real), float(a.imag)] for a in amp])
        spec = {
            "kind": "tabulated",
            "space": {"type": "grid", "n": 256, "lower": -10.0, "upper": 10.0},
            "thetas": [float(t) for t in thetas],
            "amplitudes": rows,
        }
        path = tmp_path / "tab.json"
        path.write_text(json.dumps(spec))
        doc = run_to_doc(capsys, ["report", "--model", str(path), "--theta", "0.0"])
        assert doc["entries"][0]["sld_fisher"][0][0] == pytest.approx(2.0, rel=1e-4)

    def test_round_trip_idempotent(self):
        spec = {
            "kind": "tabulated",
            "space": {"type": "basis", "dimension": 2},
            "thetas": [0.0, 0.1, 0.2],
            "amplitudes": [
                [[1.0, 0.0], [0.0, 0.0]],
                [[0.9950041652780258, 0.0], [0.09983341664682815, 0.0]],
                [[0.9800665778412416, 0.0], [0.19866933079506122, 0.0]],
            ],
        }
        built1, echo1 = parse_model_spec(spec)
        built2, echo2 = parse_model_spec(json.loads(render_document(echo1)))
        assert echo1 == echo2
        assert built1.space == built2.space

    def test_grid_default_from_env(self, monkeypatch):
        monkeypatch.setenv("QESTGEO_GRID_N", "64")
        built, _ = parse_model_spec({
            "kind": "catalog", "name": "position_shift",
            "params": {"grid": {"lower": -10, "upper": 10}},
        })
        assert built.space.n_points == 64


class TestCheck:
    def test_two_well_document(self, capsys, two_well_spec):
        doc = run_to_doc(capsys, [
            "check", "--model", two_well_spec, "--samples=-1;-0.5;0;0.5;1",
        ])
        assert doc["quasi_parallel"]["flag"] is False
        assert doc["quasi_parallel"]["witness"]["value"] > 1e-3
        assert doc["momentum_symmetry"]["flag"] is False
        assert doc["antiunitary"]["constructed"] is False
        assert doc["consistent"] is True

    def test_spin_symmetric_document(self, capsys, tmp_path):
        path = tmp_path / "spin.json"
        path.write_text(json.dumps({
            "kind": "catalog", "name": "spin_jz",
            "params": {"amplitudes": [0.5, 0.7071067811865475, 0.5]},
        }))
        doc = run_to_doc(capsys, [
            "check", "--model", str(path), "--samples", "0;0.5;1;1.5;2",
        ])
        assert doc["quasi_parallel"]["flag"] is True
        assert doc["antiunitary"]["invariant"] is True
        assert doc["momentum_symmetry"]["applicable"] is False
        assert doc["consistent"] is True


class TestHolonomy:
    def test_octant_loop(self, capsys, tmp_path):
        model_path = tmp_path / "bloch.json"
        model_path.write_text(json.dumps({"kind": "catalog", "name": "bloch"}))
        pts = []
        k = 2000 // 3
        for s in np.linspace(0, np.pi / 2, k, endpoint=False):
            pts.append([float(s), 0.0])
        for s in np.linspace(0, np.pi / 2, k, endpoint=False):
            pts.append([np.pi / 2, float(s)])
        for s in np.linspace(np.pi / 2, 0, 2000 - 2 * k, endpoint=False):
            pts.append([float(s), np.pi / 2])
        pts.append([0.0, 0.0])
        loop_path = tmp_path / "loop.json"
        loop_path.write_text(json.dumps({"thetas": pts, "closed": True}))
        doc = run_to_doc(capsys, [
            "holonomy", "--model", str(model_path), "--loop", str(loop_path),
        ])
        assert abs(doc["result"]["gamma"]) == pytest.approx(np.pi / 4, abs=1e-3)


class TestFisherAndSample:
    def test_fisher_grid_attains_on_two_well(self, capsys, two_well_spec):
        doc = run_to_doc(capsys, [
            "fisher", "--model", two_well_spec, "--povm", "grid",
            "--theta=-0.5;0;0.5",
        ])
        for entry in doc["entries"]:
            assert entry["max_relative_gap"] < 5e-3
            assert entry["min_psd_eigenvalue"] > -1e-6

    def test_sample_counts_deterministic(self, capsys, two_well_spec):
        argv = ["sample", "--model", two_well_spec, "--povm", "grid",
                "--theta", "0", "--n", "2000", "--seed", "11"]
        doc1 = run_to_doc(capsys, argv)
        doc2 = run_to_doc(capsys, argv)
        assert doc1["counts"] == doc2["counts"]
        assert sum(c for _, c in doc1["counts"]) == 2000

    def test_schmidt_povm_on_parallel_family(self, capsys, tmp_path):
        path = tmp_path / "spin.json"
        path.write_text(json.dumps({
            "kind": "catalog", "name": "spin_jz",
            "params": {"amplitudes": [0.5, 0.7071067811865475, 0.5]},
        }))
        doc = run_to_doc(capsys, [
            "fisher", "--model", str(path), "--povm", "schmidt",
            "--theta", "0;0.5;1", "--samples", "0;0.5;1;1.5;2",
        ])
        for entry in doc["entries"]:
            assert entry["classical_fisher"][0][0] == pytest.approx(2.0, abs=1e-9)

    def test_tabulated_povm_file(self, capsys, tmp_path):
        model_path = tmp_path / "spin_half.json"
        model_path.write_text(json.dumps({
            "kind": "catalog", "name": "spin_jz",
            "params": {"amplitudes": [0.7071067811865475, 0.7071067811865475]},
        }))
        povm_path = tmp_path / "povm.json"
        povm_path.write_text(json.dumps({
            "kind": "matrices",
            "elements": [
                [[[0.5, 0.0], [0.5, 0.0]], [[0.5, 0.0], [0.5, 0.0]]],
                [[[0.5, 0.0], [-0.5, 0.0]], [[-0.5, 0.0], [0.5, 0.0]]],
            ],
        }))
        doc = run_to_doc(capsys, [
            "fisher", "--model", str(model_path), "--povm", str(povm_path),
            "--theta", "0.3",
        ])
        entry = doc["entries"][0]
        # x-basis measurement of the rotating spin-1/2: attains J = 1
        assert entry["classical_fisher"][0][0] == pytest.approx(
            entry["sld_fisher"][0][0], rel=1e-8)


class TestExitCodes:
    def test_missing_model_file(self, capsys, tmp_path):
        code = main(["report", "--model", str(tmp_path / "nope.json"),
                     "--theta", "0"])
        assert code == 2

    def test_bad_schema(self, capsys, tmp_path):
        path = tmp_path / "bad.json"
        path.write_text(json.dumps({"kind": "catalog", "name": "unknown_model"}))
        assert main(["report", "--model", str(path), "--theta", "0"]) == 2

    def test_numerical_contract_violation(self, capsys, tmp_path):
        # schmidt construction on a non-parallel family
        path = tmp_path / "tw.json"
        path.write_text(json.dumps({
            "kind": "catalog", "name": "two_well",
            "params": {"grid": {"n": 512, "lower": -8, "upper": 8}},
        }))
        code = main(["fisher", "--model", str(path), "--povm", "schmidt",
                     "--theta=-0.5;0;0.5"])
        assert code == 3

    def test_usage_error(self, capsys):
        with pytest.raises(SystemExit) as err:
            main(["report", "--frobnicate"])
        assert err.value.code == 64

    def test_theta_arity_checked(self, capsys, pm_spec):
        assert main(["report", "--model", pm_spec, "--theta", "0"]) == 2
