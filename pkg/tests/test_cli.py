import csv
import json

import numpy as np
import pytest

from conftest import random_pd_spec, random_pencil_spec
from quadham import documents
from quadham.cli import main
from quadham.normal_form import normalize_general


def write(path, doc):
    path.write_text(json.dumps(doc))
    return str(path)


RIGID = {"name": "rigid body", "K": [1, 0, 0, 1, 0, 1], "k": [0, 0, 0], "A": [1, 0, 0, 2, 0, 3], "a": [0, 0, 0]}
NEG_K = {"K": [-1, 0, 0, -1, 0, -1], "k": [0, 0, 0], "A": [1, 0, 0, 1, 0, 1], "a": [0, 0, 0]}
NO_PENCIL = {"K": [1, 0, 0, -1, 0, 0], "k": [0, 0, 0], "A": [-1, 0, 0, 1, 0, 0], "a": [0, 0, 0]}


@pytest.fixture
def rigid(tmp_path):
    return write(tmp_path / "rigid.json", RIGID)


class TestDocuments:
    def test_spec_round_trip(self, tmp_path, rng):
        spec = random_pd_spec(rng)
        path = tmp_path / "s.json"
        documents.write_spec(spec, path)
        back = documents.read_spec(path)
        assert back.same_as(spec)

    @pytest.mark.parametrize(
        "field, value, needle",
        [
            ("K", [1, 0, 0, 1, 0], "'K'"),
            ("K", [1, 0, 0, 0, 1, 0, 0, 0, 1], "'K'"),
            ("a", [0, "x", 0], "'a'"),
            ("k", None, "'k'"),
            ("A", [1, 0, 0, 1, 0, float("nan")], "'A'"),
            ("name", 3, "'name'"),
        ],
    )
    def test_bad_field_named(self, field, value, needle):
        doc = dict(RIGID)
        doc[field] = value
        with pytest.raises(documents.DocumentError, match=needle):
            documents.spec_from_dict(doc)

    def test_missing_field(self):
        doc = dict(RIGID)
        del doc["A"]
        with pytest.raises(documents.DocumentError, match="'A' is missing"):
            documents.spec_from_dict(doc)

    def test_normal_form_round_trip_is_lossless(self, rng):
        for spec in (random_pd_spec(rng), random_pencil_spec(rng)[0]):
            nf = normalize_general(spec)
            text = documents.dumps_normal_form(nf)
            back = documents.loads_normal_form(text)
            np.testing.assert_array_equal(back.lambdas, nf.lambdas)
            np.testing.assert_array_equal(back.d, nf.d)
            np.testing.assert_array_equal(back.map.M, nf.map.M)
            np.testing.assert_array_equal(back.map.c, nf.map.c)
            assert [s.kind for s in back.steps] == [s.kind for s in nf.steps]
            for s0, s1 in zip(nf.steps, back.steps):
                np.testing.assert_array_equal(s0.map.M, s1.map.M)
                for key, val in s0.payload.items():
                    np.testing.assert_array_equal(np.asarray(s1.payload[key]), np.asarray(val))
            assert back.certificate == nf.certificate
            assert documents.dumps_normal_form(back) == text


class TestNormalize:
    def test_rigid_body(self, rigid, tmp_path):
        out = tmp_path / "nf.json"
        assert main(["normalize", rigid, str(out)]) == 0
        doc = json.loads(out.read_text())
        assert doc["lambdas"] == [1.0, 2.0, 3.0]
        assert doc["d"] == [0.0, 0.0, 0.0]
        assert doc["certificate"] is None

    def test_pencil_path(self, tmp_path):
        out = tmp_path / "nf.json"
        assert main(["normalize", write(tmp_path / "s.json", NEG_K), str(out)]) == 0
        doc = json.loads(out.read_text())
        assert doc["certificate"]["convention"] == "K-first"
        assert doc["steps"][0]["kind"] == "SL2Rewrite"

    def test_no_pencil_exit_2(self, tmp_path, capsys):
        assert main(["normalize", write(tmp_path / "s.json", NO_PENCIL), str(tmp_path / "o.json")]) == 2
        assert "no definite pencil" in capsys.readouterr().err

    def test_missing_file_exit_1(self, tmp_path):
        assert main(["normalize", str(tmp_path / "absent.json"), "-"]) == 1

    def test_bad_field_exit_1(self, tmp_path, capsys):
        doc = dict(RIGID, k=[0, 0])
        assert main(["normalize", write(tmp_path / "s.json", doc), "-"]) == 1
        assert "'k'" in capsys.readouterr().err

    def test_asymmetric_input_unrepresentable(self, tmp_path):
        doc = dict(RIGID, K=[[1, 2, 0], [0, 1, 0], [0, 0, 1]])
        assert main(["normalize", write(tmp_path / "s.json", doc), "-"]) == 1


class TestSimulate:
    def read_rows(self, path):
        with open(path) as fh:
            return list(csv.reader(fh))

    def test_header_and_rows(self, rigid, tmp_path):
        out = tmp_path / "t.csv"
        assert main(["simulate", rigid, str(out), "--u0", "1,1,1", "--t-end", "1", "--dt", "0.01"]) == 0
        rows = self.read_rows(out)
        assert rows[0] == ["t", "u1", "u2", "u3", "C", "H"]
        assert len(rows) == 102
        data = np.array(rows[1:], dtype=float)
        assert data[-1, 0] == 1.0
        np.testing.assert_allclose(data[:, 4], 1.5, rtol=1e-8)
        np.testing.assert_allclose(data[:, 5], 3.0, rtol=1e-8)

    def test_full_precision(self, rigid, tmp_path):
        out = tmp_path / "t.csv"
        main(["simulate", rigid, str(out), "--u0", "0.1,0.2,0.3", "--t-end", "0.01", "--dt", "0.01"])
        row = self.read_rows(out)[2]
        assert float(row[1]) == float(repr(float(row[1])))
        assert len(row[1]) > 12

    def test_zero_field(self, tmp_path):
        doc = dict(RIGID, K=RIGID["A"])
        out = tmp_path / "t.csv"
        assert main(["simulate", write(tmp_path / "s.json", doc), str(out), "--u0", "0.5,-1,2", "--t-end", "0.1", "--dt", "0.01"]) == 0
        data = np.array(self.read_rows(out)[1:], dtype=float)
        np.testing.assert_array_equal(data[:, 1:4], np.tile([0.5, -1, 2], (11, 1)))

    def test_midpoint(self, rigid, tmp_path):
        out = tmp_path / "t.csv"
        assert main(["simulate", rigid, str(out), "--u0", "1,1,1", "--t-end", "10", "--dt", "0.01", "--method", "midpoint"]) == 0
        data = np.array(self.read_rows(out)[1:], dtype=float)
        assert np.abs(data[:, 4] - 1.5).max() <= 1e-10

    @pytest.mark.parametrize(
        "flags",
        [
            ["--u0", "1,1,1", "--t-end", "0"],
            ["--u0", "1,1"],
            ["--u0", "1,a,1"],
            ["--u0", "1,1,1", "--dt", "-1"],
            ["--u0", "1,1,1", "--method", "euler"],
        ],
    )
    def test_bad_flags_exit_1(self, rigid, tmp_path, flags):
        assert main(["simulate", rigid, str(tmp_path / "t.csv"), *flags]) == 1

    def test_non_finite_exit_3(self, tmp_path):
        doc = {"K": [1, 0, 0, -1, 0, 0], "k": [0, 0, 0], "A": [0, 0, 0, 0, 0, 1], "a": [1e300, 0, 0]}
        args = ["simulate", write(tmp_path / "s.json", doc), str(tmp_path / "t.csv")]
        assert main(args + ["--u0", "1e10,1e10,1e10", "--t-end", "10", "--dt", "0.1"]) == 3


class TestVerify:
    def test_rigid_body(self, rigid, capsys):
        assert main(["verify", rigid, "--trials", "10"]) == 0
        out = capsys.readouterr().out
        assert "seed 0" in out
        assert "10/10 passed" in out

    def test_deterministic(self, tmp_path, rng, capsys):
        path = tmp_path / "s.json"
        documents.write_spec(random_pd_spec(rng), path)
        assert main(["verify", str(path), "--trials", "100", "--seed", "7"]) == 0
        first = capsys.readouterr().out
        assert main(["verify", str(path), "--trials", "100", "--seed", "7"]) == 0
        assert capsys.readouterr().out == first
        assert "100/100 passed" in first

    def test_corrupted_map_exit_4(self, rigid, capsys):
        assert main(["verify", rigid, "--trials", "3", "--inject-offset", "0.1"]) == 4
        assert "FAIL" in capsys.readouterr().out

    def test_no_pencil_exit_2(self, tmp_path):
        assert main(["verify", write(tmp_path / "s.json", NO_PENCIL), "--trials", "2"]) == 2

    def test_bad_trials(self, rigid):
        assert main(["verify", rigid, "--trials", "0"]) == 1


class TestRealize:
    def test_identity(self, rigid, capsys):
        assert main(["realize", rigid, "--matrix", "1,0,0,1"]) == 0
        out = json.loads(capsys.readouterr().out)
        assert out["casimir"] == {"Q": RIGID["K"], "q": RIGID["k"]}
        assert out["hamiltonian"] == {"Q": RIGID["A"], "q": RIGID["a"]}
        assert out["max_field_deviation"] == 0.0

    def test_rotation(self, tmp_path, rng, capsys):
        path = tmp_path / "s.json"
        documents.write_spec(random_pd_spec(rng), path)
        assert main(["realize", str(path), "--matrix", "0,1,-1,0"]) == 0
        out = json.loads(capsys.readouterr().out)
        spec = documents.read_spec(path)
        assert out["casimir"]["Q"] == list(spec.A.entries)
        assert out["hamiltonian"]["q"] == (-spec.k).tolist()
        assert out["max_field_deviation"] <= 1e-12

    def test_not_unimodular_exit_1(self, rigid):
        assert main(["realize", rigid, "--matrix", "2,0,0,1"]) == 1

    def test_determinism(self, rigid, capsys):
        main(["realize", rigid, "--matrix", "0.5,0,0,2", "--seed", "3"])
        a = capsys.readouterr().out
        main(["realize", rigid, "--matrix", "0.5,0,0,2", "--seed", "3"])
        assert capsys.readouterr().out == a


def test_help_exits_cleanly(capsys):
    assert main(["--help"]) == 0


def test_unknown_command():
    assert main(["frobnicate"]) == 1
