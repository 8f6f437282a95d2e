import io
import json
import subprocess
import sys

import numpy as np
import pytest

from sigstream.cli import main, parse_transform_chain, ParseError
from sigstream.signature import signature
from sigstream.streams import Stream, read_csv

KEYS_2_3 = "() (1) (2) (1,1) (1,2) (2,1) (2,2) (1,1,1) (1,1,2) (1,2,1) (1,2,2) (2,1,1) (2,1,2) (2,2,1) (2,2,2)"


def run(*argv):
    out, err = io.StringIO(), io.StringIO()
    code = main(list(argv), stdout=out, stderr=err)
    return code, out.getvalue(), err.getvalue()


@pytest.fixture
def csv_file(tmp_path):
    def make(rows, name="x.csv", header=None):
        path = tmp_path / name
        lines = ([header] if header else []) + [",".join(repr(float(v)) for v in r) for r in rows]
        path.write_text("\n".join(lines) + "\n")
        return str(path)

    return make


class TestKeysAndSig:
    def test_keys(self):
        code, out, _ = run("keys", "2", "3")
        assert code == 0 and out.strip() == KEYS_2_3

    def test_sig_two_rows(self, csv_file):
        code, out, _ = run("sig", csv_file([[2, -2], [5, -1]]), "-N", "2")
        doc = json.loads(out)
        assert code == 0 and doc["d"] == 2 and doc["depth"] == 2
        assert doc["keys"] == ["()", "(1)", "(2)", "(1,1)", "(1,2)", "(2,1)", "(2,2)"]
        assert doc["coefficients"] == [1, 3, 1, 4.5, 1.5, 1.5, 0.5]

    def test_single_row_is_unit(self, csv_file):
        code, out, _ = run("sig", csv_file([[1, 2, 3]]), "--depth", "2")
        assert code == 0 and json.loads(out)["coefficients"] == [1] + [0] * 12

    def test_lossless_and_deterministic(self, csv_file, rng):
        pts = rng.normal(size=(7, 2))
        path = csv_file(pts)
        _, a, _ = run("sig", path, "-N", "3")
        _, b, _ = run("sig", path, "-N", "3")
        assert a == b
        np.testing.assert_array_equal(json.loads(a)["coefficients"], signature(Stream(pts), 3).coefficients)

    def test_csv_output(self, csv_file):
        code, out, _ = run("sig", csv_file([[0, 0], [1, 0], [1, 1]]), "-N", "2", "--format", "csv")
        lines = out.strip().splitlines()
        assert code == 0 and lines[0] == "key,value" and lines[6] == '"(2,1)",0.0'

    def test_logsig(self, csv_file):
        code, out, _ = run("logsig", csv_file([[0, 0], [1, 0], [1, 1]]), "-N", "2")
        assert json.loads(out)["coefficients"] == [0, 1, 1, 0, 0.5, -0.5, 0]


class TestTransform:
    def test_leadlag_roundtrip(self, csv_file, tmp_path):
        code, out, _ = run("transform", csv_file([[1], [6], [3]]), "--transform", "leadlag", "--format", "csv")
        assert code == 0
        s = read_csv(io.StringIO(out))
        assert s.points.tolist() == [[1, 1], [6, 1], [6, 6], [3, 6], [3, 3]]

    def test_chain_order(self, csv_file):
        code, out, _ = run("transform", csv_file([[1], [2], [3]]), "--transform", "cumsum,time:abs")
        assert json.loads(out)["points"] == [[1, 0], [3, 1], [6, 2]]

    def test_time_column_used(self, csv_file):
        path = csv_file([[0, 5], [0.5, 6]], header="t,x")
        _, out, _ = run("transform", path, "--transform", "time:diff")
        assert json.loads(out)["points"] == [[5, 0], [6, 0.5]]

    @pytest.mark.parametrize("spec", ["leadlag:x", "leadlag:1:1:maybe", "time:weird", "spin", "cumsum:2"])
    def test_bad_specs(self, spec):
        with pytest.raises(ParseError):
            parse_transform_chain(spec)


class TestKernelsAndMeasures:
    def test_kernel_modes(self, csv_file, rng):
        x, y = rng.normal(scale=0.3, size=(4, 2)), rng.normal(scale=0.3, size=(5, 2))
        px, py = csv_file(x, "x.csv"), csv_file(y, "y.csv")
        _, pde, _ = run("kernel", px, py, "--level", "5")
        _, trunc, _ = run("kernel", px, py, "--mode", "truncated", "-N", "8")
        assert json.loads(pde)["value"] == pytest.approx(json.loads(trunc)["value"], rel=1e-3)

    def test_gram_directory(self, tmp_path, rng):
        d = tmp_path / "corpus"
        d.mkdir()
        for i in range(3):
            (d / f"s{i}.csv").write_text("\n".join(f"{a},{b}" for a, b in rng.normal(size=(4, 2))) + "\n")
        code, out, _ = run("gram", str(d), "-N", "3")
        G = np.array(json.loads(out)["gram"])
        assert code == 0 and G.shape == (3, 3) and np.allclose(G, G.T)

    def test_expected_sig_with_weights(self, tmp_path):
        d = tmp_path / "measure"
        d.mkdir()
        (d / "a.csv").write_text("0\n1\n")
        (d / "b.csv").write_text("0\n3\n")
        (d / "weights.csv").write_text("1\n3\n")
        code, out, _ = run("expected-sig", str(d), "-N", "1")
        assert code == 0 and json.loads(out)["coefficients"] == [1.0, 2.5]

    def test_ses(self, tmp_path):
        d = tmp_path / "measure"
        d.mkdir()
        (d / "a.csv").write_text("0\n1\n2\n")
        code, out, _ = run("ses", str(d), "--inner-depth", "1", "--outer-depth", "1")
        assert code == 0 and json.loads(out)["coefficients"] == [1.0, 0.0, 2.0]

    def test_logode(self, csv_file, tmp_path):
        field = tmp_path / "field.json"
        field.write_text(json.dumps({"matrices": [[[1.0]]], "z0": [2.0]}))
        code, out, _ = run("logode", csv_file([[0.0], [0.1]]), "--field", str(field), "-N", "2", "--substeps", "64")
        assert code == 0
        assert json.loads(out)["states"][-1][0] == pytest.approx(2 * np.exp(0.1), rel=1e-12)


class TestConformanceCommands:
    def test_fit_score_calibrate(self, tmp_path, rng):
        d = tmp_path / "corpus"
        d.mkdir()
        for i in range(8):
            (d / f"s{i}.csv").write_text("\n".join(f"{a},{b}" for a, b in rng.normal(size=(5, 2))) + "\n")
        model = str(tmp_path / "m.json")
        assert run("conformance", "fit", str(d), "--model", model, "-N", "2")[0] == 0
        code, out, _ = run("conformance", "score", str(d / "s3.csv"), "--model", model, "--format", "csv")
        value, idx = out.strip().split(",")
        assert code == 0 and float(value) == pytest.approx(0.0, abs=1e-9) and idx == "3"
        code, out, _ = run("conformance", "calibrate", str(d), "-N", "2", "--seed", "1")
        assert code == 0 and json.loads(out)["threshold"] >= 0


class TestExitCodes:
    def test_usage(self):
        assert run()[0] == 2
        assert run("sig")[0] == 2
        assert run("keys", "two", "3")[0] == 2

    def test_missing_file(self, tmp_path):
        code, _, err = run("sig", str(tmp_path / "nope.csv"))
        assert code == 5 and "not found" in err

    def test_parse_error(self, tmp_path):
        bad = tmp_path / "bad.csv"
        bad.write_text("1,2\n3,abc\n")
        assert run("sig", str(bad))[0] == 3
        ok = tmp_path / "ok.csv"
        ok.write_text("1\n2\n")
        assert run("sig", str(ok), "--transform", "bogus")[0] == 3

    def test_dimension_mismatch(self, csv_file):
        assert run("kernel", csv_file([[0.0], [1.0]], "a.csv"), csv_file([[0, 0], [1, 1]], "b.csv"))[0] == 4

    def test_module_entry_point(self):
        proc = subprocess.run([sys.executable, "-m", "sigstream", "keys", "2", "3"], capture_output=True, text=True)
        assert proc.returncode == 0 and proc.stdout.strip() == KEYS_2_3
