import json
import os

import numpy as np
import pytest

from procmat.cli import main
from procmat.fixtures import identity_process, standard_fixtures
from procmat.linalg import hs_compose
from procmat.process import ProcessMatrix
from procmat.procfile import (
    ProcessFile,
    ProcessFileError,
    loads,
    read_process,
    write_file,
    write_process,
)

FIX = standard_fixtures()


# ---------------------------------------------------------------------------
# format round trips
# ---------------------------------------------------------------------------


@pytest.mark.parametrize("name", sorted(FIX))
def test_hs_round_trip_is_bit_identical(name):
    text = ProcessFile.from_process(FIX[name]).canonical_text()
    again = loads(text).canonical_text()
    assert text == again


def test_dense_round_trip_is_bit_identical():
    text = ProcessFile.from_process(FIX["branciard"], "dense").canonical_text()
    assert loads(text).canonical_text() == text


def test_matrix_survives_hs_encoding():
    for name, w in FIX.items():
        back = loads(ProcessFile.from_process(w).canonical_text()).to_process()
        assert np.abs(back.mat.mat - w.mat.mat).max() <= 1e-10, name


def test_matrix_survives_dense_encoding_exactly():
    w = FIX["channel_mix"]
    back = loads(ProcessFile.from_process(w, "dense").canonical_text()).to_process()
    np.testing.assert_array_equal(back.mat.mat, w.mat.mat)


def test_file_io_round_trip(tmp_path):
    path = tmp_path / "w.json"
    write_process(str(path), FIX["branciard"])
    w = read_process(str(path))
    assert np.abs(w.mat.mat - FIX["branciard"].mat.mat).max() <= 1e-10


def test_terms_are_sorted_canonically():
    text = ProcessFile.from_process(FIX["branciard"]).canonical_text()
    doc = json.loads(text)
    indices = [tuple(t["indices"]) for t in doc["terms"]]
    assert indices == sorted(indices)


def test_framed_layout_header_round_trip():
    layout = identity_process(2).layout.with_frame()
    w = ProcessMatrix(
        hs_compose({(0,) * 8: 0.0625}, layout.factors), layout
    )
    text = ProcessFile.from_process(w).canonical_text()
    parsed = loads(text)
    assert parsed.layout == layout
    assert parsed.canonical_text() == text


# ---------------------------------------------------------------------------
# parse errors
# ---------------------------------------------------------------------------


def test_parse_error_reports_location():
    with pytest.raises(ProcessFileError, match="line 1"):
        loads("{not json")


def test_parse_error_missing_field():
    with pytest.raises(ProcessFileError, match="n_parties"):
        loads('{"version": 1, "d_in": 2, "d_out": 2, "representation": "hs", "terms": []}')


def test_parse_error_bad_version():
    with pytest.raises(ProcessFileError, match="version"):
        loads('{"version": 9}')


def test_parse_error_bad_representation():
    base = '{"version": 1, "n_parties": 1, "d_in": 2, "d_out": 2, "representation": "weird"}'
    with pytest.raises(ProcessFileError, match="representation"):
        loads(base)


def test_parse_error_bad_indices():
    doc = {
        "version": 1,
        "n_parties": 1,
        "d_in": 2,
        "d_out": 2,
        "representation": "hs",
        "terms": [{"indices": [0, 9], "coeff": 1.0}],
    }
    with pytest.raises(ProcessFileError, match=r"indices\[1\]"):
        loads(json.dumps(doc))


def test_parse_error_duplicate_indices():
    doc = {
        "version": 1,
        "n_parties": 1,
        "d_in": 2,
        "d_out": 2,
        "representation": "hs",
        "terms": [
            {"indices": [0, 0], "coeff": 1.0},
            {"indices": [0, 0], "coeff": 2.0},
        ],
    }
    with pytest.raises(ProcessFileError, match="duplicate"):
        loads(json.dumps(doc))


def test_parse_error_wrong_entry_count():
    doc = {
        "version": 1,
        "n_parties": 1,
        "d_in": 2,
        "d_out": 2,
        "representation": "dense",
        "entries": [[1.0, 0.0]],
    }
    with pytest.raises(ProcessFileError, match="entries"):
        loads(json.dumps(doc))


# ---------------------------------------------------------------------------
# CLI
# ---------------------------------------------------------------------------


def write_fixture(tmp_path, name):
    path = tmp_path / f"{name}.json"
    write_process(str(path), FIX[name])
    return str(path)


def test_cli_validate_identity(tmp_path, capsys):
    path = write_fixture(tmp_path, "identity")
    assert main(["validate", path]) == 0
    out = capsys.readouterr().out
    assert "VALID" in out and "INVALID" not in out


def test_cli_validate_forbidden_term(tmp_path, capsys):
    layout = FIX["identity"].layout
    w = ProcessMatrix(
        hs_compose({(0, 0, 0, 0): 0.25, (1, 1, 0, 0): 0.25}, layout.factors), layout
    )
    path = tmp_path / "bad.json"
    write_process(str(path), w)
    assert main(["validate", str(path)]) == 2
    out = capsys.readouterr().out
    assert "forbidden term (1, 1, 0, 0)" in out
    assert "INVALID" in out


def test_cli_validate_branciard_default_and_rounding_tol(tmp_path, capsys):
    path = write_fixture(tmp_path, "branciard")
    # at the default 1e-9 the published rounding fails strict positivity
    assert main(["validate", path]) == 2
    assert main(["validate", path, "--tol", "2e-5"]) == 0


def test_cli_validate_env_tolerance(tmp_path, monkeypatch):
    path = write_fixture(tmp_path, "branciard")
    monkeypatch.setenv("PROCMAT_TOL", "2e-5")
    assert main(["validate", path]) == 0
    monkeypatch.setenv("PROCMAT_TOL", "not-a-number")
    assert main(["validate", path]) == 1


def test_cli_validate_parse_error(tmp_path, capsys):
    path = tmp_path / "garbage.json"
    path.write_text("{broken", encoding="utf-8")
    assert main(["validate", str(path)]) == 1
    assert "error" in capsys.readouterr().err


def test_cli_validate_missing_file(capsys):
    assert main(["validate", "/nonexistent/w.json"]) == 1


def test_cli_twirl_matches_mix_fixture_bit_exactly(tmp_path):
    src = write_fixture(tmp_path, "channel")
    out = tmp_path / "twirled.json"
    assert main(["twirl", src, "--out", str(out)]) == 0
    expected = ProcessFile.from_process(FIX["channel_mix"]).canonical_text()
    assert out.read_text(encoding="utf-8") == expected


def test_cli_twirl_leaves_invariant_input_unchanged(tmp_path):
    src = write_fixture(tmp_path, "branciard")
    out = tmp_path / "twirled.json"
    assert main(["twirl", src, "--out", str(out)]) == 0
    assert main(["invariance", str(out)]) == 0
    reparsed = read_process(str(out))
    assert np.abs(reparsed.mat.mat - FIX["branciard"].mat.mat).max() <= 1e-10


def test_cli_invariance_verdicts(tmp_path, capsys):
    inv = write_fixture(tmp_path, "branciard")
    assert main(["invariance", inv]) == 0
    assert "INVARIANT" in capsys.readouterr().out
    chan = write_fixture(tmp_path, "channel")
    assert main(["invariance", chan]) == 2
    out = capsys.readouterr().out
    assert "NOT INVARIANT" in out
    assert "permutation (1, 0)" in out


def test_cli_sector_report(capsys):
    assert main(["sector", "--n", "2", "--label", "symmetric"]) == 0
    out = capsys.readouterr().out
    assert "sector_dim=10" in out
    assert "feasible=false" in out
    assert main(["sector", "--n", "2", "--label", "antisymmetric"]) == 0
    assert "sector_dim=6" in capsys.readouterr().out
    assert main(["sector", "--n", "2", "--label", "full"]) == 0
    assert "feasible=true" in capsys.readouterr().out


def test_cli_frame_command(tmp_path, capsys):
    path = write_fixture(tmp_path, "channel")
    assert main(["frame", path, "--demo-instruments", "measure-z", "--repeats", "1"]) == 0
    out = capsys.readouterr().out
    assert "BORN RULE PRESERVED" in out
    assert main(["frame", path, "--demo-instruments", "random", "--repeats", "2"]) == 0


def test_cli_demo_regenerates_fixtures(tmp_path, capsys):
    outdir = tmp_path / "bundle"
    assert main(["demo", "--outdir", str(outdir)]) == 0
    for name in ("identity", "branciard", "channel", "channel_mix"):
        assert (outdir / f"{name}.json").exists()
    report = (outdir / "report.txt").read_text(encoding="utf-8")
    assert "rank=10" in report and "rank=6" in report
    assert "feasible=no" in report
    # demo fixtures parse and round trip
    text = (outdir / "branciard.json").read_text(encoding="utf-8")
    assert loads(text).canonical_text() == text


def test_cli_demo_is_deterministic(tmp_path):
    a = tmp_path / "one"
    b = tmp_path / "two"
    assert main(["demo", "--outdir", str(a)]) == 0
    assert main(["demo", "--outdir", str(b)]) == 0
    for name in ("identity", "branciard", "channel", "channel_mix"):
        assert (a / f"{name}.json").read_bytes() == (b / f"{name}.json").read_bytes()
    assert (a / "report.txt").read_bytes() == (b / "report.txt").read_bytes()
