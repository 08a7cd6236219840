import json

import numpy as np
import pytest

from dctapprox.cli import RunConfig, _parse_sweep, main
from dctapprox.codec import GrayImage, read_pgm, write_pgm
from dctapprox.linalg import DyadicMatrix, read_matrix, write_matrix


def run(capsys, *args):
    code = main(list(args))
    out, err = capsys.readouterr()
    return code, out, err


def test_gen_dct_orthogonal(tmp_path, capsys):
    out = tmp_path / "c8.txt"
    code, _, err = run(capsys, "gen-dct", "--n", "8", "--out", str(out))
    assert code == 0
    c = read_matrix(out)
    assert np.max(np.abs(c @ c.T - np.eye(8))) < 1e-12
    assert json.loads(err.splitlines()[0])["N"] == 8  # RunConfig echo
    assert json.loads((tmp_path / "c8.txt.run.json").read_text())["subcommand"] == "gen-dct"


def test_gen_dct_odd_size_and_bad_size(capsys):
    code, out, _ = run(capsys, "gen-dct", "--n", "3")
    assert code == 0 and out.startswith("3 3")
    code, out, _ = run(capsys, "gen-dct", "--n", "1")
    assert code != 0 and json.loads(out)["status"] == "FAIL"


def test_assess_identity(tmp_path, capsys):
    p = tmp_path / "eye.txt"
    write_matrix(p, DyadicMatrix(np.eye(8, dtype=np.int64)))
    code, out, _ = run(capsys, "assess", str(p))
    assert code == 0
    row = out.splitlines()[1].split(",")
    assert row[0] == "eye" and float(row[5]) == 0.0 and np.isfinite(float(row[3]))


def test_assess_named(capsys):
    code, out, _ = run(capsys, "assess", "T16.5", "dct", "--n", "16")
    assert code == 0
    lines = out.splitlines()
    assert lines[1].startswith("C16.5,0.574810,0.003132,9.1267")
    assert lines[2].startswith("C16,0.000000")


def test_search_small_and_budget(tmp_path, capsys):
    out = tmp_path / "t8.txt"
    code, _, _ = run(capsys, "search", "--n", "8", "--set", "d1", "--out", str(out))
    assert code == 0 and read_matrix(out).shape == (8, 8)
    assert json.loads((tmp_path / "t8.txt.meta.json").read_text())["set"] == "D1"
    code, out_text, _ = run(capsys, "search", "--n", "32", "--set", "d1")
    assert code == 2 and "budget" in json.loads(out_text)["error"]


def test_search_reduced_64(capsys):
    code, _, err = run(capsys, "search", "--n", "64", "--set", "d1", "--reduced")
    assert code == 0
    assert "15.570703,0.043425,7.2435" in err


def test_search_bad_set(capsys):
    code, out, _ = run(capsys, "search", "--n", "8", "--set", "d9")
    assert code == 2 and "unknown multiplier set" in json.loads(out)["error"]


def test_jam(tmp_path, capsys):
    out = tmp_path / "t32.txt"
    code, _, err = run(capsys, "jam", "T16.5", "--j", "1", "--out", str(out))
    assert code == 0 and read_matrix(out).shape == (32, 32)
    assert "30.053869" in err


def test_verify_fastalg(capsys, tmp_path):
    report = tmp_path / "cost.csv"
    code, out, _ = run(capsys, "verify-fastalg", "T16.5", "--out", str(report))
    assert code == 0
    assert out.startswith("PASS T16.5 before=(240, 160) after=(100, 62)")
    assert "T16.5,240,160,100,62" in report.read_text()
    code, out, _ = run(capsys, "verify-fastalg", "T99")
    assert code == 2


def test_compress(tmp_path, capsys, camera):
    src = tmp_path / "cam.pgm"
    write_pgm(src, camera)
    dst = tmp_path / "out.pgm"
    code, out, _ = run(capsys, "compress", str(src), "T16.5", "--n", "16", "--out", str(dst))
    assert code == 0
    rep = json.loads(out)
    assert rep["r"] == 50 and rep["mse"] > 0
    assert read_pgm(dst).pixels.shape == (512, 512)


def test_benchmark(tmp_path, capsys, camera):
    corpus = tmp_path / "corpus"
    corpus.mkdir()
    write_pgm(corpus / "a.pgm", GrayImage(camera.pixels[:128, :128]))
    out = tmp_path / "bench"
    code, _, _ = run(capsys, "benchmark", str(corpus), "--n", "16", "--transforms", "dct", "T16.5",
                     "--r-sweep", "10:50:20", "--out", str(out))
    assert code == 0
    lines = (out / "benchmark.csv").read_text().splitlines()
    assert lines[0] == "image,transform,N,r,CR,mse,psnr_db,mssim"
    assert len(lines) == 1 + 2 * 3 * 2
    assert (out / "psnr_db.svg").read_text().startswith("<svg")
    assert (out / "run.json").exists()


def test_r_out_of_range(capsys, tmp_path):
    code, out, _ = run(capsys, "compress", str(tmp_path / "x.pgm"), "--n", "16", "--r", "300")
    assert code == 2


def test_sweep_parser():
    assert _parse_sweep("1:5:2") == [1, 3, 5]
    assert _parse_sweep("3:4") == [3, 4]
    import argparse

    with pytest.raises(argparse.ArgumentTypeError):
        _parse_sweep("5:1:1")


def test_run_config_validation():
    with pytest.raises(Exception):
        RunConfig("search", N=8, rho=1.5).validate()
