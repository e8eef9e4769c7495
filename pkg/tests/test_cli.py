import csv
import subprocess
import sys

import pytest

from sinkhorn_ja.cli import EXIT_INPUT, EXIT_NOT_CONVERGED, EXIT_OK, main, random_instance
from sinkhorn_ja.qaplib_io import CSV_HEADER


def run(capsys, *argv):
    code = main(list(argv))
    out = capsys.readouterr()
    return code, out.out, out.err


def test_solve_bundled_instance(capsys):
    code, out, _ = run(capsys, "solve", "tiny2")
    assert code == EXIT_OK
    assert "upper bound     6" in out
    assert "best known      6" in out


def test_solve_random_writes_csv(capsys, tmp_path):
    path = tmp_path / "r.csv"
    code, out, _ = run(capsys, "solve", "--n", "5", "--seed", "3", "--out", str(path))
    assert code == EXIT_OK
    rows = list(csv.reader(path.open()))
    assert tuple(rows[0]) == CSV_HEADER and len(rows) == 2
    assert rows[1][0] == "random-kb-n5-s3"


def test_solve_nonconvergence_exit_code(capsys):
    code, out, _ = run(capsys, "solve", "--n", "6", "--eps", "1e-12", "--max-outer", "2", "--max-cycles", "1")
    assert code == EXIT_NOT_CONVERGED
    assert "converged       no" in out


def test_solve_input_errors(capsys, tmp_path):
    bad = tmp_path / "bad.dat"
    bad.write_text("3 1 2")
    assert run(capsys, "solve", str(bad))[0] == EXIT_INPUT
    assert run(capsys, "solve", "missing-name")[0] == EXIT_INPUT
    assert run(capsys, "solve")[0] == EXIT_INPUT


def test_bench_isolates_failures(capsys):
    code, out, _ = run(capsys, "bench", "tiny2", "missing-name", "--n", "4", "--count", "2")
    assert code == EXIT_OK
    rows = list(csv.reader(out.splitlines()))
    assert tuple(rows[0]) == CSV_HEADER
    assert [r[0] for r in rows[1:]] == ["tiny2", "missing-name", "random-kb-n4-s0", "random-kb-n4-s1"]
    assert rows[2][3] == ""


def test_bench_needs_instances(capsys):
    assert run(capsys, "bench")[0] == EXIT_INPUT


def test_oracle_check(capsys):
    code, out, _ = run(capsys, "oracle-check", "--n", "4", "--count", "3")
    assert code == EXIT_OK
    assert "3/3 seeds" in out


def test_oracle_check_limit(capsys):
    code, _, err = run(capsys, "oracle-check", "--n", "10")
    assert code == EXIT_INPUT and "oracle limit exceeded" in err


def test_compare_methods_table(capsys):
    code, out, _ = run(capsys, "compare-methods", "--n", "3", "--k-max", "3")
    assert code == EXIT_OK
    rows = list(csv.DictReader(out.splitlines()))
    assert [r["square_beta"] for r in rows] == ["0.5", "1.5", "3.5"]
    assert [r["accumulation_beta"] for r in rows] == ["0.5", "1", "2"]
    for r in rows:
        assert float(r["proximal_dist"]) < 1e-6
        assert float(r["accumulation_dist"]) < 1e-6
        assert float(r["square_dist"]) < 1e-6
    assert float(rows[-1]["square_dist_vs_doubling"]) > 1e-4


def test_compare_methods_size_limit(capsys):
    assert run(capsys, "compare-methods", "--n", "5")[0] == EXIT_INPUT


def test_threads_and_method_flags(capsys):
    code, out, _ = run(capsys, "solve", "--n", "4", "--threads", "1", "--method", "accumulation-square")
    assert code == EXIT_OK and "method          accumulation_square" in out
    # proximal only grows beta linearly and may legitimately hit --max-outer
    code, out, _ = run(capsys, "solve", "--n", "4", "--method", "proximal", "--max-outer", "3")
    assert code == EXIT_NOT_CONVERGED and "outer iters     3" in out


def test_random_instance_distributions():
    kb = random_instance(5, 0)
    assert (kb.A == kb.A.T).all() and (kb.A.diagonal() == 0).all()
    assert random_instance(3, 0, "linear").tau.max() == 0
    with pytest.raises(ValueError):
        random_instance(3, 0, "bogus")
    assert (random_instance(4, 9).A == random_instance(4, 9).A).all()


def test_module_entry_point():
    res = subprocess.run([sys.executable, "-m", "sinkhorn_ja", "solve", "tiny2"], capture_output=True, text=True)
    assert res.returncode == 0 and "tiny2" in res.stdout
