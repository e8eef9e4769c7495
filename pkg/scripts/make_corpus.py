"""Write the bundled instance corpus.

Small random Koopmans-Beckmann instances get a ``.sln`` certified by brute
force.  ``chr12c`` is the QAPLIB instance as shipped in scipy's test suite.
"""
import argparse
from pathlib import Path

import numpy as np

from sinkhorn_ja.cli import random_instance
from sinkhorn_ja.qap import brute_force, qap_energy
from sinkhorn_ja.qaplib_io import QaplibProblem, QaplibSolution, data_dir, format_dat, format_sln

CHR12C_A = """
0 90 10 0 0 0 0 0 0 0 0 0
90 0 0 23 0 0 0 0 0 0 0 0
10 0 0 0 43 0 0 0 0 0 0 0
0 23 0 0 0 88 0 0 0 0 0 0
0 0 43 0 0 0 26 0 0 0 0 0
0 0 0 88 0 0 0 16 0 0 0 0
0 0 0 0 26 0 0 0 1 0 0 0
0 0 0 0 0 16 0 0 0 96 0 0
0 0 0 0 0 0 1 0 0 0 29 0
0 0 0 0 0 0 0 96 0 0 0 37
0 0 0 0 0 0 0 0 29 0 0 0
0 0 0 0 0 0 0 0 0 37 0 0
"""
CHR12C_B = """
0 36 54 26 59 72 9 34 79 17 46 95
36 0 73 35 90 58 30 78 35 44 79 36
54 73 0 21 10 97 58 66 69 61 54 63
26 35 21 0 93 12 46 40 37 48 68 85
59 90 10 93 0 64 5 29 76 16 5 76
72 58 97 12 64 0 96 55 38 54 0 34
9 30 58 46 5 96 0 83 35 11 56 37
34 78 66 40 29 55 83 0 44 12 15 80
79 35 69 37 76 38 35 44 0 64 39 33
17 44 61 48 16 54 11 12 64 0 70 86
46 79 54 68 5 0 56 15 39 70 0 18
95 36 63 85 76 34 37 80 33 86 18 0
"""
CHR12C_OPT = (11156, [7, 5, 1, 3, 10, 4, 8, 6, 9, 11, 2, 12])


def _mat(text):
    return np.array([[int(v) for v in line.split()] for line in text.strip().splitlines()])


def write_pair(out: Path, name: str, problem: QaplibProblem, sol: QaplibSolution):
    (out / f"{name}.dat").write_text(format_dat(problem))
    (out / f"{name}.sln").write_text(format_sln(sol))
    print(f"{name}: n={problem.n} value={sol.value}")


def main():
    ap = argparse.ArgumentParser(description=__doc__)
    ap.add_argument("--out", type=Path, default=data_dir())
    args = ap.parse_args()
    args.out.mkdir(parents=True, exist_ok=True)

    tiny = QaplibProblem("tiny2", 2, np.array([[0, 1], [1, 0]]), np.array([[0, 3], [3, 0]]))
    write_pair(args.out, "tiny2", tiny, QaplibSolution(2, 6, np.array([0, 1])))

    for n, seed in [(4, 11), (5, 12), (6, 13), (7, 14), (8, 15)]:
        inst = random_instance(n, seed, "kb")
        perm, value = brute_force(inst)
        name = f"rand{n}kb"
        write_pair(args.out, name, QaplibProblem(name, n, inst.A, inst.B), QaplibSolution(n, value, perm))

    A, B = _mat(CHR12C_A), _mat(CHR12C_B)
    value, perm1 = CHR12C_OPT
    perm = np.array(perm1) - 1
    inst = QaplibProblem("chr12c", 12, A, B).to_instance()
    assert qap_energy(inst, perm) == value
    write_pair(args.out, "chr12c", QaplibProblem("chr12c", 12, A, B), QaplibSolution(12, value, perm))


if __name__ == "__main__":
    main()
