"""Reading and writing QAPLIB ``.dat`` / ``.sln`` files and CSV result tables.

``.dat``: the dimension ``n`` followed by the ``n x n`` flow matrix ``A`` and
the ``n x n`` distance matrix ``B``, whitespace separated with arbitrary line
breaks.  ``.sln``: ``n`` and the objective value, then a 1-based permutation.
"""
from __future__ import annotations

import csv
import math
import os
from dataclasses import dataclass, fields
from pathlib import Path

import numpy as np

from .qap import QapInstance, validate_permutation

DATA_ENV_VAR = "SINKHORN_JA_DATA"
CSV_HEADER = (
    "instance",
    "n",
    "method",
    "lower",
    "upper",
    "bk_lower",
    "bk_upper",
    "gap",
    "outer_iters",
    "inner_cycles",
    "wall_ms",
)


class QaplibFormatError(ValueError):
    pass


@dataclass
class QaplibProblem:
    name: str
    n: int
    A: np.ndarray
    B: np.ndarray

    def to_instance(self) -> QapInstance:
        return QapInstance.koopmans_beckmann(self.A, self.B, name=self.name)


@dataclass
class QaplibSolution:
    n: int
    value: float
    perm: np.ndarray  # 0-based


def _number(tok: str):
    try:
        return int(tok)
    except ValueError:
        pass
    try:
        v = float(tok)
    except ValueError:
        raise QaplibFormatError(f"non-numeric token {tok!r}") from None
    if not math.isfinite(v):
        raise QaplibFormatError(f"non-finite token {tok!r}")
    return v


def _tokens(text: str) -> list[str]:
    return text.replace(",", " ").split()


def _matrix(values: list) -> np.ndarray:
    if all(isinstance(v, int) for v in values):
        return np.array(values, dtype=np.int64)
    return np.array(values, dtype=float)


def parse_dat(text: str, name: str = "") -> QaplibProblem:
    toks = _tokens(text)
    if not toks:
        raise QaplibFormatError("empty .dat input")
    n = _number(toks[0])
    if not isinstance(n, int) or n < 1:
        raise QaplibFormatError(f"dimension must be a positive integer, got {toks[0]!r}")
    expected = 1 + 2 * n * n
    if len(toks) != expected:
        raise QaplibFormatError(f"token count {len(toks)} != 1 + 2n^2 = {expected} for n={n}")
    values = [_number(t) for t in toks[1:]]
    A = _matrix(values[: n * n]).reshape(n, n)
    B = _matrix(values[n * n :]).reshape(n, n)
    return QaplibProblem(name, n, A, B)


def parse_sln(text: str) -> QaplibSolution:
    toks = _tokens(text)
    if len(toks) < 2:
        raise QaplibFormatError("a .sln file starts with 'n value'")
    n = _number(toks[0])
    if not isinstance(n, int) or n < 1:
        raise QaplibFormatError(f"dimension must be a positive integer, got {toks[0]!r}")
    value = _number(toks[1])
    if len(toks) != 2 + n:
        raise QaplibFormatError(f"expected {n} permutation entries, found {len(toks) - 2}")
    entries = [_number(t) for t in toks[2:]]
    if not all(isinstance(v, int) for v in entries):
        raise QaplibFormatError("permutation entries must be integers")
    perm = np.array(entries, dtype=int) - 1
    try:
        validate_permutation(perm)
    except ValueError:
        raise QaplibFormatError(f"not a permutation of 1..{n}: {entries}") from None
    return QaplibSolution(n, value, perm)


def _format_matrix(M: np.ndarray) -> str:
    return "\n".join(" ".join(str(v) for v in row.tolist()) for row in M)


def format_dat(problem: QaplibProblem) -> str:
    return f"{problem.n}\n\n{_format_matrix(problem.A)}\n\n{_format_matrix(problem.B)}\n"


def format_sln(sol: QaplibSolution) -> str:
    return f"{sol.n} {sol.value}\n{' '.join(str(int(v) + 1) for v in sol.perm)}\n"


def read_dat(path) -> QaplibProblem:
    path = Path(path)
    return parse_dat(path.read_text(), name=path.stem)


def read_sln(path) -> QaplibSolution:
    return parse_sln(Path(path).read_text())


def data_dir() -> Path:
    """Bundled corpus, or the directory named by ``$SINKHORN_JA_DATA``."""
    override = os.environ.get(DATA_ENV_VAR)
    if override:
        return Path(override)
    return Path(__file__).parent / "data" / "qaplib"


def bundled_instances(directory=None) -> list[str]:
    d = Path(directory) if directory else data_dir()
    return sorted(p.stem for p in d.glob("*.dat"))


def skip_manifest(directory=None) -> dict[str, str]:
    """Instances excluded from exact checks, with the reason (``skip.txt``: ``name  reason``)."""
    d = Path(directory) if directory else data_dir()
    path = d / "skip.txt"
    if not path.exists():
        return {}
    out = {}
    for line in path.read_text().splitlines():
        line = line.strip()
        if not line or line.startswith("#"):
            continue
        name, _, reason = line.partition(" ")
        out[name] = reason.strip()
    return out


def load_instance(name_or_path, directory=None) -> tuple[QaplibProblem, QaplibSolution | None]:
    """Load ``name.dat`` (and ``name.sln`` if present) by name or path."""
    p = Path(name_or_path)
    if p.suffix == ".dat" or p.exists():
        dat = p
    else:
        dat = (Path(directory) if directory else data_dir()) / f"{name_or_path}.dat"
    if not dat.exists():
        raise FileNotFoundError(f"no QAPLIB instance at {dat}")
    problem = read_dat(dat)
    sln_path = dat.with_suffix(".sln")
    sol = read_sln(sln_path) if sln_path.exists() else None
    if sol is not None and sol.n != problem.n:
        raise QaplibFormatError(f"{sln_path.name}: n={sol.n} does not match problem n={problem.n}")
    return problem, sol


@dataclass
class ResultRow:
    instance: str
    n: int
    method: str
    lower: float
    upper: float
    bk_lower: float | None
    bk_upper: float | None
    gap: float
    outer_iters: int
    inner_cycles: int
    wall_ms: float


def _cell(v) -> str:
    if v is None:
        return ""
    if isinstance(v, float):
        if math.isnan(v):
            return ""
        return f"{v:.6g}"
    return str(v)


def write_csv(rows, destination) -> None:
    """Header plus one line per row; floats with 6 significant digits, missing values empty.

    ``destination`` is a path or an open text stream.
    """
    names = [f.name for f in fields(ResultRow)]
    assert tuple(names) == CSV_HEADER

    def _write(fh):
        w = csv.writer(fh, lineterminator="\n")
        w.writerow(CSV_HEADER)
        for row in rows:
            w.writerow([_cell(getattr(row, k)) for k in CSV_HEADER])

    if hasattr(destination, "write"):
        _write(destination)
        return
    with open(destination, "w", newline="") as fh:
        _write(fh)
