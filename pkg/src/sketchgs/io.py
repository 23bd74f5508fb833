"""Matrix Market ingestion, synthetic problem generation, and CSV reports."""

from __future__ import annotations

import csv
import math
from dataclasses import dataclass, field

import numpy as np

from .krylov import SparseMatrix

__all__ = [
    "read_matrix_market", "write_matrix_market", "synthetic_matrix",
    "generate_laplacian_2d", "generate_random_sparse",
    "ExperimentReport", "REPORT_COLUMNS", "write_report", "read_report",
]


class MatrixMarketError(ValueError):
    pass


def read_matrix_market(path) -> SparseMatrix:
    """Read a real coordinate Matrix Market file into a square CSR matrix.

    Supports `general` and `symmetric` storage (symmetric is expanded to the
    full pattern); `pattern`, `complex` and array formats are rejected.
    Indices are 1-based in the file and converted. Duplicates are summed.
    """
    with open(path, "r", encoding="utf-8") as fh:
        header = fh.readline().strip()
        parts = header.split()
        if (len(parts) != 5 or parts[0] != "%%MatrixMarket"
                or parts[1].lower() != "matrix"):
            raise MatrixMarketError(f"malformed Matrix Market header: {header!r}")
        fmt, fld, symm = (p.lower() for p in parts[2:5])
        if fmt != "coordinate":
            raise MatrixMarketError(f"unsupported format {fmt!r} (coordinate only)")
        if fld in ("complex", "pattern"):
            raise MatrixMarketError(f"unsupported field {fld!r}")
        if fld not in ("real", "integer", "double"):
            raise MatrixMarketError(f"unsupported field {fld!r}")
        if symm == "skew-symmetric" or symm == "hermitian":
            raise MatrixMarketError(f"unsupported symmetry {symm!r}")
        if symm not in ("general", "symmetric"):
            raise MatrixMarketError(f"unsupported symmetry {symm!r}")
        line = fh.readline()
        while line and line.lstrip().startswith("%"):
            line = fh.readline()
        sizes = line.split()
        if len(sizes) != 3:
            raise MatrixMarketError(f"malformed size line: {line!r}")
        nrows, ncols, nnz = (int(s) for s in sizes)
        if nrows != ncols:
            raise MatrixMarketError(f"matrix is {nrows}x{ncols}, expected square")
        rows = np.empty(nnz, dtype=np.int64)
        cols = np.empty(nnz, dtype=np.int64)
        vals = np.empty(nnz, dtype=np.float64)
        for t in range(nnz):
            entry = fh.readline().split()
            if len(entry) != 3:
                raise MatrixMarketError(f"malformed entry line {t + 1}: {entry!r}")
            i, j = int(entry[0]), int(entry[1])
            if not (1 <= i <= nrows and 1 <= j <= ncols):
                raise MatrixMarketError(
                    f"entry ({i}, {j}) out of bounds for {nrows}x{ncols}")
            rows[t], cols[t], vals[t] = i - 1, j - 1, float(entry[2])
    return SparseMatrix.from_coo(nrows, rows, cols, vals,
                                 symmetric=(symm == "symmetric"))


def write_matrix_market(A: SparseMatrix, path) -> None:
    """Write a square CSR matrix in coordinate real general format."""
    coo = A.to_scipy().tocoo()
    with open(path, "w", encoding="utf-8", newline="\n") as fh:
        fh.write("%%MatrixMarket matrix coordinate real general\n")
        fh.write(f"{A.n} {A.n} {coo.nnz}\n")
        for i, j, v in zip(coo.row, coo.col, coo.data):
            fh.write(f"{i + 1} {j + 1} {v:.17g}\n")


def synthetic_matrix(n: int, m: int) -> np.ndarray:
    """Parametric-function snapshot matrix with entries

        W[i, j] = sin(10 (mu_j + x_i)) / (cos(100 (mu_j - x_i)) + 1.1),

    on inclusive grids x_i = i/(n-1), mu_j = j/(m-1) (zero-based i, j).
    Columns become increasingly linearly dependent, so the trailing part of
    the matrix is numerically singular at binary32 resolution. Binary64.
    """
    if n < 2 or m < 2:
        raise ValueError("need n >= 2 and m >= 2")
    x = np.arange(n, dtype=np.float64) / (n - 1)
    W = np.empty((n, m))
    for j in range(m):
        mu = j / (m - 1)
        W[:, j] = np.sin(10.0 * (mu + x)) / (np.cos(100.0 * (mu - x)) + 1.1)
    return W


def generate_laplacian_2d(grid: int) -> SparseMatrix:
    """5-point stencil Laplacian on a grid x grid mesh (n = grid^2 unknowns)."""
    if grid < 2:
        raise ValueError("grid must be at least 2")
    n = grid * grid
    rows, cols, vals = [], [], []
    for iy in range(grid):
        for ix in range(grid):
            p = iy * grid + ix
            rows.append(p); cols.append(p); vals.append(4.0)
            for qx, qy in ((ix - 1, iy), (ix + 1, iy), (ix, iy - 1), (ix, iy + 1)):
                if 0 <= qx < grid and 0 <= qy < grid:
                    rows.append(p); cols.append(qy * grid + qx); vals.append(-1.0)
    return SparseMatrix.from_coo(n, rows, cols, vals)


def generate_random_sparse(n: int, nnz_per_row: int, seed: int,
                           diag_shift: float = 1.0) -> SparseMatrix:
    """Seeded random sparse nonsymmetric matrix, made diagonally dominant.

    Each row gets `nnz_per_row` off-diagonal entries uniform in [-1, 1] at
    uniformly drawn columns, then the diagonal is set to (row absolute sum
    + diag_shift) so the matrix is strictly diagonally dominant and ILU(0)
    cannot hit a zero pivot.
    """
    if n < 1 or nnz_per_row < 0 or nnz_per_row > n - 1:
        raise ValueError("invalid size or fill")
    rng = np.random.Generator(np.random.Philox(key=(int(seed) << 64) | 0x5BA5))
    rows, cols, vals = [], [], []
    offdiag_abs = np.zeros(n)
    for i in range(n):
        choices = rng.choice(n - 1, size=nnz_per_row, replace=False)
        choices = np.where(choices >= i, choices + 1, choices)  # skip diagonal
        v = rng.uniform(-1.0, 1.0, size=nnz_per_row)
        rows.extend([i] * nnz_per_row)
        cols.extend(choices.tolist())
        vals.extend(v.tolist())
        offdiag_abs[i] = np.abs(v).sum()
    for i in range(n):
        rows.append(i); cols.append(i); vals.append(offdiag_abs[i] + diag_shift)
    return SparseMatrix.from_coo(n, rows, cols, vals)


# Fixed CSV column order; absent quantities are left empty.
REPORT_COLUMNS = ("iteration", "cond_Q", "cond_S", "cond_W",
                  "loss_of_orthogonality", "factorization_error",
                  "omega", "omega_bar", "residual_norm")


@dataclass
class ExperimentReport:
    """Per-iteration experiment traces plus the metadata to re-run them."""

    metadata: dict = field(default_factory=dict)
    rows: list = field(default_factory=list)  # dicts keyed by REPORT_COLUMNS

    def add_row(self, iteration: int, **values) -> None:
        unknown = set(values) - set(REPORT_COLUMNS)
        if unknown:
            raise ValueError(f"unknown report columns: {sorted(unknown)}")
        if self.rows and iteration <= self.rows[-1]["iteration"]:
            raise ValueError("iteration indices must be strictly increasing")
        row = {"iteration": int(iteration)}
        row.update(values)
        self.rows.append(row)

    def column(self, name: str) -> np.ndarray:
        return np.array([r.get(name, np.nan) for r in self.rows], dtype=np.float64)


def _fmt(v) -> str:
    if v is None:
        return ""
    if isinstance(v, (int, np.integer)):
        return str(int(v))
    return f"{float(v):.17g}"


def write_report(report: ExperimentReport, path) -> None:
    """Emit the report as UTF-8 CSV: `#`-prefixed metadata lines, a header
    row, one line per iteration, LF endings, 17 significant digits."""
    with open(path, "w", encoding="utf-8", newline="\n") as fh:
        for key in sorted(report.metadata):
            fh.write(f"# {key} = {report.metadata[key]}\n")
        fh.write(",".join(REPORT_COLUMNS) + "\n")
        for row in report.rows:
            fh.write(",".join(_fmt(row.get(c)) for c in REPORT_COLUMNS) + "\n")


def read_report(path) -> ExperimentReport:
    """Inverse of `write_report` (metadata values come back as strings)."""
    report = ExperimentReport()
    with open(path, "r", encoding="utf-8") as fh:
        lines = fh.read().splitlines()
    body = []
    for line in lines:
        if line.startswith("#"):
            key, _, val = line[1:].partition("=")
            report.metadata[key.strip()] = val.strip()
        elif line:
            body.append(line)
    if not body:
        raise MatrixMarketError("report has no header row")
    header = body[0].split(",")
    for line in body[1:]:
        cells = line.split(",")
        values = {}
        for name, cell in zip(header, cells):
            if cell == "":
                continue
            values[name] = int(cell) if name == "iteration" else float(cell)
        it = values.pop("iteration")
        report.add_row(it, **values)
    return report
