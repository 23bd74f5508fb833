import math

import numpy as np
import pytest

from sketchgs import (ExperimentReport, REPORT_COLUMNS, SparseMatrix,
                      generate_laplacian_2d, generate_random_sparse,
                      read_matrix_market, read_report, synthetic_matrix,
                      write_matrix_market, write_report)
from sketchgs.io import MatrixMarketError


def test_read_matrix_market_general(tmp_path):
    p = tmp_path / "a.mtx"
    p.write_text("%%MatrixMarket matrix coordinate real general\n"
                 "% a comment\n"
                 "3 3 4\n"
                 "1 1 2.5\n"
                 "2 3 -1\n"
                 "3 1 4e-2\n"
                 "1 1 0.5\n")  # duplicate of (1,1), summed
    A = read_matrix_market(p)
    D = A.to_scipy().toarray()
    assert D[0, 0] == 3.0
    assert D[1, 2] == -1.0
    assert D[2, 0] == 0.04
    assert not A.symmetric_expansion_applied


def test_read_matrix_market_symmetric(tmp_path):
    p = tmp_path / "s.mtx"
    p.write_text("%%MatrixMarket matrix coordinate real symmetric\n"
                 "2 2 3\n"
                 "1 1 2\n"
                 "2 1 -1\n"
                 "2 2 2\n")
    A = read_matrix_market(p)
    D = A.to_scipy().toarray()
    assert np.array_equal(D, np.array([[2.0, -1.0], [-1.0, 2.0]]))
    assert A.symmetric_expansion_applied


def test_read_matrix_market_integer_field(tmp_path):
    p = tmp_path / "i.mtx"
    p.write_text("%%MatrixMarket matrix coordinate integer general\n"
                 "2 2 1\n1 2 7\n")
    assert read_matrix_market(p).to_scipy().toarray()[0, 1] == 7.0


@pytest.mark.parametrize("header,body", [
    ("%%MatrixMarket matrix array real general", "2 2\n1\n2\n3\n4\n"),
    ("%%MatrixMarket matrix coordinate complex general", "2 2 1\n1 1 1 0\n"),
    ("%%MatrixMarket matrix coordinate pattern general", "2 2 1\n1 1\n"),
    ("%%MatrixMarket matrix coordinate real skew-symmetric", "2 2 1\n2 1 1\n"),
    ("%%MatrixMarket matrix coordinate real hermitian", "2 2 1\n1 1 1\n"),
    ("not a header at all", "2 2 1\n1 1 1\n"),
])
def test_read_matrix_market_rejects(tmp_path, header, body):
    p = tmp_path / "bad.mtx"
    p.write_text(header + "\n" + body)
    with pytest.raises(MatrixMarketError):
        read_matrix_market(p)


def test_read_matrix_market_bounds(tmp_path):
    p = tmp_path / "oob.mtx"
    p.write_text("%%MatrixMarket matrix coordinate real general\n"
                 "2 2 1\n3 1 1.0\n")
    with pytest.raises(MatrixMarketError):
        read_matrix_market(p)
    q = tmp_path / "rect.mtx"
    q.write_text("%%MatrixMarket matrix coordinate real general\n"
                 "2 3 1\n1 1 1.0\n")
    with pytest.raises(MatrixMarketError):
        read_matrix_market(q)


def test_matrix_market_roundtrip(tmp_path):
    A = generate_random_sparse(30, 3, seed=9)
    p = tmp_path / "rt.mtx"
    write_matrix_market(A, p)
    B = read_matrix_market(p)
    # 17 significant digits round-trip binary64 exactly
    assert np.array_equal(A.to_scipy().toarray(), B.to_scipy().toarray())


def test_synthetic_matrix_values():
    W = synthetic_matrix(100, 50)
    assert W.shape == (100, 50)
    # corner entries from the closed form on the inclusive unit grids
    assert W[0, 0] == 0.0  # sin(0) / (cos(0) + 1.1)
    assert W[99, 49] == pytest.approx(math.sin(20.0) / 2.1, rel=1e-15)
    assert W[99, 49] == pytest.approx(0.43473583367982266, rel=1e-15)
    i, j = 31, 17
    x, mu = 31 / 99.0, 17 / 49.0
    assert W[i, j] == pytest.approx(
        math.sin(10 * (mu + x)) / (math.cos(100 * (mu - x)) + 1.1), rel=1e-15)
    with pytest.raises(ValueError):
        synthetic_matrix(1, 50)


def test_synthetic_matrix_trailing_singularity():
    # trailing columns are numerically dependent at binary32 resolution
    W = synthetic_matrix(2000, 300)
    sv = np.linalg.svd(W, compute_uv=False)
    assert sv[-1] / sv[0] < 1e-10


def test_laplacian_2d_structure():
    A = generate_laplacian_2d(3)
    D = A.to_scipy().toarray()
    assert A.n == 9
    assert np.array_equal(D, D.T)
    assert np.all(np.diag(D) == 4.0)
    # interior point has 4 neighbors
    assert np.sum(D[4] != 0.0) == 5
    # oracle: kron form of the stencil
    T = 2 * np.eye(3) - np.eye(3, k=1) - np.eye(3, k=-1)
    K = np.kron(np.eye(3), T) + np.kron(T, np.eye(3))
    assert np.array_equal(D, K)


def test_random_sparse_diagonally_dominant():
    A = generate_random_sparse(80, 5, seed=4)
    D = A.to_scipy().toarray()
    for i in range(80):
        off = np.sum(np.abs(D[i])) - abs(D[i, i])
        assert abs(D[i, i]) >= off + 0.999  # diag_shift margin
    B = generate_random_sparse(80, 5, seed=4)
    assert np.array_equal(D, B.to_scipy().toarray())  # seeded
    C = generate_random_sparse(80, 5, seed=5)
    assert not np.array_equal(D, C.to_scipy().toarray())


def test_report_roundtrip(tmp_path):
    rep = ExperimentReport(metadata={"variant": "rgs", "n": 100})
    rep.add_row(1, cond_Q=1.0, omega=0.25)
    rep.add_row(2, cond_Q=1.5, residual_norm=1e-3)
    p = tmp_path / "r.csv"
    write_report(rep, p)
    text = p.read_text()
    assert text.startswith("# n = 100\n# variant = rgs\n")
    assert text.splitlines()[2] == ",".join(REPORT_COLUMNS)
    back = read_report(p)
    assert back.metadata == {"variant": "rgs", "n": "100"}
    assert np.array_equal(back.column("cond_Q"), [1.0, 1.5])
    assert np.isnan(back.column("omega")[1])
    assert back.column("residual_norm")[1] == 1e-3


def test_report_validation():
    rep = ExperimentReport()
    rep.add_row(1, cond_Q=2.0)
    with pytest.raises(ValueError):
        rep.add_row(1, cond_Q=3.0)  # not increasing
    with pytest.raises(ValueError):
        rep.add_row(2, not_a_column=1.0)


def test_report_17_digit_roundtrip(tmp_path):
    v = 0.1 + 0.2  # not representable, needs all 17 digits
    rep = ExperimentReport()
    rep.add_row(1, cond_Q=v)
    p = tmp_path / "d.csv"
    write_report(rep, p)
    assert read_report(p).column("cond_Q")[0] == v
