"""Sketched GMRES on a 2D Laplacian, with and without ILU(0).

Solves the 5-point finite-difference Laplacian with the randomized Arnoldi
process and compares the iteration count against the unpreconditioned run
and against the classical Gram-Schmidt baselines in mixed precision.

Usage: python3 demos/gmres_solver.py
"""

import os

for var in ("OMP_NUM_THREADS", "OPENBLAS_NUM_THREADS", "MKL_NUM_THREADS",
            "NUMEXPR_NUM_THREADS"):
    os.environ.setdefault(var, "1")

import numpy as np

from sketchgs import (GsVariant, MIXED32_64, SketchKind, UNIFIED64,
                      generate_laplacian_2d, gmres, ilu0, make_sketch)

GRID = 60  # 3600 unknowns


def main():
    A = generate_laplacian_2d(GRID)
    rng = np.random.default_rng(3)
    x_star = rng.standard_normal(A.n)
    b = A.matvec(x_star)
    theta = make_sketch(SketchKind.PSRHT, 500, A.n, seed=0)

    res = gmres(A, b, m=200, theta=theta, policy=UNIFIED64, tol=1e-10)
    pre = gmres(A, b, m=200, theta=theta, policy=UNIFIED64, tol=1e-10,
                preconditioner=ilu0(A))
    print(f"laplacian {GRID}x{GRID} ({A.n} unknowns), randomized GMRES(200):")
    print(f"  plain  : {res.iterations:4d} iterations, final residual "
          f"{res.final_residual:.2e}")
    print(f"  ILU(0) : {pre.iterations:4d} iterations, final residual "
          f"{pre.final_residual:.2e}")
    err = np.linalg.norm(pre.x - x_star) / np.linalg.norm(x_star)
    print(f"  solution error vs exact rhs construction: {err:.2e}")

    print("\nmixed-precision basis, no preconditioner, 200 iterations:")
    for v in (GsVariant.RGS, GsVariant.CGS, GsVariant.MGS, GsVariant.CGS2):
        r = gmres(A, b, m=200, variant=v, theta=theta, policy=MIXED32_64)
        print(f"  {v.value:5s}: final residual {r.final_residual:.2e}")
    print("the classical single-sweep process loses orthogonality and "
          "stagnates well above the others at larger iteration counts")


if __name__ == "__main__":
    main()
