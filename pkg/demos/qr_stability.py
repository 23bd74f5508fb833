"""Orthogonalization stability across Gram-Schmidt variants.

Factorizes a synthetic snapshot matrix whose trailing columns are numerically
dependent at binary32 resolution, then compares the conditioning of the
computed basis and the factorization error for the sketched (randomized)
process against CGS, MGS, and CGS2. Run at a reduced scale so it finishes in
seconds; raise N/M/K to benchmark-scale values to reproduce the full study.

Usage: python3 demos/qr_stability.py
"""

import os

for var in ("OMP_NUM_THREADS", "OPENBLAS_NUM_THREADS", "MKL_NUM_THREADS",
            "NUMEXPR_NUM_THREADS"):
    os.environ.setdefault(var, "1")

import numpy as np

from sketchgs import (GsVariant, MIXED32_64, SketchKind, classical_factorize,
                      loss_of_orthogonality, make_sketch, rgs_factorize,
                      synthetic_matrix)

N, M, K = 20_000, 120, 1500


def main():
    W = synthetic_matrix(N, M)
    theta = make_sketch(SketchKind.PSRHT, K, N, seed=1)
    print(f"synthetic matrix: {N} x {M}, sketch k={K} ({theta.kind.value})")
    print(f"{'variant':8s} {'cond(Q)':>12s} {'||I-QtQ||_F':>12s} "
          f"{'rel err (F)':>12s}")

    rows = []
    f, cert = rgs_factorize(W, theta, MIXED32_64, breakdown_factor=0.0)
    rows.append(("rgs", f))
    for v in (GsVariant.CGS, GsVariant.MGS, GsVariant.CGS2):
        rows.append((v.value, classical_factorize(W, v, policy=MIXED32_64,
                                                  breakdown_factor=0.0)))

    norm_w = np.linalg.norm(W)
    for name, fac in rows:
        Q = fac.Q.astype(np.float64)
        err = np.linalg.norm(W - Q @ fac.R) / norm_w
        print(f"{name:8s} {np.linalg.cond(Q):12.4g} "
              f"{loss_of_orthogonality(Q):12.4g} {err:12.4g}")

    print(f"\nsketched-orthonormality certificates of the randomized run: "
          f"Delta_m={cert.delta_m:.3e}, Delta~_m={cert.delta_tilde_m:.3e}, "
          f"cond(S)={cert.cond_S:.4f}")
    print("the sketched basis S stays orthonormal even where the classical "
          "processes degrade")


if __name__ == "__main__":
    main()
