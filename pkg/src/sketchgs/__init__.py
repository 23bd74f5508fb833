"""Randomized Gram-Schmidt orthogonalization with oblivious subspace
embeddings, emulated multi-precision arithmetic, a-posteriori embedding
certification, and a sketched GMRES built on top."""

from .precision import (MIXED32_64, U_BINARY32, U_BINARY64, UNIFIED32,
                        UNIFIED64, PrecisionPolicy, gemv_coarse, gemv_rounded,
                        policy_from_name, round_coarse)
from .sketch import (EmbeddingParams, SketchKind, SketchOperator, epsilon_of,
                     fwht, make_sketch, required_sketch_dim,
                     rounding_sketch_trial, vector_certificate_dim)
from .gram_schmidt import (BreakdownError, ClassicalGsState, GsVariant,
                           HOUSEHOLDER_QR, LsqSolver, QrFactors, RgsState,
                           SKETCHED_MGS,
                           StabilityCertificate, certificates,
                           classical_factorize, loss_of_orthogonality,
                           rgs_factorize, richardson, sketched_lsq)
from .certification import (CertificationParams, CertificationResult,
                            certify_factorization, eps_star_for_dim,
                            make_certification_sketch, omega_bar,
                            omega_bar_sharpness)
from .krylov import (ArnoldiDecomposition, GmresResult, Ilu0Preconditioner,
                     SparseMatrix, arnoldi, best_attainable_residual, gmres,
                     ilu0)
from .io import (ExperimentReport, REPORT_COLUMNS, generate_laplacian_2d,
                 generate_random_sparse, read_matrix_market, read_report,
                 synthetic_matrix, write_matrix_market, write_report)

__version__ = "0.1.0"
