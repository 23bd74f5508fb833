"""Shared test setup.

Thread pinning must happen before numpy is first imported: multi-threaded
BLAS changes summation order, and several tests assert bit-exact
reproducibility or compare against values measured single-threaded.
"""

import os

for _var in ("OMP_NUM_THREADS", "OPENBLAS_NUM_THREADS", "MKL_NUM_THREADS",
             "NUMEXPR_NUM_THREADS"):
    os.environ[_var] = "1"

import numpy as np  # noqa: E402
import pytest  # noqa: E402


@pytest.fixture
def rng():
    return np.random.default_rng(12345)
