import os

# Pin BLAS threading before numpy loads anywhere: keeps SVD results and
# runtimes reproducible, and avoids oversubscription in worker pools.
os.environ.setdefault("OPENBLAS_NUM_THREADS", "1")
os.environ.setdefault("OMP_NUM_THREADS", "1")
os.environ.setdefault("MKL_NUM_THREADS", "1")

import dataclasses  # noqa: E402

import pytest  # noqa: E402

import fmcwsim as fs  # noqa: E402


@pytest.fixture
def tiny_scenario():
    """Desk-scale scenario: 256 frames, 64-point window; simulates in ~30 ms."""
    sc = fs.dataset_scenario(seed=101, n_frames=256)
    return dataclasses.replace(sc, dsp=dataclasses.replace(sc.dsp, window=64))
