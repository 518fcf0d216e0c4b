import numpy as np
import pytest

from srcurv import models

MODEL_NAMES = list(models.BUILTIN_NAMES)


@pytest.fixture(scope="session")
def all_models():
    return {name: models.build(name) for name in MODEL_NAMES}


@pytest.fixture()
def rng():
    return np.random.default_rng(20240)


def sample_fields(md, n, rng, degree=4):
    """Random polynomial fields in box-normalized coordinates."""
    from srcurv.calculus import ScalarField
    from srcurv.polynomials import scaled_random_polynomial

    s = md.structure
    ctr = md.reference_box.mean(axis=1)
    hw = (md.reference_box[:, 1] - md.reference_box[:, 0]) / 2
    return [ScalarField.from_polynomial(
        scaled_random_polynomial(s.chart_dim, degree, rng, ctr, hw))
        for _ in range(n)]
