import numpy as np
import pytest

from aucmtl.core import Dataset, ModelParams, UserTask


def random_user(rng, uid, n, d, pos_frac=0.4):
    """Random task with both classes guaranteed."""
    x = rng.normal(size=(n, d))
    labels = np.where(rng.random(n) < pos_frac, 1, -1)
    if (labels == 1).sum() == 0:
        labels[0] = 1
    if (labels == -1).sum() == 0:
        labels[-1] = -1
    return UserTask(uid, x, labels)


def random_instance(rng, n_users=3, d=5, n_lo=8, n_hi=30):
    users = tuple(random_user(rng, f"u{i}", int(rng.integers(n_lo, n_hi + 1)), d)
                  for i in range(n_users))
    return Dataset(users, d)


def random_params(rng, ds, scale=0.3):
    return ModelParams(rng.normal(size=ds.dim) * scale,
                       rng.normal(size=(ds.dim, ds.n_users)) * scale,
                       rng.normal(size=(ds.dim, ds.n_users)) * scale,
                       ds.user_ids)


@pytest.fixture
def rng():
    return np.random.default_rng(12345)
