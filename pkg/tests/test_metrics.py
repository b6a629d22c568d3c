import numpy as np
import pytest

from aucmtl.core import Dataset, ModelParams, UserTask
from aucmtl.metrics import auc_macro, auc_user


def scalar_auc(scores, labels):
    """Independent oracle: enumerate pairs, ties worth one half."""
    pos = [s for s, y in zip(scores, labels) if y == 1]
    neg = [s for s, y in zip(scores, labels) if y == -1]
    wins = 0.0
    for p in pos:
        for q in neg:
            if p > q:
                wins += 1.0
            elif p == q:
                wins += 0.5
    return wins / (len(pos) * len(neg))


class TestAucUser:
    def test_perfect_ranking(self):
        assert auc_user([3.0, 2.0, 1.0, 0.0], [1, 1, -1, -1]) == 1.0

    def test_all_ties_exactly_half(self):
        assert auc_user([0.5] * 6, [1, 1, 1, -1, -1, -1]) == 0.5

    def test_one_of_two_pairs_misranked(self):
        assert auc_user([0.9, 0.4, 0.6], [1, 1, -1]) == 0.5

    def test_single_class_is_missing(self):
        assert auc_user([1.0, 2.0], [1, 1]) is None
        assert auc_user([1.0, 2.0], [-1, -1]) is None

    def test_methods_agree_with_ties(self, rng):
        for _ in range(100):
            n = int(rng.integers(4, 60))
            labels = np.where(rng.random(n) < 0.5, 1, -1)
            if abs(labels.sum()) == n:
                labels[0] = -labels[0]
            # quantize to force frequent exact ties
            scores = np.round(rng.normal(size=n), 1)
            a = auc_user(scores, labels, method="pairwise")
            b = auc_user(scores, labels, method="rank")
            assert abs(a - b) <= 1e-12
            assert a == pytest.approx(scalar_auc(scores, labels), abs=1e-12)

    def test_monotone_transform_invariance(self, rng):
        n = 30
        labels = np.where(rng.random(n) < 0.4, 1, -1)
        labels[0], labels[1] = 1, -1
        scores = rng.normal(size=n)
        base = auc_user(scores, labels)
        assert auc_user(np.exp(scores), labels) == pytest.approx(base, abs=1e-12)
        assert auc_user(3 * scores + 7, labels) == pytest.approx(base, abs=1e-12)

    def test_negation_complements_without_ties(self, rng):
        n = 25
        labels = np.where(rng.random(n) < 0.5, 1, -1)
        labels[0], labels[1] = 1, -1
        scores = rng.permutation(np.arange(n, dtype=float))  # distinct
        assert auc_user(-scores, labels) == pytest.approx(
            1.0 - auc_user(scores, labels), abs=1e-12)

    def test_unknown_method_rejected(self):
        with pytest.raises(ValueError):
            auc_user([1.0, 0.0], [1, -1], method="bogus")

    def test_shape_mismatch_rejected(self):
        with pytest.raises(ValueError):
            auc_user([1.0, 0.0], [1, -1, 1])


class TestAucMacro:
    def _dataset(self, rng):
        x1 = rng.normal(size=(10, 3))
        u1 = UserTask("good", x1, np.where(x1[:, 0] > 0, 1, -1))
        u2 = UserTask("coin", rng.normal(size=(8, 3)), np.array([1, -1] * 4))
        return Dataset((u1, u2), 3)

    def test_single_user_mean(self, rng):
        x = rng.normal(size=(10, 3))
        ds = Dataset((UserTask("a", x, np.where(x[:, 0] > 0, 1, -1)),), 3)
        m = ModelParams(np.array([1.0, 0, 0]), np.zeros((3, 1)), np.zeros((3, 1)), ("a",))
        result = auc_macro(ds, m)
        assert result.mean == result.per_user[0].auc == 1.0

    def test_two_user_arithmetic_mean(self, rng):
        ds = self._dataset(rng)
        # perfect for 'good' via first feature; all-tie scores for 'coin'
        m = ModelParams(np.array([1.0, 0, 0]), np.zeros((3, 2)),
                        np.column_stack([np.zeros(3), -np.array([1.0, 0, 0])]),
                        ("good", "coin"))
        result = auc_macro(ds, m)
        aucs = {r.user_id: r.auc for r in result.per_user}
        assert aucs["good"] == 1.0 and aucs["coin"] == 0.5
        assert result.mean == pytest.approx(0.75)

    def test_zero_model_all_ties(self, rng):
        ds = self._dataset(rng)
        result = auc_macro(ds, ModelParams.zeros(3, ds.user_ids))
        assert result.mean == 0.5 and result.std == 0.0

    def test_unknown_user_consensus_fallback(self, rng):
        ds = self._dataset(rng)
        m = ModelParams(np.array([1.0, 0, 0]), np.zeros((3, 1)), np.zeros((3, 1)),
                        ("good",))
        result = auc_macro(ds, m)
        flags = {r.user_id: r.consensus_fallback for r in result.per_user}
        assert flags == {"good": False, "coin": True}
        assert result.per_user[0].auc == 1.0

    def test_missing_users_listed_not_averaged(self, rng):
        u1 = UserTask("ok", rng.normal(size=(6, 2)), np.array([1, 1, 1, -1, -1, -1]))
        u2 = UserTask("onesided", rng.normal(size=(4, 2)), np.array([1, 1, 1, 1]))
        ds = Dataset((u1, u2), 2)
        result = auc_macro(ds, ModelParams.zeros(2, ds.user_ids))
        assert result.missing == ("onesided",)
        assert result.mean == 0.5  # only the defined user contributes

    def test_per_user_counts_emitted(self, rng):
        ds = self._dataset(rng)
        result = auc_macro(ds, ModelParams.zeros(3, ds.user_ids))
        for r, u in zip(result.per_user, ds.users):
            assert (r.n_pos, r.n_neg) == (u.n_pos, u.n_neg)
