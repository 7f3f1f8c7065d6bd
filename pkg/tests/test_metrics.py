import itertools
import math

import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from tfec.metrics import acc, evaluate, f1, nmi


def densify(labels):
    """Remap labels to a dense 0..K-1 range (the metrics' input contract)."""
    _, dense = np.unique(np.asarray(labels), return_inverse=True)
    return dense.tolist()


def acc_exhaustive(pred, truth):
    """Brute-force max over one-to-one cluster-to-class mappings."""
    pred = list(pred)
    truth = list(truth)
    k = max(max(pred), max(truth)) + 1
    best = 0
    for perm in itertools.permutations(range(k)):
        correct = sum(1 for p, t in zip(pred, truth) if perm[p] == t)
        best = max(best, correct)
    return best / len(pred)


def optimal_mappings(pred, truth):
    """All mappings achieving the exhaustive optimum."""
    pred = list(pred)
    truth = list(truth)
    k = max(max(pred), max(truth)) + 1
    scored = []
    for perm in itertools.permutations(range(k)):
        correct = sum(1 for p, t in zip(pred, truth) if perm[p] == t)
        scored.append((correct, perm))
    best = max(s for s, _ in scored)
    return [perm for s, perm in scored if s == best]


def f1_with_mapping(pred, truth, mapping):
    truth = list(truth)
    mapped = [mapping[p] for p in pred]
    kt = max(truth) + 1
    scores = []
    for cls in range(kt):
        tp = sum(1 for m, t in zip(mapped, truth) if m == cls and t == cls)
        fp = sum(1 for m, t in zip(mapped, truth) if m == cls and t != cls)
        fn = sum(1 for m, t in zip(mapped, truth) if m != cls and t == cls)
        if tp == 0:
            scores.append(0.0)
            continue
        precision = tp / (tp + fp)
        recall = tp / (tp + fn)
        scores.append(2 * precision * recall / (precision + recall))
    return sum(scores) / len(scores)


def nmi_entropy_oracle(pred, truth):
    """Direct contingency-table entropy formula, natural logs."""
    n = len(pred)
    counts = {}
    for p, t in zip(pred, truth):
        counts[(p, t)] = counts.get((p, t), 0) + 1
    pu = {}
    pv = {}
    for (p, t), c in counts.items():
        pu[p] = pu.get(p, 0) + c
        pv[t] = pv.get(t, 0) + c
    hu = -sum((c / n) * math.log(c / n) for c in pu.values())
    hv = -sum((c / n) * math.log(c / n) for c in pv.values())
    if hu == 0.0 or hv == 0.0:
        return 1.0 if (hu == 0.0 and hv == 0.0) else 0.0
    mi = sum(
        (c / n) * math.log((c * n) / (pu[p] * pv[t])) for (p, t), c in counts.items()
    )
    return mi / math.sqrt(hu * hv)


class TestAcc:
    def test_identical_partitions(self):
        labels = [0, 1, 2, 0, 1, 2]
        assert acc(labels, labels) == 1.0

    def test_relabeled_partition_perfect(self):
        truth = [0, 0, 1, 1, 2, 2]
        pred = [2, 2, 0, 0, 1, 1]
        assert acc(pred, truth) == 1.0

    def test_matches_exhaustive_on_random_instances(self):
        rng = np.random.default_rng(0)
        for _ in range(50):
            n = int(rng.integers(6, 20))
            k = int(rng.integers(2, 6))
            pred = rng.integers(0, k, size=n)
            truth = rng.integers(0, k, size=n)
            assert acc(pred, truth) == pytest.approx(acc_exhaustive(pred, truth), abs=1e-12)

    def test_majority_bound_on_balanced_truth(self):
        rng = np.random.default_rng(1)
        for k in (2, 3, 4):
            truth = np.repeat(np.arange(k), 12)
            pred = rng.integers(0, k, size=truth.size)
            assert acc(pred, truth) >= 1.0 / k

    def test_rectangular_partitions(self):
        pred = [0, 0, 1, 1, 2, 3]
        truth = [0, 0, 1, 1, 1, 0]
        assert 0.0 <= acc(pred, truth) <= 1.0
        assert acc(pred, truth) == pytest.approx(acc_exhaustive(pred, truth), abs=1e-12)


class TestNmi:
    def test_identical_partitions(self):
        assert nmi([0, 1, 0, 1], [1, 0, 1, 0]) == pytest.approx(1.0, abs=1e-12)

    def test_constant_prediction_zero(self):
        assert nmi([0, 0, 0, 0], [0, 0, 1, 1]) == 0.0

    def test_both_single_cluster(self):
        assert nmi([0, 0, 0], [5, 5, 5]) == 1.0

    def test_matches_entropy_oracle(self):
        rng = np.random.default_rng(2)
        for _ in range(50):
            n = int(rng.integers(4, 16))
            pred = rng.integers(0, 3, size=n).tolist()
            truth = rng.integers(0, 3, size=n).tolist()
            assert nmi(pred, truth) == pytest.approx(nmi_entropy_oracle(pred, truth), abs=1e-12)

    def test_symmetric(self):
        rng = np.random.default_rng(3)
        for _ in range(20):
            pred = rng.integers(0, 4, size=12)
            truth = rng.integers(0, 3, size=12)
            assert nmi(pred, truth) == pytest.approx(nmi(truth, pred), abs=1e-12)


class TestF1:
    def test_perfect_relabeled_partition(self):
        truth = [0, 0, 1, 1, 2, 2]
        pred = [1, 1, 2, 2, 0, 0]
        assert f1(pred, truth) == 1.0

    def test_missed_class_contributes_zero(self):
        # Two truth classes, every prediction lands in one cluster: the
        # unmatched class scores 0, so macro-F1 is half the matched F1.
        truth = [0, 0, 1, 1]
        pred = [0, 0, 0, 0]
        matched = 2 * (0.5 * 1.0) / (0.5 + 1.0)
        assert f1(pred, truth) == pytest.approx(matched / 2, abs=1e-12)

    def test_matches_oracle_under_optimal_mapping(self):
        # Among all count-optimal mappings the macro-F1-maximal one defines
        # the value (that resolution is what keeps f1 relabel-invariant).
        rng = np.random.default_rng(4)
        for _ in range(60):
            n = int(rng.integers(6, 15))
            k = int(rng.integers(2, 4))
            pred = densify(rng.integers(0, k, size=n))
            truth = densify(rng.integers(0, k, size=n))
            mappings = optimal_mappings(pred, truth)
            want = max(f1_with_mapping(pred, truth, m) for m in mappings)
            assert f1(pred, truth) == pytest.approx(want, abs=1e-12)


label_lists = st.integers(2, 24).flatmap(
    lambda n: st.tuples(
        st.lists(st.integers(0, 4), min_size=n, max_size=n),
        st.lists(st.integers(0, 4), min_size=n, max_size=n),
    )
)


class TestInvariance:
    @given(label_lists, st.permutations(list(range(5))))
    @settings(max_examples=60, deadline=None)
    def test_relabeling_invariance(self, pair, perm):
        pred, truth = pair
        relabeled_pred = [perm[p] for p in pred]
        relabeled_truth = [perm[t] for t in truth]
        before = evaluate(pred, truth)
        after_pred = evaluate(relabeled_pred, truth)
        after_truth = evaluate(pred, relabeled_truth)
        for key in ("acc", "nmi", "f1"):
            assert before[key] == pytest.approx(after_pred[key], abs=1e-12)
            assert before[key] == pytest.approx(after_truth[key], abs=1e-12)

    @given(label_lists)
    @settings(max_examples=60, deadline=None)
    def test_metrics_in_unit_interval(self, pair):
        pred, truth = pair
        scores = evaluate(pred, truth)
        for value in scores.values():
            assert -1e-12 <= value <= 1.0 + 1e-12
