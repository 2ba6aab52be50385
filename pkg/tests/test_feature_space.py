import math

import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from halfkfn.errors import (DegenerateLabelsError, InvalidInputError,
                            SoftmaxParseError)
from halfkfn.feature_space import (ReducerModel, SampleSet, argmax_class,
                                   argmax_classes, load_softmax_vectors,
                                   reduce, save_softmax_vectors, train_reducer)

from support import random_softmax


class TestArgmaxClass:
    def test_unique_maximum(self):
        assert argmax_class([0.2, 0.5, 0.3]) == 1

    def test_tie_breaks_to_smaller_index(self):
        assert argmax_class([0.5, 0.5]) == 0

    def test_full_tie(self):
        assert argmax_class([1 / 3, 1 / 3, 1 / 3]) == 0

    def test_rowwise_matches_scalar(self):
        rng = np.random.default_rng(0)
        vectors = random_softmax(rng, 50, 4)
        rows = argmax_classes(vectors)
        for i, v in enumerate(vectors):
            assert rows[i] == argmax_class(v)


class TestSampleSet:
    def test_basic_construction(self):
        s = SampleSet(vectors=[[0.9, 0.1], [0.2, 0.8]], origin="target")
        assert len(s) == 2
        assert s.dim == 2
        assert list(s.classes) == [0, 1]

    def test_rejects_empty(self):
        with pytest.raises(InvalidInputError):
            SampleSet(vectors=np.empty((0, 2)))

    def test_rejects_bad_sum(self):
        with pytest.raises(InvalidInputError):
            SampleSet(vectors=[[0.5, 0.6]])

    def test_rejects_negative_entries(self):
        with pytest.raises(InvalidInputError):
            SampleSet(vectors=[[-0.1, 1.1]])

    def test_rejects_one_column(self):
        with pytest.raises(InvalidInputError):
            SampleSet(vectors=[[1.0]])

    def test_rejects_bad_origin(self):
        with pytest.raises(InvalidInputError):
            SampleSet(vectors=[[0.5, 0.5]], origin="other")


class TestTrainReducer:
    def test_separable_toy_reaches_full_accuracy(self):
        features = np.array([[0.0, 0.0], [0.0, 1.0], [3.0, 3.0], [3.0, 4.0]])
        labels = np.array([0, 0, 1, 1])
        model = train_reducer(features, labels, learning_rate=0.5,
                              iterations=2000, seed=0)
        pred = np.argmax(model.predict_proba(features), axis=1)
        assert (pred == labels).all()

    def test_indistinguishable_classes_plateau_near_ln2(self):
        features = np.ones((20, 3))
        labels = np.arange(20) % 2
        model = train_reducer(features, labels, learning_rate=0.1,
                              iterations=2000, seed=1)
        final_loss = model.loss_trace[-1][1]
        assert abs(final_loss - math.log(2)) < 1e-3

    def test_loss_trace_cadence_and_finiteness(self):
        features = np.array([[0.0], [1.0], [2.0], [3.0]])
        labels = np.array([0, 0, 1, 1])
        model = train_reducer(features, labels, iterations=800, seed=0)
        iters = [it for it, _ in model.loss_trace]
        assert iters[0] == 800 // 80
        assert iters[-1] == 800
        assert all(np.isfinite(loss) for _, loss in model.loss_trace)

    def test_loss_non_increasing_late_in_training(self):
        features = np.vstack([np.random.default_rng(3).normal(c, 0.3, (30, 2))
                              for c in (0.0, 4.0)])
        labels = np.repeat([0, 1], 30)
        model = train_reducer(features, labels, learning_rate=0.2,
                              iterations=4000, seed=0)
        losses = [loss for _, loss in model.loss_trace]
        tail = losses[len(losses) // 4:]
        for lo, hi in zip(tail[10:], tail[:-10]):
            assert lo <= hi + 1e-12

    def test_deterministic_given_seed(self):
        features = np.array([[0.0, 1.0], [1.0, 0.0], [2.0, 2.0], [3.0, 1.0]])
        labels = np.array([0, 1, 1, 0])
        a = train_reducer(features, labels, iterations=500, seed=7)
        b = train_reducer(features, labels, iterations=500, seed=7)
        assert np.array_equal(a.weights, b.weights)
        assert np.array_equal(a.bias, b.bias)
        assert a.loss_trace == b.loss_trace

    def test_single_class_rejected(self):
        with pytest.raises(DegenerateLabelsError):
            train_reducer(np.ones((4, 2)), np.zeros(4, dtype=int))

    def test_non_finite_features_rejected(self):
        features = np.array([[0.0, np.inf], [1.0, 0.0]])
        with pytest.raises(InvalidInputError):
            train_reducer(features, np.array([0, 1]))


class TestReduce:
    def test_zero_model_gives_uniform(self):
        model = ReducerModel(weights=np.zeros((2, 4)), bias=np.zeros(4))
        out = reduce(model, np.random.default_rng(0).normal(size=(5, 2)))
        assert np.allclose(out.vectors, 0.25)

    def test_dominant_logit_wins_argmax(self):
        model = ReducerModel(weights=np.array([[5.0, 0.0, 0.0]]), bias=np.zeros(3))
        out = reduce(model, np.array([[2.0]]))
        assert argmax_class(out.vectors[0]) == 0

    def test_preserves_cardinality(self):
        model = ReducerModel(weights=np.ones((3, 2)), bias=np.zeros(2))
        out = reduce(model, np.random.default_rng(1).normal(size=(17, 3)))
        assert len(out) == 17

    def test_dimension_mismatch(self):
        model = ReducerModel(weights=np.ones((3, 2)), bias=np.zeros(2))
        with pytest.raises(InvalidInputError):
            reduce(model, np.ones((4, 5)))

    @settings(max_examples=50, deadline=None)
    @given(st.integers(0, 10_000))
    def test_outputs_are_valid_softmax(self, seed):
        rng = np.random.default_rng(seed)
        C = int(rng.integers(1, 5))
        L = int(rng.integers(2, 6))
        model = ReducerModel(weights=rng.normal(size=(C, L)),
                             bias=rng.normal(size=L))
        out = reduce(model, rng.normal(scale=3.0, size=(8, C)))
        assert out.vectors.shape == (8, L)
        assert (out.vectors >= 0).all() and (out.vectors <= 1).all()
        assert np.allclose(out.vectors.sum(axis=1), 1.0)


class TestCsvRoundTrip:
    def test_basic_parse(self, tmp_path):
        path = tmp_path / "s.csv"
        path.write_text("y1,y2\n0.9,0.1\n0.2,0.8\n")
        s = load_softmax_vectors(path)
        assert len(s) == 2
        assert s.dim == 2
        assert np.allclose(s.vectors, [[0.9, 0.1], [0.2, 0.8]])

    def test_label_column_ignored(self, tmp_path):
        path = tmp_path / "s.csv"
        path.write_text("y1,y2,label\n0.9,0.1,1\n")
        s = load_softmax_vectors(path)
        assert s.dim == 2
        assert list(s.classes) == [0]

    def test_sum_violation_names_row(self, tmp_path):
        path = tmp_path / "s.csv"
        path.write_text("y1,y2\n0.9,0.1\n0.5,0.6\n")
        with pytest.raises(SoftmaxParseError) as err:
            load_softmax_vectors(path)
        assert err.value.row == 1

    def test_malformed_value_names_row(self, tmp_path):
        path = tmp_path / "s.csv"
        path.write_text("y1,y2\nfoo,0.5\n")
        with pytest.raises(SoftmaxParseError) as err:
            load_softmax_vectors(path)
        assert err.value.row == 0

    def test_missing_file(self, tmp_path):
        with pytest.raises(SoftmaxParseError):
            load_softmax_vectors(tmp_path / "absent.csv")

    def test_bad_header(self, tmp_path):
        path = tmp_path / "s.csv"
        path.write_text("a,b\n0.5,0.5\n")
        with pytest.raises(SoftmaxParseError):
            load_softmax_vectors(path)

    def test_round_trip_is_bit_identical(self, tmp_path):
        rng = np.random.default_rng(42)
        original = SampleSet(vectors=random_softmax(rng, 200, 3))
        path = tmp_path / "round.csv"
        save_softmax_vectors(path, original)
        loaded = load_softmax_vectors(path)
        assert np.array_equal(original.vectors, loaded.vectors)
