"""The sklearn-style facade: params, clone, fit/predict/score."""
import numpy as np
import pytest
from sklearn.base import clone
from sklearn.exceptions import NotFittedError

from eventenergy.corpus import synthesize_corpus, write_corpus
from eventenergy.estimator import JointEventModel


def fast_model(**overrides):
    params = dict(embed_dim=8, mixer_layers=1, epochs=3, lr=0.02, batch_size=4, seed=0, regime="uniform")
    params.update(overrides)
    return JointEventModel(**params)


@pytest.fixture(scope="module")
def fitted():
    docs, spaces = synthesize_corpus(16, 3, 3, 40, 4, seed=2)
    model = fast_model().fit(docs, label_spaces=spaces)
    return model, docs, spaces


class TestSklearnContract:
    def test_get_set_params_round_trip(self):
        model = fast_model()
        params = model.get_params()
        assert params["embed_dim"] == 8
        model.set_params(embed_dim=16, lr=0.1)
        assert model.embed_dim == 16 and model.lr == 0.1

    def test_clone_preserves_params(self):
        model = fast_model(lambda_document=2.5)
        cloned = clone(model)
        assert cloned.get_params() == model.get_params()

    def test_unfitted_predict_raises(self):
        with pytest.raises(NotFittedError):
            fast_model().predict([], task="event")


class TestFitPredictScore:
    def test_fit_sets_fitted_attributes(self, fitted):
        model, docs, spaces = fitted
        assert model.label_spaces_ is spaces
        assert model.checkpoint_.network is not None
        assert model.history_.records
        assert model.train_stats_.mention_count == sum(len(d.mentions) for d in docs)

    def test_predict_event_labels(self, fitted):
        model, docs, spaces = fitted
        labels = model.predict(docs, task="event")
        assert labels.shape == (sum(len(d.mentions) for d in docs),)
        assert set(labels) <= set(spaces.event_classes)

    def test_predict_proba_rows_on_simplex(self, fitted):
        model, docs, _ = fitted
        probs = model.predict_proba(docs, task="event")
        assert np.all(probs >= 0)
        np.testing.assert_allclose(probs.sum(axis=1), 1.0, atol=1e-6)

    def test_score_in_unit_interval(self, fitted):
        model, docs, _ = fitted
        for task in ("trigger", "event", "ere"):
            assert 0.0 <= model.score(docs, task=task) <= 1.0

    def test_evaluate_returns_full_report(self, fitted):
        model, docs, _ = fitted
        report = model.evaluate(docs, task="event")
        assert report.task == "event"
        assert report.support > 0

    def test_in_memory_docs_require_spaces(self):
        docs, _ = synthesize_corpus(4, 3, 3, 40, 3, seed=3)
        with pytest.raises(ValueError, match="label_spaces"):
            fast_model().fit(docs)

    def test_fit_from_corpus_path(self, tmp_path):
        docs, spaces = synthesize_corpus(6, 3, 3, 40, 3, seed=4)
        path = tmp_path / "c.jsonl"
        write_corpus(docs, spaces, path)
        model = fast_model(epochs=1).fit(str(path))
        assert model.label_spaces_.event_classes == spaces.event_classes
        assert model.predict(str(path), task="event").shape[0] == sum(len(d.mentions) for d in docs)

    def test_rejects_non_document_input(self):
        with pytest.raises(TypeError, match="Document"):
            fast_model().fit([{"doc_id": "x"}])
