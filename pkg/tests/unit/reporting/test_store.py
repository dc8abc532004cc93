"""
Tests for the model store and its manifest
"""

import json

import numpy as np
import pytest

from adaptcast.clustering import fit
from adaptcast.config import FeatureVariant, PredictorKind
from adaptcast.errors import StoreError
from adaptcast.predictors import PerClusterTraining, PredictorModel, PredictorSpec
from adaptcast.reporting import ModelStore, dump_json
from adaptcast.timeseries import NormalizationStats, SegmentSet


@pytest.fixture
def store(tmp_path) -> ModelStore:
    return ModelStore(tmp_path / "store", "run1")


@pytest.fixture
def segments() -> SegmentSet:
    return SegmentSet.from_values([[0.0, 0.0, 0.0], [1.0, 1.0, 1.0], [0.1, 0.0, 0.0]], "cell_a")


class TestModelStore:
    """Test cases for artifact persistence"""

    def test_cluster_model_round_trip(self, store, segments):
        """Test saving and loading a clustering"""
        model = fit(segments, 2, seed=1)
        path = store.save_cluster_model(model)

        loaded = store.load_cluster_model(2)

        assert path.name == "cluster_k2.json"
        np.testing.assert_array_equal(loaded.assignments, model.assignments)
        np.testing.assert_array_equal(loaded.centroid_matrix, model.centroid_matrix)

    def test_segments_round_trip(self, store, segments):
        """Test that segments keep values and provenance"""
        store.save_segments(segments)

        loaded = store.load_segments()

        assert loaded.provenance == segments.provenance
        np.testing.assert_array_equal(loaded.values, segments.values)

    def test_normalization_round_trip(self, store):
        """Test per-cell stats keyed by cell and part"""
        stats = {("cell#7", 1): NormalizationStats({"dl_volume": (1.0, 3.0)})}
        store.save_normalization(stats)

        loaded = store.load_normalization()

        assert loaded[("cell#7", 1)].ranges == {"dl_volume": (1.0, 3.0)}

    def test_predictors_with_fallback(self, store, uni_config):
        """Test per-cluster predictor files and manifest notes"""
        spec = PredictorSpec(PredictorKind.SEASONAL_NAIVE, uni_config, window=3)
        shared = PredictorModel(spec, [])
        training = PerClusterTraining({0: PredictorModel(spec, [], cluster_id=0), 1: shared}, {0: 40, 1: 3}, [1], shared)

        store.save_predictors(FeatureVariant.UNI, 2, training)

        assert sorted(store.load_predictors(FeatureVariant.UNI, 2)) == [0, 1]
        entry = store.manifest()["artifacts"]["uni/predictor_k2_c1.json"]
        assert entry["fallback"] is True
        assert entry["windows"] == 3

    def test_manifest_detects_changes(self, store, segments):
        """Test that edited artifacts show up as stale"""
        path = store.save_segments(segments)
        assert store.verify() == []

        path.write_text(path.read_text() + " ")

        assert store.verify() == ["segments.json"]

    def test_manifest_hash_matches_file(self, store, segments):
        """Test that recorded hashes describe the written bytes"""
        store.save_document("ingest", {"series": 2}, kind="ingest")
        manifest = json.loads(store.manifest_path.read_text())

        assert manifest["run_id"] == "run1"
        assert manifest["artifacts"]["ingest.json"]["kind"] == "ingest"
        assert store.load_document("ingest") == {"series": 2}

    def test_missing_artifact(self, store):
        """Test that loading an absent artifact is a store error"""
        with pytest.raises(StoreError, match="cluster model for k=4"):
            store.load_cluster_model(4)

    def test_unreadable_artifact(self, store):
        """Test that corrupt JSON is a store error"""
        store.run_dir.mkdir(parents=True)
        (store.run_dir / "segments.json").write_text("{not json")

        with pytest.raises(StoreError, match="Unreadable"):
            store.load_segments()

    @pytest.mark.parametrize("run_id", ["", "a/b", ".."])
    def test_invalid_run_id(self, tmp_path, run_id):
        """Test run id validation"""
        with pytest.raises(StoreError):
            ModelStore(tmp_path, run_id)

    def test_canonical_json(self):
        """Test sorted keys and trailing newline"""
        assert dump_json({"b": 1, "a": 2}) == '{\n  "a": 2,\n  "b": 1\n}\n'
