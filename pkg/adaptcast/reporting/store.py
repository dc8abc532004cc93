"""
Model store: persisted clusterings, predictors and their manifest

Layout under ``<root>/<run-id>/``::

    manifest.json                          every artifact with its SHA-256
    segments.json                          training segments and provenance
    normalization.json                     per-cell training min/max
    ingest.json                            what the last ingest read and repaired
    cluster_k<k>.json                      one clustering per k
    cluster_k<k>_ood.json                  clustering grown by OOD reclustering
    recluster_k<k>.json                    summary of that reclustering
    ood_buffer_<variant>_k<k>.json         windows buffered as out-of-distribution
    <variant>/features.json                resolved channels of a configuration
    <variant>/predictor_k<k>_c<c>.json     one predictor per cluster
"""

import hashlib
import json
import logging
from pathlib import Path
from typing import Any

import numpy as np

from ..clustering.kmeans import ClusterModel
from ..config import FeatureVariant
from ..errors import StoreError
from ..predictors.base import PredictorModel
from ..predictors.training import PerClusterTraining
from ..timeseries.core import NormalizationStats, Segment, SegmentSet
from ..timeseries.features import FeatureConfig

logger = logging.getLogger(__name__)


def dump_json(data: Any) -> str:
    """Canonical JSON text: sorted keys, two-space indent, trailing newline"""
    return json.dumps(data, indent=2, sort_keys=True) + "\n"


def file_sha256(path: Path) -> str:
    return hashlib.sha256(path.read_bytes()).hexdigest()


class ModelStore:
    """Reads and writes the artifacts of one run"""

    def __init__(self, root: str | Path, run_id: str):
        if not run_id or "/" in run_id or run_id in (".", ".."):
            raise StoreError(f"Invalid run id '{run_id}'")
        self.root = Path(root)
        self.run_id = run_id
        self.run_dir = self.root / run_id

    @property
    def manifest_path(self) -> Path:
        return self.run_dir / "manifest.json"

    def cluster_path(self, k: int) -> Path:
        return self.run_dir / f"cluster_k{k}.json"

    def reclustered_path(self, k: int) -> Path:
        """Model grown from the k-cluster model by OOD reclustering"""
        return self.run_dir / f"cluster_k{k}_ood.json"

    def predictor_path(self, variant: FeatureVariant, k: int, cluster: int) -> Path:
        return self.run_dir / variant.value / f"predictor_k{k}_c{cluster}.json"

    def features_path(self, variant: FeatureVariant) -> Path:
        return self.run_dir / variant.value / "features.json"

    # Manifest

    def manifest(self) -> dict[str, Any]:
        if not self.manifest_path.exists():
            return {"run_id": self.run_id, "artifacts": {}}
        return json.loads(self.manifest_path.read_text(encoding="utf-8"))

    def _write(self, path: Path, data: Any, **notes: Any) -> Path:
        path.parent.mkdir(parents=True, exist_ok=True)
        path.write_text(dump_json(data), encoding="utf-8")
        manifest = self.manifest()
        entry = {"sha256": file_sha256(path)}
        entry.update(notes)
        manifest["artifacts"][path.relative_to(self.run_dir).as_posix()] = entry
        self.manifest_path.write_text(dump_json(manifest), encoding="utf-8")
        logger.debug(f"Stored {path}")
        return path

    def _read(self, path: Path, what: str) -> Any:
        if not path.exists():
            raise StoreError(f"Missing {what}: {path}")
        try:
            return json.loads(path.read_text(encoding="utf-8"))
        except json.JSONDecodeError as e:
            raise StoreError(f"Unreadable {what} {path}: {e}") from e

    def verify(self) -> list[str]:
        """Artifacts whose content no longer matches the manifest hash"""
        stale = []
        for relative, entry in sorted(self.manifest()["artifacts"].items()):
            path = self.run_dir / relative
            if not path.exists() or file_sha256(path) != entry["sha256"]:
                stale.append(relative)
        return stale

    # Artifacts

    def save_segments(self, segments: SegmentSet, name: str = "segments") -> Path:
        data = {
            "segments": [
                {
                    "cell_id": s.source_cell,
                    "part": s.part,
                    "day_index": s.day_index,
                    "start": s.start,
                    "values": s.values.tolist(),
                }
                for s in segments
            ]
        }
        return self._write(
            self.run_dir / f"{name}.json", data, kind="segments", count=len(segments)
        )

    def load_segments(self, name: str = "segments") -> SegmentSet:
        data = self._read(self.run_dir / f"{name}.json", "segment file")
        return SegmentSet(
            tuple(
                Segment(d["cell_id"], d["day_index"], np.array(d["values"]), d["start"], d["part"])
                for d in data["segments"]
            )
        )

    def save_normalization(self, stats: dict[tuple[str, int], NormalizationStats]) -> Path:
        data = {f"{cell}#{part}": s.to_dict() for (cell, part), s in sorted(stats.items())}
        return self._write(self.run_dir / "normalization.json", data, kind="normalization")

    def load_normalization(self) -> dict[tuple[str, int], NormalizationStats]:
        data = self._read(self.run_dir / "normalization.json", "normalization file")
        stats = {}
        for key, ranges in data.items():
            cell, _, part = key.rpartition("#")
            stats[(cell, int(part))] = NormalizationStats.from_dict(ranges)
        return stats

    def save_cluster_model(self, model: ClusterModel, path: Path | None = None) -> Path:
        path = path or self.cluster_path(model.k)
        return self._write(path, model.to_dict(), kind="cluster", k=model.k)

    def load_cluster_model(self, k: int, path: Path | None = None) -> ClusterModel:
        path = path or self.cluster_path(k)
        return ClusterModel.from_dict(self._read(path, f"cluster model for k={k}"))

    def save_document(self, name: str, data: Any, kind: str) -> Path:
        return self._write(self.run_dir / f"{name}.json", data, kind=kind)

    def load_document(self, name: str) -> Any:
        return self._read(self.run_dir / f"{name}.json", name)

    def save_feature_config(self, config: FeatureConfig) -> Path:
        return self._write(self.features_path(config.variant), config.to_dict(), kind="features")

    def load_feature_config(self, variant: FeatureVariant) -> FeatureConfig:
        return FeatureConfig.from_dict(self._read(self.features_path(variant), "feature config"))

    def save_predictors(
        self, variant: FeatureVariant, k: int, training: PerClusterTraining
    ) -> list[Path]:
        """One file per cluster; fallback clusters hold the global model"""
        paths = []
        for cluster, model in sorted(training.models.items()):
            paths.append(
                self._write(
                    self.predictor_path(variant, k, cluster),
                    model.to_dict(),
                    kind="predictor",
                    k=k,
                    cluster=cluster,
                    windows=training.window_counts.get(cluster, 0),
                    fallback=cluster in training.fallback_clusters,
                )
            )
        return paths

    def load_predictors(self, variant: FeatureVariant, k: int) -> dict[int, PredictorModel]:
        return {
            c: PredictorModel.from_dict(
                self._read(self.predictor_path(variant, k, c), f"predictor for cluster {c}")
            )
            for c in range(k)
        }
