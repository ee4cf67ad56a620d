"""Pipeline stages and their on-disk artifacts.

Every stage writes its outputs under the run directory and records a
content hash in the manifest; consumers re-hash their inputs and refuse to
run against files that changed since they were produced. That keeps stale
artifact mixes loud instead of silently wrong.
"""

from __future__ import annotations

import csv
import datetime
import hashlib
import json
from dataclasses import dataclass
from pathlib import Path

import numpy as np

from .config import RunConfig
from .crs import GeoPoint
from .evaluation import REPORT_ORDER, metric_table, silhouette_sweep
from .features import (
    Dataset,
    FeatureConfig,
    assemble,
    load_dataset,
    save_dataset,
    standardize,
    stratified_split,
)
from .geometry import MultiLine, Point2D, PolyLine
from .ingest import (
    OperationalFlowline,
    parse_descriptive,
    parse_operational,
    parse_spills,
    write_diagnostics,
)
from .matcher import (
    MergedFlowline,
    assign_risk,
    match_flowlines,
    match_spills,
    write_audit_log,
)
from .ml import (
    AdaBoostClassifier,
    GBDTClassifier,
    KNNClassifier,
    LinearSVM,
    LogisticRegressionGD,
    RandomForestClassifier,
    fit_kmeans,
    load_model,
    save_model,
)
from .numerics import choose_k_by_variance, pca_fit, pca_transform
from .synth import SynthConfig, config_a, config_b, generate


class MissingArtifact(FileNotFoundError):
    pass


class SchemaHashMismatch(RuntimeError):
    pass


@dataclass
class RunPaths:
    root: Path

    @property
    def data(self) -> Path:
        return self.root / "data"

    @property
    def artifacts(self) -> Path:
        return self.root / "artifacts"

    @property
    def models(self) -> Path:
        return self.artifacts / "models"

    @property
    def figures(self) -> Path:
        return self.root / "figures"

    @property
    def tables(self) -> Path:
        return self.root / "tables"

    @property
    def manifest(self) -> Path:
        return self.artifacts / "manifest.json"

    def ensure(self) -> "RunPaths":
        for p in (self.data, self.artifacts, self.models, self.figures, self.tables):
            p.mkdir(parents=True, exist_ok=True)
        return self


def _sha256(path: Path) -> str:
    digest = hashlib.sha256()
    with open(path, "rb") as fh:
        for chunk in iter(lambda: fh.read(1 << 16), b""):
            digest.update(chunk)
    return digest.hexdigest()


class Manifest:
    def __init__(self, paths: RunPaths):
        self.paths = paths
        self.entries: dict[str, dict] = {}
        if paths.manifest.exists():
            self.entries = json.loads(paths.manifest.read_text(encoding="utf-8"))

    def record(self, name: str, path: Path, stage: str) -> None:
        self.entries[name] = {
            "path": str(path.relative_to(self.paths.root)),
            "sha256": _sha256(path),
            "stage": stage,
        }
        self.paths.manifest.write_text(
            json.dumps(self.entries, indent=2, sort_keys=True) + "\n", encoding="utf-8"
        )

    def require(self, name: str) -> Path:
        entry = self.entries.get(name)
        if entry is None:
            raise MissingArtifact(f"artifact {name!r} not produced yet; run its stage first")
        path = self.paths.root / entry["path"]
        if not path.exists():
            raise MissingArtifact(f"artifact file {path} is gone")
        if _sha256(path) != entry["sha256"]:
            raise SchemaHashMismatch(
                f"artifact {name!r} changed on disk since stage {entry['stage']!r} wrote it"
            )
        return path


def run_id_for(cfg: RunConfig) -> str:
    payload = json.dumps(cfg.echo(), sort_keys=True)
    return hashlib.sha256(payload.encode()).hexdigest()[:12]


# ---------------------------------------------------------------------------
# serialization of merged flowlines


def _geometry_to_coords(g: MultiLine) -> list:
    return [[[p.x, p.y] for p in member.vertices] for member in g.lines]


def _geometry_from_coords(coords) -> MultiLine:
    return MultiLine(tuple(
        PolyLine(tuple(Point2D(float(x), float(y)) for x, y in member))
        for member in coords
    ))


def _operational_to_dict(op: OperationalFlowline) -> dict:
    return {
        "row_id": op.source_row_id,
        "operator_number": op.operator_number,
        "flowline_id": op.flowline_id,
        "location_id": op.location_id,
        "status": op.status,
        "flowline_action": op.flowline_action,
        "location_type": op.location_type,
        "fluid_type": op.fluid_type,
        "material": op.material,
        "diameter_in": op.diameter_inches,
        "length_ft": op.length_feet,
        "max_op_pressure": op.max_operating_pressure,
        "construction_date": op.construction_date.isoformat(),
        "operator_name": op.operator_name,
        "start": [op.start.latitude, op.start.longitude],
        "end": [op.end.latitude, op.end.longitude],
    }


def _operational_from_dict(d: dict) -> OperationalFlowline:
    return OperationalFlowline(
        source_row_id=d["row_id"],
        operator_number=d["operator_number"],
        flowline_id=d["flowline_id"],
        location_id=d["location_id"],
        status=d["status"],
        flowline_action=d["flowline_action"],
        location_type=d["location_type"],
        fluid_type=d["fluid_type"],
        material=d["material"],
        diameter_inches=float(d["diameter_in"]),
        length_feet=float(d["length_ft"]),
        max_operating_pressure=float(d["max_op_pressure"]),
        construction_date=datetime.date.fromisoformat(d["construction_date"]),
        operator_name=d["operator_name"],
        start=GeoPoint(*d["start"]),
        end=GeoPoint(*d["end"]),
    )


def merged_to_dict(m: MergedFlowline) -> dict:
    return {
        "operational": _operational_to_dict(m.operational),
        "descriptive_id": m.descriptive_id,
        "geometry": _geometry_to_coords(m.geometry),
        "operator_name": m.operator_name,
        "match_tolerance": m.match_tolerance,
        "endpoint_distances": list(m.endpoint_distances),
        "risk": m.risk,
    }


def merged_from_dict(d: dict) -> MergedFlowline:
    return MergedFlowline(
        operational=_operational_from_dict(d["operational"]),
        descriptive_id=d["descriptive_id"],
        geometry=_geometry_from_coords(d["geometry"]),
        operator_name=d["operator_name"],
        match_tolerance=float(d["match_tolerance"]),
        endpoint_distances=tuple(d["endpoint_distances"]),
        risk=int(d["risk"]),
    )


def _dump_json(path: Path, obj) -> None:
    path.write_text(json.dumps(obj, indent=2, sort_keys=True) + "\n", encoding="utf-8")


def _load_json(path: Path):
    return json.loads(path.read_text(encoding="utf-8"))


# ---------------------------------------------------------------------------
# stages


def stage_synth(cfg: RunConfig, paths: RunPaths, manifest: Manifest) -> dict:
    cfg.validate()
    preset = cfg.synth_preset.lower()
    if preset == "a":
        synth_cfg = config_a(seed=cfg.seed, n_lines=cfg.synth_n_lines)
    elif preset == "b":
        synth_cfg = config_b(seed=cfg.seed, n_lines=cfg.synth_n_lines)
    else:
        synth_cfg = SynthConfig(
            n_lines=cfg.synth_n_lines,
            area=cfg.synth_area,
            min_separation=cfg.synth_min_separation,
            endpoint_jitter_sigma=cfg.synth_jitter_sigma,
            spill_rate=cfg.synth_spill_rate,
            spill_lateral_sigma=cfg.synth_spill_lateral_sigma,
            n_operators=cfg.synth_n_operators,
            operator_reuse_clustering=cfg.synth_operator_clustering,
            seed=cfg.seed,
        )
    result = generate(synth_cfg, paths.data, cfg.projection_params())
    manifest.record("descriptive", result.descriptive_path, "synth")
    manifest.record("operational", result.operational_path, "synth")
    manifest.record("spills", result.spills_path, "synth")
    manifest.record("ground_truth", result.ground_truth_path, "synth")
    return {"n_lines": synth_cfg.n_lines, "preset": preset}


def _input_paths(cfg: RunConfig, paths: RunPaths, manifest: Manifest) -> tuple[Path, Path, Path]:
    if cfg.descriptive_path:
        return Path(cfg.descriptive_path), Path(cfg.operational_path), Path(cfg.spills_path)
    return (
        manifest.require("descriptive"),
        manifest.require("operational"),
        manifest.require("spills"),
    )


def stage_merge(cfg: RunConfig, paths: RunPaths, manifest: Manifest) -> dict:
    cfg.validate()
    desc_path, op_path, _ = _input_paths(cfg, paths, manifest)
    params = cfg.projection_params()
    reference = cfg.resolve_reference_date()

    desc = parse_descriptive(desc_path, geographic=cfg.descriptive_geographic, params=params)
    operational = parse_operational(op_path, params=params, reference_date=reference)
    diagnostics = desc.diagnostics + operational.diagnostics
    diag_path = paths.artifacts / "diagnostics.csv"
    write_diagnostics(diag_path, diagnostics)

    merged, unmatched, audit = match_flowlines(
        operational.records, desc.records, cfg.tolerance_ladder(), params,
        whole_geometry=cfg.match_whole_geometry,
    )

    merged_path = paths.artifacts / "merged.json"
    _dump_json(merged_path, {
        "records": [merged_to_dict(m) for m in merged],
        "unmatched": unmatched,
    })
    audit_path = paths.artifacts / "merge_audit.csv"
    write_audit_log(audit_path, audit)

    manifest.record("merged", merged_path, "merge")
    manifest.record("merge_audit", audit_path, "merge")
    manifest.record("diagnostics", diag_path, "merge")

    by_step: dict[str, int] = {}
    for a in audit:
        if a.chosen_id is not None:
            key = f"{a.step_reached:g}"
            by_step[key] = by_step.get(key, 0) + 1
    return {
        "descriptive_total": desc.accepted + desc.rejected,
        "descriptive_accepted": desc.accepted,
        "operational_total": operational.accepted + operational.rejected,
        "operational_accepted": operational.accepted,
        "rejected_rows": len(diagnostics),
        "matched": len(merged),
        "unmatched": len(unmatched),
        "matched_by_step": by_step,
    }


def stage_attribute(cfg: RunConfig, paths: RunPaths, manifest: Manifest) -> dict:
    cfg.validate()
    params = cfg.projection_params()
    merged_doc = _load_json(manifest.require("merged"))
    merged = [merged_from_dict(d) for d in merged_doc["records"]]

    _, _, spills_path = _input_paths(cfg, paths, manifest)
    spills = parse_spills(spills_path, params=params, reference_date=cfg.resolve_reference_date())

    attributions = match_spills(spills.records, merged, cfg.tolerance_ladder(), params)
    labeled = assign_risk(merged, attributions)

    attr_path = paths.artifacts / "attributions.csv"
    with open(attr_path, "w", newline="", encoding="utf-8") as fh:
        writer = csv.writer(fh)
        writer.writerow(["spill_id", "matched_flowline_id", "distance", "tolerance_used"])
        for a in attributions:
            writer.writerow([
                a.spill_id,
                a.matched_flowline_id or "",
                "" if a.matched_flowline_id is None else f"{a.distance:.6f}",
                f"{a.tolerance_used:g}",
            ])

    labeled_path = paths.artifacts / "labeled.json"
    _dump_json(labeled_path, {"records": [merged_to_dict(m) for m in labeled]})

    manifest.record("attributions", attr_path, "attribute")
    manifest.record("labeled", labeled_path, "attribute")
    matched = sum(1 for a in attributions if a.matched)
    return {
        "spills_total": spills.accepted + spills.rejected,
        "spills_attributed": matched,
        "spills_unattributed": len(attributions) - matched,
        "high_risk_lines": sum(m.risk for m in labeled),
    }


def _feature_config(cfg: RunConfig) -> FeatureConfig:
    return FeatureConfig(
        drop_id_like=cfg.drop_id_like,
        reference_date=cfg.resolve_reference_date(),
        count_segments=cfg.count_segments,
    )


def stage_featurize(cfg: RunConfig, paths: RunPaths, manifest: Manifest) -> dict:
    cfg.validate()
    labeled_doc = _load_json(manifest.require("labeled"))
    labeled = [merged_from_dict(d) for d in labeled_doc["records"]]
    ds = assemble(labeled, _feature_config(cfg))

    csv_path = paths.artifacts / "features.csv"
    meta_path = paths.artifacts / "features.meta.json"
    save_dataset(ds, csv_path, meta_path, seed=cfg.seed,
                 extra={"drop_id_like": cfg.drop_id_like})
    manifest.record("features", csv_path, "featurize")
    manifest.record("features_meta", meta_path, "featurize")
    return {
        "rows": ds.n_rows,
        "columns": ds.n_cols,
        "positives": int(np.sum(ds.y)),
        "positive_rate": float(np.mean(ds.y)),
    }


def _load_features(manifest: Manifest) -> Dataset:
    return load_dataset(manifest.require("features"), manifest.require("features_meta"))


def _build_models(cfg: RunConfig, p: int) -> dict:
    mtry = cfg.rf_mtry if cfg.rf_mtry > 0 else None
    return {
        "LR": LogisticRegressionGD(cfg.lr_rate, cfg.lr_epochs, cfg.lr_l2),
        "KNN": KNNClassifier(cfg.knn_k),
        "SVM": LinearSVM(cfg.svm_c, cfg.svm_epochs),
        "GBDT": GBDTClassifier(cfg.gbdt_trees, cfg.gbdt_depth, cfg.gbdt_shrinkage),
        "ADABOOST": AdaBoostClassifier(cfg.adaboost_stumps),
        "RF": RandomForestClassifier(cfg.rf_trees, cfg.rf_depth, mtry, seed=cfg.seed),
    }


def stage_train(cfg: RunConfig, paths: RunPaths, manifest: Manifest) -> dict:
    cfg.validate()
    ds = _load_features(manifest)
    split = stratified_split(ds, cfg.train_fraction, cfg.seed)
    train_z, test_z, means, sds = standardize(split.train.X, split.test.X)

    lanes: dict[str, dict] = {"raw": {"train": train_z, "test": test_z}}
    pca_info = None
    if cfg.pca:
        full_fit = pca_fit(train_z, k=train_z.shape[1])
        k = cfg.pca_k if cfg.pca_k > 0 else choose_k_by_variance(
            full_fit.explained_variance, cfg.pca_variance_threshold)
        model = pca_fit(train_z, k=k)
        lanes["pca"] = {
            "train": pca_transform(model, train_z),
            "test": pca_transform(model, test_z),
        }
        pca_info = {
            "k": k,
            "means": model.means.tolist(),
            "components": model.components.tolist(),
            "explained_variance": model.explained_variance.tolist(),
            "total_variance": float(np.sum(full_fit.explained_variance)),
        }

    trained = {}
    for lane, mats in lanes.items():
        for kind, model in _build_models(cfg, mats["train"].shape[1]).items():
            model.fit(mats["train"], split.train.y)
            path = paths.models / f"{kind}_{lane}.json"
            save_model(model, path, seed=cfg.seed, column_meta=ds.column_meta)
            manifest.record(f"model_{kind}_{lane}", path, "train")
            trained[f"{kind}_{lane}"] = str(path.relative_to(paths.root))

    training_path = paths.artifacts / "training.json"
    _dump_json(training_path, {
        "split": {
            "seed": cfg.seed,
            "train_fraction": cfg.train_fraction,
            "train_ids": split.train.row_ids,
            "test_ids": split.test.row_ids,
        },
        "scaler": {"means": means.tolist(), "sds": sds.tolist()},
        "pca": pca_info,
        "lanes": sorted(lanes),
        "models": trained,
    })
    manifest.record("training", training_path, "train")
    return {
        "lanes": sorted(lanes),
        "train_rows": split.train.n_rows,
        "test_rows": split.test.n_rows,
        "pca_k": None if pca_info is None else pca_info["k"],
    }


def _test_matrices(ds: Dataset, training: dict) -> dict[str, tuple[np.ndarray, np.ndarray]]:
    """Rebuild per-lane standardized (and projected) test matrices."""
    by_id = {rid: i for i, rid in enumerate(ds.row_ids)}
    test_idx = np.array([by_id[rid] for rid in training["split"]["test_ids"]])
    X_test = ds.X[test_idx]
    y_test = ds.y[test_idx]

    means = np.asarray(training["scaler"]["means"])
    sds = np.asarray(training["scaler"]["sds"])
    safe = np.where(sds == 0.0, 1.0, sds)
    test_z = (X_test - means) / safe

    lanes = {"raw": (test_z, y_test)}
    if training["pca"] is not None:
        components = np.asarray(training["pca"]["components"])
        pca_means = np.asarray(training["pca"]["means"])
        lanes["pca"] = ((test_z - pca_means) @ components, y_test)
    return lanes


def stage_evaluate(cfg: RunConfig, paths: RunPaths, manifest: Manifest) -> dict:
    cfg.validate()
    ds = _load_features(manifest)
    training = _load_json(manifest.require("training"))
    lanes = _test_matrices(ds, training)

    rows = []
    for lane in training["lanes"]:
        X_test, y_test = lanes[lane]
        models = {}
        for kind in REPORT_ORDER:
            key = f"model_{kind}_{lane}"
            if key in manifest.entries:
                models[kind] = load_model(manifest.require(key))
        for row in metric_table(models, X_test, y_test):
            doc = row.to_dict()
            doc["pca"] = lane == "pca"
            rows.append(doc)

    metrics_path = paths.artifacts / "metrics.json"
    _dump_json(metrics_path, {"rows": rows})
    manifest.record("metrics", metrics_path, "evaluate")
    return {"metric_rows": len(rows)}


def stage_cluster(cfg: RunConfig, paths: RunPaths, manifest: Manifest) -> dict:
    cfg.validate()
    ds = _load_features(manifest)
    full_z, _, _, _ = standardize(ds.X)

    model = pca_fit(full_z, k=full_z.shape[1])
    k_scores = cfg.pca_k if cfg.pca_k > 0 else choose_k_by_variance(
        model.explained_variance, cfg.pca_variance_threshold)
    scores = pca_transform(pca_fit(full_z, k=max(k_scores, 2)), full_z)

    k_range = range(cfg.cluster_k_min, cfg.cluster_k_max + 1)
    best_k, sweep = silhouette_sweep(scores, k_range, seed=cfg.seed)
    km = fit_kmeans(scores, best_k, seed=cfg.seed)

    clustering_path = paths.artifacts / "clustering.json"
    _dump_json(clustering_path, {
        "k_range": [int(k) for k in k_range],
        "scores": {str(k): sweep[k] for k in sweep},
        "best_k": best_k,
        "pca_k": int(max(k_scores, 2)),
        "inertia": km.inertia,
        "inertia_history": km.inertia_history,
        "pc_scores": scores[:, :2].tolist(),
        "assignments": km.assignments.tolist(),
        "actual": ds.y.tolist(),
    })
    manifest.record("clustering", clustering_path, "cluster")
    return {"best_k": best_k, "scores": sweep}
