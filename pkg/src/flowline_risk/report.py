"""Run report: one schema-validated JSON document plus figures and tables.

The report is deterministic given inputs and seed except for the fields
listed in VOLATILE_FIELDS, which carry wall-clock information only.
"""

from __future__ import annotations

import csv
import datetime
import json
from pathlib import Path

import jsonschema

from . import figures
from .config import RunConfig
from .evaluation import eda_summaries
from .pipeline import Manifest, RunPaths, _load_json, merged_from_dict, run_id_for

VOLATILE_FIELDS = ("created_at", "timings")

REPORT_SCHEMA = {
    "type": "object",
    "required": [
        "run_id", "created_at", "config", "match_stats", "eda", "metrics",
        "clustering", "figures", "tables", "timings",
    ],
    "properties": {
        "run_id": {"type": "string", "pattern": "^[0-9a-f]{12}$"},
        "created_at": {"type": "string"},
        "config": {"type": "object"},
        "match_stats": {"type": "object"},
        "eda": {
            "type": "object",
            "additionalProperties": {
                "type": "object",
                "required": ["name", "rows"],
                "properties": {
                    "name": {"type": "string"},
                    "rows": {
                        "type": "array",
                        "items": {
                            "type": "object",
                            "required": ["label", "risk", "count", "proportion"],
                            "properties": {
                                "label": {"type": "string"},
                                "risk": {"type": "integer", "enum": [0, 1]},
                                "count": {"type": "integer", "minimum": 0},
                                "proportion": {"type": "number", "minimum": 0, "maximum": 1},
                            },
                        },
                    },
                },
            },
        },
        "metrics": {
            "type": "object",
            "required": ["rows"],
            "properties": {
                "rows": {
                    "type": "array",
                    "items": {
                        "type": "object",
                        "required": [
                            "classifier", "averaging", "pca",
                            "accuracy", "precision", "recall", "f1",
                        ],
                        "properties": {
                            "classifier": {"type": "string"},
                            "averaging": {
                                "type": "string",
                                "enum": ["positive-class", "macro", "weighted"],
                            },
                            "pca": {"type": "boolean"},
                            "accuracy": {"type": "number", "minimum": 0, "maximum": 1},
                            "precision": {"type": "number", "minimum": 0, "maximum": 1},
                            "recall": {"type": "number", "minimum": 0, "maximum": 1},
                            "f1": {"type": "number", "minimum": 0, "maximum": 1},
                            "undefined": {"type": "array", "items": {"type": "string"}},
                        },
                    },
                },
            },
        },
        "clustering": {
            "type": "object",
            "required": ["k_range", "scores", "best_k", "pc_scores", "assignments", "actual"],
            "properties": {
                "k_range": {"type": "array", "items": {"type": "integer", "minimum": 2}},
                "scores": {"type": "object"},
                "best_k": {"type": "integer", "minimum": 2},
                "pc_scores": {"type": "array"},
                "assignments": {"type": "array"},
                "actual": {"type": "array"},
            },
        },
        "figures": {
            "type": "array",
            "items": {
                "type": "object",
                "required": ["file", "payload_ref"],
                "properties": {
                    "file": {"type": "string"},
                    "payload_ref": {"type": "string"},
                },
            },
        },
        "tables": {"type": "array", "items": {"type": "string"}},
        "timings": {"type": "object"},
    },
}


def validate_report(report: dict) -> None:
    jsonschema.validate(report, REPORT_SCHEMA)
    for fig in report["figures"]:
        _resolve_ref(report, fig["payload_ref"])


def _resolve_ref(report: dict, ref: str):
    node = report
    for part in ref.split("."):
        if not isinstance(node, dict) or part not in node:
            raise ValueError(f"figure payload_ref {ref!r} does not resolve in the report")
        node = node[part]
    return node


def _read_run_log(paths: RunPaths) -> tuple[dict, dict]:
    """Latest stats and elapsed seconds per stage from the run log."""
    stats: dict[str, dict] = {}
    timings: dict[str, float] = {}
    log_path = paths.artifacts / "run_log.jsonl"
    if log_path.exists():
        for line in log_path.read_text(encoding="utf-8").splitlines():
            if not line.strip():
                continue
            entry = json.loads(line)
            stats[entry["stage"]] = entry.get("stats", {})
            timings[entry["stage"]] = entry.get("elapsed_s", 0.0)
    return stats, timings


def append_run_log(paths: RunPaths, stage: str, stats: dict, elapsed_s: float) -> None:
    log_path = paths.artifacts / "run_log.jsonl"
    entry = {
        "stage": stage,
        "stats": stats,
        "elapsed_s": round(elapsed_s, 6),
        "at": datetime.datetime.now(datetime.timezone.utc).isoformat(),
    }
    with open(log_path, "a", encoding="utf-8") as fh:
        fh.write(json.dumps(entry, sort_keys=True) + "\n")


def _write_metrics_csv(path: Path, rows: list[dict]) -> None:
    with open(path, "w", newline="", encoding="utf-8") as fh:
        writer = csv.writer(fh)
        writer.writerow(["classifier", "pca", "averaging", "accuracy", "precision", "recall", "f1", "undefined"])
        for r in rows:
            writer.writerow([
                r["classifier"], int(r["pca"]), r["averaging"],
                f"{r['accuracy']:.6f}", f"{r['precision']:.6f}",
                f"{r['recall']:.6f}", f"{r['f1']:.6f}",
                ";".join(r.get("undefined", [])),
            ])


def _write_eda_csv(path: Path, table: dict) -> None:
    with open(path, "w", newline="", encoding="utf-8") as fh:
        writer = csv.writer(fh)
        writer.writerow(["label", "risk", "count", "proportion"])
        for row in table["rows"]:
            writer.writerow([row["label"], row["risk"], row["count"], f"{row['proportion']:.8f}"])


def stage_report(cfg: RunConfig, paths: RunPaths, manifest: Manifest) -> dict:
    cfg.validate()
    labeled = [merged_from_dict(d) for d in _load_json(manifest.require("labeled"))["records"]]
    metrics = _load_json(manifest.require("metrics"))
    clustering = _load_json(manifest.require("clustering"))
    stage_stats, timings = _read_run_log(paths)

    eda = {
        name: table.to_dict()
        for name, table in eda_summaries(labeled, cfg.resolve_reference_date()).items()
    }

    figure_specs = [
        ("risk_map.svg", "match_stats"),
        ("risk_by_line_age.svg", "eda.line_age"),
        ("risk_by_diameter.svg", "eda.diameter"),
        ("risk_by_fluid_type.svg", "eda.fluid_type"),
        ("risk_by_material.svg", "eda.material"),
        ("risk_by_operator_number.svg", "eda.operator_number"),
        ("silhouette.svg", "clustering.scores"),
        ("pca_clusters.svg", "clustering.pc_scores"),
    ]

    table_files = ["tables/metrics.csv"] + [f"tables/eda_{name}.csv" for name in sorted(eda)]

    report = {
        "run_id": run_id_for(cfg),
        "created_at": datetime.datetime.now(datetime.timezone.utc).isoformat(),
        "config": cfg.echo(),
        "match_stats": {
            "merge": stage_stats.get("merge", {}),
            "attribute": stage_stats.get("attribute", {}),
            "featurize": stage_stats.get("featurize", {}),
        },
        "eda": eda,
        "metrics": metrics,
        "clustering": clustering,
        "figures": [
            {"file": f"figures/{name}", "payload_ref": ref} for name, ref in figure_specs
        ],
        "tables": table_files,
        "timings": timings,
    }
    validate_report(report)

    # figures
    map_payload = [
        {"risk": m.risk, "lines": [[[p.x, p.y] for p in mem.vertices] for mem in m.geometry.lines]}
        for m in labeled
    ]
    figures.render_risk_map(map_payload, paths.figures / "risk_map.svg")
    figures.render_bar_chart(eda["line_age"], "Risk by line age (years)",
                             paths.figures / "risk_by_line_age.svg")
    figures.render_bar_chart(eda["diameter"], "Risk by diameter (inches)",
                             paths.figures / "risk_by_diameter.svg")
    figures.render_bar_chart(eda["fluid_type"], "Risk by fluid type",
                             paths.figures / "risk_by_fluid_type.svg")
    figures.render_bar_chart(eda["material"], "Risk by pipe material",
                             paths.figures / "risk_by_material.svg")
    figures.render_bar_chart(eda["operator_number"], "Risk by operator number",
                             paths.figures / "risk_by_operator_number.svg")
    figures.render_silhouette_chart(
        {int(k): v for k, v in clustering["scores"].items()},
        paths.figures / "silhouette.svg",
    )
    figures.render_pca_clusters(
        clustering["pc_scores"], clustering["assignments"], clustering["actual"],
        paths.figures / "pca_clusters.svg",
    )

    # tables
    _write_metrics_csv(paths.tables / "metrics.csv", metrics["rows"])
    for name, table in eda.items():
        _write_eda_csv(paths.tables / f"eda_{name}.csv", table)

    report_path = paths.root / "report.json"
    report_path.write_text(json.dumps(report, indent=2, sort_keys=True) + "\n", encoding="utf-8")
    manifest.record("report", report_path, "report")
    return {
        "report": str(report_path),
        "figures": len(figure_specs),
        "metric_rows": len(metrics["rows"]),
    }
