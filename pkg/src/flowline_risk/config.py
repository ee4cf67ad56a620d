"""Run configuration: a flat key=value file plus command-line overrides.

The flat format keeps run provenance diffable; every knob the pipeline
honors lives here, echoed verbatim into the report.
"""

from __future__ import annotations

import datetime
from dataclasses import dataclass, field, fields
from pathlib import Path

from .crs import ProjectionParams
from .matcher import DEFAULT_LADDER_STEPS, ToleranceLadder


class ConfigError(ValueError):
    pass


@dataclass
class RunConfig:
    seed: int | None = None
    out_dir: str = "runs/latest"

    # inputs; empty means "synthesize via the synth stage"
    descriptive_path: str = ""
    operational_path: str = ""
    spills_path: str = ""

    # synth
    synth_preset: str = "a"            # a | b | custom
    synth_n_lines: int = 1000
    synth_area: float = 20000.0
    synth_min_separation: float = 60.0
    synth_jitter_sigma: float = 5.0
    synth_spill_rate: float = 0.01
    synth_spill_lateral_sigma: float = 8.0
    synth_n_operators: int = 12
    synth_operator_clustering: float = 0.0

    # matching
    ladder: tuple[float, ...] = DEFAULT_LADDER_STEPS
    match_whole_geometry: bool = False

    # projection
    central_meridian: float = -105.0
    scale_factor: float = 0.9996
    false_easting: float = 500000.0
    false_northing: float = 0.0
    semi_major_axis: float = 6378137.0
    flattening: float = 1.0 / 298.257222101
    descriptive_geographic: bool = False

    # features
    drop_id_like: bool = False
    count_segments: bool = False       # complexity as segments instead of members
    reference_date: str = ""           # YYYY-MM-DD; empty means the run date
    train_fraction: float = 0.7

    # models
    pca: bool = True                   # train the PCA lane next to the raw lane
    pca_k: int = 0                     # 0 means the 95% variance rule
    pca_variance_threshold: float = 0.95
    lr_rate: float = 0.1
    lr_epochs: int = 500
    lr_l2: float = 1e-4
    knn_k: int = 5
    svm_c: float = 1.0
    svm_epochs: int = 200
    gbdt_trees: int = 100
    gbdt_depth: int = 3
    gbdt_shrinkage: float = 0.1
    adaboost_stumps: int = 100
    rf_trees: int = 100
    rf_depth: int = 8
    rf_mtry: int = 0                   # 0 means ceil(sqrt(p))

    # clustering
    cluster_k_min: int = 2
    cluster_k_max: int = 5

    extras: dict = field(default_factory=dict)

    def validate(self) -> None:
        if self.seed is None:
            raise ConfigError("seed is mandatory; set it in the config file or pass --seed")
        for key in ("descriptive_path", "operational_path", "spills_path"):
            value = getattr(self, key)
            if value and not Path(value).exists():
                raise ConfigError(f"{key} {value!r} does not exist")
        if self.cluster_k_min < 2 or self.cluster_k_max < self.cluster_k_min:
            raise ConfigError("cluster k range must satisfy 2 <= k_min <= k_max")
        try:
            ToleranceLadder(tuple(self.ladder))
        except ValueError as exc:
            raise ConfigError(f"bad ladder: {exc}") from exc

    def tolerance_ladder(self) -> ToleranceLadder:
        return ToleranceLadder(tuple(self.ladder))

    def projection_params(self) -> ProjectionParams:
        return ProjectionParams(
            central_meridian=self.central_meridian,
            scale_factor=self.scale_factor,
            false_easting=self.false_easting,
            false_northing=self.false_northing,
            semi_major_axis=self.semi_major_axis,
            flattening=self.flattening,
        )

    def resolve_reference_date(self) -> datetime.date:
        if self.reference_date:
            return datetime.date.fromisoformat(self.reference_date)
        return datetime.date.today()

    def echo(self) -> dict:
        # out_dir is where the report lands, not part of what it describes;
        # leaving it out keeps reruns into fresh directories comparable.
        out = {}
        for f in fields(self):
            if f.name in ("extras", "out_dir"):
                continue
            value = getattr(self, f.name)
            out[f.name] = list(value) if isinstance(value, tuple) else value
        out.update(self.extras)
        return out


_BOOL_KEYS = {"match_whole_geometry", "drop_id_like", "count_segments", "pca",
              "descriptive_geographic"}
_INT_KEYS = {
    "seed", "synth_n_lines", "synth_n_operators", "pca_k", "lr_epochs", "knn_k",
    "svm_epochs", "gbdt_trees", "gbdt_depth", "adaboost_stumps", "rf_trees",
    "rf_depth", "rf_mtry", "cluster_k_min", "cluster_k_max",
}
_FLOAT_KEYS = {
    "synth_area", "synth_min_separation", "synth_jitter_sigma", "synth_spill_rate",
    "synth_spill_lateral_sigma", "synth_operator_clustering", "central_meridian",
    "scale_factor", "false_easting", "false_northing", "semi_major_axis",
    "flattening", "train_fraction", "pca_variance_threshold", "lr_rate", "lr_l2",
    "svm_c", "gbdt_shrinkage",
}


def _parse_bool(raw: str, key: str) -> bool:
    low = raw.strip().lower()
    if low in ("1", "true", "yes", "on"):
        return True
    if low in ("0", "false", "no", "off"):
        return False
    raise ConfigError(f"{key} must be a boolean, got {raw!r}")


def _coerce(key: str, raw: str):
    raw = raw.strip()
    try:
        if key == "ladder":
            return tuple(float(tok) for tok in raw.split(",") if tok.strip())
        if key in _BOOL_KEYS:
            return _parse_bool(raw, key)
        if key in _INT_KEYS:
            return int(raw)
        if key in _FLOAT_KEYS:
            return float(raw)
    except ConfigError:
        raise
    except ValueError:
        raise ConfigError(f"cannot parse {key}={raw!r}")
    return raw


def load_config(path=None, overrides: dict | None = None) -> RunConfig:
    """Build a RunConfig from an optional file and CLI-style overrides."""
    cfg = RunConfig()
    known = {f.name for f in fields(cfg)} - {"extras"}

    def apply(key: str, raw):
        key = key.strip()
        if key not in known:
            cfg.extras[key] = str(raw).strip()
            return
        setattr(cfg, key, _coerce(key, str(raw)))

    if path is not None:
        try:
            text = Path(path).read_text(encoding="utf-8")
        except OSError as exc:
            raise ConfigError(f"cannot read config {path}: {exc}") from exc
        for line_no, line in enumerate(text.splitlines(), start=1):
            stripped = line.strip()
            if not stripped or stripped.startswith("#"):
                continue
            if "=" not in stripped:
                raise ConfigError(f"{path}:{line_no}: expected key = value")
            key, _, raw = stripped.partition("=")
            apply(key, raw)

    for key, raw in (overrides or {}).items():
        if raw is not None:
            apply(key, raw)
    return cfg
