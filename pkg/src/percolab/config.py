"""Experiment configuration: JSON loading, schema validation, hashing, and
vertex/set specification resolution."""

from __future__ import annotations

import hashlib
import importlib.resources
import json
from dataclasses import dataclass

import jsonschema

from .errors import ConfigurationError
from .graph_core import GraphWindow, VertexSet, ball, build_window


def _schema() -> dict:
    text = importlib.resources.files("percolab").joinpath("config.schema.json").read_text()
    return json.loads(text)


def validate_config(raw: dict) -> None:
    """Schema-validate; errors name the offending JSON path."""
    validator = jsonschema.Draft202012Validator(_schema())
    errors = sorted(validator.iter_errors(raw), key=lambda e: list(e.absolute_path))
    if errors:
        err = jsonschema.exceptions.best_match(errors)
        path = "/".join(str(p) for p in err.absolute_path) or "(root)"
        raise ConfigurationError(f"config field {path}: {err.message}")
    for i, est in enumerate(raw.get("estimands", [])):
        for key in ("p", "p1", "p2"):
            if key in est and not 0.0 < est[key] <= 1.0:
                raise ConfigurationError(
                    f"config field estimands/{i}/{key}: {est[key]} outside (0, 1]"
                )
        for j, p in enumerate(est.get("p_grid", [])):
            if not 0.0 < p <= 1.0:
                raise ConfigurationError(
                    f"config field estimands/{i}/p_grid/{j}: {p} outside (0, 1]"
                )


def config_hash(raw: dict) -> str:
    """Content hash identifying the experiment; output location and worker
    count do not affect results and are excluded."""
    stripped = {k: v for k, v in raw.items() if k not in ("out", "workers")}
    blob = json.dumps(stripped, sort_keys=True, separators=(",", ":"))
    return hashlib.sha256(blob.encode()).hexdigest()[:16]


@dataclass(frozen=True)
class ExperimentConfig:
    raw: dict
    hash: str

    @classmethod
    def from_file(cls, path) -> "ExperimentConfig":
        try:
            with open(path) as fh:
                raw = json.load(fh)
        except OSError as exc:
            raise ConfigurationError(f"cannot read config {path}: {exc}") from exc
        except json.JSONDecodeError as exc:
            raise ConfigurationError(f"config {path} is not valid JSON: {exc}") from exc
        validate_config(raw)
        return cls(raw=raw, hash=config_hash(raw))

    @classmethod
    def from_dict(cls, raw: dict) -> "ExperimentConfig":
        validate_config(raw)
        return cls(raw=raw, hash=config_hash(raw))

    def build_window(self) -> GraphWindow:
        return window_from_spec(self.raw["window"])

    @property
    def seed(self) -> int:
        return int(self.raw["seed"])

    @property
    def samples(self) -> int:
        return int(self.raw.get("samples", 10000))

    @property
    def ci_level(self) -> float:
        return float(self.raw.get("ci_level", 0.99))

    @property
    def workers(self) -> int:
        return int(self.raw.get("workers", 1))


def window_from_spec(spec: dict) -> GraphWindow:
    family = spec["family"]
    if family == "hypercubic":
        return build_window("hypercubic", d=spec["d"], L=spec["L"])
    if family == "regular_tree":
        return build_window("regular_tree", r=spec["r"], R=spec["R"])
    if family == "product":
        return build_window(
            "product",
            first=window_from_spec(spec["first"]),
            second=window_from_spec(spec["second"]),
        )
    raise ConfigurationError(f"unknown window family {family!r}")


def resolve_vertex(window: GraphWindow, spec) -> int:
    """'center', an integer index, or a coordinate list."""
    if spec == "center":
        return window.center_vertex()
    if isinstance(spec, int):
        if not 0 <= spec < window.n_vertices:
            raise ConfigurationError(f"vertex index {spec} outside window")
        return spec
    if isinstance(spec, list):
        return window.vertex_at(spec)
    raise ConfigurationError(f"cannot resolve vertex spec {spec!r}")


def resolve_set(window: GraphWindow, spec) -> VertexSet:
    """A vertex spec, a list of vertex specs, or {'ball': {center, radius}}."""
    if isinstance(spec, dict) and "ball" in spec:
        b = spec["ball"]
        return ball(window, resolve_vertex(window, b["center"]), int(b["radius"]))
    if isinstance(spec, list) and spec and isinstance(spec[0], list):
        return VertexSet.of(resolve_vertex(window, s) for s in spec)
    if isinstance(spec, list) and spec and all(isinstance(s, int) for s in spec):
        # flat int lists are always vertex indices; coordinates must be nested
        for s in spec:
            if not 0 <= s < window.n_vertices:
                raise ConfigurationError(f"vertex index {s} outside window")
        return VertexSet.of(spec)
    return VertexSet.of([resolve_vertex(window, spec)])
