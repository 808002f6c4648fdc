"""GeoJSON input, GeoJSON/SVG/JSON-lines output and run configuration."""
from __future__ import annotations

import json
import math
import os
from dataclasses import asdict, dataclass, field, fields, replace
from pathlib import Path
from typing import Iterable, Mapping
from xml.sax.saxutils import quoteattr

import numpy as np

from . import kernels
from .agents import RoundReport, SessionConfig, SessionResult
from .constraints import DEFENSIVE_FLOOR
from .errors import ConfigError, DegenerateGeometry, EmptyScene, IoError, ParseError, SchemaError
from .fitness import ELIMINATION_PENALTY
from .genome import GaConfig
from .geometry import ELIMINATED, MapObject, Parts, Polygon, Polyline, ScaleSpec, to_parts
from .operators import Bounds

KINDS = ("building", "road")
_GEOMETRY_TYPE = {"building": "Polygon", "road": "LineString"}
DEFAULT_PX_PER_MM = 4.0


@dataclass(frozen=True)
class Thresholds:
    min_symbol_side_mm: float = 0.4
    min_separation_mm: float = 0.2
    defensive_floor: float = DEFENSIVE_FLOOR
    elimination_penalty: float = ELIMINATION_PENALTY
    disp_max: float = 10.0
    enl_max: float = 3.0
    angle_tolerance: float = 10.0


@dataclass(frozen=True)
class RunConfig:
    input_path: Path
    output_path: Path
    source_scale: float
    target_scale: float
    svg_path: Path | None = None
    report_path: Path | None = None
    zone: tuple[float, float, float, float] | None = None
    kinds: tuple[str, ...] = KINDS
    ga: GaConfig = field(default_factory=GaConfig)
    session: SessionConfig = field(default_factory=SessionConfig)
    thresholds: Thresholds = field(default_factory=Thresholds)
    px_per_mm: float = DEFAULT_PX_PER_MM
    #: include wall-clock timings in the report file (makes it run-dependent)
    report_timing: bool = False

    def __post_init__(self):
        if not self.source_scale > 0 or not self.target_scale > 0:
            raise ConfigError("scale denominators must be positive")
        if self.target_scale < self.source_scale:
            raise ConfigError(
                f"target scale 1:{self.target_scale:g} is larger than source 1:{self.source_scale:g}; "
                "only reduction is supported")
        paths = [Path(p).resolve() for p in (self.input_path, self.output_path, self.svg_path, self.report_path)
                 if p is not None]
        if len(set(paths)) != len(paths):
            raise ConfigError("input, output, svg and report paths must be distinct")
        for f in fields(self.thresholds):
            v = getattr(self.thresholds, f.name)
            if not (isinstance(v, (int, float)) and v > 0 and math.isfinite(v)):
                raise ConfigError(f"threshold {f.name} must be positive, got {v!r}")
        if self.thresholds.defensive_floor > 1:
            raise ConfigError("defensive_floor must be <= 1")
        if not self.px_per_mm > 0:
            raise ConfigError("px_per_mm must be positive")
        if not self.kinds or any(k not in KINDS for k in self.kinds):
            raise ConfigError(f"kinds must be a non-empty subset of {KINDS}")
        if self.zone is not None:
            minx, miny, maxx, maxy = self.zone
            if not (minx <= maxx and miny <= maxy):
                raise ConfigError("zone must be minx,miny,maxx,maxy with min <= max")

    @property
    def spec(self) -> ScaleSpec:
        t = self.thresholds
        return ScaleSpec(self.source_scale, self.target_scale, t.min_symbol_side_mm, t.min_separation_mm)

    @property
    def bounds(self) -> Bounds:
        t = self.thresholds
        return Bounds.for_scale(self.spec, disp_max=t.disp_max, enl_max=t.enl_max,
                                angle_tolerance=t.angle_tolerance)


def _sub(cls, data: Mapping | None, base):
    """Build ``cls`` from ``base`` with keys from ``data`` overriding it."""
    if data is None:
        return base
    if not isinstance(data, Mapping):
        raise ConfigError(f"{cls.__name__} section must be an object")
    known = {f.name for f in fields(cls)}
    unknown = sorted(set(data) - known)
    if unknown:
        raise ConfigError(f"unknown {cls.__name__} keys: {', '.join(unknown)}")
    try:
        return replace(base, **data)
    except (TypeError, ValueError) as exc:
        raise ConfigError(f"invalid {cls.__name__}: {exc}") from exc


def load_config_file(path: str | os.PathLike) -> dict:
    """Read a JSON configuration file into a plain dict."""
    try:
        with open(path, encoding="utf-8") as fh:
            data = json.load(fh)
    except OSError as exc:
        raise ConfigError(f"cannot read config {path}: {exc}") from exc
    except json.JSONDecodeError as exc:
        raise ConfigError(f"config {path} is not valid JSON: {exc}") from exc
    if not isinstance(data, dict):
        raise ConfigError("config file must hold a JSON object")
    return data


def build_run_config(overrides: Mapping, file_data: Mapping | None = None) -> RunConfig:
    """Merge a config-file dict with explicit overrides (overrides win).

    Both mappings use RunConfig field names; ``ga``, ``session`` and
    ``thresholds`` are nested objects.
    """
    merged: dict = {}
    for src in (file_data or {}, overrides):
        for k, v in src.items():
            if v is None:
                continue
            if k in ("ga", "session", "thresholds") and isinstance(v, Mapping):
                merged.setdefault(k, {}).update(v)
            else:
                merged[k] = v
    known = {f.name for f in fields(RunConfig)}
    unknown = sorted(set(merged) - known)
    if unknown:
        raise ConfigError(f"unknown config keys: {', '.join(unknown)}")
    for req in ("input_path", "output_path", "source_scale", "target_scale"):
        if req not in merged:
            raise ConfigError(f"missing required setting {req}")
    try:
        merged["ga"] = _sub(GaConfig, merged.get("ga"), GaConfig())
        merged["session"] = _sub(SessionConfig, merged.get("session"), SessionConfig())
        merged["thresholds"] = _sub(Thresholds, merged.get("thresholds"), Thresholds())
        for k in ("input_path", "output_path", "svg_path", "report_path"):
            if merged.get(k) is not None:
                merged[k] = Path(merged[k])
        if merged.get("zone") is not None:
            zone = tuple(float(v) for v in merged["zone"])
            if len(zone) != 4:
                raise ConfigError("zone needs four numbers")
            merged["zone"] = zone
        if "kinds" in merged:
            merged["kinds"] = tuple(merged["kinds"])
        return RunConfig(**merged)
    except ConfigError:
        raise
    except (TypeError, ValueError) as exc:
        raise ConfigError(str(exc)) from exc


# ----------------------------------------------------------------------
# input
# ----------------------------------------------------------------------


def _coords(raw, depth: int, index: int) -> np.ndarray:
    try:
        a = np.asarray(raw, dtype=np.float64)
    except (TypeError, ValueError) as exc:
        raise SchemaError(f"feature {index}: non-numeric coordinates", index) from exc
    if a.ndim != depth or a.shape[-1] < 2 or not np.isfinite(a).all():
        raise SchemaError(f"feature {index}: malformed coordinates", index)
    return a[..., :2]


def _zone_parts(zone) -> Parts:
    minx, miny, maxx, maxy = zone
    ring = np.array([[minx, miny], [maxx, miny], [maxx, maxy], [minx, maxy]], dtype=np.float64)
    return Parts(ring, np.array([0, 4], dtype=np.int64), np.array([True]))


def _in_zone(geom, zone) -> bool:
    x0, y0, x1, y1 = geom.bounds()
    if x1 < zone[0] or x0 > zone[2] or y1 < zone[1] or y0 > zone[3]:
        return False
    a = to_parts(geom)
    z = _zone_parts(zone)
    return kernels.parts_distance(a.coords, a.offsets, a.closed, z.coords, z.offsets, z.closed) == 0.0


def parse_features(doc, zone=None, kinds: Iterable[str] = KINDS) -> list[MapObject]:
    """Turn a decoded GeoJSON FeatureCollection into map objects."""
    if not isinstance(doc, dict) or doc.get("type") != "FeatureCollection" or not isinstance(
            doc.get("features"), list):
        raise ParseError("input is not a GeoJSON FeatureCollection")
    kinds = tuple(kinds)
    objects: list[MapObject] = []
    seen: set[str] = set()
    for i, feat in enumerate(doc["features"]):
        if not isinstance(feat, dict) or feat.get("type") != "Feature":
            raise SchemaError(f"feature {i} is not a Feature", i)
        props = feat.get("properties") or {}
        kind = props.get("kind")
        if kind not in KINDS:
            raise SchemaError(f"feature {i}: property 'kind' must be 'building' or 'road', got {kind!r}", i)
        geom = feat.get("geometry")
        gtype = geom.get("type") if isinstance(geom, dict) else None
        if gtype != _GEOMETRY_TYPE[kind]:
            raise SchemaError(f"feature {i}: a {kind} needs a {_GEOMETRY_TYPE[kind]} geometry, got {gtype}", i)
        oid = str(feat["id"]) if feat.get("id") is not None else str(i)
        if oid in seen:
            raise SchemaError(f"feature {i}: duplicate id {oid!r}", i)
        seen.add(oid)
        try:
            if kind == "building":
                rings = geom.get("coordinates")
                if not isinstance(rings, list) or len(rings) != 1:
                    raise SchemaError(f"feature {i}: buildings must be single-ring polygons", i)
                shape = Polygon(_coords(rings[0], 2, i))
            else:
                shape = Polyline(_coords(geom.get("coordinates"), 2, i))
        except (DegenerateGeometry, ValueError) as exc:
            if isinstance(exc, SchemaError):
                raise
            raise SchemaError(f"feature {i}: {exc}", i) from exc
        if kind not in kinds or (zone is not None and not _in_zone(shape, zone)):
            continue
        objects.append(MapObject(oid, kind, shape, dict(props), geom))
    if not objects:
        raise EmptyScene("no features match the requested zone and kinds")
    return objects


def load_features(path: str | os.PathLike, zone=None, kinds: Iterable[str] = KINDS) -> list[MapObject]:
    """Read a GeoJSON FeatureCollection of buildings (Polygon) and roads (LineString)."""
    try:
        with open(path, encoding="utf-8") as fh:
            text = fh.read()
    except OSError as exc:
        raise IoError(f"cannot read {path}: {exc}") from exc
    try:
        doc = json.loads(text)
    except json.JSONDecodeError as exc:
        raise ParseError(f"{path}: {exc}") from exc
    return parse_features(doc, zone, kinds)


# ----------------------------------------------------------------------
# output
# ----------------------------------------------------------------------


def _geometry_json(obj: MapObject, geom) -> dict | None:
    if geom is ELIMINATED:
        return None
    if geom is obj.geometry and obj.source_geometry is not None:
        return obj.source_geometry
    if isinstance(geom, Polygon):
        ring = np.vstack((geom.ring, geom.ring[:1]))
        return {"type": "Polygon", "coordinates": [ring.tolist()]}
    return {"type": "LineString", "coordinates": geom.coords.tolist()}


def feature_collection(objects: list[MapObject], result: SessionResult) -> dict:
    features = []
    for obj in objects:
        geom = result.geometries[obj.id]
        out = result.outcomes.get(obj.id)
        props = dict(obj.properties or {"kind": obj.kind})
        props["eliminated"] = geom is ELIMINATED
        props["applied_ops"] = [str(op) for op in out.applied] if out is not None else []
        features.append({"type": "Feature", "id": obj.id, "properties": props,
                         "geometry": _geometry_json(obj, geom)})
    return {"type": "FeatureCollection", "features": features}


def render_svg(objects: list[MapObject], geometries: Mapping[str, object], spec: ScaleSpec,
               px_per_mm: float = DEFAULT_PX_PER_MM) -> str:
    """SVG where one map millimetre at target scale spans ``px_per_mm`` pixels."""
    live = [(o, geometries[o.id]) for o in objects if geometries[o.id] is not ELIMINATED]
    k = 1000.0 / spec.target_denominator * px_per_mm  # ground meters -> px
    stroke = 2.0 * spec.separation * k
    if live:
        boxes = np.array([g.bounds() for _, g in live])
        x0, y0 = boxes[:, 0].min(), boxes[:, 1].min()
        x1, y1 = boxes[:, 2].max(), boxes[:, 3].max()
    else:
        x0 = y0 = x1 = y1 = 0.0
    pad = stroke
    width = (x1 - x0) * k + 2 * pad
    height = (y1 - y0) * k + 2 * pad

    def pts(c: np.ndarray) -> str:
        return " ".join(f"{(x - x0) * k + pad:.3f},{(y1 - y) * k + pad:.3f}" for x, y in c)

    lines = [
        '<?xml version="1.0" encoding="UTF-8"?>',
        f'<svg xmlns="http://www.w3.org/2000/svg" version="1.1" width="{width:.3f}" height="{height:.3f}" '
        f'viewBox="0 0 {width:.3f} {height:.3f}">',
        f'<g id="roads" fill="none" stroke="#444444" stroke-width="{stroke:.3f}" stroke-linecap="butt">',
    ]
    for o, g in live:
        if isinstance(g, Polyline):
            lines.append(f'<polyline id={quoteattr(o.id)} points="{pts(g.coords)}"/>')
    lines.append("</g>")
    lines.append('<g id="buildings" fill="#8c2f2f" stroke="none">')
    for o, g in live:
        if isinstance(g, Polygon):
            lines.append(f'<polygon id={quoteattr(o.id)} points="{pts(g.ring)}"/>')
    lines.append("</g>")
    lines.append("</svg>")
    return "\n".join(lines) + "\n"


def report_lines(reports: Iterable[RoundReport], timing: bool = False) -> str:
    out = []
    for r in reports:
        d = r.to_dict()
        if not timing:
            d.pop("elapsed_ms")
        out.append(json.dumps(d, allow_nan=False))
    return "".join(line + "\n" for line in out)


def _write(path: Path, text: str) -> None:
    try:
        with open(path, "w", encoding="utf-8", newline="\n") as fh:
            fh.write(text)
    except OSError as exc:
        raise IoError(f"cannot write {path}: {exc}") from exc


def write_outputs(objects: list[MapObject], result: SessionResult, cfg: RunConfig) -> None:
    """Write the generalized GeoJSON and, when configured, the SVG and round report."""
    doc = feature_collection(objects, result)
    _write(cfg.output_path, json.dumps(doc, allow_nan=False) + "\n")
    if cfg.svg_path is not None:
        _write(cfg.svg_path, render_svg(objects, result.geometries, cfg.spec, cfg.px_per_mm))
    if cfg.report_path is not None:
        _write(cfg.report_path, report_lines(result.reports, cfg.report_timing))


def config_to_dict(cfg: RunConfig) -> dict:
    """JSON-ready view of a run configuration."""
    d = asdict(cfg)
    for k in ("input_path", "output_path", "svg_path", "report_path"):
        if d[k] is not None:
            d[k] = str(d[k])
    return d
