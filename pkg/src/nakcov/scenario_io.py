"""Scenario files: YAML (or JSON) in, validated model out, canonical YAML back.

Layout (every key optional; omitted keys take the defaults listed in
``DEFAULTS`` and are echoed in ``ScenarioConfig.defaults_used``)::

    geometry:    {R, beta, d_min, user_direction: corner | edge | <degrees>, angles: [deg, ...]}
    fading:      {alpha_u, lambda_u, alpha_c, lambda_c, bs: [..]}   or
                 {alpha_u, lambda_u, interferers: [{bs, alpha, lambda}, ...]}
    correlation: {kind: none | exponential | explicit, rho, matrix, sqrt_convention}
    shadowing:   {sigma_db, rho_shadow}   or   {sigma_db, shadow_matrix}
    query:       {T_db: [...], r: [...]}
    run:         {trials, seed, variants: [...]}

Thresholds are given in dB here and converted to linear values when the
scenario is evaluated; the library itself only sees linear quantities.
"""

from __future__ import annotations

import hashlib
import json
from dataclasses import dataclass, field
from pathlib import Path
from typing import Any, Optional

import yaml

from .coverage import FadingSpec
from .errors import DomainError, ScenarioError
from .gammasum import CorrelationSpec, GammaComponent
from .geometry import CORNER_ANGLE_DEG, EDGE_ANGLE_DEG, N_INTERFERERS, NetworkGeometry
from .scenario import VARIANTS, Scenario

SCHEMA_VERSION = 1

DEFAULTS = {
    "geometry.R": 866.0,
    "geometry.beta": 3.76,
    "geometry.d_min": 35.0,
    "geometry.user_direction": CORNER_ANGLE_DEG,
    "fading.alpha_u": 1.0,
    "fading.alpha_c": 1.0,
    "correlation.kind": "none",
    "correlation.sqrt_convention": True,
    "shadowing.sigma_db": 0.0,
    "query.T_db": [0.0],
    "query.r": [300.0, 600.0, 900.0],
    "run.trials": 10_000,
    "run.seed": 0,
    "run.variants": ["inid"],
}

_SECTIONS = {
    "schema": None,
    "geometry": {"R", "beta", "d_min", "user_direction", "angles"},
    "fading": {"alpha_u", "lambda_u", "alpha_c", "lambda_c", "bs", "interferers"},
    "correlation": {"kind", "rho", "matrix", "sqrt_convention"},
    "shadowing": {"sigma_db", "rho_shadow", "shadow_matrix"},
    "query": {"T_db", "r"},
    "run": {"trials", "seed", "variants"},
}
_INTERFERER_KEYS = {"bs", "alpha", "lambda"}


@dataclass(frozen=True)
class ScenarioConfig:
    scenario: Scenario
    T_db: tuple
    r: tuple
    trials: int
    seed: int
    variants: tuple
    defaults_used: tuple = field(default=(), compare=False)
    source: str = field(default="<string>", compare=False)


def _line_map(node, path: str, out: dict) -> None:
    out[path] = node.start_mark.line + 1
    if isinstance(node, yaml.MappingNode):
        seen = set()
        for k, v in node.value:
            key = str(k.value)
            sub = f"{path}.{key}" if path else key
            if key in seen:
                raise ScenarioError(f"line {k.start_mark.line + 1}: duplicate key {sub!r}")
            seen.add(key)
            out[sub] = k.start_mark.line + 1
            _line_map(v, sub, out)
    elif isinstance(node, yaml.SequenceNode):
        for i, v in enumerate(node.value):
            _line_map(v, f"{path}[{i}]", out)


class _Reader:
    def __init__(self, data: dict, lines: dict, source: str):
        self.data = data
        self.lines = lines
        self.source = source
        self.defaults_used: list[str] = []

    def fail(self, path: str, msg: str):
        line = self.lines.get(path)
        where = f"{self.source}:{line}" if line else self.source
        raise ScenarioError(f"{where}: field {path!r}: {msg}")

    def section(self, name: str) -> dict:
        sec = self.data.get(name, {})
        if sec is None:
            return {}
        if not isinstance(sec, dict):
            self.fail(name, "expected a mapping")
        for key in sec:
            if key not in _SECTIONS[name]:
                self.fail(f"{name}.{key}", f"unknown key (allowed: {sorted(_SECTIONS[name])})")
        return sec

    def get(self, sec: dict, path: str, default: Any = None):
        key = path.split(".", 1)[1]
        if key in sec:
            return sec[key]
        if path in DEFAULTS:
            self.defaults_used.append(path)
            return DEFAULTS[path]
        return default

    def number(self, value, path: str, positive: bool = False, nonneg: bool = False) -> float:
        if isinstance(value, bool) or not isinstance(value, (int, float)):
            self.fail(path, f"expected a number, got {value!r}")
        v = float(value)
        if positive and not v > 0:
            self.fail(path, f"must be positive, got {v}")
        if nonneg and v < 0:
            self.fail(path, f"must be nonnegative, got {v}")
        return v

    def numbers(self, value, path: str, **kw) -> list[float]:
        if not isinstance(value, list) or not value:
            self.fail(path, "expected a nonempty list")
        return [self.number(v, f"{path}[{i}]", **kw) for i, v in enumerate(value)]

    def integer(self, value, path: str, minimum: int = 0) -> int:
        if isinstance(value, bool) or not isinstance(value, int) or value < minimum:
            self.fail(path, f"expected an integer >= {minimum}, got {value!r}")
        return int(value)

    def matrix(self, value, path: str, n: int) -> list[list[float]]:
        if not isinstance(value, list) or len(value) != n:
            self.fail(path, f"expected a {n}x{n} matrix")
        rows = []
        for i, row in enumerate(value):
            if not isinstance(row, list) or len(row) != n:
                self.fail(f"{path}[{i}]", f"expected a row of length {n}")
            rows.append([self.number(v, f"{path}[{i}][{j}]") for j, v in enumerate(row)])
        return rows


def _direction(rd: _Reader, value, path: str) -> float:
    if value == "corner":
        return CORNER_ANGLE_DEG
    if value == "edge":
        return EDGE_ANGLE_DEG
    return rd.number(value, path)


def _beta(rd: _Reader, value) -> float:
    beta = rd.number(value, "geometry.beta")
    if beta < 2:
        rd.fail("geometry.beta", f"path-loss exponent must be >= 2, got {beta}")
    return beta


def _parse(data: Any, lines: dict, source: str) -> ScenarioConfig:
    rd = _Reader(data if isinstance(data, dict) else {}, lines, source)
    if not isinstance(data, dict):
        rd.fail("", "top level must be a mapping")
    for key in data:
        if key not in _SECTIONS:
            rd.fail(key, f"unknown section (allowed: {sorted(_SECTIONS)})")
    if "schema" in data and data["schema"] != SCHEMA_VERSION:
        rd.fail("schema", f"unsupported schema version {data['schema']!r}")

    try:
        g = rd.section("geometry")
        geom = NetworkGeometry(
            R=rd.number(rd.get(g, "geometry.R"), "geometry.R", positive=True),
            beta=_beta(rd, rd.get(g, "geometry.beta")),
            d_min=rd.number(rd.get(g, "geometry.d_min"), "geometry.d_min", positive=True),
            user_angle_deg=_direction(rd, rd.get(g, "geometry.user_direction"), "geometry.user_direction"),
        )
    except DomainError as exc:
        rd.fail("geometry", str(exc))
    angles = tuple(rd.numbers(g["angles"], "geometry.angles")) if g.get("angles") is not None else None

    f = rd.section("fading")
    alpha_u = rd.number(rd.get(f, "fading.alpha_u"), "fading.alpha_u", positive=True)
    lambda_u = (rd.number(f["lambda_u"], "fading.lambda_u", positive=True)
                if "lambda_u" in f else 1.0 / alpha_u)
    if "lambda_u" not in f:
        rd.defaults_used.append("fading.lambda_u")
    if "interferers" in f:
        for key in ("alpha_c", "lambda_c", "bs"):
            if key in f:
                rd.fail(f"fading.{key}", "cannot be combined with an explicit interferer list")
        items = f["interferers"]
        if not isinstance(items, list) or not items:
            rd.fail("fading.interferers", "expected a nonempty list")
        bs, comps = [], []
        for i, item in enumerate(items):
            p = f"fading.interferers[{i}]"
            if not isinstance(item, dict):
                rd.fail(p, "expected a mapping with bs, alpha and optional lambda")
            for key in item:
                if key not in _INTERFERER_KEYS:
                    rd.fail(f"{p}.{key}", f"unknown key (allowed: {sorted(_INTERFERER_KEYS)})")
            if "bs" not in item or "alpha" not in item:
                rd.fail(p, "needs bs and alpha")
            bs.append(rd.integer(item["bs"], f"{p}.bs", 1))
            a = rd.number(item["alpha"], f"{p}.alpha", positive=True)
            lam = rd.number(item["lambda"], f"{p}.lambda", positive=True) if "lambda" in item else 1.0 / a
            comps.append(GammaComponent(a, lam))
    else:
        alpha_c = rd.number(rd.get(f, "fading.alpha_c"), "fading.alpha_c", positive=True)
        lam_c = rd.number(f["lambda_c"], "fading.lambda_c", positive=True) if "lambda_c" in f else 1.0 / alpha_c
        if "bs" in f:
            if not isinstance(f["bs"], list) or not f["bs"]:
                rd.fail("fading.bs", "expected a nonempty list")
            bs = [rd.integer(b, f"fading.bs[{i}]", 1) for i, b in enumerate(f["bs"])]
        else:
            rd.defaults_used.append("fading.bs")
            bs = list(range(1, N_INTERFERERS + 1))
        comps = [GammaComponent(alpha_c, lam_c) for _ in bs]
    try:
        fading = FadingSpec(GammaComponent(alpha_u, lambda_u), tuple(comps))
    except DomainError as exc:
        rd.fail("fading", str(exc))
    n = len(bs)

    c = rd.section("correlation")
    kind = rd.get(c, "correlation.kind")
    sqrt_conv = rd.get(c, "correlation.sqrt_convention")
    if not isinstance(sqrt_conv, bool):
        rd.fail("correlation.sqrt_convention", "expected true or false")
    corr = None
    try:
        if kind == "exponential":
            if "rho" not in c:
                rd.fail("correlation.rho", "required for exponential correlation")
            corr = CorrelationSpec.exponential(rd.number(c["rho"], "correlation.rho"), n, sqrt_conv)
        elif kind == "explicit":
            if "matrix" not in c:
                rd.fail("correlation.matrix", "required for explicit correlation")
            corr = CorrelationSpec.explicit(rd.matrix(c["matrix"], "correlation.matrix", n), sqrt_conv)
        elif kind != "none":
            rd.fail("correlation.kind", f"expected none, exponential or explicit, got {kind!r}")
        if corr is not None:
            corr.c_matrix()
    except DomainError as exc:
        rd.fail("correlation", str(exc))
    for key in ("rho", "matrix"):
        if key in c and kind != {"rho": "exponential", "matrix": "explicit"}[key]:
            rd.fail(f"correlation.{key}", f"not used with kind {kind!r}")

    s = rd.section("shadowing")
    sigma_db = rd.number(rd.get(s, "shadowing.sigma_db"), "shadowing.sigma_db", nonneg=True)
    shadow_corr = None
    if "rho_shadow" in s and "shadow_matrix" in s:
        rd.fail("shadowing.shadow_matrix", "give either rho_shadow or shadow_matrix")
    try:
        if "rho_shadow" in s:
            shadow_corr = CorrelationSpec.exponential(rd.number(s["rho_shadow"], "shadowing.rho_shadow"), n)
        elif "shadow_matrix" in s:
            shadow_corr = CorrelationSpec.explicit(rd.matrix(s["shadow_matrix"], "shadowing.shadow_matrix", n))
    except DomainError as exc:
        rd.fail("shadowing", str(exc))

    q = rd.section("query")
    t_db = tuple(rd.numbers(rd.get(q, "query.T_db"), "query.T_db"))
    r = tuple(rd.numbers(rd.get(q, "query.r"), "query.r", positive=True))
    reach = max(geom.cell_boundary(a) for a in (angles or (geom.user_angle_deg,)))
    for i, v in enumerate(r):
        if not geom.d_min <= v <= reach * (1 + 1e-12):
            rd.fail(f"query.r[{i}]", f"r={v} outside [{geom.d_min}, {reach:.1f}] m for this ray")

    run = rd.section("run")
    trials = rd.integer(rd.get(run, "run.trials"), "run.trials", 1)
    seed = rd.integer(rd.get(run, "run.seed"), "run.seed", 0)
    if seed >= 2 ** 64:
        rd.fail("run.seed", "must fit in 64 bits")
    variants = rd.get(run, "run.variants")
    if not isinstance(variants, list) or not variants:
        rd.fail("run.variants", "expected a nonempty list")
    for i, v in enumerate(variants):
        if v not in VARIANTS:
            rd.fail(f"run.variants[{i}]", f"unknown variant {v!r} (allowed: {list(VARIANTS)})")

    try:
        scenario = Scenario(geom, fading, tuple(bs), corr, sigma_db, shadow_corr, angles)
        for v in variants:
            scenario.check_variant(v)
    except DomainError as exc:
        rd.fail("fading", str(exc))
    return ScenarioConfig(scenario, t_db, r, trials, seed, tuple(variants),
                          tuple(rd.defaults_used), source)


def loads(text: str, source: str = "<string>") -> ScenarioConfig:
    """Parse scenario text (YAML, or JSON which YAML also accepts)."""
    try:
        node = yaml.compose(text, Loader=yaml.SafeLoader)
        data = yaml.safe_load(text)
    except yaml.YAMLError as exc:
        raise ScenarioError(f"{source}: {exc}") from exc
    lines: dict = {}
    if node is not None:
        try:
            _line_map(node, "", lines)
        except ScenarioError as exc:
            raise ScenarioError(f"{source}:{exc}") from None
    return _parse(data if data is not None else {}, lines, source)


def load(path) -> ScenarioConfig:
    path = Path(path)
    try:
        text = path.read_text()
    except OSError as exc:
        raise ScenarioError(f"cannot read scenario file {path}: {exc}") from exc
    return loads(text, str(path))


def _corr_dict(corr: Optional[CorrelationSpec]) -> dict:
    if corr is None:
        return {"kind": "none", "sqrt_convention": True}
    if corr.kind == "exponential":
        return {"kind": "exponential", "rho": corr.rho, "sqrt_convention": corr.sqrt_convention}
    return {"kind": "explicit", "matrix": [list(row) for row in corr.matrix],
            "sqrt_convention": corr.sqrt_convention}


def canonical(cfg: ScenarioConfig) -> dict:
    """Fully explicit mapping: every field present, defaults substituted."""
    sc = cfg.scenario
    geom = sc.geometry
    shadow: dict = {"sigma_db": sc.sigma_db}
    if sc.shadow_corr is not None:
        if sc.shadow_corr.kind == "exponential":
            shadow["rho_shadow"] = sc.shadow_corr.rho
        else:
            shadow["shadow_matrix"] = [list(row) for row in sc.shadow_corr.matrix]
    geometry = {"R": geom.R, "beta": geom.beta, "d_min": geom.d_min,
                "user_direction": geom.user_angle_deg}
    if sc.angles is not None:
        geometry["angles"] = list(sc.angles)
    return {
        "schema": SCHEMA_VERSION,
        "geometry": geometry,
        "fading": {
            "alpha_u": sc.fading.user.shape,
            "lambda_u": sc.fading.user.scale,
            "interferers": [{"bs": b, "alpha": c.shape, "lambda": c.scale}
                            for b, c in zip(sc.bs, sc.fading.interferers)],
        },
        "correlation": _corr_dict(sc.corr),
        "shadowing": shadow,
        "query": {"T_db": list(cfg.T_db), "r": list(cfg.r)},
        "run": {"trials": cfg.trials, "seed": cfg.seed, "variants": list(cfg.variants)},
    }


def dumps(cfg: ScenarioConfig) -> str:
    """Canonical YAML: fixed key order, floats written with repr precision."""
    return yaml.safe_dump(canonical(cfg), sort_keys=False, default_flow_style=None)


def assumptions_hash(cfg: ScenarioConfig) -> str:
    """Short digest of the canonical model (run settings excluded), stamped on every output row."""
    model = {k: v for k, v in canonical(cfg).items() if k != "run"}
    blob = json.dumps(model, sort_keys=True).encode()
    return hashlib.sha256(blob).hexdigest()[:12]
