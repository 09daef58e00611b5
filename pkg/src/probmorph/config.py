"""JSON config files: parsing, validation, canonical emission and model building.

Three document kinds share one schema file (``schema/probmorph.schema.json``):
Bayesian models (``posterior``), finite statistical models with a statistic
(``sufficiency-check``) and Dirichlet parameters (``dp-sample``).
"""
from __future__ import annotations

import hashlib
import json
from dataclasses import asdict, dataclass, field
from functools import lru_cache
from importlib import resources

import jsonschema
import numpy as np

from .bayes import BayesianModel, Particles, RadiusSchedule
from .densities import density_from_spec
from .dirichlet import DirichletParam
from .kernel import Kernel, parametric
from .measure import LabelMap, Measure, PartitionMap, measure_from_spec
from .rngstats import as_lineage
from .spaces import SampleSpace, freeze_label
from .statmodel import StatModel

__all__ = ["ConfigError", "ModelConfig", "SufficiencyConfig", "DirichletConfig", "load_schema",
           "validate", "parse_text", "load", "emit", "digest", "build_space"]

METHODS = ("exact", "classical", "ball", "lopital")


class ConfigError(ValueError):
    """A config file that does not parse, validate or describe a consistent model."""

    def __init__(self, message: str, where: str | None = None):
        super().__init__(message if where is None else f"{where}: {message}")
        self.where = where
        self.detail = message


@lru_cache(maxsize=1)
def load_schema() -> dict:
    text = resources.files("probmorph").joinpath("schema/probmorph.schema.json").read_text()
    return json.loads(text)


def validate(doc, kind: str):
    """Validate ``doc`` against the ``$defs/<kind>`` entry of the shipped schema."""
    schema = load_schema()
    sub = {"$ref": f"#/$defs/{kind}", "$defs": schema["$defs"]}
    validator = jsonschema.Draft202012Validator(sub)
    errors = sorted(validator.iter_errors(doc), key=lambda e: list(e.absolute_path))
    if errors:
        e = errors[0]
        path = "/".join(str(p) for p in e.absolute_path) or "(root)"
        raise ConfigError(e.message, where=f"schema violation at {path}")


def _decode(text: str, source: str = "<config>"):
    try:
        return json.loads(text)
    except json.JSONDecodeError as e:
        raise ConfigError(e.msg, where=f"{source}:{e.lineno}:{e.colno}") from None


def build_space(spec: dict) -> SampleSpace:
    if spec["kind"] == "finite":
        labels = [freeze_label(v) for v in spec["labels"]]
        if len(set(labels)) != len(labels):
            raise ConfigError("labels must be distinct")
        return SampleSpace.finite(labels)
    b = np.asarray(spec["bounds"], dtype=float)
    if np.any(b[:, 0] >= b[:, 1]):
        raise ConfigError("each bound needs lower < upper")
    return SampleSpace.euclidean(tuple(b[:, 0]), tuple(b[:, 1]))


def _measure(space, spec, what) -> Measure:
    try:
        return measure_from_spec(space, spec)
    except (ValueError, KeyError, TypeError) as e:
        raise ConfigError(str(e), where=what) from None


# ---------------------------------------------------------------------------
# Bayesian model configs


@dataclass
class ModelConfig:
    """A Bayesian model, its data, and the posterior options.

    Instances hold the canonical JSON form; equality is field equality, so
    ``parse(emit(c)) == c`` is the round-trip property.
    """

    sample_space: dict
    theta: dict
    likelihood: dict
    data: list
    method: str = "ball"
    schedule: dict = field(default_factory=dict)
    queries: dict = field(default_factory=dict)
    name: str = ""

    kind = "model"

    @classmethod
    def from_dict(cls, doc: dict) -> "ModelConfig":
        validate(doc, "model")
        cfg = cls(sample_space=doc["sample_space"], theta=doc["theta"],
                  likelihood=doc["likelihood"], data=list(doc["data"]),
                  method=doc.get("method", "ball"), schedule=dict(doc.get("schedule", {})),
                  queries=dict(doc.get("queries", {})), name=doc.get("name", ""))
        cfg.check()
        return cfg

    def to_dict(self) -> dict:
        return {k: v for k, v in asdict(self).items() if v not in ({}, "")}

    def check(self):
        """Cross-field consistency beyond what the schema can express."""
        X = build_space(self.sample_space)
        th = self.theta
        for i, x in enumerate(self.data):
            try:
                X.point(x)
            except ValueError as e:
                raise ConfigError(str(e), where=f"data/{i}") from None
        if th["kind"] == "finite":
            T = build_space({"kind": "finite", "labels": th["labels"]})
            prior = _measure(T, th["prior"], "theta/prior")
            if not prior.is_probability(1e-10):
                raise ConfigError(f"prior sums to {prior.total_mass}, not 1", where="theta/prior")
            rows = self.likelihood.get("rows")
            if rows is None:
                raise ConfigError("finite parameter spaces take likelihood rows", where="likelihood")
            if len(rows) != T.size:
                raise ConfigError(f"{len(rows)} rows for {T.size} parameters", where="likelihood/rows")
            for i, r in enumerate(rows):
                m = _measure(X, r, f"likelihood/rows/{i}")
                if not m.is_probability(1e-10):
                    raise ConfigError(f"row has mass {m.total_mass}, not 1", where=f"likelihood/rows/{i}")
        elif th["kind"] == "particles":
            if X.is_finite and self.likelihood.get("family") != "bernoulli":
                raise ConfigError("particle parameters on a finite sample space need the bernoulli family")
            if "rows" in self.likelihood:
                raise ConfigError("particle parameters take a parametric likelihood family", where="likelihood")
            if len(th["bounds"]) != 1 and self.likelihood["family"] != "normal-location":
                raise ConfigError("only normal-location supports multi-dimensional parameters")
        else:
            if self.likelihood.get("family") != "identity":
                raise ConfigError("dp-prior parameters need the identity likelihood", where="likelihood")
            a = _measure(X, th["alpha"], "theta/alpha")
            if not a.total_mass > 0:
                raise ConfigError("alpha must have positive mass", where="theta/alpha")
        if self.schedule:
            try:
                sched = self.radius_schedule(X)
                sched.check_space(X)
            except (TypeError, ValueError) as e:
                raise ConfigError(str(e), where="schedule") from None
        if self.method not in METHODS:
            raise ConfigError(f"unknown method {self.method!r}")

    def radius_schedule(self, X: SampleSpace | None = None) -> RadiusSchedule:
        X = X or build_space(self.sample_space)
        base = RadiusSchedule.default(X).as_dict()
        base.update(self.schedule)
        return RadiusSchedule(**base)

    def build(self, seed=0) -> BayesianModel:
        """Instantiate the model; particle clouds draw from stream ``seed/0``."""
        from .models import dp_prior_model

        X = build_space(self.sample_space)
        th, lik = self.theta, self.likelihood
        name = self.name or "config"
        if th["kind"] == "finite":
            T = build_space({"kind": "finite", "labels": th["labels"]})
            prior = measure_from_spec(T, th["prior"])
            rows = [measure_from_spec(X, r) for r in lik["rows"]]
            if X.is_finite:
                kern = Kernel.from_matrix(T, X, np.vstack([r.vector for r in rows]), tol=1e-10)
            else:
                kern = Kernel.from_rows(T, X, rows, tol=1e-10)
            return BayesianModel(kern, Measure(T, vector=prior.vector / prior.total_mass), name=name)
        lin = as_lineage(seed).child(0)
        if th["kind"] == "particles":
            T = build_space({"kind": "euclidean", "bounds": th["bounds"]})
            dens = density_from_spec(th["prior"], T.lower, T.upper)
            prior = Particles.from_density(dens, int(th["count"]), lin)
            params = {k: v for k, v in lik.items() if k != "family"}
            return BayesianModel(parametric(lik["family"], T, X, **params), prior, name=name)
        alpha = measure_from_spec(X, th["alpha"])
        model = dp_prior_model(int(th["count"]), lin, alpha=alpha, space=X)
        model.name = name
        return model


# ---------------------------------------------------------------------------
# sufficiency configs


@dataclass
class SufficiencyConfig:
    """A finite family of probability vectors and a statistic (label map or kernel matrix)."""

    sample_space: dict
    family: list
    statistic: dict
    name: str = ""

    kind = "sufficiency"

    @classmethod
    def from_dict(cls, doc: dict) -> "SufficiencyConfig":
        validate(doc, "sufficiency")
        cfg = cls(doc["sample_space"], [list(v) for v in doc["family"]], dict(doc["statistic"]),
                  doc.get("name", ""))
        cfg.check()
        return cfg

    def to_dict(self) -> dict:
        return {k: v for k, v in asdict(self).items() if v not in ({}, "")}

    def check(self):
        try:
            self.build()
        except ConfigError:
            raise
        except (ValueError, TypeError, KeyError) as e:
            raise ConfigError(str(e)) from None

    def build(self):
        """Return ``(model, T, label_map_or_None)``."""
        X = build_space(self.sample_space)
        if not X.is_finite:
            raise ConfigError("sufficiency checks need a finite sample space", where="sample_space")
        fam = np.asarray(self.family, dtype=float)
        if fam.shape[1] != X.size:
            raise ConfigError(f"family vectors have length {fam.shape[1]}, space has {X.size} labels",
                              where="family")
        if np.any(np.abs(fam.sum(axis=1) - 1.0) > 1e-10):
            raise ConfigError("family members must be probability vectors", where="family")
        model = StatModel.from_vectors(X, fam)
        Y = build_space({"kind": "finite", "labels": self.statistic["codomain"]})
        if "images" in self.statistic:
            imgs = self.statistic["images"]
            if len(imgs) != X.size:
                raise ConfigError("one image per sample label required", where="statistic/images")
            kappa = LabelMap(X, Y, [freeze_label(v) for v in imgs])
            return model, Kernel.from_map(kappa), kappa
        return model, Kernel.from_matrix(X, Y, self.statistic["matrix"], tol=1e-10), None


# ---------------------------------------------------------------------------
# Dirichlet configs


@dataclass
class DirichletConfig:
    """A base measure α on a sample space, with optional cut points for projections."""

    space: dict
    alpha: object
    cuts: list = field(default_factory=list)
    name: str = ""

    kind = "dirichlet"

    @classmethod
    def from_dict(cls, doc: dict) -> "DirichletConfig":
        validate(doc, "dirichlet")
        cfg = cls(doc["space"], doc["alpha"], list(doc.get("cuts", [])), doc.get("name", ""))
        cfg.param()
        return cfg

    @classmethod
    def default(cls) -> "DirichletConfig":
        """α = 2·Uniform[0,1] with the cell [0, 0.5)."""
        return cls({"kind": "euclidean", "bounds": [[0.0, 1.0]]},
                   {"densities": [{"family": "uniform", "weight": 2.0}]}, [0.5], "two-uniform")

    def to_dict(self) -> dict:
        return {k: v for k, v in asdict(self).items() if v not in ([], "")}

    def param(self) -> DirichletParam:
        X = build_space(self.space)
        alpha = _measure(X, self.alpha, "alpha")
        if not alpha.total_mass > 0:
            raise ConfigError("alpha must have positive mass", where="alpha")
        if X.is_finite and self.cuts:
            raise ConfigError("cuts apply to one-dimensional spaces", where="cuts")
        if self.cuts and X.dim != 1:
            raise ConfigError("cuts apply to one-dimensional spaces", where="cuts")
        if self.cuts and (sorted(self.cuts) != self.cuts
                          or not all(X.lower[0] < c < X.upper[0] for c in self.cuts)):
            raise ConfigError("cuts must be increasing interior points", where="cuts")
        return DirichletParam(alpha)

    def partition(self):
        X = build_space(self.space)
        return PartitionMap.intervals(X, self.cuts) if self.cuts else None


_KINDS = {"model": ModelConfig, "sufficiency": SufficiencyConfig, "dirichlet": DirichletConfig}


def parse_text(text: str, kind: str, source: str = "<config>"):
    """Decode, validate and check a config document of the given kind."""
    doc = _decode(text, source)
    if not isinstance(doc, dict):
        raise ConfigError("top level must be a JSON object", where=source)
    return _KINDS[kind].from_dict(doc)


def load(path, kind: str):
    """Read a config file; returns ``(config, raw_bytes)``."""
    try:
        with open(path, "rb") as fh:
            raw = fh.read()
    except OSError as e:
        raise ConfigError(e.strerror or str(e), where=str(path)) from None
    try:
        text = raw.decode("utf-8")
    except UnicodeDecodeError as e:
        raise ConfigError(f"not UTF-8 ({e.reason})", where=str(path)) from None
    return parse_text(text, kind, str(path)), raw


def emit(cfg) -> str:
    """Canonical JSON text for a parsed config."""
    return json.dumps(cfg.to_dict(), indent=2, sort_keys=True) + "\n"


def digest(raw: bytes | str) -> str:
    if isinstance(raw, str):
        raw = raw.encode("utf-8")
    return "sha256:" + hashlib.sha256(raw).hexdigest()
