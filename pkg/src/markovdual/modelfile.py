"""YAML model files: schema validation and construction of generators.

All rational inputs are strings parsed exactly (``"1/3"``, ``"-2"``,
``"0.25"``); YAML numbers are rejected for rational fields so that floats
never reach the exact code paths.  See ``docs/model_format.md``.
"""

from __future__ import annotations

from fractions import Fraction
from pathlib import Path
from typing import List, Literal, Optional, Tuple, Union

import yaml
from pydantic import BaseModel, ConfigDict, Field, StrictInt, StrictStr, field_validator, model_validator

from . import models as M
from .exactnum import rat_parse
from .statespace import DEFAULT_BUDGET, BudgetError, ConfigSpace, SiteGraph

RatStr = StrictStr


class SchemaError(ValueError):
    pass


class _Strict(BaseModel):
    model_config = ConfigDict(extra="forbid", frozen=True)


def _rat(text: str, what: str) -> Fraction:
    try:
        return rat_parse(text)
    except ValueError as exc:
        raise SchemaError(f"{what}: {exc}") from None


class GraphSpec(_Strict):
    preset: Optional[Literal["complete", "cycle", "path"]] = None
    rate: RatStr = "1"
    edges: Optional[List[Tuple[StrictInt, StrictInt, RatStr]]] = None

    @model_validator(mode="after")
    def _one_source(self):
        if (self.preset is None) == (self.edges is None):
            raise ValueError("graph needs exactly one of 'preset' or 'edges'")
        return self


MODEL_KINDS = ("lloyd-sudbury", "voter", "contact-process", "biased-voter", "braco",
               "sep", "sip", "wf", "wf-moment")


class ModelSpec(_Strict):
    kind: Literal[MODEL_KINDS]
    params: dict[str, Union[RatStr, List[RatStr]]] = Field(default_factory=dict)


class MapSpec(_Strict):
    kind: Literal["identity", "copy", "coalesce", "flip"]
    src: Optional[StrictInt] = None
    dst: Optional[StrictInt] = None
    site: Optional[StrictInt] = None


class MapPair(_Strict):
    forward: MapSpec
    backward: MapSpec


class DualitySpec(_Strict):
    kind: Literal["q", "product-indicator", "thinning", "gamma-kernel", "custom", "map"]
    q: Optional[RatStr] = None
    p: Optional[RatStr] = None
    relation: Optional[Literal["neq", "geq", "eq", "disjoint"]] = None
    matrix: Optional[List[List[RatStr]]] = None
    function: Literal["d0", "matrix"] = "d0"
    pairs: Optional[List[MapPair]] = None
    max_total: Optional[StrictInt] = None

    @model_validator(mode="after")
    def _fields_for_kind(self):
        need = {"q": "q", "product-indicator": "relation", "thinning": "p",
                "custom": "matrix", "map": "pairs"}.get(self.kind)
        if need and getattr(self, need) is None:
            raise ValueError(f"duality kind {self.kind!r} needs field {need!r}")
        return self


class SimulationSpec(_Strict):
    replicates: StrictInt = 100_000
    horizon: RatStr = "1/4"
    step: RatStr = "1/1000"
    seed: StrictInt = 0
    test: Literal["self", "moment"] = "self"
    n: StrictInt = 2
    x: RatStr = "1/2"

    @field_validator("replicates")
    @classmethod
    def _positive(cls, v):
        if v < 1:
            raise ValueError("replicates must be >= 1")
        return v


class ModelFile(_Strict):
    sites: StrictInt = Field(ge=1)
    graph: Union[Literal["complete", "cycle", "path"], GraphSpec] = "complete"
    model: ModelSpec
    dual: Optional[ModelSpec] = None
    cap: Optional[StrictInt] = Field(default=None, ge=1)
    sector: Optional[StrictInt] = Field(default=None, ge=0)
    duality: Optional[DualitySpec] = None
    simulation: Optional[SimulationSpec] = None

    def site_graph(self) -> SiteGraph:
        g = self.graph
        if isinstance(g, str):
            return SiteGraph.preset(g, self.sites)
        if g.preset is not None:
            return SiteGraph.preset(g.preset, self.sites, _rat(g.rate, "graph.rate"))
        graph = SiteGraph(self.sites)
        for i, j, r in g.edges:
            try:
                graph.set(i, j, _rat(r, "graph edge rate"))
            except ValueError as exc:
                raise SchemaError(str(exc)) from None
        return graph


def load_model_file(path: Union[str, Path]) -> ModelFile:
    """Parse and validate; every failure is raised as ``SchemaError``."""
    from pydantic import ValidationError

    try:
        text = Path(path).read_text()
    except OSError as exc:
        raise SchemaError(f"cannot read {path}: {exc}") from None
    try:
        data = yaml.safe_load(text)
    except yaml.YAMLError as exc:
        raise SchemaError(f"malformed YAML: {exc}") from None
    if not isinstance(data, dict):
        raise SchemaError("model file must be a mapping")
    try:
        return ModelFile.model_validate(data)
    except ValidationError as exc:
        raise SchemaError(str(exc)) from None


# -- construction ------------------------------------------------------------------


def _param(spec: ModelSpec, name: str, default: Optional[str] = None) -> Fraction:
    raw = spec.params.get(name, default)
    if raw is None:
        raise SchemaError(f"model {spec.kind!r} needs parameter {name!r}")
    if isinstance(raw, list):
        raise SchemaError(f"parameter {name!r} must be a single rational")
    return _rat(raw, f"params.{name}")


def _alpha(spec: ModelSpec, sites: int) -> list:
    raw = spec.params.get("alpha")
    if raw is None:
        raise SchemaError("sip needs parameter 'alpha'")
    if isinstance(raw, str):
        raw = [raw] * sites
    if len(raw) != sites:
        raise SchemaError(f"alpha needs {sites} entries")
    return [_rat(a, "params.alpha") for a in raw]


def _check_known(spec: ModelSpec, allowed: set):
    unknown = set(spec.params) - allowed
    if unknown:
        raise SchemaError(f"unknown parameters for {spec.kind!r}: {sorted(unknown)}")


def build_generator(mf: ModelFile, spec: Optional[ModelSpec] = None,
                    strict: bool = False, budget: int = DEFAULT_BUDGET) -> M.GeneratorBundle:
    """Generator for ``spec`` (default: the file's main model).

    ``strict=False`` lets signed parameters through so that ``validate`` can
    report negative rates instead of refusing to build.
    """
    spec = mf.model if spec is None else spec
    kind = spec.kind
    graph = mf.site_graph()
    _precheck_size(mf, kind, budget)
    try:
        if kind == "lloyd-sudbury":
            _check_known(spec, {"a", "b", "c", "d", "e"})
            p = M.LSParams(*(_param(spec, k, "0") for k in "abcde"))
            bundle = M.lloyd_sudbury(p, graph, strict=strict)
        elif kind == "voter":
            _check_known(spec, set())
            bundle = M.voter(graph)
        elif kind == "contact-process":
            _check_known(spec, {"lambda"})
            lam = _param(spec, "lambda")
            bundle = M.lloyd_sudbury(M.contact_params(lam), graph, strict=strict)
        elif kind == "biased-voter":
            _check_known(spec, {"s"})
            bundle = M.lloyd_sudbury(M.biased_voter_params(_param(spec, "s")), graph, strict=strict)
        elif kind == "braco":
            _check_known(spec, {"s"})
            bundle = M.lloyd_sudbury(M.braco_params(_param(spec, "s")), graph, strict=strict)
        elif kind == "sep":
            _check_known(spec, set())
            bundle = M.sep_generator(graph)
        elif kind == "sip":
            _check_known(spec, {"alpha"})
            if mf.cap is None:
                raise SchemaError("sip needs 'cap'")
            bundle = M.sip_generator(graph, _alpha(spec, mf.sites), mf.cap, total=mf.sector)
        elif kind == "wf-moment":
            _check_known(spec, {"s"})
            if mf.sites != 1:
                raise SchemaError("wf-moment lives on a single site")
            bundle = M.wf_moment_dual(_param(spec, "s"), mf.cap or 20, strict=strict)
        else:
            raise SchemaError(f"model kind {kind!r} has no finite generator")
    except M.ParameterError as exc:
        raise SchemaError(str(exc)) from None
    return bundle


def _precheck_size(mf: ModelFile, kind: str, budget: int) -> None:
    if kind == "sip":
        size = (mf.cap or 0) + 1
        size **= mf.sites
    elif kind == "wf-moment":
        size = (mf.cap or 20) + 1
    else:
        size = 2 ** mf.sites
    if size > budget and mf.sector is None:
        raise BudgetError(f"state space of size {size} exceeds budget {budget}")


def build_map(spec: MapSpec):
    def need(*names):
        for n in names:
            if getattr(spec, n) is None:
                raise SchemaError(f"map {spec.kind!r} needs {n!r}")

    if spec.kind == "identity":
        return M.identity_map
    if spec.kind == "copy":
        need("src", "dst")
        return M.copy_map(spec.src, spec.dst)
    if spec.kind == "coalesce":
        need("src", "dst")
        return M.coalesce_map(spec.src, spec.dst)
    need("site")
    return M.flip_map(spec.site)


def binary_space(mf: ModelFile, budget: int = DEFAULT_BUDGET) -> ConfigSpace:
    return ConfigSpace.binary(mf.sites, budget=budget)
