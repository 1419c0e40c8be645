"""Versioned JSON instance documents.

Objects are grouped into named collections and refer to each other by name.
Complex scalars are written as ``[re, im]``. Unknown fields are rejected.
Schema problems raise :class:`pydantic.ValidationError`; references that do
not resolve or objects that break their own invariants raise
:class:`DocumentError` naming the object.
"""

from __future__ import annotations

from dataclasses import dataclass, field
from typing import Literal, Optional

import numpy as np
from pydantic import BaseModel, ConfigDict, model_validator

from . import groupoid as gp
from .cvna import Algebra, CondExp, FibreSquare, Hom, State, fibre_product
from .hmod import Module, ModuleMap

FORMAT_VERSION = "1"

Complex = tuple[float, float]
Matrix = list[list[Complex]]


class DocumentError(ValueError):
    """A document object is inconsistent; ``name`` identifies it."""

    def __init__(self, kind: str, name: str, reason: str):
        super().__init__(f"{kind} '{name}': {reason}")
        self.kind = kind
        self.name = name


class _Strict(BaseModel):
    model_config = ConfigDict(extra="forbid")


class AlgebraDoc(_Strict):
    atoms: Optional[list[str]] = None
    size: Optional[int] = None

    @model_validator(mode="after")
    def _one_of(self):
        if (self.atoms is None) == (self.size is None):
            raise ValueError("give exactly one of 'atoms' and 'size'")
        return self


class HomDoc(_Strict):
    source: str
    target: str
    spec: list[int]


class StateDoc(_Strict):
    algebra: str
    weights: list[float]


class CondExpDoc(_Strict):
    hom: str
    weights: list[float]


class ModuleDoc(_Strict):
    algebra: str
    dims: list[int]


class ModuleMapDoc(_Strict):
    source: str
    target: str
    blocks: list[Matrix]


class SquareDoc(_Strict):
    f: str
    g: str


class ArrowDoc(_Strict):
    name: str
    source: str
    target: str


class GroupoidDoc(_Strict):
    generator: Optional[Literal["cyclic", "symmetric3", "klein", "pair", "trivial", "action"]] = None
    n: Optional[int] = None
    generators: Optional[list[list[int]]] = None
    objects: Optional[list[str]] = None
    arrows: Optional[list[ArrowDoc]] = None
    compose: Optional[list[tuple[str, str, str]]] = None
    object_weights: Optional[list[float]] = None
    arrow_weights: Optional[list[float]] = None

    @model_validator(mode="after")
    def _shape(self):
        explicit = self.objects is not None or self.arrows is not None or self.compose is not None
        if (self.generator is None) == (not explicit):
            raise ValueError("give either 'generator' or 'objects', 'arrows' and 'compose'")
        if explicit and (self.objects is None or self.arrows is None or self.compose is None):
            raise ValueError("explicit groupoids need 'objects', 'arrows' and 'compose'")
        return self


class RepresentationDoc(_Strict):
    groupoid: str
    dims: list[int]
    alpha: list[Matrix]


class InstanceDocument(_Strict):
    version: Literal["1"] = FORMAT_VERSION
    algebras: dict[str, AlgebraDoc] = {}
    homs: dict[str, HomDoc] = {}
    states: dict[str, StateDoc] = {}
    cond_exps: dict[str, CondExpDoc] = {}
    modules: dict[str, ModuleDoc] = {}
    module_maps: dict[str, ModuleMapDoc] = {}
    squares: dict[str, SquareDoc] = {}
    groupoids: dict[str, GroupoidDoc] = {}
    representations: dict[str, RepresentationDoc] = {}


@dataclass
class Instance:
    """Resolved document objects."""

    algebras: dict[str, Algebra] = field(default_factory=dict)
    homs: dict[str, Hom] = field(default_factory=dict)
    states: dict[str, State] = field(default_factory=dict)
    cond_exps: dict[str, CondExp] = field(default_factory=dict)
    modules: dict[str, Module] = field(default_factory=dict)
    module_maps: dict[str, ModuleMap] = field(default_factory=dict)
    squares: dict[str, FibreSquare] = field(default_factory=dict)
    groupoids: dict[str, gp.FiniteGroupoid] = field(default_factory=dict)
    representations: dict[str, gp.GRepresentation] = field(default_factory=dict)


def parse_document(text: str) -> InstanceDocument:
    return InstanceDocument.model_validate_json(text)


def serialize_document(doc: InstanceDocument) -> str:
    return doc.model_dump_json(indent=2, exclude_none=True)


def _matrix(m: Matrix) -> np.ndarray:
    if not m:
        return np.zeros((0, 0), dtype=np.complex128)
    width = len(m[0])
    if any(len(row) != width for row in m):
        raise ValueError("rows have different lengths")
    return np.array([[complex(re, im) for re, im in row] for row in m], dtype=np.complex128).reshape(len(m), width)


def _lookup(table: dict, kind: str, name: str, owner_kind: str, owner: str):
    if name not in table:
        raise DocumentError(owner_kind, owner, f"unknown {kind} '{name}'")
    return table[name]


def _groupoid(name: str, d: GroupoidDoc) -> gp.FiniteGroupoid:
    if d.generator is not None:
        n = d.n if d.n is not None else 1
        if n < 1:
            raise ValueError("'n' must be at least 1")
        if d.generator == "cyclic":
            g = gp.cyclic_group(n)
        elif d.generator == "symmetric3":
            g = gp.symmetric_group_3()
        elif d.generator == "klein":
            g = gp.klein_group()
        elif d.generator == "pair":
            g = gp.pair_groupoid(n)
        elif d.generator == "trivial":
            g = gp.trivial_groupoid(n)
        else:
            gens = d.generators or []
            if any(sorted(x) != list(range(n)) for x in gens):
                raise ValueError("action generators must be permutations of range(n)")
            g = gp.action_groupoid(gens, n, name)
    else:
        objs = list(d.objects)
        opos = {o: k for k, o in enumerate(objs)}
        names = [a.name for a in d.arrows]
        apos = {a: k for k, a in enumerate(names)}
        if len(opos) != len(objs) or len(apos) != len(names):
            raise ValueError("object and arrow names must be distinct")
        try:
            src = tuple(opos[a.source] for a in d.arrows)
            tgt = tuple(opos[a.target] for a in d.arrows)
            table = {(apos[a], apos[b]): apos[c] for a, b, c in d.compose}
        except KeyError as exc:
            raise ValueError(f"unknown name {exc.args[0]!r}") from None
        g = gp.FiniteGroupoid(tuple(objs), tuple(names), src, tgt, table, name=name)
    if d.object_weights is not None or d.arrow_weights is not None:
        ow = d.object_weights if d.object_weights is not None else g.object_weights
        aw = d.arrow_weights if d.arrow_weights is not None else g.arrow_weights
        g = g.with_weights(np.asarray(ow, dtype=float), np.asarray(aw, dtype=float))
    return g


def build(doc: InstanceDocument, tol: float = 1e-10) -> Instance:
    """Resolve references and re-validate every object."""
    out = Instance()

    def guard(kind, name, make):
        try:
            return make()
        except DocumentError:
            raise
        except ValueError as exc:
            raise DocumentError(kind, name, str(exc)) from None

    for name, d in doc.algebras.items():
        out.algebras[name] = guard(
            "algebra", name, lambda d=d: Algebra(tuple(d.atoms)) if d.atoms is not None else Algebra.of_size(d.size)
        )
    for name, d in doc.homs.items():
        s = _lookup(out.algebras, "algebra", d.source, "hom", name)
        t = _lookup(out.algebras, "algebra", d.target, "hom", name)
        out.homs[name] = guard("hom", name, lambda s=s, t=t, d=d: Hom(s, t, tuple(d.spec)))
    for name, d in doc.states.items():
        a = _lookup(out.algebras, "algebra", d.algebra, "state", name)
        out.states[name] = guard("state", name, lambda a=a, d=d: State(a, np.asarray(d.weights)))
    for name, d in doc.cond_exps.items():
        h = _lookup(out.homs, "hom", d.hom, "cond_exp", name)
        out.cond_exps[name] = guard("cond_exp", name, lambda h=h, d=d: CondExp(h, np.asarray(d.weights)))
    for name, d in doc.modules.items():
        a = _lookup(out.algebras, "algebra", d.algebra, "module", name)
        out.modules[name] = guard("module", name, lambda a=a, d=d: Module(a, tuple(d.dims)))
    for name, d in doc.module_maps.items():
        s = _lookup(out.modules, "module", d.source, "module_map", name)
        t = _lookup(out.modules, "module", d.target, "module_map", name)

        def make(s=s, t=t, d=d):
            blocks = []
            for k, b in enumerate(d.blocks):
                mat = _matrix(b)
                if mat.size == 0:
                    mat = np.zeros((t.dims[k], s.dims[k]) if k < len(t.dims) else (0, 0))
                blocks.append(mat)
            return ModuleMap(s, t, tuple(blocks))

        out.module_maps[name] = guard("module_map", name, make)
    for name, d in doc.squares.items():
        f = _lookup(out.homs, "hom", d.f, "square", name)
        g = _lookup(out.homs, "hom", d.g, "square", name)
        out.squares[name] = guard("square", name, lambda f=f, g=g: fibre_product(f, g))
    for name, d in doc.groupoids.items():
        out.groupoids[name] = guard("groupoid", name, lambda name=name, d=d: _groupoid(name, d))
    for name, d in doc.representations.items():
        g = _lookup(out.groupoids, "groupoid", d.groupoid, "representation", name)

        def make(g=g, d=d, name=name):
            if len(d.dims) != len(g.objects):
                raise ValueError("one fiber dimension per object is required")
            bundle = Module(gp.object_algebra(g), tuple(d.dims))
            rep = gp.GRepresentation(g, bundle, tuple(_matrix(m) for m in d.alpha), name)
            rep.validate(tol)
            return rep

        out.representations[name] = guard("representation", name, make)
    return out
