"""Pydantic models for the JSON file formats read and written by the CLI.

Rationals are written as ``[num, den]`` and read from ``[num, den]``, integers
or decimal/fraction strings. Each model converts to and from the engine's
frozen dataclasses with ``to_engine`` / ``from_engine``.
"""

from fractions import Fraction
from typing import Annotated, Any, Dict, List, Literal, Optional, Tuple

from pydantic import BaseModel, BeforeValidator, ConfigDict, Field, PlainSerializer, RootModel

from .bipyramid import Bipyramid3D, CyclicPolygonSolution
from .errors import InvalidInput
from .flapsflips import FlapInstance, FlapState, Hinge
from .foldcore import Crease, CreasePattern, Label
from .gadgetlib import Direction, GadgetBlueprint, GadgetKind, GridRouting, Port
from .geometry import Point, as_rat, rat_pair
from .ncl import Color, NclEdge, NclGraph


def _parse_rat(value: Any) -> Fraction:
    try:
        return as_rat(value)
    except InvalidInput as e:
        raise ValueError(str(e)) from e


Rational = Annotated[
    Fraction,
    BeforeValidator(_parse_rat),
    PlainSerializer(rat_pair, return_type=List[int]),
]
RatPoint = Tuple[Rational, Rational]
GridPointModel = Tuple[int, int]


class _Format(BaseModel):
    model_config = ConfigDict(extra="forbid", arbitrary_types_allowed=True)


def _point(p: RatPoint) -> Point:
    return Point(p[0], p[1])


class CreaseModel(_Format):
    """One crease segment, or a ray from ``a`` through ``b``."""

    a: RatPoint = Field(..., description="First endpoint (ray origin when ray is set)")
    b: RatPoint = Field(..., description="Second endpoint (a point on the ray)")
    label: Optional[Label] = Field(None, description="M, V or null for unlabeled")
    ray: bool = Field(default=False, description="Extend from a through b to infinity")


class CreasePatternModel(_Format):
    """A paper region and its creases; ``boundary: null`` is the unbounded sheet."""

    boundary: Optional[List[RatPoint]] = Field(..., description="Paper polygon, counterclockwise")
    creases: List[CreaseModel] = Field(default_factory=list, description="Crease segments")

    def to_engine(self) -> CreasePattern:
        boundary = None if self.boundary is None else tuple(_point(p) for p in self.boundary)
        return CreasePattern(
            boundary,
            tuple(Crease(_point(c.a), _point(c.b), c.label, c.ray) for c in self.creases),
        )

    @classmethod
    def from_engine(cls, cp: CreasePattern) -> "CreasePatternModel":
        return cls(
            boundary=None if cp.boundary is None else [(p.x, p.y) for p in cp.boundary],
            creases=[
                CreaseModel(a=(c.a.x, c.a.y), b=(c.b.x, c.b.y), label=c.label, ray=c.ray)
                for c in cp.creases
            ],
        )


class FoldResultModel(_Format):
    """Decision, count and witness of a layer-ordering run."""

    engine: Literal["dp", "oracle"] = Field(..., description="Engine that produced the result")
    foldable: bool = Field(..., description="Whether a valid layering exists")
    count: Optional[int] = Field(None, ge=0, description="Number of valid layerings")
    witness: Optional[Dict[int, List[int]]] = Field(
        None, description="Cell id to facet ids, top to bottom"
    )
    labels: Optional[List[Optional[Label]]] = Field(
        None, description="Crease fold directions read off the witness"
    )
    ply: Optional[int] = Field(None, ge=0, description="Maximum number of layers over a cell")
    width: Optional[int] = Field(None, description="Width of the tree decomposition used")


class CellGraphModel(_Format):
    """Cell adjacency graph of a folded arrangement."""

    cells: List[int] = Field(..., description="Cell ids")
    edges: List[Tuple[int, int]] = Field(..., description="Adjacent cell pairs")
    ply: Dict[int, int] = Field(..., description="Number of layers over each cell")
    decomposition: Optional[Dict[str, Any]] = Field(
        None, description="Nice tree decomposition dump"
    )


class HingeModel(_Format):
    a: RatPoint = Field(..., description="Hinge start")
    b: RatPoint = Field(..., description="Hinge end; side 0 lies to the left of a -> b")


class FlapInstanceModel(_Format):
    """Hinged squares of a common side length."""

    side: Rational = Field(..., description="Square side length")
    flaps: List[HingeModel] = Field(..., description="Flap hinges")

    def to_engine(self) -> FlapInstance:
        return FlapInstance(
            side=self.side,
            flaps=tuple(Hinge(_point(h.a), _point(h.b)) for h in self.flaps),
        )

    @classmethod
    def from_engine(cls, inst: FlapInstance) -> "FlapInstanceModel":
        return cls(
            side=inst.side,
            flaps=[HingeModel(a=(h.a.x, h.a.y), b=(h.b.x, h.b.y)) for h in inst.flaps],
        )


class FlapStateModel(_Format):
    """Side bits plus the order of every overlapping pair."""

    sides: List[Literal[0, 1]] = Field(..., description="Side bit per flap")
    orders: List[Tuple[int, int, Literal["above", "below"]]] = Field(
        default_factory=list, description="(i, j, whether i is above or below j)"
    )

    def to_engine(self) -> FlapState:
        orders = []
        for i, j, rel in self.orders:
            above = rel == "above"
            orders.append((i, j, above) if i < j else (j, i, not above))
        return FlapState(tuple(self.sides), tuple(sorted(orders)))

    @classmethod
    def from_engine(cls, st: FlapState) -> "FlapStateModel":
        return cls(
            sides=list(st.sides),
            orders=[(i, j, "above" if bit else "below") for i, j, bit in st.orders],
        )


class NclEdgeModel(_Format):
    u: int = Field(..., description="Start vertex; orientation bit 0 points u -> v")
    v: int = Field(..., description="End vertex")
    color: Color = Field(..., description="red (weight 1) or blue (weight 2)")


class NclGraphModel(_Format):
    """Constraint graph; terminals are loose edge ends with no weight constraint."""

    vertices: List[int] = Field(..., description="Vertex ids")
    edges: List[NclEdgeModel] = Field(..., description="Colored edges")
    terminals: List[int] = Field(default_factory=list, description="Unconstrained vertices")

    def to_engine(self) -> NclGraph:
        return NclGraph(
            vertices=tuple(self.vertices),
            edges=tuple(NclEdge(e.u, e.v, e.color) for e in self.edges),
            terminals=frozenset(self.terminals),
        )

    @classmethod
    def from_engine(cls, g: NclGraph) -> "NclGraphModel":
        return cls(
            vertices=list(g.vertices),
            edges=[NclEdgeModel(u=e.u, v=e.v, color=e.color) for e in g.edges],
            terminals=sorted(g.terminals),
        )


class OrientationModel(RootModel[List[Literal[0, 1]]]):
    """One bit per NCL edge."""

    def to_engine(self) -> Tuple[int, ...]:
        return tuple(self.root)


class BiadjacencyModel(RootModel[List[List[int]]]):
    """Square matrix of edge multiplicities between left and right vertices."""


class PortModel(_Format):
    name: str = Field(..., description="Port name")
    direction: Direction = Field(..., description="Grid direction the edge leaves in")
    chain: List[int] = Field(..., description="Flap indices from the core outward")


class GadgetBlueprintModel(_Format):
    """Integer flap hinges of one gadget piece and the ports its edges attach to."""

    kind: GadgetKind = Field(..., description="Gadget kind")
    k: Optional[int] = Field(None, ge=1, description="Flap count of an edge gadget")
    side: int = Field(default=5, description="Square side length")
    flaps: List[Tuple[GridPointModel, GridPointModel]] = Field(..., description="Hinges")
    ports: List[PortModel] = Field(..., description="Edge attachment points")

    def to_engine(self) -> GadgetBlueprint:
        return GadgetBlueprint(
            kind=self.kind,
            hinges=tuple((tuple(a), tuple(b)) for a, b in self.flaps),
            ports=tuple(Port(p.name, p.direction, tuple(p.chain)) for p in self.ports),
            k=self.k,
        )

    @classmethod
    def from_engine(cls, bp: GadgetBlueprint) -> "GadgetBlueprintModel":
        return cls.model_validate(bp.to_dict())


class GridRoutingModel(_Format):
    """Caller-drawn grid embedding of an NCL graph."""

    points: Dict[int, GridPointModel] = Field(..., description="Grid point of every vertex")
    paths: List[List[GridPointModel]] = Field(..., description="Grid path per edge, u to v")
    crossovers: List[GridPointModel] = Field(
        default_factory=list, description="Grid points where two paths cross"
    )

    def to_engine(self) -> GridRouting:
        return GridRouting(
            points=dict(self.points),
            paths=tuple(tuple(p) for p in self.paths),
            crossovers=frozenset(self.crossovers),
        )


class BipyramidResultModel(_Format):
    """Circumradius solution, and the realized bipyramid when a pole edge was given."""

    sides: List[float] = Field(..., description="Equator side lengths")
    r: float = Field(..., description="Circumradius")
    angles: List[float] = Field(..., description="Central angle of every side")
    residual: float = Field(..., description="Angle sum minus 2*pi at r")
    iterations: int = Field(..., description="Bisection iterations")
    pole_edge: Optional[float] = Field(None, description="Pole-to-equator edge length")
    s: Optional[float] = Field(None, description="Pole height above the equator plane")
    equator: Optional[List[List[float]]] = Field(None, description="Equator vertices")
    poles: Optional[List[List[float]]] = Field(None, description="Top and bottom poles")
    max_edge_error: Optional[float] = Field(None, description="Largest edge length error")

    @classmethod
    def from_engine(
        cls, sides: List[float], sol: CyclicPolygonSolution, bp: Optional[Bipyramid3D] = None
    ) -> "BipyramidResultModel":
        data: Dict[str, Any] = {"sides": sides, **sol.to_dict()}
        if bp is not None:
            data.update(bp.to_dict())
        return cls.model_validate(data)


class ErrorModel(_Format):
    error: str = Field(..., description="Exception class name")
    message: str = Field(..., description="Human-readable reason")
