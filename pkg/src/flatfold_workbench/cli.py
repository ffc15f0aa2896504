"""Command line: ``flatfold <group> <command> [input] [options]``.

Every command writes JSON to stdout (``svg`` commands write SVG) and exits
0 when it computed an answer, 1 for a negative decision, 2 for bad input and
3 when a budget ran out.
"""

import argparse
import json
import sys
from pathlib import Path
from typing import Any, Callable, Dict, List, Optional, Sequence, Type, TypeVar

import structlog
from opentelemetry import trace
from opentelemetry.sdk.trace import TracerProvider
from opentelemetry.sdk.trace.export import ConsoleSpanExporter, SimpleSpanProcessor
from prometheus_client import generate_latest
from pydantic import BaseModel, ValidationError

from . import __version__, bipyramid, flapsflips, gadgetlib, generators, ncl
from .config import get_settings
from .errors import InvalidInput, WorkbenchError
from .foldcore import CreasePattern, Label, fold
from .geometry import as_rat
from .layerdp import Mode, mv_assignment, run_dp
from .logging_config import configure_logging
from .models import (
    BiadjacencyModel,
    BipyramidResultModel,
    CellGraphModel,
    CreasePatternModel,
    ErrorModel,
    FlapInstanceModel,
    FlapStateModel,
    FoldResultModel,
    GadgetBlueprintModel,
    GridRoutingModel,
    NclGraphModel,
    OrientationModel,
)
from .oracle import oracle_summary
from .svg import arrangement_svg, compiled_svg, flaps_svg
from .treedecomp import decompose, make_nice

logger = structlog.get_logger(__name__)

M = TypeVar("M", bound=BaseModel)

_tracing: Dict[str, Any] = {}


class Result:
    """What a command prints and the exit code it returns."""

    def __init__(self, payload: Any, code: int = 0):
        self.payload = payload
        self.code = code


def _setup_tracing(console: bool) -> None:
    if "provider" not in _tracing:
        provider = TracerProvider()
        trace.set_tracer_provider(provider)
        _tracing["provider"] = provider
    if console and "console" not in _tracing:
        exporter = ConsoleSpanExporter(out=sys.stderr)
        _tracing["provider"].add_span_processor(SimpleSpanProcessor(exporter))
        _tracing["console"] = exporter


def _read_text(path: str) -> str:
    if path == "-":
        return sys.stdin.read()
    try:
        return Path(path).read_text(encoding="utf-8")
    except OSError as e:
        msg = f"Cannot read {path}: {e.strerror}"
        raise InvalidInput(msg) from e


def _load(model: Type[M], path: str) -> M:
    return model.model_validate_json(_read_text(path))


def _jsonable(payload: Any) -> Any:
    if isinstance(payload, BaseModel):
        return payload.model_dump(mode="json", exclude_none=True)
    if isinstance(payload, (list, tuple)):
        return [_jsonable(p) for p in payload]
    if isinstance(payload, dict):
        return {k: _jsonable(v) for k, v in payload.items()}
    return payload


def _emit(payload: Any) -> None:
    if isinstance(payload, str):
        sys.stdout.write(payload)
    else:
        sys.stdout.write(json.dumps(_jsonable(payload)) + "\n")


# Generators --------------------------------------------------------------


def _labels(spec: Optional[str]) -> Optional[List[Optional[Label]]]:
    """``"MV-V"`` style label strings; ``-`` leaves a crease unlabeled."""
    if spec is None:
        return None
    out: List[Optional[Label]] = []
    for ch in spec.upper():
        if ch not in "MV-":
            msg = f"Label string may only contain M, V and -, got {spec!r}"
            raise InvalidInput(msg)
        out.append(None if ch == "-" else Label(ch))
    return out


def _dims(text: str) -> List[int]:
    try:
        rows, cols = (int(v) for v in text.lower().split("x"))
    except ValueError as e:
        msg = f"Map size must look like RxC, got {text!r}"
        raise InvalidInput(msg) from e
    return [rows, cols]


def _direction(text: str) -> tuple:
    parts = text.split(",")
    if len(parts) != 2:
        msg = f"Direction must look like dx,dy, got {text!r}"
        raise InvalidInput(msg)
    return as_rat(parts[0]), as_rat(parts[1])


def _integer(text: str, what: str) -> int:
    try:
        return int(text)
    except ValueError as e:
        msg = f"{what} must be an integer, got {text!r}"
        raise InvalidInput(msg) from e


def generate_pattern(
    words: Sequence[str], labels: Optional[str] = None, seed: Optional[int] = None
) -> CreasePattern:
    """Build a crease pattern from generator words such as ``["map", "2x3"]``."""
    if not words:
        msg = "Generator name missing"
        raise InvalidInput(msg)
    kind, args = words[0], list(words[1:])
    if kind == "strip" and len(args) == 1:
        cp = generators.strip(_integer(args[0], "Strip length"), _labels(labels))
    elif kind == "map" and len(args) == 1:
        rows, cols = _dims(args[0])
        cp = generators.grid_map(rows, cols, _labels(labels))
    elif kind == "fan" and args:
        cp = generators.fan([_direction(a) for a in args], _labels(labels))
    elif kind == "random-fan" and len(args) == 1:
        cp = generators.random_fan(_integer(args[0], "Fan degree"), seed or 0)
    elif kind == "chords" and len(args) == 1:
        cp = generators.random_chords(_integer(args[0], "Chord count"), seed or 0)
    else:
        msg = f"Unknown generator {' '.join(words)!r}"
        raise InvalidInput(msg)
    if seed is not None and labels is None and kind in ("strip", "map", "chords"):
        cp = generators.random_labeling(cp, seed)
    return cp


def _bipartite(name: str) -> List[List[int]]:
    table: Dict[str, Callable[[], List[List[int]]]] = {
        "triple": generators.triple_edge,
        "k33": generators.k33,
        "cube": generators.cube,
    }
    if name not in table:
        msg = f"Unknown bipartite graph {name!r}; choose from {sorted(table)}"
        raise InvalidInput(msg)
    return table[name]()


# fold ------------------------------------------------------------------


def _pattern(args: argparse.Namespace) -> CreasePattern:
    if args.gen:
        return generate_pattern(args.gen, args.labels, args.seed)
    if not args.input:
        msg = "Give an input file or --gen"
        raise InvalidInput(msg)
    return _load(CreasePatternModel, args.input).to_engine()


def _fold_result(args: argparse.Namespace, mode: Mode) -> FoldResultModel:
    cp = _pattern(args)
    if args.ignore_labels:
        cp = cp.unlabeled()
    fa = fold(cp)
    labeled = not args.ignore_labels
    if args.oracle:
        foldable, count, first = oracle_summary(fa, labeled, args.budget)
        witness = first if mode == Mode.WITNESS else None
        return FoldResultModel(
            engine="oracle",
            foldable=foldable,
            count=None if mode == Mode.DECIDE else count,
            witness={c: list(v) for c, v in witness.items()} if witness else None,
            labels=mv_assignment(fa, witness) if witness else None,
            ply=fa.ply,
        )
    result = run_dp(fa, mode=mode, labeled=labeled, threads=args.threads, max_ply=args.max_ply)
    witness = result.witness
    return FoldResultModel(
        engine="dp",
        foldable=result.foldable,
        count=result.count,
        witness={c: list(v) for c, v in witness.items()} if witness else None,
        labels=mv_assignment(fa, witness) if witness else None,
        ply=result.ply,
        width=result.width,
    )


def cmd_fold(args: argparse.Namespace) -> Result:
    if args.command == "check":
        res = _fold_result(args, Mode.DECIDE)
        return Result(res, 0 if res.foldable else 1)
    if args.command == "count":
        return Result(_fold_result(args, Mode.COUNT))
    if args.command == "witness":
        res = _fold_result(args, Mode.WITNESS)
        return Result(res, 0 if res.foldable else 1)

    fa = fold(_pattern(args))
    if args.command == "ply":
        return Result({"ply": fa.ply, "cells": len(fa.cells)})
    if args.command == "graph":
        graph = fa.graph
        dump = make_nice(decompose(graph)).to_dict() if args.decomposition else None
        return Result(
            CellGraphModel(
                cells=sorted(graph.nodes),
                edges=sorted((min(a, b), max(a, b)) for a, b in graph.edges),
                ply={c: len(fa.preimages[c]) for c in fa.cells},
                decomposition=dump,
            )
        )
    return Result(arrangement_svg(fa))


# flaps -----------------------------------------------------------------


def _flap_instance(args: argparse.Namespace) -> flapsflips.FlapInstance:
    if args.gen:
        words = args.gen
        k = _integer(words[1], "Edge length") if len(words) > 1 else None
        return gadgetlib.make_gadget(words[0], k).instance()
    if not args.input:
        msg = "Give an input file or --gen"
        raise InvalidInput(msg)
    return _load(FlapInstanceModel, args.input).to_engine()


def _state(path: str) -> flapsflips.FlapState:
    return _load(FlapStateModel, path).to_engine()


def _require(value: Optional[str], flag: str) -> str:
    if value is None:
        msg = f"{flag} is required for this command"
        raise InvalidInput(msg)
    return value


def cmd_flaps(args: argparse.Namespace) -> Result:
    inst = flapsflips.validate_instance(_flap_instance(args))
    if args.command == "enumerate":
        states = flapsflips.enumerate_states(inst, args.budget)
        return Result([FlapStateModel.from_engine(st) for st in states])
    if args.command == "count":
        return Result({"count": flapsflips.count_states(inst, args.budget)})
    if args.command == "moves":
        st = _state(_require(args.state, "--state"))
        if not flapsflips.validate_state(inst, st):
            msg = "State is not a valid flat state of the instance"
            raise InvalidInput(msg)
        return Result([FlapStateModel.from_engine(nb) for nb in flapsflips.moves(inst, st)])
    if args.command == "reach":
        s = _state(_require(args.source, "--from"))
        t = _state(_require(args.target, "--to"))
        path = flapsflips.shortest_path(inst, s, t)
        payload = {
            "reachable": path is not None,
            "path": [FlapStateModel.from_engine(st) for st in path] if path else None,
        }
        return Result(payload, 0 if path is not None else 1)
    if args.command == "connected":
        comps = flapsflips.components(inst)
        return Result(
            {"connected": len(comps) <= 1, "components": len(comps)}, 0 if len(comps) <= 1 else 1
        )
    st = _state(args.state) if args.state else None
    return Result(flaps_svg(inst, st))


# ncl -------------------------------------------------------------------


def _graph(path: Optional[str]) -> ncl.NclGraph:
    return _load(NclGraphModel, _require(path, "input file")).to_engine()


def _orientation(path: str) -> ncl.Orientation:
    return _load(OrientationModel, path).to_engine()


def cmd_ncl(args: argparse.Namespace) -> Result:
    if args.command == "reduce":
        if args.gen:
            matrix = _bipartite(args.gen[0])
        else:
            matrix = _load(BiadjacencyModel, _require(args.input, "input file")).root
        g = ncl.matchings_to_ncl(matrix)
        return Result(
            {
                "graph": NclGraphModel.from_engine(g),
                "permanent": ncl.count_matchings(matrix),
                "left": len(matrix),
            }
        )

    g = ncl.validate_graph(_graph(args.input))
    if args.command == "validate":
        if args.orientation:
            valid = ncl.validate(g, _orientation(args.orientation))
            return Result({"valid": valid}, 0 if valid else 1)
        return Result({"valid": True, "vertices": len(g.vertices), "edges": len(g.edges)})
    if args.command == "count":
        return Result({"count": ncl.count_orientations(g)})
    if args.command == "reach":
        s = _orientation(_require(args.source, "--from"))
        t = _orientation(_require(args.target, "--to"))
        path = ncl.shortest_path(g, s, t)
        payload = {"reachable": path is not None, "path": [list(o) for o in path] if path else None}
        return Result(payload, 0 if path is not None else 1)
    comps = ncl.components(g)
    return Result(
        {"connected": len(comps) <= 1, "components": len(comps)}, 0 if len(comps) <= 1 else 1
    )


# gadget ----------------------------------------------------------------


def _compiled_payload(compiled: gadgetlib.CompiledInstance) -> Dict[str, Any]:
    data = compiled.to_dict()
    return {
        "instance": FlapInstanceModel.from_engine(compiled.instance),
        "edges": data["edges"],
        "pieces": data["pieces"],
    }


def cmd_gadget(args: argparse.Namespace) -> Result:
    if args.command == "make":
        bp = gadgetlib.make_gadget(_require(args.kind, "--kind"), args.k)
        return Result(GadgetBlueprintModel.from_engine(bp))
    if args.command == "compile":
        g = _graph(args.input)
        routing = _load(GridRoutingModel, _require(args.routing, "--routing")).to_engine()
        if args.k is None:
            msg = "--k is required for this command"
            raise InvalidInput(msg)
        compiled = gadgetlib.compile_ncl(g, routing, args.k)
        if args.svg:
            return Result(compiled_svg(compiled))
        if args.verify:
            report = gadgetlib.verify_compiled(compiled)
            payload = {**_compiled_payload(compiled), "report": report.to_dict()}
            return Result(payload, 0 if report.ok else 1)
        return Result(_compiled_payload(compiled))

    if args.input:
        bp = _load(GadgetBlueprintModel, args.input).to_engine()
    else:
        bp = gadgetlib.make_gadget(_require(args.kind, "--kind"), args.k)
    report = gadgetlib.verify_gadget(bp)
    return Result(report.to_dict(), 0 if report.ok else 1)


# bipyramid -------------------------------------------------------------


def _floats(values: Sequence[str]) -> List[float]:
    return [float(as_rat(v)) for v in values]


def cmd_bipyramid(args: argparse.Namespace) -> Result:
    sides = _floats(args.sides)
    solution = bipyramid.circumradius(sides, args.tol)
    if args.command == "radius":
        return Result(BipyramidResultModel.from_engine(sides, solution))
    ell = _floats([_require(args.ell, "--ell")])[0]
    body = bipyramid.realize(sides, ell, args.tol)
    return Result(BipyramidResultModel.from_engine(sides, solution, body))


# gen -------------------------------------------------------------------


def cmd_gen(args: argparse.Namespace) -> Result:
    if args.command == "bipartite":
        return Result(_bipartite(args.args[0] if args.args else ""))
    cp = generate_pattern([args.command, *args.args], args.labels, args.seed)
    return Result(CreasePatternModel.from_engine(cp))


# parser ----------------------------------------------------------------


def _common() -> argparse.ArgumentParser:
    common = argparse.ArgumentParser(add_help=False)
    common.add_argument("--log-level", default=None, help="Log level (default from settings)")
    common.add_argument("--trace", action="store_true", help="Print spans to stderr")
    common.add_argument("--metrics", action="store_true", help="Print metrics to stderr")
    common.add_argument("--threads", type=int, default=None, help="DP worker threads")
    common.add_argument("--max-ply", type=int, default=None, help="Refuse deeper arrangements")
    common.add_argument("--budget", type=int, default=None, help="Enumeration state budget")
    common.add_argument("--seed", type=int, default=None, help="Seed for random generators")
    return common


def build_parser() -> argparse.ArgumentParser:
    common = _common()
    parser = argparse.ArgumentParser(prog="flatfold", description="Flat-foldability workbench")
    parser.add_argument("--version", action="version", version=f"%(prog)s {__version__}")
    groups = parser.add_subparsers(dest="group", required=True)

    def group(
        name: str, handler: Callable[[argparse.Namespace], Result], commands: List[str]
    ) -> Dict[str, argparse.ArgumentParser]:
        sub = groups.add_parser(name, help=f"{name} commands")
        sub.set_defaults(handler=handler)
        cmds = sub.add_subparsers(dest="command", required=True)
        return {c: cmds.add_parser(c, parents=[common]) for c in commands}

    fold_cmds = group("fold", cmd_fold, ["check", "count", "witness", "ply", "graph", "svg"])
    for p in fold_cmds.values():
        p.add_argument("input", nargs="?", help="CreasePattern JSON file or -")
        p.add_argument("--gen", nargs="+", help="Generator, e.g. 'strip 3' or 'map 2x2'")
        p.add_argument("--labels", help="Labels for generated creases, e.g. MVM")
        p.add_argument("--oracle", action="store_true", help="Use brute-force enumeration")
        p.add_argument("--ignore-labels", action="store_true", help="Drop M/V labels")
    fold_cmds["graph"].add_argument(
        "--decomposition", action="store_true", help="Include a nice tree decomposition"
    )

    flap_cmds = group(
        "flaps", cmd_flaps, ["enumerate", "count", "moves", "reach", "connected", "svg"]
    )
    for p in flap_cmds.values():
        p.add_argument("input", nargs="?", help="FlapInstance JSON file or -")
        p.add_argument("--gen", nargs="+", help="Gadget piece, e.g. 'edge 3' or 'and'")
        p.add_argument("--state", help="FlapState JSON file")
        p.add_argument("--from", dest="source", help="Start FlapState JSON file")
        p.add_argument("--to", dest="target", help="Target FlapState JSON file")

    ncl_cmds = group("ncl", cmd_ncl, ["validate", "count", "reach", "connected", "reduce"])
    for p in ncl_cmds.values():
        p.add_argument("input", nargs="?", help="NclGraph (or Biadjacency for reduce) JSON file")
        p.add_argument("--orientation", help="Orientation JSON file")
        p.add_argument("--from", dest="source", help="Start Orientation JSON file")
        p.add_argument("--to", dest="target", help="Target Orientation JSON file")
        p.add_argument("--gen", nargs=1, help="Bipartite graph: triple, k33 or cube")

    gadget_cmds = group("gadget", cmd_gadget, ["make", "compile", "verify"])
    for p in gadget_cmds.values():
        p.add_argument("input", nargs="?", help="NclGraph or GadgetBlueprint JSON file")
        p.add_argument("--kind", help="edge, and, or, crossover or turn")
        p.add_argument("--k", type=int, default=None, help="Edge flaps (red edges when compiling)")
        p.add_argument("--routing", help="GridRouting JSON file")
        p.add_argument("--svg", action="store_true", help="Render the compiled layout")
        p.add_argument("--verify", action="store_true", help="Check states against orientations")

    bip_cmds = group("bipyramid", cmd_bipyramid, ["radius", "realize"])
    for p in bip_cmds.values():
        p.add_argument("sides", nargs="+", help="Equator side lengths")
        p.add_argument("--ell", help="Pole edge length")
        p.add_argument("--tol", type=float, default=None, help="Bisection tolerance")

    gen_cmds = group("gen", cmd_gen, ["map", "strip", "fan", "random-fan", "chords", "bipartite"])
    for p in gen_cmds.values():
        p.add_argument("args", nargs="*", help="Generator arguments")
        p.add_argument("--labels", help="Labels for the creases, e.g. MVM")
    return parser


def run(argv: Optional[Sequence[str]] = None) -> int:
    """Run one command and return its exit code."""
    parser = build_parser()
    try:
        args = parser.parse_args(argv)
    except SystemExit as e:
        return int(e.code or 0)

    settings = get_settings()
    configure_logging(args.log_level or settings.LOG_LEVEL, settings.LOG_JSON)
    _setup_tracing(args.trace)

    try:
        result = args.handler(args)
    except WorkbenchError as e:
        logger.warning("Command failed", command=f"{args.group} {args.command}", error=str(e))
        _emit(ErrorModel(error=type(e).__name__, message=str(e)))
        code = e.exit_code
    except ValidationError as e:
        logger.warning("Input failed validation", errors=e.error_count())
        _emit(ErrorModel(error="InvalidInput", message=str(e)))
        code = 2
    else:
        _emit(result.payload)
        code = result.code

    if args.metrics:
        sys.stderr.write(generate_latest().decode("utf-8"))
    return code


def main() -> None:
    sys.exit(run(sys.argv[1:]))
