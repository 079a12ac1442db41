"""``tempofilt`` command line: filtrate, persistence, kernel, nullmodel,
generate, experiment/classify, stats."""

from __future__ import annotations

import argparse
import logging
import os
import sys
from dataclasses import replace
from pathlib import Path

from . import __version__
from ._io import atomic_write_text
from .classify import ExperimentError, load_experiment_spec, run_experiment
from .filtration import METHODS, filtrate, format_filtered_graph, read_filtered_graph
from .generate import MIXING, ContactModelSpec, RandomGraphSpec, random_temporal_graph, synthetic_contact_graph
from .kernels import KernelParams, filtration_gram, format_gram, prepare_diagrams, pss_gram
from .nullmodels import MODELS, NullModelSpec
from .persistence import ResourceCapError, diagram, format_diagram, read_diagram
from .tgraph import COLUMN_ORDERS, ContactFileError, format_contact_sequence, read_contact_sequence, stats

log = logging.getLogger("tempofilt")

EX_OK, EX_USAGE, EX_NOINPUT, EX_UNAVAILABLE, EX_SOFTWARE = 0, 64, 66, 69, 70


class UsageError(Exception):
    pass


class _Parser(argparse.ArgumentParser):
    def error(self, message):
        raise UsageError(message)


def _emit(text: str, out: str | None) -> None:
    if out is None or out == "-":
        sys.stdout.write(text)
    else:
        atomic_write_text(Path(out), text)


def _kernel_params(a) -> KernelParams:
    return KernelParams(
        sigma=a.sigma, gamma=a.gamma, wl_depth=a.wl_depth, n_levels=a.n_levels,
        degree_weights=tuple(a.degree_weights), essential_cap=a.essential_cap, threshold=a.threshold,
    )


# --------------------------------------------------------------------------
# subcommands

def cmd_filtrate(a) -> int:
    T = read_contact_sequence(a.input, a.columns)
    _emit(format_filtered_graph(filtrate(T, a.method)), a.output)
    return EX_OK


def cmd_persistence(a) -> int:
    G = read_filtered_graph(a.input)
    D = diagram(G, max_degree=a.max_degree, drop_zero_persistence=not a.keep_zero, cap=a.clique_cap)
    _emit(format_diagram(D), a.output)
    return EX_OK


def cmd_kernel(a) -> int:
    params = _kernel_params(a)
    ids = a.ids.split(",") if a.ids else [Path(p).name for p in a.inputs]
    if len(ids) != len(a.inputs):
        raise UsageError(f"--ids names {len(ids)} graphs but {len(a.inputs)} inputs were given")
    if a.kind == "pss":
        diagrams = [read_diagram(p) for p in a.inputs]
        K = pss_gram(prepare_diagrams(diagrams, params.essential_cap, params.threshold),
                     params.sigma, params.degree_weights, ids)
    else:
        graphs = [read_filtered_graph(p) for p in a.inputs]
        K = filtration_gram(graphs, params, a.direction, ids)
    _emit(format_gram(K), a.output)
    return EX_OK


def cmd_nullmodel(a) -> int:
    T = read_contact_sequence(a.input, a.columns)
    spec = NullModelSpec(a.model, a.fraction, a.epsilon, a.steps, a.seed, a.stream, a.passes)
    _emit(format_contact_sequence(spec.apply(T)), a.output)
    return EX_OK


def cmd_generate(a) -> int:
    if a.kind == "random":
        T = random_temporal_graph(RandomGraphSpec(a.n_vertices, a.sparsity, (a.t_min, a.t_max), a.seed, a.stream))
    else:
        T = synthetic_contact_graph(ContactModelSpec(
            a.n_vertices, a.n_temporal_edges, a.mixing, a.mixing_strength, a.seed, a.stream,
            n_static_edges=a.n_static_edges, t_max=a.t_max,
        ))
    _emit(format_contact_sequence(T), a.output)
    return EX_OK


def cmd_experiment(a) -> int:
    spec = load_experiment_spec(a.spec)
    if a.seed_given:
        spec = replace(spec, seed=a.seed)
    if a.freeze:
        spec = replace(spec, regenerate=False)
    spec = replace(spec, workers=a.threads)
    log.info("experiment spec: %s", spec)
    report = run_experiment(spec)
    if a.output:
        atomic_write_text(Path(a.output), report.to_csv())
        sys.stdout.write(report.table() + "\n")
    else:
        sys.stdout.write(report.table() + "\n\n" + report.to_csv())
    return EX_OK


def cmd_stats(a) -> int:
    T = read_contact_sequence(a.input, a.columns)
    rows = stats(T).as_rows()
    _emit("".join(f"{k}\t{v}\n" for k, v in rows), a.output)
    return EX_OK


# --------------------------------------------------------------------------

def build_parser() -> argparse.ArgumentParser:
    p = _Parser(prog="tempofilt", description="Temporal graph filtrations, persistence and kernels.")
    p.add_argument("--version", action="version", version=f"tempofilt {__version__}")
    p.add_argument("--seed", type=int, default=None, help="master seed (default 0)")
    p.add_argument("--threads", type=int, default=os.cpu_count() or 1,
                   help="worker processes; 1 gives the sequential reference path")
    p.add_argument("-v", "--verbose", action="count", default=0)
    sub = p.add_subparsers(dest="command", required=True, parser_class=_Parser)

    def io_args(sp, columns=True):
        sp.add_argument("input")
        sp.add_argument("-o", "--output", default=None, help="output path (default stdout)")
        if columns:
            sp.add_argument("--columns", choices=COLUMN_ORDERS, default="tuv")

    sp = sub.add_parser("filtrate", help="contact sequence -> filtered graph")
    io_args(sp)
    sp.add_argument("--method", choices=METHODS, default="avg")
    sp.set_defaults(func=cmd_filtrate)

    sp = sub.add_parser("persistence", help="filtered graph -> persistence diagram")
    io_args(sp, columns=False)
    sp.add_argument("--max-degree", type=int, default=2)
    sp.add_argument("--keep-zero", action="store_true", help="keep zero-persistence pairs")
    sp.add_argument("--clique-cap", type=int, default=50_000_000)
    sp.set_defaults(func=cmd_persistence)

    sp = sub.add_parser("kernel", help="Gram matrix from diagrams (pss) or filtered graphs (fwl)")
    sp.add_argument("kind", choices=("pss", "fwl"))
    sp.add_argument("inputs", nargs="+")
    sp.add_argument("-o", "--output", default=None)
    sp.add_argument("--ids", default=None, help="comma-separated graph ids (default: file names)")
    sp.add_argument("--sigma", type=float, default=1.0)
    sp.add_argument("--gamma", type=float, default=1.0)
    sp.add_argument("--wl-depth", type=int, default=3)
    sp.add_argument("--n-levels", type=int, default=10)
    sp.add_argument("--degree-weights", type=float, nargs=3, default=(1.0, 1.0, 1.0))
    sp.add_argument("--essential-cap", type=float, default=1.1)
    sp.add_argument("--threshold", type=float, default=0.0)
    sp.add_argument("--direction", choices=("sublevel", "superlevel"), default=None,
                    help="fwl only; default sublevel")
    sp.set_defaults(func=cmd_kernel)

    sp = sub.add_parser("nullmodel", help="apply a reference model to a contact sequence")
    io_args(sp)
    sp.add_argument("--model", choices=MODELS, required=True)
    sp.add_argument("--fraction", type=float, default=0.0)
    sp.add_argument("--epsilon", type=float, default=1.0)
    sp.add_argument("--steps", type=int, default=20)
    sp.add_argument("--passes", type=int, default=None, help="RE: full passes instead of steps")
    sp.add_argument("--stream", type=int, default=0)
    sp.set_defaults(func=cmd_nullmodel)

    sp = sub.add_parser("generate", help="synthetic temporal graphs")
    sp.add_argument("kind", choices=("random", "contact"))
    sp.add_argument("-o", "--output", default=None)
    sp.add_argument("--n-vertices", type=int, default=100)
    sp.add_argument("--sparsity", type=float, default=0.1)
    sp.add_argument("--n-temporal-edges", type=int, default=200)
    sp.add_argument("--n-static-edges", type=int, default=None)
    sp.add_argument("--mixing", choices=MIXING, default="assortative")
    sp.add_argument("--mixing-strength", type=float, default=0.0)
    sp.add_argument("--t-min", type=float, default=0.0)
    sp.add_argument("--t-max", type=float, default=None, help="default 100 (random) or 1000 (contact)")
    sp.add_argument("--stream", type=int, default=0)
    sp.set_defaults(func=cmd_generate)

    for name in ("experiment", "classify"):
        sp = sub.add_parser(name, help="run a classification experiment from a spec file")
        sp.add_argument("--spec", required=True)
        sp.add_argument("-o", "--output", default=None, help="report CSV path")
        sp.add_argument("--freeze", action="store_true", help="generate classes once for all runs")
        sp.set_defaults(func=cmd_experiment)

    sp = sub.add_parser("stats", help="summary counts of a contact sequence")
    io_args(sp)
    sp.set_defaults(func=cmd_stats)
    return p


def _finish_args(a) -> None:
    a.seed_given = a.seed is not None
    if a.seed is None:
        a.seed = 0
    if a.threads < 1:
        raise UsageError("--threads must be at least 1")
    if a.command == "kernel":
        if a.direction is None:
            a.direction = "sublevel"
        elif a.kind == "pss":
            raise UsageError("--direction applies to fwl only")
    if a.command == "generate" and a.t_max is None:
        a.t_max = 100.0 if a.kind == "random" else 1000.0


def main(argv=None) -> int:
    try:
        a = build_parser().parse_args(argv)
        _finish_args(a)
    except UsageError as exc:
        print(f"error: usage: {exc}", file=sys.stderr)
        return EX_USAGE
    logging.basicConfig(
        level=logging.WARNING - 10 * min(a.verbose, 2),
        format="%(levelname)s %(name)s: %(message)s",
        stream=sys.stderr,
    )
    log.info("config: %s", {k: v for k, v in vars(a).items() if k != "func"})
    try:
        return a.func(a)
    except Exception as exc:
        code, category = _classify_error(exc)
        print(f"error: {category}: {exc}", file=sys.stderr)
        return code


def _classify_error(exc: BaseException) -> tuple[int, str]:
    # experiment errors carry the stage; the category comes from the cause
    cause = exc.__cause__ if isinstance(exc, ExperimentError) and exc.__cause__ else exc
    if isinstance(cause, UsageError):
        return EX_USAGE, "usage"
    if isinstance(cause, ResourceCapError):
        return EX_UNAVAILABLE, "resource"
    if isinstance(cause, (OSError, ContactFileError)):
        return EX_NOINPUT, "io"
    if isinstance(cause, ValueError):
        # malformed input or infeasible parameters
        return EX_USAGE, "input"
    return EX_SOFTWARE, "internal"

if __name__ == "__main__":
    sys.exit(main())
