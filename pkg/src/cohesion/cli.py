"""``cohesion`` command line interface.

Exit status: 0 on success, 1 when ``verify`` finds a failing check, 2 on
usage errors or malformed input.
"""

from __future__ import annotations

import argparse
import logging
import sys

import numpy as np

from . import io as cio
from .core import cohesion_matrix, community_graph
from .generators import KINDS, GeneratorSpec, generate_detailed
from .spaces import DissimilaritySpace, TiePolicy, ValidationError, induced_triplet
from .structure import (
    CapabilityError,
    enumerate_point_like,
    make_partition,
    point_like_partitions,
    quotient,
)
from .verify import check_ordering_example, run_checks

log = logging.getLogger("cohesion")


class UsageError(Exception):
    pass


def _add_input(p, required=True):
    src = p.add_mutually_exclusive_group(required=required)
    src.add_argument("--matrix", metavar="FILE", help="dissimilarity matrix CSV")
    src.add_argument("--coords", metavar="FILE", help="coordinate CSV (optional 'label' column)")
    src.add_argument("--triplets", metavar="FILE", help="triplet responses 'i j k' or weights 'i j k w'")
    p.add_argument("--mass", metavar="FILE", help="'label p' lines (default: uniform)")
    p.add_argument("--metric", choices=("euclidean", "manhattan"), help="metric for --coords (default euclidean)")
    p.add_argument("--tie-policy", choices=("strict", "uniform"), help="equal-distance handling (default uniform)")
    p.add_argument("--epsilon", type=float, help="distances within epsilon count as tied (default 0)")
    p.add_argument("--threads", type=int, default=1, help="rows of the cohesion kernel computed in parallel")
    p.add_argument("-o", "--output", metavar="FILE", help="write here instead of stdout")


def _parse_value(text):
    parts = text.split(",")
    vals = []
    for s in parts:
        try:
            vals.append(int(s))
        except ValueError:
            try:
                vals.append(float(s))
            except ValueError:
                vals.append(s)
    return vals if len(parts) > 1 else vals[0]


def _synth_spec(args):
    params = {}
    for item in args.param or []:
        if "=" not in item:
            raise UsageError(f"--param expects key=value, got {item!r}")
        k, v = item.split("=", 1)
        params[k.strip()] = _parse_value(v.strip())
    return GeneratorSpec(args.synth, params, args.seed)


def build_parser():
    parser = argparse.ArgumentParser(prog="cohesion", description="Cohesion analysis of dissimilarity and triplet comparison data.")
    parser.add_argument("-v", "--verbose", action="store_true")
    sub = parser.add_subparsers(dest="command", required=True)

    p = sub.add_parser("compute", help="cohesion matrix")
    _add_input(p)
    p.add_argument("--format", choices=("csv", "json"), default="csv")

    p = sub.add_parser("pointlike", help="point-like family and partitions")
    _add_input(p)
    p.add_argument("--cap", type=int, default=16, help="exhaustive enumeration cap for weighted spaces")
    p.add_argument("--max-partitions", type=int, default=1000)

    p = sub.add_parser("quotient", help="quotient space over a point-like partition")
    _add_input(p)
    p.add_argument("--partition", metavar="FILE", required=True, help="'label block_id' lines")

    p = sub.add_parser("communities", help="thresholded cohesion graph")
    _add_input(p)
    p.add_argument("--threshold", type=float, help="strong-tie threshold (default: half the mean self-cohesion)")
    p.add_argument("--format", choices=("dot", "csv"), default="dot")

    p = sub.add_parser("verify", help="run every applicable property check")
    _add_input(p, required=False)
    p.add_argument("--synth", choices=KINDS, help="verify a generated configuration")
    p.add_argument("--param", action="append", metavar="KEY=VALUE", help="generator parameter")
    p.add_argument("--seed", type=int, default=0)
    p.add_argument("--partition", metavar="FILE")

    p = sub.add_parser("synth", help="write a generated configuration as coordinates")
    p.add_argument("synth", choices=KINDS)
    p.add_argument("--param", action="append", metavar="KEY=VALUE")
    p.add_argument("--seed", type=int, default=0)
    p.add_argument("-o", "--output", metavar="FILE")
    p.add_argument("--mass-output", metavar="FILE", help="write masses as 'label p' lines")
    return parser


def _check_flags(args):
    if getattr(args, "triplets", None):
        for flag in ("metric", "tie_policy", "epsilon"):
            if getattr(args, flag, None) is not None:
                raise UsageError(f"--{flag.replace('_', '-')} has no effect with --triplets")
    if getattr(args, "matrix", None) and args.metric is not None:
        raise UsageError("--metric applies to --coords only")
    if getattr(args, "epsilon", None) is not None and args.epsilon < 0:
        raise UsageError("--epsilon must be non-negative")
    if getattr(args, "tie_policy", None) == "strict" and (args.epsilon or 0) > 0:
        log.info("strict tie policy with epsilon %g: near-equal distances are rejected", args.epsilon)
    if args.command == "verify":
        given = args.matrix or args.coords or args.triplets
        if bool(given) == bool(args.synth):
            raise UsageError("verify needs exactly one of --matrix/--coords/--triplets/--synth")
        if args.param and not args.synth:
            raise UsageError("--param requires --synth")
    if getattr(args, "threads", 1) is not None and args.command != "synth" and args.threads < 1:
        raise UsageError("--threads must be at least 1")


def _policy(args):
    return TiePolicy(args.tie_policy or "uniform", args.epsilon or 0.0)


def load_input(args):
    """Triplet space plus (when distance-based) the dissimilarity space."""
    if args.triplets:
        labels, _, _ = cio.read_triplet_records(args.triplets)
        p = cio.read_mass_file(args.mass, labels) if args.mass else None
        return cio.read_triplet_file(args.triplets, labels, p), None
    if args.matrix:
        labels, d = cio.read_matrix_csv(args.matrix)
        p = cio.read_mass_file(args.mass, labels) if args.mass else None
        dis = DissimilaritySpace(d, p, labels)
    else:
        labels, x = cio.read_coords_csv(args.coords)
        p = cio.read_mass_file(args.mass, labels) if args.mass else None
        dis = DissimilaritySpace.from_coords(x, p, labels, args.metric or "euclidean")
    return induced_triplet(dis, _policy(args)), dis


def _emit(args, text):
    if args.output:
        with open(args.output, "w") as fh:
            fh.write(text)
    else:
        sys.stdout.write(text)


def cmd_compute(args):
    t, _ = load_input(args)
    c = cohesion_matrix(t, args.threads)
    _emit(args, cio.cohesion_json(c) + "\n" if args.format == "json" else cio.matrix_csv(c.labels, c.values))
    return 0


def cmd_pointlike(args):
    t, _ = load_input(args)
    fam = enumerate_point_like(t, brute_force_cap=args.cap)
    parts = point_like_partitions(fam, limit=args.max_partitions)
    _emit(args, cio.family_json(fam, parts) + "\n")
    return 0


def cmd_quotient(args):
    t, _ = load_input(args)
    blocks = cio.read_partition_file(args.partition, t.labels)
    q = quotient(t, make_partition(t, blocks))
    _emit(args, cio.quotient_json(q, cohesion_matrix(q.space), t.labels) + "\n")
    return 0


def cmd_communities(args):
    t, _ = load_input(args)
    g = community_graph(cohesion_matrix(t, args.threads), args.threshold)
    _emit(args, cio.graph_dot(g) if args.format == "dot" else cio.edges_csv(g))
    return 0


def cmd_verify(args):
    outliers = partition = None
    extra = []
    if args.synth:
        syn = generate_detailed(_synth_spec(args))
        space = syn.space
        policy = TiePolicy()
        if syn.outliers:
            outliers = syn.outliers
        if len(syn.blocks) > 1:
            partition = make_partition(space, syn.blocks)
        if args.synth == "ordering_example":
            extra.append(check_ordering_example())
        target = space
    else:
        t, dis = load_input(args)
        policy = _policy(args)
        target = dis if dis is not None else t
        if args.partition:
            partition = make_partition(t, cio.read_partition_file(args.partition, t.labels))
    results = run_checks(target, policy=policy, outliers=outliers, partition=partition,
                         threads=args.threads) + extra
    _emit(args, cio.checks_json(results) + "\n")
    failed = [r.name for r in results if not r.passed]
    if failed:
        log.error("failed checks: %s", ", ".join(failed))
    return 1 if failed else 0


def cmd_synth(args):
    syn = generate_detailed(_synth_spec(args))
    s = syn.space
    _emit(args, cio.coords_csv(s.labels, s.coords))
    if args.mass_output:
        with open(args.mass_output, "w") as fh:
            fh.write(cio.mass_text(s.labels, s.p))
    elif not np.allclose(s.p, 1.0 / s.n):
        log.warning("configuration has non-uniform masses; use --mass-output to keep them")
    return 0


COMMANDS = {
    "compute": cmd_compute,
    "pointlike": cmd_pointlike,
    "quotient": cmd_quotient,
    "communities": cmd_communities,
    "verify": cmd_verify,
    "synth": cmd_synth,
}


def run_cli(argv=None):
    parser = build_parser()
    args = parser.parse_args(argv)
    logging.basicConfig(level=logging.INFO if args.verbose else logging.WARNING,
                        format="%(name)s: %(levelname)s: %(message)s")
    try:
        _check_flags(args)
        return COMMANDS[args.command](args)
    except UsageError as exc:
        parser.error(str(exc))
    except (cio.InputError, ValidationError, CapabilityError, ValueError, OSError) as exc:
        print(f"cohesion: error: {exc}", file=sys.stderr)
        return 2


def main():
    sys.exit(run_cli())


if __name__ == "__main__":
    main()
