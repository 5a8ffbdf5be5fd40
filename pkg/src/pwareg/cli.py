"""Command-line interface.

Every command prints a JSON report on stdout (suppressed by ``--quiet``) and
writes files only where ``--out``-style flags say so.  Exit codes: 0 success,
2 malformed input, 3 guard or precondition violation.
"""

from __future__ import annotations

import argparse
import json
import logging
import os
import sys
import time
from pathlib import Path

import numpy as np

from . import __version__
from .data import (
    GeneratorConfig,
    generate_pwa_dataset,
    random_pwa_model,
    read_dataset_csv,
    write_dataset_csv,
    write_labeled_csv,
    write_model_json,
)
from .enumeration import (
    EnumerationStats,
    binary_bound,
    enumerate_binary_labelings,
    enumerate_multiclass_labelings,
    multiclass_bound,
)
from .exceptions import AllSubsetsDegenerate, InstanceTooLarge, InstanceTooSmall, NoRealizableLabeling
from .reduction import decide_partition_via_pwa, parse_partition, partition_to_dataset
from .regression import Loss
from .solver import brute_force_oracle, solve_exact

EXIT_OK = 0
EXIT_INPUT = 2
EXIT_GUARD = 3

log = logging.getLogger("pwareg")


class GuardError(Exception):
    """Precondition violated; maps to exit code 3."""


def _check_modes(n: int, N: int, d: int) -> None:
    if n < 2 or n * (d + 1) > N:
        raise GuardError(f"--modes must lie in [2, N/(d+1)] = [2, {N / (d + 1):g}] for N={N}, d={d}; got {n}")


def _load(path) -> "Dataset":  # noqa: F821
    try:
        return read_dataset_csv(path)
    except OSError as exc:
        raise ValueError(f"cannot read {path}: {exc.strerror}") from exc


def cmd_fit(args) -> dict:
    data = _load(args.data)
    _check_modes(args.modes, data.N, data.d)
    kwargs = {"workers": args.parallel}
    if args.modes == 2:
        kwargs["refine_classifier"] = args.refine
    res = solve_exact(data, args.modes, Loss.parse(args.loss), **kwargs)
    outputs = {}
    if args.out:
        write_model_json(res.model, args.out)
        outputs["model"] = str(args.out)
        labeled = args.labeled_out or str(Path(args.out).with_suffix("")) + ".labeled.csv"
    else:
        labeled = args.labeled_out
    if labeled:
        # submodel outputs follow the solver's labeling, not the classifier
        yhat = np.einsum("ij,ij->i", data.Xbar, res.model.submodels[res.labeling - 1])
        write_labeled_csv(data, res.labeling, yhat, labeled)
        outputs["labeled"] = str(labeled)
    report = res.summary()
    report["outputs"] = outputs
    return report


def cmd_enumerate(args) -> dict:
    data = _load(args.data)
    if data.N <= data.d:
        raise ValueError(f"enumeration needs N > d (N={data.N}, d={data.d})")
    if args.modes < 2:
        raise GuardError("--modes must be at least 2")
    stats = EnumerationStats()
    if args.modes == 2:
        it = enumerate_binary_labelings(data.X, dedup=args.dedup, symmetry_prune=args.symmetry_prune, stats=stats)
        bound = binary_bound(data.N, data.d)
    else:
        it = enumerate_multiclass_labelings(data.X, args.modes, dedup=args.dedup, stats=stats)
        bound = multiclass_bound(data.N, data.d, args.modes)
    distinct = set()
    out = open(args.out, "w", encoding="utf-8") if args.out else None
    try:
        for q in it:
            distinct.add(q.tobytes())
            if out:
                out.write(",".join(str(int(v)) for v in q) + "\n")
    finally:
        if out:
            out.close()
    return {
        "modes": args.modes,
        "N": data.N,
        "d": data.d,
        "dedup": args.dedup,
        "candidates": stats.candidates,
        "yielded": stats.yielded,
        "distinct": len(distinct),
        "bound": bound,
        "within_bound": len(distinct) <= bound,
        "tuples": stats.tuples,
        "skipped_degenerate": stats.degenerate,
        "outputs": {"labelings": str(args.out)} if args.out else {},
    }


def cmd_reduce(args) -> dict:
    s = parse_partition(args.partition)
    gadget = partition_to_dataset(s)
    outputs = {}
    if args.out:
        write_dataset_csv(gadget.data, args.out)
        outputs["gadget"] = str(args.out)
    dec = decide_partition_via_pwa(s)
    verdict = "yes" if dec.yes else "no"
    line = f"partition {','.join(map(str, s))}: {verdict}"
    if dec.subset:
        line += f" witness {{{','.join(map(str, dec.subset))}}}"
    print(line, file=sys.stderr)
    return {
        "partition": list(s),
        "verdict": verdict,
        "witness": list(dec.subset) if dec.subset else None,
        "best_cost": dec.result.best_cost,
        "iterations": dec.result.iterations,
        "skipped_degenerate": dec.result.skipped_degenerate,
        "certified": dec.result.certified,
        "outputs": outputs,
    }


def cmd_oracle(args) -> dict:
    data = _load(args.data)
    if args.modes < 2:
        raise GuardError("--modes must be at least 2")
    res = brute_force_oracle(data, args.modes, Loss.parse(args.loss), realizable_only=not args.all_labelings)
    return res.summary()


def cmd_gen(args) -> dict:
    rng = np.random.default_rng(args.seed)
    model = random_pwa_model(args.modes, args.dim, rng, box=tuple(args.box))
    cfg = GeneratorConfig(model, args.N, args.noise, tuple(args.box), seed=int(rng.integers(2**63)))
    data, labels = generate_pwa_dataset(cfg)
    outputs = {}
    if args.out:
        write_dataset_csv(data, args.out)
        outputs["data"] = str(args.out)
    if args.model_out:
        write_model_json(model, args.model_out)
        outputs["model"] = str(args.model_out)
    counts = np.bincount(labels, minlength=args.modes + 1)[1:]
    return {"N": data.N, "d": data.d, "modes": args.modes, "noise": args.noise,
            "seed": args.seed, "mode_counts": counts.tolist(), "outputs": outputs}


def bench_sizes(dim: int, sizes, modes: int = 2, repeats: int = 3, seed: int = 0, workers: int = 1) -> dict:
    """Time the exact solver on planted data of growing N; fit log-time against log-N."""
    times = []
    for N in sizes:
        model = random_pwa_model(modes, dim, np.random.default_rng([seed, N]))
        data, _ = generate_pwa_dataset(GeneratorConfig(model, N, 0.1, seed=seed + N))
        best = np.inf
        for _ in range(repeats):
            t0 = time.perf_counter()
            solve_exact(data, modes, workers=workers)
            best = min(best, time.perf_counter() - t0)
        times.append(best)
    slope = float(np.polyfit(np.log(sizes), np.log(times), 1)[0])
    return {"dim": dim, "modes": modes, "sizes": list(sizes), "seconds": times, "slope": slope,
            "expected_slope": dim + 1}


def cmd_bench(args) -> dict:
    if args.modes == 2:
        guard = args.dim
    else:
        guard = args.dim * args.modes * (args.modes - 1) // 2
    if guard > 3 or max(args.sizes) > 5000:
        raise GuardError("bench sweep too large (keep d*n(n-1)/2 <= 3 and N <= 5000)")
    return bench_sizes(args.dim, args.sizes, args.modes, args.repeats, args.seed, args.parallel)


def _int_list(text: str) -> list[int]:
    try:
        return [int(v) for v in text.split(",") if v.strip()]
    except ValueError as exc:
        raise argparse.ArgumentTypeError(f"expected comma-separated integers, got {text!r}") from exc


def _float_pair(text: str) -> list[float]:
    try:
        lo, hi = (float(v) for v in text.split(","))
    except ValueError as exc:
        raise argparse.ArgumentTypeError(f"expected lo,hi got {text!r}") from exc
    if not lo < hi:
        raise argparse.ArgumentTypeError("box needs lo < hi")
    return [lo, hi]


def build_parser() -> argparse.ArgumentParser:
    common = argparse.ArgumentParser(add_help=False)
    common.add_argument("--seed", type=int, default=0)
    common.add_argument("--quiet", action="store_true", help="do not print the JSON report")
    common.add_argument("--config", help="key=value file providing defaults for flags")
    common.add_argument("--parallel", type=int, default=os.cpu_count() or 1, help="worker processes")

    parser = argparse.ArgumentParser(prog="pwareg", description="Exact piecewise affine regression.")
    parser.add_argument("--version", action="version", version=__version__)
    sub = parser.add_subparsers(dest="command", required=True)

    p = sub.add_parser("fit", parents=[common], help="globally optimal PWA fit")
    p.add_argument("--data", required=True)
    p.add_argument("--modes", type=int, default=2)
    p.add_argument("--loss", choices=["squared", "abs"], default="squared")
    p.add_argument("--out", help="model JSON path")
    p.add_argument("--labeled-out", help="labeled CSV path (default: next to --out)")
    p.add_argument("--refine", action="store_true", help="replace the hyperplane by a strictly separating one")
    p.set_defaults(func=cmd_fit)

    p = sub.add_parser("enumerate", parents=[common], help="dump candidate labelings")
    p.add_argument("--data", required=True)
    p.add_argument("--modes", type=int, default=2)
    p.add_argument("--dedup", action=argparse.BooleanOptionalAction, default=True)
    p.add_argument("--symmetry-prune", action="store_true")
    p.add_argument("--out", help="one labeling per line, comma-separated")
    p.set_defaults(func=cmd_enumerate)

    p = sub.add_parser("reduce", parents=[common], help="decide Partition through the PWA gadget")
    p.add_argument("--partition", required=True, help='comma-separated positive integers, e.g. "1,2,3"')
    p.add_argument("--out", help="gadget dataset CSV path")
    p.set_defaults(func=cmd_reduce)

    p = sub.add_parser("oracle", parents=[common], help="brute force over all labelings")
    p.add_argument("--data", required=True)
    p.add_argument("--modes", type=int, default=2)
    p.add_argument("--loss", choices=["squared", "abs"], default="squared")
    p.add_argument("--all-labelings", action="store_true", help="skip the realizability filter")
    p.set_defaults(func=cmd_oracle)

    p = sub.add_parser("gen", parents=[common], help="sample a planted PWA dataset")
    p.add_argument("--modes", type=int, default=2)
    p.add_argument("--dim", type=int, default=1)
    p.add_argument("--N", type=int, default=50)
    p.add_argument("--noise", type=float, default=0.0)
    p.add_argument("--box", type=_float_pair, default=[-10.0, 10.0])
    p.add_argument("--out", help="dataset CSV path")
    p.add_argument("--model-out", help="planted model JSON path")
    p.set_defaults(func=cmd_gen)

    p = sub.add_parser("bench", parents=[common], help="runtime sweep over N")
    p.add_argument("--dim", type=int, default=1)
    p.add_argument("--modes", type=int, default=2)
    p.add_argument("--sizes", type=_int_list, default=[20, 40, 80, 160])
    p.add_argument("--repeats", type=int, default=3)
    p.set_defaults(func=cmd_bench)
    return parser


def read_config(path) -> dict[str, str]:
    """``key = value`` lines; ``#`` starts a comment, quotes around values are stripped."""
    out = {}
    for lineno, raw in enumerate(Path(path).read_text(encoding="utf-8").splitlines(), 1):
        line = raw.split("#", 1)[0].strip()
        if not line or line.startswith("["):
            continue
        if "=" not in line:
            raise ValueError(f"{path}:{lineno}: expected key = value")
        key, value = (part.strip() for part in line.split("=", 1))
        out[key.replace("-", "_")] = value.strip("\"'")
    return out


def _apply_config(parser: argparse.ArgumentParser, argv: list[str]) -> argparse.Namespace:
    args = parser.parse_args(argv)
    if not args.config:
        return args
    values = read_config(args.config)
    subparser = parser._subparsers._group_actions[0].choices[args.command]
    actions = {a.dest: a for a in subparser._actions}
    defaults = {}
    for key, raw in values.items():
        action = actions.get(key)
        if action is None:
            raise ValueError(f"{args.config}: unknown option {key!r} for {args.command}")
        if action.nargs == 0 or isinstance(action, argparse.BooleanOptionalAction):
            defaults[key] = raw.lower() in ("1", "true", "yes", "on")
        else:
            defaults[key] = action.type(raw) if action.type else raw
    subparser.set_defaults(**defaults)
    # flags given on the command line still win
    return parser.parse_args(argv)


def main(argv: list[str] | None = None) -> int:
    logging.basicConfig(level=logging.WARNING, format="%(levelname)s %(name)s: %(message)s")
    argv = list(sys.argv[1:] if argv is None else argv)
    parser = build_parser()
    try:
        args = _apply_config(parser, argv)
    except SystemExit as exc:
        return int(exc.code or 0)
    except (ValueError, OSError) as exc:
        print(f"error: {exc}", file=sys.stderr)
        return EXIT_INPUT
    t0 = time.perf_counter()
    try:
        report = args.func(args)
    except (GuardError, InstanceTooSmall, InstanceTooLarge, AllSubsetsDegenerate, NoRealizableLabeling) as exc:
        print(f"error: {exc}", file=sys.stderr)
        return EXIT_GUARD
    except (ValueError, OSError) as exc:
        print(f"error: {exc}", file=sys.stderr)
        return EXIT_INPUT
    report = {"command": [args.command, *argv[1:]], "wall_time": time.perf_counter() - t0, **report}
    if not args.quiet:
        json.dump(report, sys.stdout, indent=2, default=_json_default)
        sys.stdout.write("\n")
    return EXIT_OK


def _json_default(obj):
    if isinstance(obj, np.generic):
        return obj.item()
    if isinstance(obj, np.ndarray):
        return obj.tolist()
    raise TypeError(f"not JSON serializable: {type(obj).__name__}")


if __name__ == "__main__":
    sys.exit(main())
