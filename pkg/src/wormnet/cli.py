"""Command-line interface: generate / simulate / threshold / throttle-demo /
experiment / compare."""

from __future__ import annotations

import argparse
import sys

import numpy as np

from . import harness, presets
from .epidemic import WormBehavior
from .graph import (
    ParseError,
    read_degree_histogram,
    read_edge_list,
    write_edge_list,
)
from .netgen import GenerationError, NetworkSpec, build_network, degree_distribution
from .percolation import analytical_threshold, empirical_threshold
from .throttle import ThrottleConfig, process_trace


def _parse_peaks(text: str):
    peaks = []
    for item in text.split(","):
        d, w = item.split(":")
        peaks.append((int(d), float(w)))
    return tuple(peaks)


def _cmd_generate(args) -> int:
    if args.preset:
        spec = presets.preset(args.preset)
        if args.n:
            import dataclasses

            spec = dataclasses.replace(spec, n=args.n)
        if args.seed is not None:
            import dataclasses

            spec = dataclasses.replace(spec, seed=args.seed)
    else:
        if not args.family:
            raise ValueError("generate requires --preset or --family")
        kwargs = dict(seed=args.seed or 0, directed=args.directed)
        if args.family == "configmodel":
            if not args.degree_histogram:
                raise ValueError("configmodel family requires --degree-histogram")
            dist = read_degree_histogram(args.degree_histogram)
            spec = NetworkSpec("configmodel", n=dist.n, distribution=dist, **kwargs)
        elif args.family == "multimodal":
            if not args.peaks:
                raise ValueError("multimodal family requires --peaks")
            spec = NetworkSpec("multimodal", n=args.n, peaks=_parse_peaks(args.peaks), **kwargs)
        elif args.family == "powerlaw":
            spec = NetworkSpec(
                "powerlaw", n=args.n, alpha=args.alpha, k_min=args.k_min,
                k_max=args.k_max, **kwargs,
            )
        elif args.family == "complete":
            spec = NetworkSpec("complete", n=args.n)
        else:
            raise ValueError(f"unknown family {args.family!r}")
    g = build_network(spec)
    write_edge_list(g, args.out)
    print(f"wrote {g!r} to {args.out}")
    return 0


def _cmd_simulate(args) -> int:
    g = read_edge_list(args.graph)
    worm = WormBehavior(
        targeting=args.targeting,
        attempt_rate=args.rate,
        infection_probability=args.pinfect,
        address_space=args.address_space,
    )
    throttle = None
    if args.throttle_rate is not None:
        throttle = ThrottleConfig(
            rate=args.throttle_rate,
            working_set_capacity=args.working_set,
            queue_capacity=args.queue_capacity,
        )
    vaccination = None
    if args.vaccinate:
        from .percolation import VaccinationStrategy

        vaccination = VaccinationStrategy(args.vaccinate, args.fraction)
    ts = harness.run_replicate(
        g, worm, vaccination, throttle,
        args.seed_infected, args.dt, args.tmax, args.seed, 0,
    )
    ts.to_csv(args.out)
    print(f"wrote {len(ts)} rows to {args.out}")
    return 0


def _cmd_threshold(args) -> int:
    g = read_edge_list(args.graph)
    if args.method == "empirical":
        result = empirical_threshold(
            g, args.strategy, s_min=args.s_min, trials=args.trials, seed=args.seed
        )
    else:
        result = analytical_threshold(degree_distribution(g), args.strategy)
    s_min = "" if result.s_min is None else f"{result.s_min:.10g}"
    with open(args.out, "w", encoding="utf-8", newline="\n") as fh:
        fh.write("strategy,f_c,method,s_min,trials,ci_halfwidth\n")
        fh.write(
            f"{result.kind},{result.f_c:.10g},{result.method},{s_min},"
            f"{result.trials},{result.ci_halfwidth:.10g}\n"
        )
    flag = " (non-monotone response!)" if result.non_monotone else ""
    print(f"f_c({result.kind}, {result.method}) = {result.f_c:.4g}{flag}")
    return 0


def _cmd_throttle_demo(args) -> int:
    events = []
    with open(args.trace, "r", encoding="utf-8") as fh:
        header = fh.readline().strip()
        if header != "t,dest":
            raise ParseError(args.trace, 1, f"expected header 't,dest', got {header!r}")
        for lineno, line in enumerate(fh, start=2):
            line = line.strip()
            if not line:
                continue
            try:
                t_str, dest_str = line.split(",")
                events.append((float(t_str), int(dest_str)))
            except ValueError:
                raise ParseError(args.trace, lineno, f"bad trace row {line!r}") from None
    config = ThrottleConfig(
        rate=args.rate,
        working_set_capacity=args.working_set,
        queue_capacity=args.queue_capacity,
    )
    rows = process_trace(events, config)
    with open(args.out, "w", encoding="utf-8", newline="\n") as fh:
        fh.write("t,dest,decision,delay\n")
        for t, dest, decision, delay in rows:
            fh.write(f"{t:.10g},{dest},{decision},{delay:.10g}\n")
    print(f"wrote {len(rows)} decisions to {args.out}")
    return 0


def _cmd_experiment(args) -> int:
    cfg = harness.load_config(args.config)
    result = harness.run_experiment(cfg, args.out)
    agg = result.aggregates
    print(
        f"{cfg.replicates} replicate(s) -> {args.out}; "
        f"growth_rate mean = {harness._na(agg['growth_rate_mean'])}, "
        f"time_to_{agg['q']:g} mean = {harness._na(agg['time_to_fraction_mean'])}"
    )
    return 0


def _cmd_compare(args) -> int:
    baseline = harness.load_result(args.baseline)
    treated = harness.load_result(args.treated)
    rows = harness.compare(baseline, treated)
    if args.out:
        harness.write_compare_csv(rows, args.out)
    for row in rows:
        print(
            f"{row['metric']}: baseline={harness._na(row['baseline'])} "
            f"treated={harness._na(row['treated'])} slowdown={harness._na(row['slowdown'])}"
        )
    return 0


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(
        prog="wormnet",
        description="Malware propagation simulator and control-strategy toolkit",
    )
    sub = parser.add_subparsers(dest="command", required=True)

    p = sub.add_parser("generate", help="generate a network and write an edge list")
    p.add_argument("--preset", choices=presets.PRESET_NAMES)
    p.add_argument("--family", choices=["complete", "multimodal", "configmodel", "powerlaw"])
    p.add_argument("--n", type=int)
    p.add_argument("--alpha", type=float)
    p.add_argument("--k-min", type=int, dest="k_min")
    p.add_argument("--k-max", type=int, dest="k_max")
    p.add_argument("--peaks", help="degree:weight,degree:weight,...")
    p.add_argument("--degree-histogram", dest="degree_histogram")
    p.add_argument("--directed", action="store_true")
    p.add_argument("--seed", type=int)
    p.add_argument("--out", required=True)
    p.set_defaults(func=_cmd_generate)

    p = sub.add_parser("simulate", help="run one propagation and write a time series")
    p.add_argument("--graph", required=True)
    p.add_argument("--targeting", choices=["neighbor", "scan"], required=True)
    p.add_argument("--rate", type=float, required=True)
    p.add_argument("--pinfect", type=float, default=1.0)
    p.add_argument("--address-space", type=int, dest="address_space")
    p.add_argument("--throttle-rate", type=float, dest="throttle_rate")
    p.add_argument("--working-set", type=int, dest="working_set", default=4)
    p.add_argument("--queue-capacity", type=int, dest="queue_capacity")
    p.add_argument("--vaccinate", choices=["random", "targeted"])
    p.add_argument("--fraction", type=float, default=0.0)
    p.add_argument("--seed-infected", type=int, dest="seed_infected", default=1)
    p.add_argument("--dt", type=float, default=0.1)
    p.add_argument("--tmax", type=float, default=60.0)
    p.add_argument("--seed", type=int, default=0)
    p.add_argument("--out", required=True)
    p.set_defaults(func=_cmd_simulate)

    p = sub.add_parser("threshold", help="estimate the critical vaccination fraction")
    p.add_argument("--graph", required=True)
    p.add_argument("--strategy", choices=["random", "targeted"], required=True)
    p.add_argument("--method", choices=["empirical", "analytical"], default="empirical")
    p.add_argument("--s-min", type=float, dest="s_min", default=0.01)
    p.add_argument("--trials", type=int, default=10)
    p.add_argument("--seed", type=int, default=0)
    p.add_argument("--out", required=True)
    p.set_defaults(func=_cmd_threshold)

    p = sub.add_parser("throttle-demo", help="run a request trace through a throttle")
    p.add_argument("--trace", required=True)
    p.add_argument("--rate", type=float, default=1.0)
    p.add_argument("--working-set", type=int, dest="working_set", default=4)
    p.add_argument("--queue-capacity", type=int, dest="queue_capacity")
    p.add_argument("--out", required=True)
    p.set_defaults(func=_cmd_throttle_demo)

    p = sub.add_parser("experiment", help="run a configured batch of replicates")
    p.add_argument("--config", required=True)
    p.add_argument("--out", required=True)
    p.set_defaults(func=_cmd_experiment)

    p = sub.add_parser("compare", help="slowdown table between two experiment dirs")
    p.add_argument("--baseline", required=True)
    p.add_argument("--treated", required=True)
    p.add_argument("--out")
    p.set_defaults(func=_cmd_compare)

    return parser


def main(argv=None) -> int:
    parser = build_parser()
    args = parser.parse_args(argv)
    try:
        return args.func(args)
    except (ValueError, GenerationError, OSError) as exc:
        print(f"wormnet: error: {exc}", file=sys.stderr)
        return 1


if __name__ == "__main__":
    sys.exit(main())
