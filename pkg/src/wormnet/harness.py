"""Experiment configuration, batch execution, and comparison.

Experiments are described by flat ``key = value`` files with bracketed
sections (see ``load_config``).  A run writes one TimeSeries CSV per
replicate plus the fully resolved configuration and derived seeds, so every
output directory is self-describing and byte-reproducible.

Seed scheme: replicate i draws all its randomness from numpy's
``SeedSequence([master_seed, i])``, split into independent child streams for
vaccination, seed-node choice, and propagation.
"""

from __future__ import annotations

import dataclasses
import os
import tempfile
from dataclasses import dataclass

import numpy as np

from . import presets
from .epidemic import TimeSeries, WormBehavior, growth_rate, run, time_to_fraction
from .graph import Graph, read_degree_histogram, read_edge_list
from .netgen import NetworkSpec, build_network
from .percolation import VaccinationStrategy, vaccinate
from .throttle import ThrottleConfig


class ConfigError(ValueError):
    """A configuration file failed to parse or validate."""


_SECTIONS = {
    "network": {
        "preset": str,
        "family": str,
        "file": str,
        "n": int,
        "alpha": float,
        "k_min": int,
        "k_max": int,
        "directed": bool,
        "peaks": "peaks",
        "degrees_file": str,
        "seed": int,
    },
    "worm": {
        "targeting": str,
        "rate": float,
        "pinfect": float,
        "address_space": int,
    },
    "controls": {
        "vaccinate": str,
        "fraction": float,
        "throttle_rate": float,
        "working_set": int,
        "queue_capacity": int,
    },
    "run": {
        "replicates": int,
        "dt": float,
        "tmax": float,
        "seed": int,
        "seed_infected": int,
    },
}

_DEFAULTS = {
    ("worm", "pinfect"): 1.0,
    ("controls", "working_set"): 4,
    ("run", "replicates"): 1,
    ("run", "dt"): 0.1,
    ("run", "tmax"): 60.0,
    ("run", "seed"): 0,
    ("run", "seed_infected"): 1,
}


@dataclass(frozen=True)
class ExperimentConfig:
    network_spec: NetworkSpec | None
    graph_path: str | None
    worm: WormBehavior
    vaccination: VaccinationStrategy | None
    throttle: ThrottleConfig | None
    replicates: int
    dt: float
    t_max: float
    seed: int
    seed_infected: int
    resolved: dict = dataclasses.field(default_factory=dict, compare=False)

    def network_key(self) -> dict:
        return dict(self.resolved.get("network", {}))

    def worm_key(self) -> dict:
        return dict(self.resolved.get("worm", {}))

    def controls_key(self) -> dict:
        return dict(self.resolved.get("controls", {}))


@dataclass
class ExperimentResult:
    outdir: str
    config: ExperimentConfig
    replicate_paths: list[str]
    growth_rates: list[float | None]
    times_to_fraction: list[float | None]
    aggregates: dict


def _parse_kv_file(path) -> dict[str, dict[str, tuple[str, int]]]:
    sections: dict[str, dict[str, tuple[str, int]]] = {}
    current = None
    try:
        fh = open(path, "r", encoding="utf-8")
    except OSError as exc:
        raise ConfigError(f"cannot open config {path}: {exc}") from None
    with fh:
        for lineno, raw in enumerate(fh, start=1):
            text = raw.split("#", 1)[0].strip()
            if not text:
                continue
            if text.startswith("[") and text.endswith("]"):
                current = text[1:-1].strip()
                if current not in _SECTIONS:
                    raise ConfigError(f"{path}:{lineno}: unknown section [{current}]")
                sections.setdefault(current, {})
                continue
            if "=" not in text:
                raise ConfigError(f"{path}:{lineno}: expected 'key = value', got {text!r}")
            if current is None:
                raise ConfigError(f"{path}:{lineno}: key outside any [section]")
            key, value = (part.strip() for part in text.split("=", 1))
            if key not in _SECTIONS[current]:
                raise ConfigError(
                    f"{path}:{lineno}: unknown key {key!r} in section [{current}]"
                )
            if key in sections[current]:
                raise ConfigError(f"{path}:{lineno}: duplicate key {key!r}")
            sections[current][key] = (value, lineno)
    return sections


def _convert(path, section, key, value, lineno):
    typ = _SECTIONS[section][key]
    try:
        if typ is int:
            return int(value)
        if typ is float:
            return float(value)
        if typ is bool:
            if value.lower() in ("true", "yes", "1"):
                return True
            if value.lower() in ("false", "no", "0"):
                return False
            raise ValueError(value)
        if typ == "peaks":
            peaks = []
            for item in value.split(","):
                d, w = item.split(":")
                peaks.append((int(d), float(w)))
            return tuple(peaks)
        return value
    except (ValueError, TypeError):
        raise ConfigError(
            f"{path}:{lineno}: bad value {value!r} for key {key!r}"
        ) from None


def load_config(path) -> ExperimentConfig:
    """Parse and validate an experiment config, filling documented defaults."""
    raw = _parse_kv_file(path)
    values: dict[str, dict] = {s: {} for s in _SECTIONS}
    for section, entries in raw.items():
        for key, (text, lineno) in entries.items():
            values[section][key] = _convert(path, section, key, text, lineno)
    for (section, key), default in _DEFAULTS.items():
        values[section].setdefault(key, default)

    net = values["network"]
    sources = [k for k in ("preset", "family", "file") if k in net]
    if len(sources) != 1:
        raise ConfigError(
            f"{path}: [network] requires exactly one of preset/family/file, got {sources}"
        )

    run_sec = values["run"]
    master = run_sec["seed"]
    network_spec = None
    graph_path = None
    if "file" in net:
        graph_path = net["file"]
        if not os.path.exists(graph_path):
            raise ConfigError(f"{path}: graph file not found: {graph_path}")
    elif "preset" in net:
        try:
            network_spec = presets.preset(net["preset"])
        except ValueError as exc:
            raise ConfigError(f"{path}: {exc}") from None
        if "n" in net:
            network_spec = dataclasses.replace(network_spec, n=net["n"])
        if "seed" in net:
            network_spec = dataclasses.replace(network_spec, seed=net["seed"])
    else:
        family = net["family"]
        if family == "configmodel" and "degrees_file" in net:
            if not os.path.exists(net["degrees_file"]):
                raise ConfigError(f"{path}: degrees file not found: {net['degrees_file']}")
            dist = read_degree_histogram(net["degrees_file"])
            kwargs = {"distribution": dist, "n": dist.n}
        else:
            kwargs = {"n": net.get("n", 0)}
        try:
            network_spec = NetworkSpec(
                family,
                seed=net.get("seed", master),
                directed=net.get("directed", False),
                alpha=net.get("alpha"),
                k_min=net.get("k_min"),
                k_max=net.get("k_max"),
                peaks=net.get("peaks"),
                **kwargs,
            )
        except ValueError as exc:
            raise ConfigError(f"{path}: [network] {exc}") from None

    worm_sec = values["worm"]
    for required in ("targeting", "rate"):
        if required not in worm_sec:
            raise ConfigError(f"{path}: [worm] missing required key {required!r}")
    try:
        worm = WormBehavior(
            targeting=worm_sec["targeting"],
            attempt_rate=worm_sec["rate"],
            infection_probability=worm_sec["pinfect"],
            address_space=worm_sec.get("address_space"),
        )
    except ValueError as exc:
        raise ConfigError(f"{path}: [worm] {exc}") from None

    ctl = values["controls"]
    vaccination = None
    if "vaccinate" in ctl:
        if "fraction" not in ctl:
            raise ConfigError(f"{path}: [controls] vaccinate requires 'fraction'")
        try:
            vaccination = VaccinationStrategy(ctl["vaccinate"], ctl["fraction"])
        except ValueError as exc:
            raise ConfigError(f"{path}: [controls] {exc}") from None
    throttle = None
    if "throttle_rate" in ctl:
        try:
            throttle = ThrottleConfig(
                rate=ctl["throttle_rate"],
                working_set_capacity=ctl["working_set"],
                queue_capacity=ctl.get("queue_capacity"),
            )
        except ValueError as exc:
            raise ConfigError(f"{path}: [controls] {exc}") from None

    resolved = {
        "network": dict(sorted(net.items())),
        "worm": dict(sorted(worm_sec.items())),
        "controls": dict(sorted(ctl.items())) if (vaccination or throttle) else {},
        "run": dict(sorted(run_sec.items())),
    }

    return ExperimentConfig(
        network_spec=network_spec,
        graph_path=graph_path,
        worm=worm,
        vaccination=vaccination,
        throttle=throttle,
        replicates=run_sec["replicates"],
        dt=run_sec["dt"],
        t_max=run_sec["tmax"],
        seed=master,
        seed_infected=run_sec["seed_infected"],
        resolved=resolved,
    )


def build_graph(cfg: ExperimentConfig) -> Graph:
    if cfg.graph_path is not None:
        return read_edge_list(cfg.graph_path)
    return build_network(cfg.network_spec)


def run_replicate(
    g: Graph,
    worm: WormBehavior,
    vaccination: VaccinationStrategy | None,
    throttle: ThrottleConfig | None,
    seed_infected: int,
    dt: float,
    t_max: float,
    master_seed: int,
    replicate: int,
) -> TimeSeries:
    """One deterministic replicate; all randomness derives from (master, i)."""
    ss = np.random.SeedSequence([master_seed, replicate])
    vacc_ss, init_ss, run_ss = ss.spawn(3)
    vaccinated: set[int] = set()
    if vaccination is not None:
        vaccinated = vaccinate(g, vaccination, seed=np.random.default_rng(vacc_ss))
    candidates = np.setdiff1d(np.arange(g.n), np.array(sorted(vaccinated), dtype=np.int64))
    if len(candidates) < seed_infected:
        raise ValueError("not enough unvaccinated nodes to seed the infection")
    init_rng = np.random.default_rng(init_ss)
    init = set(map(int, init_rng.choice(candidates, size=seed_infected, replace=False)))
    return run(
        g,
        worm,
        init_infected=init,
        vaccinated=vaccinated,
        throttle=throttle,
        dt=dt,
        t_max=t_max,
        seed=np.random.default_rng(run_ss),
    )


def _atomic_write(path: str, content: str) -> None:
    directory = os.path.dirname(os.path.abspath(path))
    fd, tmp = tempfile.mkstemp(dir=directory, prefix=".tmp-")
    try:
        with os.fdopen(fd, "w", encoding="utf-8", newline="\n") as fh:
            fh.write(content)
        os.replace(tmp, path)
    except BaseException:
        if os.path.exists(tmp):
            os.unlink(tmp)
        raise


def _format_value(v) -> str:
    if isinstance(v, bool):
        return "true" if v else "false"
    if isinstance(v, float):
        return f"{v:.10g}"
    if isinstance(v, tuple):  # peaks
        return ",".join(f"{d}:{w:.10g}" for d, w in v)
    return str(v)


def write_resolved_config(cfg: ExperimentConfig, path: str) -> None:
    """Echo the fully resolved configuration (provenance record)."""
    lines = []
    for section in ("network", "worm", "controls", "run"):
        entries = cfg.resolved.get(section, {})
        if not entries:
            continue
        lines.append(f"[{section}]")
        for key, value in entries.items():
            lines.append(f"{key} = {_format_value(value)}")
        lines.append("")
    lines.append("# replicate i uses numpy SeedSequence([seed, i])")
    _atomic_write(path, "\n".join(lines) + "\n")


def run_experiment(cfg: ExperimentConfig, outdir: str, q: float = 0.95) -> ExperimentResult:
    """Execute all replicates, writing CSVs and a summary to ``outdir``."""
    os.makedirs(outdir, exist_ok=True)
    g = build_graph(cfg)
    write_resolved_config(cfg, os.path.join(outdir, "resolved.cfg"))

    paths: list[str] = []
    rates: list[float | None] = []
    times: list[float | None] = []
    for i in range(cfg.replicates):
        ts = run_replicate(
            g,
            cfg.worm,
            cfg.vaccination,
            cfg.throttle,
            cfg.seed_infected,
            cfg.dt,
            cfg.t_max,
            cfg.seed,
            i,
        )
        path = os.path.join(outdir, f"rep_{i:03d}.csv")
        _atomic_write(path, ts.to_csv_text())
        paths.append(path)
        try:
            rates.append(growth_rate(ts))
        except ValueError:
            rates.append(None)
        times.append(time_to_fraction(ts, q))

    aggregates = {
        "growth_rate_mean": _mean(rates),
        "growth_rate_std": _std(rates),
        "time_to_fraction_mean": _mean(times),
        "time_to_fraction_std": _std(times),
        "q": q,
    }

    summary = ["replicate,growth_rate,time_to_fraction"]
    for i, (r, t) in enumerate(zip(rates, times)):
        summary.append(f"{i},{_na(r)},{_na(t)}")
    summary.append(f"mean,{_na(aggregates['growth_rate_mean'])},"
                   f"{_na(aggregates['time_to_fraction_mean'])}")
    summary.append(f"std,{_na(aggregates['growth_rate_std'])},"
                   f"{_na(aggregates['time_to_fraction_std'])}")
    _atomic_write(os.path.join(outdir, "summary.csv"), "\n".join(summary) + "\n")

    return ExperimentResult(outdir, cfg, paths, rates, times, aggregates)


def _mean(values):
    vals = [v for v in values if v is not None]
    return float(np.mean(vals)) if vals else None


def _std(values):
    vals = [v for v in values if v is not None]
    return float(np.std(vals)) if vals else None


def _na(v) -> str:
    return "NA" if v is None else f"{v:.10g}"


def load_result(outdir: str) -> ExperimentResult:
    """Reconstruct an ExperimentResult from a finished output directory."""
    cfg = load_config(os.path.join(outdir, "resolved.cfg"))
    paths = sorted(
        os.path.join(outdir, f)
        for f in os.listdir(outdir)
        if f.startswith("rep_") and f.endswith(".csv")
    )
    if not paths:
        raise ConfigError(f"{outdir}: no replicate CSVs found")
    rates: list[float | None] = []
    times: list[float | None] = []
    for path in paths:
        ts = TimeSeries.from_csv(path)
        try:
            rates.append(growth_rate(ts))
        except ValueError:
            rates.append(None)
        times.append(time_to_fraction(ts, 0.95))
    aggregates = {
        "growth_rate_mean": _mean(rates),
        "growth_rate_std": _std(rates),
        "time_to_fraction_mean": _mean(times),
        "time_to_fraction_std": _std(times),
        "q": 0.95,
    }
    return ExperimentResult(outdir, cfg, paths, rates, times, aggregates)


def compare(baseline: ExperimentResult, treated: ExperimentResult) -> list[dict]:
    """Slowdown table of treated relative to baseline.

    Refuses to compare runs whose network or worm settings differ; the
    controls must differ (otherwise there is nothing to compare).
    """
    if baseline.config.network_key() != treated.config.network_key():
        raise ValueError("cannot compare: experiments use different networks")
    if baseline.config.worm_key() != treated.config.worm_key():
        raise ValueError("cannot compare: experiments use different worm behavior")
    if baseline.config.controls_key() == treated.config.controls_key():
        raise ValueError("cannot compare: experiments apply identical controls")

    rows = []
    gb = baseline.aggregates["growth_rate_mean"]
    gt = treated.aggregates["growth_rate_mean"]
    rows.append({
        "metric": "growth_rate",
        "baseline": gb,
        "treated": gt,
        "slowdown": (gb / gt) if (gb is not None and gt not in (None, 0.0)) else None,
    })
    # per-replicate ratio keeps paired seeds together
    ratios = [
        t / b
        for b, t in zip(baseline.times_to_fraction, treated.times_to_fraction)
        if b not in (None, 0.0) and t is not None
    ]
    rows.append({
        "metric": "time_to_fraction",
        "baseline": baseline.aggregates["time_to_fraction_mean"],
        "treated": treated.aggregates["time_to_fraction_mean"],
        "slowdown": float(np.mean(ratios)) if ratios else None,
    })
    return rows


def write_compare_csv(rows: list[dict], path: str) -> None:
    lines = ["metric,baseline,treated,slowdown"]
    for row in rows:
        lines.append(
            f"{row['metric']},{_na(row['baseline'])},{_na(row['treated'])},{_na(row['slowdown'])}"
        )
    _atomic_write(path, "\n".join(lines) + "\n")
