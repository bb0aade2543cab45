"""Generators for the four contact-network families.

Family A is a complete graph (flat IP connectivity), family B a multi-modal
degree mixture (shared administrator accounts), family C a directed
configuration model (address books), and family D an undirected configuration
model with a heavy-tailed degree distribution (email traffic).

All generators are deterministic given their seed and produce simple graphs
whose degree sequences match the request exactly.
"""

from __future__ import annotations

from dataclasses import dataclass, field
from itertools import combinations
from typing import Sequence

import numpy as np

from .graph import DegreeDistribution, Graph


class GenerationError(RuntimeError):
    """A degree sequence could not be wired into a simple graph."""


FAMILIES = ("complete", "multimodal", "configmodel", "powerlaw")


@dataclass(frozen=True)
class NetworkSpec:
    """Declarative description of one network to generate.

    Exactly the fields relevant to ``family`` are consulted:

    * ``complete``: n
    * ``multimodal``: n, peaks (list of ``(degree, weight)``)
    * ``configmodel``: degrees (explicit sequence) or distribution, directed
    * ``powerlaw``: n, alpha, k_min, k_max, directed
    """

    family: str
    n: int
    seed: int = 0
    peaks: tuple[tuple[int, float], ...] | None = None
    degrees: tuple[int, ...] | None = None
    distribution: DegreeDistribution | None = None
    directed: bool = False
    alpha: float | None = None
    k_min: int | None = None
    k_max: int | None = None

    def __post_init__(self):
        if self.family not in FAMILIES:
            raise ValueError(f"unknown family {self.family!r}")
        if self.n < 0:
            raise ValueError("n must be >= 0")
        if self.family == "multimodal":
            if not self.peaks:
                raise ValueError("multimodal family requires peaks")
            weights = [w for _, w in self.peaks]
            if any(w <= 0 for w in weights):
                raise ValueError("peak weights must be positive")
            if abs(sum(weights) - 1.0) > 1e-9:
                raise ValueError("peak weights must sum to 1")
            if any(d < 0 or d >= self.n for d, _ in self.peaks):
                raise ValueError("peak degrees must lie in [0, n)")
        if self.family == "configmodel":
            if (self.degrees is None) == (self.distribution is None):
                raise ValueError("configmodel requires exactly one of degrees/distribution")
        if self.family == "powerlaw":
            if self.alpha is None or self.alpha <= 1:
                raise ValueError("powerlaw requires alpha > 1")
            if self.k_min is None or self.k_max is None:
                raise ValueError("powerlaw requires k_min and k_max")
            if not (1 <= self.k_min <= self.k_max < self.n):
                raise ValueError("powerlaw requires 1 <= k_min <= k_max < n")


def build_complete(n: int) -> Graph:
    """Complete undirected graph: every pair connected, degree n - 1."""
    return Graph(n, False, combinations(range(n), 2))


def _even_sum(degrees: np.ndarray, rng: np.random.Generator, n: int) -> np.ndarray:
    """Fix an odd degree sum by bumping one uniformly chosen node's degree.

    The bias is O(1/n) relative to the requested distribution.
    """
    if degrees.sum() % 2:
        degrees = degrees.copy()
        i = int(rng.integers(len(degrees)))
        if degrees[i] + 1 >= n:
            raise GenerationError("cannot adjust degree parity without exceeding n - 1")
        degrees[i] += 1
    return degrees


def build_configuration_model(
    degrees: Sequence[int],
    directed: bool = False,
    seed: int | np.random.Generator = 0,
    in_degrees: Sequence[int] | None = None,
) -> Graph:
    """Wire a degree sequence into a simple graph by stub matching.

    Self-loops and duplicate edges left over from the matching are repaired
    with double-edge swaps, which preserves the degree sequence exactly.  For
    directed graphs ``degrees`` are out-degrees; if ``in_degrees`` is omitted
    the in-degrees are a random permutation of the same multiset.
    """
    rng = seed if isinstance(seed, np.random.Generator) else np.random.default_rng(seed)
    deg = np.asarray(degrees, dtype=np.int64)
    n = len(deg)
    if np.any(deg < 0):
        raise ValueError("degrees must be non-negative")
    if n and deg.max() >= n:
        raise ValueError("max degree must be < n")
    if directed:
        return _directed_config_model(deg, in_degrees, n, rng)
    if deg.sum() % 2:
        raise ValueError("undirected degree sum must be even")
    return _undirected_config_model(deg, n, rng)


def _undirected_config_model(deg, n, rng) -> Graph:
    stubs = np.repeat(np.arange(n, dtype=np.int64), deg)
    rng.shuffle(stubs)
    m = len(stubs) // 2

    edge_set: set[tuple[int, int]] = set()
    leftovers: list[tuple[int, int]] = []
    for i in range(m):
        u, v = int(stubs[2 * i]), int(stubs[2 * i + 1])
        e = (u, v) if u < v else (v, u)
        if u == v or e in edge_set:
            leftovers.append((u, v))
        else:
            edge_set.add(e)

    if leftovers:
        budget = 100 * max(m, 1)
        edge_list = list(edge_set)
        for u, v in leftovers:
            placed = False
            while budget > 0 and not placed:
                budget -= 1
                if not edge_list:
                    break
                j = int(rng.integers(len(edge_list)))
                x, y = edge_list[j]
                if rng.integers(2):
                    x, y = y, x
                # swap (x,y) out for (u,x) and (v,y): degrees are preserved
                e1 = (u, x) if u < x else (x, u)
                e2 = (v, y) if v < y else (y, v)
                if u == x or v == y or e1 == e2 or e1 in edge_set or e2 in edge_set:
                    continue
                edge_set.discard((x, y) if x < y else (y, x))
                edge_set.add(e1)
                edge_set.add(e2)
                edge_list[j] = e1
                edge_list.append(e2)
                placed = True
            if not placed:
                raise GenerationError("edge-swap repair exhausted its retry budget")

    return Graph(n, False, edge_set)


def _directed_config_model(out_deg, in_degrees, n, rng) -> Graph:
    if in_degrees is None:
        in_deg = rng.permutation(out_deg)
    else:
        in_deg = np.asarray(in_degrees, dtype=np.int64)
        if len(in_deg) != n:
            raise ValueError("in_degrees length must match degrees length")
        if np.any(in_deg < 0) or (n and in_deg.max() >= n):
            raise ValueError("in_degrees out of range")
        if in_deg.sum() != out_deg.sum():
            raise ValueError("in/out degree sums must be equal")

    out_stubs = np.repeat(np.arange(n, dtype=np.int64), out_deg)
    in_stubs = np.repeat(np.arange(n, dtype=np.int64), in_deg)
    rng.shuffle(in_stubs)

    edge_set: set[tuple[int, int]] = set()
    leftovers: list[tuple[int, int]] = []
    for u, v in zip(out_stubs, in_stubs):
        u, v = int(u), int(v)
        if u == v or (u, v) in edge_set:
            leftovers.append((u, v))
        else:
            edge_set.add((u, v))

    if leftovers:
        budget = 100 * max(len(out_stubs), 1)
        edge_list = list(edge_set)
        for u, v in leftovers:
            placed = False
            while budget > 0 and not placed:
                budget -= 1
                if not edge_list:
                    break
                j = int(rng.integers(len(edge_list)))
                x, y = edge_list[j]
                # swap (x,y) out for (u,y) and (x,v): out/in degrees preserved
                e1 = (u, y)
                e2 = (x, v)
                if u == y or x == v or e1 == e2 or e1 in edge_set or e2 in edge_set:
                    continue
                edge_set.discard((x, y))
                edge_set.add(e1)
                edge_set.add(e2)
                edge_list[j] = e1
                edge_list.append(e2)
                placed = True
            if not placed:
                raise GenerationError("edge-swap repair exhausted its retry budget")

    return Graph(n, True, edge_set)


def build_multimodal(
    n: int,
    peaks: Sequence[tuple[int, float]],
    seed: int | np.random.Generator = 0,
) -> Graph:
    """Graph whose degrees are drawn from a discrete mixture of peaks."""
    spec = NetworkSpec("multimodal", n, peaks=tuple((int(d), float(w)) for d, w in peaks))
    rng = seed if isinstance(seed, np.random.Generator) else np.random.default_rng(seed)
    peak_degs = np.array([d for d, _ in spec.peaks], dtype=np.int64)
    weights = np.array([w for _, w in spec.peaks], dtype=float)
    weights = weights / weights.sum()
    degrees = rng.choice(peak_degs, size=n, p=weights)
    degrees = _even_sum(degrees, rng, n)
    return build_configuration_model(degrees, directed=False, seed=rng)


def sample_powerlaw_degrees(
    n: int,
    alpha: float,
    k_min: int,
    k_max: int,
    seed: int | np.random.Generator = 0,
) -> np.ndarray:
    """Draw n degrees from the discrete distribution p_k proportional to k^-alpha.

    The support is [k_min, k_max]; the sum is forced even by resampling one
    uniformly chosen entry.
    """
    if alpha <= 1:
        raise ValueError("alpha must be > 1")
    if not (1 <= k_min <= k_max):
        raise ValueError("need 1 <= k_min <= k_max")
    rng = seed if isinstance(seed, np.random.Generator) else np.random.default_rng(seed)
    ks = np.arange(k_min, k_max + 1, dtype=np.int64)
    with np.errstate(over="ignore"):
        weights = ks.astype(float) ** (-alpha)
    p = weights / weights.sum()
    degrees = rng.choice(ks, size=n, p=p)
    if degrees.sum() % 2:
        if k_min == k_max:
            # single-degree support cannot change parity by resampling
            degrees = _even_sum(degrees, rng, k_max + 2)
        else:
            while degrees.sum() % 2:
                i = int(rng.integers(n))
                degrees[i] = rng.choice(ks, p=p)
    return degrees


def build_powerlaw(
    n: int,
    alpha: float,
    k_min: int,
    k_max: int,
    seed: int | np.random.Generator = 0,
    directed: bool = False,
) -> Graph:
    """Configuration-model graph with power-law sampled degrees."""
    rng = seed if isinstance(seed, np.random.Generator) else np.random.default_rng(seed)
    degrees = sample_powerlaw_degrees(n, alpha, k_min, k_max, rng)
    return build_configuration_model(degrees, directed=directed, seed=rng)


def build_network(spec: NetworkSpec) -> Graph:
    """Generate the graph described by a NetworkSpec (deterministic per seed)."""
    if spec.family == "complete":
        return build_complete(spec.n)
    if spec.family == "multimodal":
        return build_multimodal(spec.n, spec.peaks, spec.seed)
    if spec.family == "configmodel":
        if spec.degrees is not None:
            degrees = np.asarray(spec.degrees, dtype=np.int64)
        else:
            degrees = spec.distribution.to_sequence()
        rng = np.random.default_rng(spec.seed)
        if not spec.directed and degrees.sum() % 2:
            degrees = _even_sum(degrees, rng, len(degrees))
        return build_configuration_model(degrees, directed=spec.directed, seed=rng)
    if spec.family == "powerlaw":
        return build_powerlaw(
            spec.n, spec.alpha, spec.k_min, spec.k_max, spec.seed, spec.directed
        )
    raise ValueError(f"unknown family {spec.family!r}")


def degree_distribution(g: Graph, kind: str = "total") -> DegreeDistribution:
    """Histogram of node degrees of a graph (in/out/total for directed)."""
    return DegreeDistribution.from_degrees(g.degrees(kind))
