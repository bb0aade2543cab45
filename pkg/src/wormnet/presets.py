"""Named network presets approximating the four contact-network families.

The real datasets behind the families are not available, so these are
documented approximations sized for desk-scale experiments, not ground truth:

* ``net-a``: flat IP connectivity inside one site -- a complete graph.
* ``net-b``: shared administrator accounts -- four discrete degree peaks.
* ``net-c``: email address books -- directed heavy-tailed out-degrees.
* ``net-d``: email traffic -- undirected heavy-tailed degrees.
"""

from __future__ import annotations

from .netgen import NetworkSpec

_PRESETS = {
    "net-a": NetworkSpec("complete", n=1000),
    "net-b": NetworkSpec(
        "multimodal",
        n=2000,
        seed=20,
        peaks=((1, 0.40), (4, 0.35), (12, 0.20), (40, 0.05)),
    ),
    "net-c": NetworkSpec(
        "powerlaw", n=5000, seed=30, directed=True, alpha=2.0, k_min=1, k_max=70
    ),
    "net-d": NetworkSpec(
        "powerlaw", n=10000, seed=40, directed=False, alpha=2.5, k_min=1, k_max=100
    ),
}

PRESET_NAMES = tuple(sorted(_PRESETS))


def preset(name: str) -> NetworkSpec:
    try:
        return _PRESETS[name]
    except KeyError:
        raise ValueError(
            f"unknown preset {name!r}; available: {', '.join(PRESET_NAMES)}"
        ) from None
