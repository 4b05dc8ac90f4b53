"""
The single place for numerical defaults. Every knob the CLI exposes lives in
`default_config`; json run configurations and command line flags are merged
on top of a deep copy of it.
"""

import copy
from pathlib import Path

import ujson

from faltings_height.general.errors import DomainError

default_config = {
    # number of q-terms kept in every q-expansion
    "series": {"order": 40},
    "inversion": {
        # |zeta| <= disk_radius -> Newton in u = w^3 (disk chart)
        "disk_radius": 1000.0,
        # |zeta| > cusp_radius -> Newton seeded from the q-expansion
        "cusp_radius": 3000.0,
        "seed_grid": 64,
        "max_iter": 60,
    },
    "sections": {
        "grid": 400,
        "ymax": 3.0,
        "refine_top_k": 8,
        "xatol": 1e-10,
        "fatol": 1e-14,
        "exponent_box": 1e-3,
        "cycle_tol": 1e-10,
        "min_step": 1e-9,
        "initial_step": 1e-5,
        "max_cycles": 200,
    },
    "circles": {
        "nodes": 4096,
        "tol": 1e-10,
        "max_nodes": 65536,
        "centers": [0.205],
        "sweep": [0.0, 1.0],
        "center_tol": 1e-4,
    },
    "certificates": {
        "samples": 200,
        "prop_b_samples": 10000,
        "tolerance": 1e-9,
        "cauchy_radius": 0.05,
        "cauchy_nodes": 256,
    },
    "scan": {
        "max_order": 30,
        "max_degree": 8,
        "max_coeff": 2,
        "threshold": -0.748623,
        "chunk_size": 10000,
        "checkpoint_every": 100000,
        "max_candidates": 5000000,
    },
    "workers": None,
    "out": None,
}


def _merge(base: dict, update: dict, prefix: str = "") -> dict:
    for k, v in update.items():
        if k not in base:
            raise DomainError(f"Unknown config key {prefix + k!r}")
        if isinstance(base[k], dict) and isinstance(v, dict):
            _merge(base[k], v, prefix=f"{prefix}{k}.")
        else:
            base[k] = v
    return base


def load_config(path: Path | str | None = None, **overrides) -> dict:
    """
    Load the run configuration.

    Parameters
    ----------
    path : Path | str | None
        optional json file whose content is merged over the defaults.
        Keys outside of `default_config` are rejected, except for the
        run-specific sections `polys`, `init_exponents`, `replay_exponents`
        which are passed through unchanged.
    **overrides
        dotted keys, e.g. `**{"sections.grid": 100}`, applied last. None
        values are ignored so unset command line flags do not clobber the
        file content.

    Returns
    -------
    dict
        the merged configuration
    """
    cfg = copy.deepcopy(default_config)

    if path is not None:
        content = ujson.loads(Path(path).read_text())
        passthrough = {
            k: content.pop(k)
            for k in ("polys", "init_exponents", "replay_exponents", "families")
            if k in content
        }
        _merge(cfg, content)
        cfg.update(passthrough)

    for key, value in overrides.items():
        if value is None:
            continue
        *parents, leaf = key.split(".")
        node = cfg
        for p in parents:
            if p not in node or not isinstance(node[p], dict):
                raise DomainError(f"Unknown config key {key!r}")
            node = node[p]
        if leaf not in node:
            raise DomainError(f"Unknown config key {key!r}")
        node[leaf] = value

    return cfg
