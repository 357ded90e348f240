"""Simulation designs: dyad configurations, covariates and error processes.

Three configurations are available:

* ``D`` -- every pair of units forms a dyad;
* ``S`` -- a sparse ring with doubling/tripling chords, bounded degree;
* ``B`` -- a ring whose units each also attach to one of two hubs.

Outcomes follow ``y = 1 + 0 * x + u``. Random numbers come from numpy's
counter-based Philox generator. The key of each generator is derived by
hashing ``(master_seed, stream_id, purpose)`` through ``numpy.random.SeedSequence``,
so every replication owns an independent stream that does not depend on the
order in which replications are run. Uniform variates are numpy's 53-bit
doubles.
"""

from __future__ import annotations

import math
from dataclasses import dataclass
from functools import lru_cache

import numpy as np

from dyadreg.estimator import DyadDataset
from dyadreg.exceptions import ConfigError, InputError
from dyadreg.graph import DyadGraph, build_graph

__all__ = [
    "MODELS",
    "ERRORS",
    "DesignSpec",
    "RngStream",
    "gen_model_d",
    "gen_model_s",
    "gen_model_b",
    "gen_graph",
    "two_group_split",
    "gen_covariates",
    "gen_errors",
    "simulate_dataset",
]

MODELS = ("D", "S", "B")
ERRORS = ("iid", "unit_shock", "two_group")
SQRT3 = math.sqrt(3.0)

_PURPOSE = {"covariates": 1, "errors": 2}


def _normalize_error(name: str) -> str:
    key = str(name).strip().lower().replace("-", "_")
    aliases = {"unit": "unit_shock", "shock": "unit_shock", "twogroup": "two_group"}
    key = aliases.get(key, key)
    if key not in ERRORS:
        raise ConfigError(f"unknown error specification {name!r}")
    return key


@dataclass(frozen=True)
class DesignSpec:
    """One simulation design.

    ``covariate_spec`` is tied to the errors: i.i.d. errors pair with i.i.d.
    uniform regressors, every other error process with the unit distance
    ``|z_g - z_h|``. It is filled in when omitted.
    """

    model: str
    num_units: int
    error_spec: str = "iid"
    r: float | None = None
    covariate_spec: str | None = None

    def __post_init__(self):
        model = str(self.model).upper()
        if model not in MODELS:
            raise ConfigError(f"unknown model {self.model!r}")
        error = _normalize_error(self.error_spec)
        expected = "iid_uniform" if error == "iid" else "unit_distance"
        cov = self.covariate_spec or expected
        if cov != expected:
            raise ConfigError(
                f"{error} errors require {expected} covariates, got {cov!r}"
            )
        r = self.r
        if error == "two_group":
            if r is None or not 0.0 <= float(r) <= 1.0:
                raise ConfigError("two_group errors need r in [0, 1]")
            if model not in ("D", "S"):
                raise ConfigError("two_group errors are defined for models D and S")
            r = float(r)
        elif r is not None:
            raise ConfigError("r only applies to two_group errors")
        object.__setattr__(self, "model", model)
        object.__setattr__(self, "num_units", int(self.num_units))
        object.__setattr__(self, "error_spec", error)
        object.__setattr__(self, "r", r)
        object.__setattr__(self, "covariate_spec", cov)

    def label(self) -> str:
        err = self.error_spec if self.r is None else f"two_group(r={self.r:g})"
        return f"model={self.model} error={err} G={self.num_units}"


@dataclass(frozen=True)
class RngStream:
    master_seed: int
    stream_id: int = 0

    def generator(self, purpose: str = "errors") -> np.random.Generator:
        seq = np.random.SeedSequence(
            [self.master_seed & 0xFFFFFFFFFFFFFFFF, self.stream_id & 0xFFFFFFFFFFFFFFFF,
             _PURPOSE[purpose]]
        )
        return np.random.Generator(np.random.Philox(seq))


# -- configurations ----------------------------------------------------------


def _check_g(num_units: int, minimum: int, model: str) -> int:
    g = int(num_units)
    if g < minimum:
        raise InputError(f"model {model} needs G >= {minimum}, got {g}")
    return g


def _from_rules(edges, num_units: int) -> DyadGraph:
    seen = set()
    unique = []
    for g, h in edges:
        if g == h:
            continue
        key = (min(g, h), max(g, h))
        if key not in seen:
            seen.add(key)
            unique.append(key)
    return build_graph(unique, num_units)


@lru_cache(maxsize=64)
def gen_model_d(num_units: int) -> DyadGraph:
    """Complete graph, dyads ordered lexicographically."""
    G = _check_g(num_units, 2, "D")
    return build_graph([(g, h) for g in range(1, G) for h in range(g + 1, G + 1)], G)


@lru_cache(maxsize=64)
def gen_model_s(num_units: int) -> DyadGraph:
    """Ring ``|g - h| = 1`` closed by ``(1, G)``, plus ``(g, 2g)`` and ``(g, 3g)``."""
    G = _check_g(num_units, 4, "S")
    edges = [(g, g + 1) for g in range(1, G)]
    edges.append((1, G))
    edges += [(g, 2 * g) for g in range(1, G // 2 + 1)]
    edges += [(g, 3 * g) for g in range(1, G // 3 + 1)]
    return _from_rules(edges, G)


@lru_cache(maxsize=64)
def gen_model_b(num_units: int) -> DyadGraph:
    """Ring on units ``1..G-2`` with two hubs ``G-1`` and ``G``.

    Units ``g <= G//2`` attach to hub ``G-1`` and the rest to hub ``G``. For
    ``G`` in {100, 250, 800} the ring gains second neighbours, and for
    ``G = 800`` neighbours up to distance 4, with matching wrap-around chords.
    """
    G = _check_g(num_units, 6, "B")
    ring = G - 2  # units strictly below G - 1
    edges = [(g, g + 1) for g in range(1, ring)]
    edges.append((1, G - 2))
    if G in (100, 250, 800):
        edges += [(g, g + 2) for g in range(1, ring - 1)]
        edges += [(1, G - 3), (2, G - 2)]
    if G == 800:
        edges += [(g, g + d) for d in (3, 4) for g in range(1, ring - d + 1)]
        edges += [(1, G - 4), (1, G - 5), (2, G - 3), (2, G - 4)]
    half = G // 2
    edges += [(g, G - 1) for g in range(1, half + 1)]
    edges += [(g, G) for g in range(half + 1, G + 1)]
    return _from_rules(edges, G)


def gen_graph(model: str, num_units: int) -> DyadGraph:
    gens = {"D": gen_model_d, "S": gen_model_s, "B": gen_model_b}
    try:
        return gens[str(model).upper()](int(num_units))
    except KeyError:
        raise ConfigError(f"unknown model {model!r}") from None


# -- covariates and errors -----------------------------------------------------


def _generator(stream, purpose: str):
    if isinstance(stream, np.random.Generator):
        return stream
    return stream.generator(purpose)


def gen_covariates(graph: DyadGraph, spec: DesignSpec, stream) -> np.ndarray:
    """Scalar regressor for every dyad.

    ``iid_uniform`` draws ``x_n ~ U[0, 1]``. ``unit_distance`` draws one
    ``z_g ~ U[0, 1]`` per unit and sets ``x_n = |z_g - z_h|``.
    """
    rng = _generator(stream, "covariates")
    if spec.covariate_spec == "iid_uniform":
        return rng.random(graph.num_dyads)
    z = rng.random(graph.num_units)
    return np.abs(z[graph.first] - z[graph.second])


def two_group_split(num_units: int, r: float) -> int:
    """Size of the first unit group, ``floor((G - G^s) / 2)`` with ``s = (1+r)/2``."""
    s = 0.5 * (1.0 + r)
    return int(math.floor((num_units - num_units**s) / 2.0 + 1e-12))


def gen_errors(graph: DyadGraph, spec: DesignSpec, stream) -> np.ndarray:
    """Error for every dyad; all shocks are ``U[-sqrt 3, sqrt 3]`` (unit variance).

    Draw order: unit shocks for units ``1..G`` first (non-i.i.d. specs), then
    one idiosyncratic shock per dyad.
    """
    rng = _generator(stream, "errors")
    if spec.error_spec == "iid":
        return SQRT3 * (2.0 * rng.random(graph.num_dyads) - 1.0)
    alpha = SQRT3 * (2.0 * rng.random(graph.num_units) - 1.0)
    eps = SQRT3 * (2.0 * rng.random(graph.num_dyads) - 1.0)
    shock = alpha[graph.first] + alpha[graph.second]
    if spec.error_spec == "two_group":
        cut = two_group_split(graph.num_units, spec.r)
        # 0-based unit index < cut puts the unit in the first group
        differ = (graph.first < cut) != (graph.second < cut)
        shock = np.where(differ, -shock, shock)
    return shock + eps


def simulate_dataset(design: DesignSpec, stream: RngStream) -> DyadDataset:
    """Dataset with regressors ``[1, x]`` and ``y = 1 + u`` (true slope 0)."""
    graph = gen_graph(design.model, design.num_units)
    x = gen_covariates(graph, design, stream)
    u = gen_errors(graph, design, stream)
    X = np.column_stack([np.ones(graph.num_dyads), x])
    return DyadDataset(graph, 1.0 + u, X)
