"""Dyad configurations and the degree quantities derived from them.

A dyad configuration is an undirected simple graph on units ``1..G`` in which
each edge carries one observation. Observations are indexed by the position of
their edge in the input sequence, so a :class:`DyadGraph` lines up row-for-row
with the outcome vector and regressor matrix of a dataset.
"""

from __future__ import annotations

import io
import math
from dataclasses import dataclass, field
from pathlib import Path
from typing import Iterable, Sequence

import numpy as np

from dyadreg.exceptions import (
    DuplicateDyadError,
    EmptyGraphError,
    IndexOutOfRangeError,
    InputError,
    IsolatedUnitError,
    OutOfDomainError,
    SelfPairError,
    UnitOutOfRangeError,
)

__all__ = [
    "DyadGraph",
    "GraphDiagnostics",
    "build_graph",
    "overlaps",
    "neighbor_dyads",
    "diagnostics",
    "janson_ratio",
    "read_edgelist",
    "write_edgelist",
    "to_dot",
]


@dataclass(frozen=True, eq=False)
class DyadGraph:
    """Immutable dyad configuration.

    Attributes
    ----------
    num_units : int
        Number of units ``G``.
    pairs : ndarray of shape (N, 2)
        1-based unit labels of each dyad, in input order.
    incidence : tuple of ndarray
        ``incidence[g - 1]`` holds the sorted dyad indices (0-based) that
        contain unit ``g``.
    degrees : ndarray of shape (G,)
        ``M_g``, the number of dyads containing each unit.
    """

    num_units: int
    pairs: np.ndarray
    incidence: tuple = field(repr=False)
    degrees: np.ndarray = field(repr=False)

    @property
    def num_dyads(self) -> int:
        return int(self.pairs.shape[0])

    @property
    def first(self) -> np.ndarray:
        """0-based index of the first unit of every dyad."""
        return self.pairs[:, 0] - 1

    @property
    def second(self) -> np.ndarray:
        """0-based index of the second unit of every dyad."""
        return self.pairs[:, 1] - 1

    def units_of(self, n: int) -> tuple[int, int]:
        _check_index(self, n)
        g, h = self.pairs[n]
        return int(g), int(h)

    def edges(self) -> list[tuple[int, int]]:
        return [(int(g), int(h)) for g, h in self.pairs]

    def __len__(self) -> int:
        return self.num_dyads

    def __repr__(self) -> str:
        return f"DyadGraph(num_units={self.num_units}, num_dyads={self.num_dyads})"


@dataclass(frozen=True)
class GraphDiagnostics:
    num_units: int
    num_dyads: int
    m_high: int
    m_low: int
    med_degree: float
    dependency_degree: int
    kappa: float


def build_graph(edges: Iterable[Sequence[int]], num_units: int) -> DyadGraph:
    """Validate ``edges`` and build a :class:`DyadGraph`.

    Dyad ``n`` is the ``n``-th pair of ``edges``. Pairs are unordered, so
    ``(g, h)`` and ``(h, g)`` name the same dyad and may not both appear.

    Raises
    ------
    UnitOutOfRangeError, SelfPairError, DuplicateDyadError, EmptyGraphError,
    IsolatedUnitError
    """
    num_units = int(num_units)
    if num_units < 2:
        raise UnitOutOfRangeError(f"num_units must be at least 2, got {num_units}")

    seen: dict[tuple[int, int], int] = {}
    rows: list[tuple[int, int]] = []
    for n, edge in enumerate(edges):
        if len(edge) != 2:
            raise InputError(f"dyad {n}: expected a pair of units, got {edge!r}")
        g, h = int(edge[0]), int(edge[1])
        if not (1 <= g <= num_units and 1 <= h <= num_units):
            raise UnitOutOfRangeError(
                f"dyad {n}: units ({g}, {h}) outside 1..{num_units}"
            )
        if g == h:
            raise SelfPairError(f"dyad {n}: self-pair ({g}, {h})")
        key = (g, h) if g < h else (h, g)
        if key in seen:
            raise DuplicateDyadError(
                f"dyad {n}: ({g}, {h}) duplicates dyad {seen[key]}"
            )
        seen[key] = n
        rows.append((g, h))

    if not rows:
        raise EmptyGraphError("a dyad graph needs at least one dyad")

    pairs = np.asarray(rows, dtype=np.int64)
    pairs.setflags(write=False)

    units = pairs.ravel() - 1
    dyad_ids = np.repeat(np.arange(len(rows)), 2)
    order = np.lexsort((dyad_ids, units))
    degrees = np.bincount(units, minlength=num_units)
    isolated = np.flatnonzero(degrees == 0)
    if isolated.size:
        raise IsolatedUnitError(
            f"units without any dyad: {(isolated + 1).tolist()[:10]}"
            " (renumber units so every unit appears in a dyad)"
        )
    bounds = np.concatenate(([0], np.cumsum(degrees)))
    sorted_dyads = dyad_ids[order]
    incidence = []
    for g in range(num_units):
        inc = sorted_dyads[bounds[g]:bounds[g + 1]].copy()
        inc.setflags(write=False)
        incidence.append(inc)
    degrees.setflags(write=False)
    return DyadGraph(num_units, pairs, tuple(incidence), degrees)


def _check_index(graph: DyadGraph, n: int) -> None:
    if not 0 <= n < graph.num_dyads:
        raise IndexOutOfRangeError(
            f"dyad index {n} outside 0..{graph.num_dyads - 1}"
        )


def overlaps(graph: DyadGraph, n: int, m: int) -> bool:
    """True iff dyads ``n`` and ``m`` share a unit (always true for n == m)."""
    _check_index(graph, n)
    _check_index(graph, m)
    a = graph.pairs[n]
    b = graph.pairs[m]
    return bool(a[0] == b[0] or a[0] == b[1] or a[1] == b[0] or a[1] == b[1])


def neighbor_dyads(graph: DyadGraph, n: int) -> np.ndarray:
    """Sorted indices of every dyad sharing a unit with ``n``, ``n`` included."""
    _check_index(graph, n)
    g, h = graph.pairs[n]
    return np.union1d(graph.incidence[g - 1], graph.incidence[h - 1])


def diagnostics(graph: DyadGraph) -> GraphDiagnostics:
    """Degree summary, dependency-graph degree and the df correction ``kappa``.

    ``med_degree`` is the ordinary sample median of the unit degrees (mean of
    the two middle values when G is even). ``dependency_degree`` is
    ``2 * (max degree - 1)``, replaced by 1 when no two dyads overlap.
    """
    deg = graph.degrees
    m_high = int(deg.max())
    m_low = int(deg.min())
    med = float(np.median(deg))
    d_n = 2 * (m_high - 1)
    if d_n == 0:
        d_n = 1
    kappa = graph.num_units * med / m_high
    return GraphDiagnostics(
        num_units=graph.num_units,
        num_dyads=graph.num_dyads,
        m_high=m_high,
        m_low=m_low,
        med_degree=med,
        dependency_degree=d_n,
        kappa=kappa,
    )


def janson_ratio(graph: DyadGraph, sigma_n: float, bound_a: float, ell: int) -> float:
    """Finite-sample value of ``(N/D)^(1/ell) * D * A / sigma``.

    ``D`` is the dependency-graph degree from :func:`diagnostics`. Small
    values indicate the dependency-graph CLT bound is tight; the number says
    nothing on its own about a limit.
    """
    if int(ell) != ell or ell < 3:
        raise OutOfDomainError(f"ell must be an integer >= 3, got {ell!r}")
    if not (sigma_n > 0 and bound_a > 0) or not (
        math.isfinite(sigma_n) and math.isfinite(bound_a)
    ):
        raise OutOfDomainError("sigma_n and bound_a must be positive and finite")
    d_n = diagnostics(graph).dependency_degree
    n = graph.num_dyads
    return (n / d_n) ** (1.0 / int(ell)) * d_n * bound_a / sigma_n


# -- edge list / DOT ---------------------------------------------------------


def read_edgelist(source, num_units: int | None = None) -> DyadGraph:
    """Read ``g,h`` lines (1-based, optional header, ``#`` comments)."""
    if isinstance(source, (str, Path)):
        text = Path(source).read_text()
    else:
        text = source.read()
    edges = []
    for lineno, raw in enumerate(text.splitlines(), start=1):
        line = raw.split("#", 1)[0].strip()
        if not line:
            continue
        parts = [p.strip() for p in line.split(",")]
        if len(parts) != 2:
            raise InputError(f"line {lineno}: expected 'g,h', got {raw!r}")
        try:
            g, h = int(parts[0]), int(parts[1])
        except ValueError:
            if not edges:
                continue  # header
            raise InputError(f"line {lineno}: non-integer unit in {raw!r}") from None
        edges.append((g, h))
    if num_units is None:
        num_units = max((max(e) for e in edges), default=0)
    return build_graph(edges, num_units)


def write_edgelist(graph: DyadGraph, dest=None, header: bool = True) -> str:
    buf = io.StringIO()
    if header:
        buf.write("g,h\n")
    for g, h in graph.pairs:
        buf.write(f"{g},{h}\n")
    text = buf.getvalue()
    if isinstance(dest, (str, Path)):
        Path(dest).write_text(text)
    elif dest is not None:
        dest.write(text)
    return text


def to_dot(graph: DyadGraph, name: str = "dyads") -> str:
    lines = [f"graph {name} {{"]
    lines.extend(f"  {g};" for g in range(1, graph.num_units + 1))
    lines.extend(f"  {g} -- {h};" for g, h in graph.pairs)
    lines.append("}")
    return "\n".join(lines) + "\n"
