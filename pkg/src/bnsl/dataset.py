"""Discrete datasets and cached sufficient statistics.

A dataset is a complete table of state indices, one row per instance.  Joint
counts over variable subsets are served through :class:`StatsCache`, which
prefers marginalizing an already-cached superset table over making another
pass through the data, and keeps exact counters of how each request was
served.
"""

from __future__ import annotations

import io
from dataclasses import dataclass
from pathlib import Path

import numpy as np

from .errors import DataFormatError, ResourceLimitError


@dataclass(frozen=True)
class VariableDecl:
    """A named discrete variable with an ordered list of state labels."""

    name: str
    states: tuple[str, ...]

    def __post_init__(self):
        if len(self.states) < 2:
            raise ValueError(f"variable {self.name!r} needs at least 2 states")
        if len(set(self.states)) != len(self.states):
            raise ValueError(f"variable {self.name!r} has duplicate state labels")

    @property
    def cardinality(self) -> int:
        return len(self.states)


class Dataset:
    """Complete discrete instances over a fixed variable list.

    ``instances`` is an (N, n) integer matrix of state indices; every cell is
    present and within its variable's cardinality.
    """

    def __init__(self, variables: list[VariableDecl], instances: np.ndarray):
        names = [v.name for v in variables]
        if len(set(names)) != len(names):
            raise ValueError("duplicate variable names")
        instances = np.asarray(instances, dtype=np.int64)
        if instances.ndim != 2 or instances.shape[1] != len(variables):
            raise ValueError("instance matrix shape does not match variable list")
        for i, var in enumerate(variables):
            col = instances[:, i]
            if col.size and (col.min() < 0 or col.max() >= var.cardinality):
                raise ValueError(f"state index out of range for variable {var.name!r}")
        self.variables = list(variables)
        self.instances = instances
        self.name_to_index = {v.name: i for i, v in enumerate(variables)}

    @property
    def n_variables(self) -> int:
        return len(self.variables)

    @property
    def n_instances(self) -> int:
        return int(self.instances.shape[0])

    def cardinalities(self, scope=None) -> tuple[int, ...]:
        if scope is None:
            scope = range(self.n_variables)
        return tuple(self.variables[i].cardinality for i in scope)


def _detect_delimiter(header: str) -> str:
    return "\t" if "\t" in header else ","


def load_dataset(source) -> Dataset:
    """Parse a dataset file (path, text stream, or text content).

    Line 1 holds tab- or comma-separated variable names (delimiter detected
    from line 1 and fixed thereafter); every following non-empty, non-``#``
    line is one instance of state labels.  State lists become the sorted set
    of distinct labels per column.
    """
    text = _read_text(source)
    header = None
    delim = ","
    rows: list[list[str]] = []
    row_lines: list[int] = []
    for lineno, raw in enumerate(text.splitlines(), start=1):
        line = raw.rstrip("\n")
        if not line.strip() or line.lstrip().startswith("#"):
            continue
        if header is None:
            delim = _detect_delimiter(line)
            header = [f.strip() for f in line.split(delim)]
            if any(not name for name in header):
                raise DataFormatError("empty variable name in header", line=lineno)
            if len(set(header)) != len(header):
                raise DataFormatError("duplicate variable names in header", line=lineno)
            continue
        fields = [f.strip() for f in line.split(delim)]
        if len(fields) != len(header):
            raise DataFormatError("row arity mismatch", line=lineno)
        rows.append(fields)
        row_lines.append(lineno)
    if header is None:
        raise DataFormatError("missing header line", line=1)
    if not rows:
        raise DataFormatError("empty data section", line=1)

    variables = []
    columns = []
    for j, name in enumerate(header):
        labels = sorted({row[j] for row in rows})
        if len(labels) < 2:
            raise DataFormatError(
                f"variable {name!r} has a single observed state", line=1
            )
        index = {lab: i for i, lab in enumerate(labels)}
        variables.append(VariableDecl(name, tuple(labels)))
        columns.append(np.fromiter((index[row[j]] for row in rows), dtype=np.int64))
    instances = np.column_stack(columns)
    return Dataset(variables, instances)


def _read_text(source) -> str:
    """Read UTF-8 text from a path or a file-like object."""
    if isinstance(source, (str, Path)):
        with open(source, "r", encoding="utf-8") as f:
            return f.read()
    data = source.read()
    if isinstance(data, bytes):
        data = data.decode("utf-8")
    return data


def dataset_to_text(data: Dataset) -> str:
    """Serialize in the tab-delimited dataset format (round-trip safe)."""
    out = io.StringIO()
    out.write("\t".join(v.name for v in data.variables) + "\n")
    states = [v.states for v in data.variables]
    for row in data.instances:
        out.write("\t".join(states[j][row[j]] for j in range(len(states))) + "\n")
    return out.getvalue()


def write_dataset(data: Dataset, path) -> None:
    Path(path).write_text(dataset_to_text(data), encoding="utf-8")


@dataclass
class ContingencyTable:
    """Joint counts over a sorted scope of variable indices.

    ``counts`` axes follow ``scope`` order (ascending variable index).
    """

    scope: tuple[int, ...]
    counts: np.ndarray
    total: int

    def marginalize(self, keep) -> "ContingencyTable":
        return marginalize_table(self, keep)


def marginalize_table(table: ContingencyTable, keep) -> ContingencyTable:
    """Sum out every scope variable not in ``keep``; totals are preserved."""
    keep = tuple(sorted(keep))
    if not keep:
        raise ValueError("keep must be non-empty")
    if not set(keep) <= set(table.scope):
        raise ValueError(f"keep {keep} is not a subset of scope {table.scope}")
    if keep == table.scope:
        return ContingencyTable(table.scope, table.counts.copy(), table.total)
    drop_axes = tuple(i for i, v in enumerate(table.scope) if v not in set(keep))
    counts = table.counts.sum(axis=drop_axes)
    return ContingencyTable(keep, counts, table.total)


@dataclass
class CacheReport:
    """Counter snapshot; ``fresh_computations`` is the experiment "Stats" number."""

    fresh_computations: int
    marginalizations: int
    hits: int


class StatsCache:
    """Contingency-table cache keyed by sorted scope.

    A request is served, in order of preference, from an exact cached table,
    by marginalizing any cached superset, or by one fresh counting pass over
    the data.  Only fresh passes increment ``fresh_computations``.  There is
    no eviction; an optional cell cap aborts with an error instead of
    degrading silently.
    """

    def __init__(self, max_cells: int | None = None):
        self._tables: dict[tuple[int, ...], ContingencyTable] = {}
        self._scopes_by_var: dict[int, set[tuple[int, ...]]] = {}
        self._stored_cells = 0
        self.max_cells = max_cells
        self.fresh_computations = 0
        self.marginalizations = 0
        self.hits = 0

    def counts(self, data: Dataset, scope) -> ContingencyTable:
        key = tuple(sorted(scope))
        if not key:
            raise ValueError("scope must be non-empty")
        if len(set(key)) != len(key):
            raise ValueError("scope has duplicate variables")
        if key[0] < 0 or key[-1] >= data.n_variables:
            raise ValueError(f"scope {key} out of range")

        cached = self._tables.get(key)
        if cached is not None:
            self.hits += 1
            return cached

        superset = self._find_superset(key)
        if superset is not None:
            table = marginalize_table(self._tables[superset], key)
            self.marginalizations += 1
            self._store(key, table)
            return table

        table = self._fresh_pass(data, key)
        self.fresh_computations += 1
        self._store(key, table)
        return table

    def report(self) -> CacheReport:
        return CacheReport(self.fresh_computations, self.marginalizations, self.hits)

    def _find_superset(self, key) -> tuple[int, ...] | None:
        # intersect per-variable scope indexes, starting from the rarest variable
        candidate_sets = [self._scopes_by_var.get(v) for v in key]
        if any(s is None or not s for s in candidate_sets):
            return None
        candidates = set.intersection(*candidate_sets)
        if not candidates:
            return None
        return min(candidates, key=lambda s: (self._tables[s].counts.size, s))

    def _fresh_pass(self, data: Dataset, key) -> ContingencyTable:
        shape = data.cardinalities(key)
        size = int(np.prod(shape))
        self._check_cap(size)
        cols = tuple(data.instances[:, v] for v in key)
        flat = np.ravel_multi_index(cols, shape) if len(key) > 1 else cols[0]
        counts = np.bincount(flat, minlength=size).reshape(shape)
        return ContingencyTable(key, counts, data.n_instances)

    def _store(self, key, table: ContingencyTable) -> None:
        self._check_cap(table.counts.size)
        self._tables[key] = table
        self._stored_cells += int(table.counts.size)
        for v in key:
            self._scopes_by_var.setdefault(v, set()).add(key)

    def _check_cap(self, extra_cells: int) -> None:
        if self.max_cells is not None and self._stored_cells + extra_cells > self.max_cells:
            raise ResourceLimitError(
                f"statistics cache cap of {self.max_cells} cells exceeded "
                f"({self._stored_cells} stored, {extra_cells} requested)"
            )


def cache_report(cache: StatsCache) -> CacheReport:
    return cache.report()
