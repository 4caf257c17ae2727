"""Materialized index tables, their CSV form and an on-disk cache."""

from __future__ import annotations

import csv
import hashlib
import io
import json
import os
from dataclasses import dataclass, field
from pathlib import Path

import numpy as np

from .. import __version__
from ..errors import ConfigError, DomainError
from .calibration import IndexConfig, solve_cells

CSV_HEADER = ("s", "f", "remaining", "index")
_CACHE_FORMAT = 1


@dataclass(frozen=True, eq=False)
class IndexTable:
    """Index values on the cells ``s, f >= 1, s + f <= max_n``.

    ``values[s, f]`` (Gittins) or ``values[j, s, f]`` (Whittle, for
    ``remaining[j]``) holds the index; cells outside the table are NaN.  A
    Whittle table built with ``reach`` only fills the cells a trial starting
    from states with ``s + f <= reach`` can visit, i.e. those with
    ``s + f <= reach + T - remaining``.
    """

    config: IndexConfig
    max_n: int
    values: np.ndarray
    remaining: tuple[int, ...] = ()
    reach: int | None = None
    _pos: dict = field(default_factory=dict, repr=False, compare=False)

    def __post_init__(self):
        self.values.setflags(write=False)
        self._pos.update({r: j for j, r in enumerate(self.remaining)})

    @property
    def mode(self) -> str:
        return self.config.mode

    @property
    def is_gittins(self) -> bool:
        return self.config.is_gittins

    def covers(self, s: int, f: int, remaining: int | None = None) -> bool:
        if s < 1 or f < 1 or s + f > self.max_n:
            return False
        if self.is_gittins:
            return True
        j = self._pos.get(remaining)
        return j is not None and not np.isnan(self.values[j, s, f])

    def lookup(self, s: int, f: int, remaining: int | None = None) -> float:
        if self.is_gittins:
            if remaining is not None:
                raise DomainError("a Gittins table has no remaining-horizon axis")
            if not self.covers(s, f):
                raise DomainError(f"state ({s}, {f}) is outside the table (max_n={self.max_n})")
            return float(self.values[s, f])
        if remaining not in self._pos:
            raise DomainError(f"the table does not cover remaining = {remaining}")
        if not self.covers(s, f, remaining):
            raise DomainError(f"state ({s}, {f}) at remaining {remaining} is outside the table")
        return float(self.values[self._pos[remaining], s, f])

    def __getitem__(self, key) -> float:
        return self.lookup(*key)

    def grid(self, remaining: int | None = None) -> np.ndarray:
        """The ``(max_n + 1) x (max_n + 1)`` array indexed ``[s, f]``."""
        if self.is_gittins:
            return self.values
        if remaining not in self._pos:
            raise DomainError(f"the table does not cover remaining = {remaining}")
        return self.values[self._pos[remaining]]

    def entries(self):
        """Yield ``(s, f, remaining, value)`` in CSV order; remaining is None for Gittins."""
        for r in (self.remaining or (None,)):
            g = self.grid(r)
            for s in range(1, self.max_n):
                for f in range(1, self.max_n - s + 1):
                    v = g[s, f]
                    if not np.isnan(v):
                        yield s, f, r, float(v)

    def __len__(self) -> int:
        return int(np.count_nonzero(~np.isnan(self.values)))

    def preview(self, remaining: int | None = None, size: int = 6, digits: int = 4) -> str:
        """Rows f = 1..size, columns s = 1..size."""
        g = self.grid(remaining)
        width = digits + 3
        lines = ["f\\s".ljust(4) + "".join(str(s).rjust(width) for s in range(1, size + 1))]
        for f in range(1, size + 1):
            cells = []
            for s in range(1, size + 1):
                ok = s + f <= self.max_n and not np.isnan(g[s, f])
                cells.append(f"{g[s, f]:.{digits}f}".rjust(width) if ok else "-".rjust(width))
            lines.append(str(f).ljust(4) + "".join(cells))
        return "\n".join(lines)


def _check_request(cfg: IndexConfig, max_n, remaining, reach):
    if isinstance(max_n, bool) or not isinstance(max_n, (int, np.integer)):
        raise ConfigError(f"max_n must be an integer, got {max_n!r}")
    if max_n < 2:
        raise DomainError(f"max_n must be >= 2 for the table to hold any state, got {max_n}")
    T = cfg.truncation_horizon
    if cfg.is_gittins:
        if remaining:
            raise ConfigError("a Gittins table has no remaining-horizon axis")
        if reach is not None:
            raise ConfigError("reach only applies to Whittle tables")
        if max_n > T - 1:
            raise DomainError(f"max_n = {max_n} exceeds the truncation grid (at most {T - 1})")
        return ()
    if not remaining:
        raise ConfigError("a Whittle table needs at least one remaining-horizon value")
    rem = tuple(sorted({int(r) for r in remaining}))
    if rem[0] < 1 or rem[-1] > T:
        raise DomainError(f"remaining values must lie in [1, {T}]")
    if reach is not None and reach < 2:
        raise DomainError("reach must be >= 2")
    return rem


def build_table(cfg: IndexConfig, max_n: int, remaining=None, reach: int | None = None) -> IndexTable:
    """Compute every cell with ``s + f <= max_n`` (per remaining value for Whittle)."""
    rem = _check_request(cfg, max_n, remaining, reach)
    T = cfg.truncation_horizon
    s_idx, f_idx = np.meshgrid(np.arange(max_n + 1), np.arange(max_n + 1), indexing="ij")
    valid = (s_idx >= 1) & (f_idx >= 1) & (s_idx + f_idx <= max_n)
    if cfg.is_gittins:
        ss, ff = s_idx[valid], f_idx[valid]
        values = np.full((max_n + 1, max_n + 1), np.nan)
        values[ss, ff] = solve_cells(ss, ff, T - ss - ff, cfg)
        return IndexTable(cfg, int(max_n), values)

    values = np.full((len(rem), max_n + 1, max_n + 1), np.nan)
    cells = []
    for j, r in enumerate(rem):
        mask = valid if reach is None else valid & (s_idx + f_idx <= reach + T - r)
        ss, ff = s_idx[mask], f_idx[mask]
        cells.append((np.full(ss.size, j), ss, ff, np.full(ss.size, r)))
    jj, ss, ff, rr = (np.concatenate(c) for c in zip(*cells))
    values[jj, ss, ff] = solve_cells(ss, ff, rr, cfg)
    return IndexTable(cfg, int(max_n), values, rem, reach)


def _sidecar_path(path: Path) -> Path:
    return path.with_suffix(".json")


def table_metadata(table: IndexTable) -> dict:
    return {
        "tool": "bandit_trials",
        "version": __version__,
        "config": table.config.to_dict(),
        "config_hash": config_hash(table.config),
        "max_n": table.max_n,
        "remaining": list(table.remaining),
        "reach": table.reach,
        "cells": len(table),
    }


def table_csv(table: IndexTable) -> str:
    buf = io.StringIO()
    w = csv.writer(buf, lineterminator="\n")
    w.writerow(CSV_HEADER)
    for s, f, r, v in table.entries():
        w.writerow((s, f, "" if r is None else r, f"{v:.6f}"))
    return buf.getvalue()


def write_table(table: IndexTable, path) -> Path:
    """Write ``path`` (CSV, 6 decimals) and a JSON sidecar next to it."""
    path = Path(path)
    path.write_text(table_csv(table))
    _sidecar_path(path).write_text(json.dumps(table_metadata(table), indent=2) + "\n")
    return path


def read_table(path) -> IndexTable:
    path = Path(path)
    side = _sidecar_path(path)
    if not side.exists():
        raise ConfigError(f"missing sidecar {side}")
    meta = json.loads(side.read_text())
    cfg = IndexConfig.from_dict(meta["config"])
    max_n = int(meta["max_n"])
    rem = tuple(meta.get("remaining") or ())
    pos = {r: j for j, r in enumerate(rem)}
    shape = (max_n + 1, max_n + 1) if cfg.is_gittins else (len(rem), max_n + 1, max_n + 1)
    values = np.full(shape, np.nan)
    with path.open(newline="") as fh:
        rows = csv.reader(fh)
        if tuple(next(rows, ())) != CSV_HEADER:
            raise ConfigError(f"{path}: expected header {','.join(CSV_HEADER)}")
        for row in rows:
            s, f, r, v = int(row[0]), int(row[1]), row[2], float(row[3])
            if s < 1 or f < 1 or s + f > max_n:
                raise ConfigError(f"{path}: cell ({s}, {f}) outside max_n = {max_n}")
            if cfg.is_gittins:
                values[s, f] = v
            else:
                if int(r) not in pos:
                    raise ConfigError(f"{path}: remaining {r} not declared in the sidecar")
                values[pos[int(r)], s, f] = v
    return IndexTable(cfg, max_n, values, rem, meta.get("reach"))


def config_hash(cfg: IndexConfig, **extra) -> str:
    blob = json.dumps({"config": cfg.to_dict(), **extra}, sort_keys=True)
    return hashlib.sha256(blob.encode()).hexdigest()[:16]


def cache_dir() -> Path:
    env = os.environ.get("BANDIT_TRIALS_CACHE")
    return Path(env) if env else Path.home() / ".cache" / "bandit_trials"


_memo: dict[str, IndexTable] = {}


def cached_table(cfg: IndexConfig, max_n: int, remaining=None, reach: int | None = None,
                 use_disk: bool = True) -> IndexTable:
    """``build_table`` with an in-process memo and an ``.npy`` cache on disk.

    Set ``BANDIT_TRIALS_CACHE`` to relocate the cache directory.
    """
    rem = _check_request(cfg, max_n, remaining, reach)
    key = config_hash(cfg, max_n=int(max_n), remaining=list(rem), reach=reach,
                      fmt=_CACHE_FORMAT, version=__version__)
    if key in _memo:
        return _memo[key]
    path = cache_dir() / f"table-{key}.npy"
    table = None
    if use_disk and path.exists():
        try:
            values = np.load(path, allow_pickle=False)
            table = IndexTable(cfg, int(max_n), values, rem, reach)
        except (OSError, ValueError):
            table = None
    if table is None:
        table = build_table(cfg, max_n, rem or None, reach)
        if use_disk:
            try:
                path.parent.mkdir(parents=True, exist_ok=True)
                tmp = path.with_suffix(f".{os.getpid()}.tmp.npy")
                np.save(tmp, np.asarray(table.values))
                os.replace(tmp, path)
            except OSError:
                pass
    _memo[key] = table
    return table
