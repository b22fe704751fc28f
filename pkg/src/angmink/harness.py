"""Grid sweep over (m, p, rootless, k, family, weights) with CSV output."""

from __future__ import annotations

import csv
import json
import logging
import time
from dataclasses import asdict, dataclass, field
from pathlib import Path
from typing import IO, Iterable, Sequence

import numpy as np

from .classifiers import FAMILIES, WEIGHT_KINDS, ScoreMatrix, scores_from_tables, tables_needed
from .corpus import CountedCorpus, build_vocabulary, load_counted, vectorize
from .evaluation import multiclass_auroc, ovr_macro_auroc
from .neighbours import batch_neighbours

log = logging.getLogger(__name__)

CSV_HEADER = "family,weights,rootless,p,m,k,auroc,auroc_ovr,n_train,n_test,wall_ms"
CONFIG_KEYS = ("p_grid", "m_grid", "k_grid", "families", "weight_kinds", "rootless", "threads")

DEFAULT_P_GRID = tuple(round(0.1 * i, 1) for i in range(1, 41))
DEFAULT_M_GRID = tuple(2**q for q in range(1, 13))
DEFAULT_K_GRID = tuple(2**r for r in range(0, 9))

# test queries handled per neighbour-search batch; bounds the size of the neighbour tables
QUERY_CHUNK = 512


class SweepError(RuntimeError):
    pass


@dataclass(frozen=True)
class SweepConfig:
    p_grid: tuple[float, ...] = DEFAULT_P_GRID
    m_grid: tuple[int, ...] = DEFAULT_M_GRID
    k_grid: tuple[int, ...] = DEFAULT_K_GRID
    families: tuple[str, ...] = FAMILIES
    weight_kinds: tuple[str, ...] = WEIGHT_KINDS
    rootless: tuple[bool, ...] = (False, True)
    threads: int = 1
    data: Path | None = None
    out: Path | None = None

    def __post_init__(self) -> None:
        for name in ("p_grid", "m_grid", "k_grid", "families", "weight_kinds", "rootless"):
            values = tuple(getattr(self, name))
            if not values:
                raise ValueError(f"{name} must not be empty")
            object.__setattr__(self, name, values)
        if any(not p > 0 for p in self.p_grid):
            raise ValueError("p_grid values must be positive")
        if any(int(m) != m or m < 1 for m in self.m_grid):
            raise ValueError("m_grid values must be positive integers")
        if any(int(k) != k or k < 1 for k in self.k_grid):
            raise ValueError("k_grid values must be positive integers")
        if unknown := set(self.families) - set(FAMILIES):
            raise ValueError(f"unknown families: {sorted(unknown)}")
        if unknown := set(self.weight_kinds) - set(WEIGHT_KINDS):
            raise ValueError(f"unknown weight kinds: {sorted(unknown)}")
        if any(not isinstance(r, bool) for r in self.rootless):
            raise ValueError("rootless entries must be booleans")
        if self.threads < 1:
            raise ValueError("threads must be >= 1")

    @classmethod
    def from_dict(cls, raw: dict, data: Path | str | None = None, out: Path | str | None = None) -> SweepConfig:
        unknown = set(raw) - set(CONFIG_KEYS)
        if unknown:
            raise ValueError(f"unknown config keys: {sorted(unknown)}")
        kwargs = {k: (tuple(v) if isinstance(v, list) else v) for k, v in raw.items()}
        return cls(
            **kwargs,
            data=Path(data) if data is not None else None,
            out=Path(out) if out is not None else None,
        )

    @classmethod
    def from_json(cls, path: Path | str, **kwargs) -> SweepConfig:
        return cls.from_dict(json.loads(Path(path).read_text(encoding="utf-8")), **kwargs)


def format_p(p: float) -> str:
    return f"{p:.1f}" if round(p, 1) == p else f"{p:g}"


@dataclass(frozen=True)
class SweepRow:
    family: str
    weights: str
    rootless: bool
    p: float
    m: int
    k: int
    auroc: float
    auroc_ovr: float
    n_train: int
    n_test: int
    wall_ms: float = field(compare=False)

    def csv_fields(self) -> list[str]:
        return [
            self.family,
            self.weights,
            "true" if self.rootless else "false",
            format_p(self.p),
            str(self.m),
            str(self.k),
            f"{self.auroc:.6f}",
            f"{self.auroc_ovr:.6f}",
            str(self.n_train),
            str(self.n_test),
            f"{self.wall_ms:.3f}",
        ]

    @classmethod
    def from_csv_fields(cls, rec: dict[str, str]) -> SweepRow:
        return cls(
            rec["family"],
            rec["weights"],
            rec["rootless"] == "true",
            float(rec["p"]),
            int(rec["m"]),
            int(rec["k"]),
            float(rec["auroc"]),
            float(rec["auroc_ovr"]),
            int(rec["n_train"]),
            int(rec["n_test"]),
            float(rec["wall_ms"]),
        )


def read_results(path: Path | str) -> list[SweepRow]:
    with open(path, newline="", encoding="utf-8") as fh:
        lines = [line for line in fh if not line.startswith("#")]
    return [SweepRow.from_csv_fields(rec) for rec in csv.DictReader(lines)]


def _write_rows(fh: IO[str] | None, rows: Iterable[SweepRow]) -> None:
    if fh is None:
        return
    for row in rows:
        fh.write(",".join(row.csv_fields()) + "\n")
    fh.flush()


def run_sweep(
    config: SweepConfig,
    train: CountedCorpus | None = None,
    test: CountedCorpus | None = None,
) -> list[SweepRow]:
    """Evaluate every grid cell; rows come out in (m, p, rootless, k, family, weights) order.

    Each (m, p) group shares one neighbour search at the largest k; smaller k
    read prefixes of those lists. When ``config.out`` is set, rows are
    appended to it after each group.
    """
    if train is None or test is None:
        if config.data is None:
            raise ValueError("no corpus given and config.data is unset")
        train, test = load_counted(config.data)

    k_max = max(config.k_grid)
    needs = tables_needed(config.families)
    full_vocab = build_vocabulary(train, max(config.m_grid))
    train_full = vectorize(train, full_vocab)
    test_full = vectorize(test, full_vocab)

    rows: list[SweepRow] = []
    fh = open(config.out, "w", encoding="utf-8", newline="") if config.out is not None else None
    cell = "setup"
    try:
        if fh is not None:
            fh.write(CSV_HEADER + "\n")
        for m in config.m_grid:
            cell = f"m={m}"
            vocab = build_vocabulary(train, m)
            if vocab.terms != full_vocab.terms[: len(vocab)]:
                raise SweepError(f"vocabulary for m={m} is not a prefix of the m={full_vocab.m} vocabulary")
            train_m = train_full.restrict_columns(m)
            test_m = test_full.restrict_columns(m)
            n_classes = len(train_m.classes)
            for p in config.p_grid:
                cell = f"m={m} p={format_p(p)}"
                group = _sweep_group(config, train_m, test_m, m, p, k_max, n_classes, needs)
                rows.extend(group)
                _write_rows(fh, group)
                log.info("finished %s (%d cells)", cell, len(group))
    except Exception as exc:
        if fh is not None:
            fh.write(f"# aborted at {cell}: {exc}\n")
            fh.flush()
        if isinstance(exc, SweepError):
            raise
        raise SweepError(f"sweep failed at {cell}: {exc}") from exc
    finally:
        if fh is not None:
            fh.close()
    return rows


def _sweep_group(config, train_m, test_m, m, p, k_max, n_classes, needs) -> list[SweepRow]:
    cells = [
        (r, k, fam, w)
        for r in config.rootless
        for k in config.k_grid
        for fam in config.families
        for w in config.weight_kinds
    ]
    scores = {c: np.empty((len(test_m), n_classes)) for c in cells}
    elapsed = dict.fromkeys(cells, 0.0)
    for lo in range(0, len(test_m), QUERY_CHUNK):
        chunk = np.arange(lo, min(lo + QUERY_CHUNK, len(test_m)))
        tables = batch_neighbours(
            test_m, train_m, p, tuple(config.rootless), k_max,
            threads=config.threads, rows=chunk, **needs,
        )
        for c in cells:
            r, k, fam, w = c
            try:
                t0 = time.perf_counter()
                scores[c][chunk] = scores_from_tables(tables[r], fam, k, w, n_classes)
                elapsed[c] += time.perf_counter() - t0
            except Exception as exc:
                raise SweepError(f"cell family={fam} weights={w} rootless={r} p={format_p(p)} m={m} k={k}: {exc}") from exc

    out = []
    for c in cells:
        r, k, fam, w = c
        try:
            t0 = time.perf_counter()
            sm = ScoreMatrix(scores[c], train_m.classes)
            auroc = multiclass_auroc(sm, test_m.labels).auroc
            auroc_ovr = ovr_macro_auroc(sm, test_m.labels)
            elapsed[c] += time.perf_counter() - t0
        except Exception as exc:
            raise SweepError(f"cell family={fam} weights={w} rootless={r} p={format_p(p)} m={m} k={k}: {exc}") from exc
        out.append(
            SweepRow(fam, w, r, p, m, k, auroc, auroc_ovr, len(train_m), len(test_m), elapsed[c] * 1e3)
        )
    return out


@dataclass(frozen=True)
class BestCell:
    family: str
    p: float
    auroc: float


def best_cells(
    rows: Sequence[SweepRow],
    weights: str = "linear",
    k: int = 256,
    m: int = 4096,
    rootless: bool = False,
    families: Sequence[str] | None = None,
) -> list[BestCell]:
    """Per family, the p with the highest auroc on a fixed (weights, k, m, rootless) slice.

    Equal auroc resolves to the smaller p.
    """
    if families is None:
        families = list(dict.fromkeys(r.family for r in rows))
    slice_rows = [
        r for r in rows if r.weights == weights and r.k == k and r.m == m and r.rootless == rootless
    ]
    missing = [f for f in families if not any(r.family == f for r in slice_rows)]
    if not families or missing:
        absent = ", ".join(
            f"family={f} weights={weights} k={k} m={m} rootless={str(rootless).lower()}"
            for f in (missing or ["*"])
        )
        raise ValueError(f"rows do not cover the requested slice: {absent}")
    best = []
    for f in families:
        top = min((r for r in slice_rows if r.family == f), key=lambda r: (-r.auroc, r.p))
        best.append(BestCell(f, top.p, top.auroc))
    return best


def config_to_dict(config: SweepConfig) -> dict:
    raw = asdict(config)
    return {k: (list(v) if isinstance(v, tuple) else v) for k, v in raw.items() if k in CONFIG_KEYS}
