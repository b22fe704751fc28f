"""Tokenization, top-m vocabulary construction and count vectorization of raw texts."""

from __future__ import annotations

import json
import re
import sys
from collections import Counter
from dataclasses import dataclass
from functools import lru_cache
from pathlib import Path
from typing import Hashable, Literal

import numpy as np
from scipy import sparse

from .vectorspace import LabeledDataset



@lru_cache(maxsize=1)
def _run_pattern() -> re.Pattern:
    # \w also admits "_" and non-decimal numerics (superscripts, vulgar fractions, roman
    # numerals); alphanumeric here means Unicode letters and decimal digits only.
    extra = "".join(
        re.escape(c)
        for c in map(chr, range(sys.maxunicode + 1))
        if (c.isnumeric() or c.isdigit()) and not (c.isalpha() or c.isdecimal())
    )
    return re.compile(rf"[^\W_{extra}]+")


def tokenize(text: str) -> list[str]:
    """Lowercased maximal alphanumeric runs of length >= 2, in order of appearance."""
    return [run for run in _run_pattern().findall(text.lower()) if len(run) >= 2]


@dataclass(frozen=True)
class RawCorpus:
    documents: tuple[tuple[str, Hashable], ...]
    split: Literal["train", "test"] = "train"

    def __post_init__(self) -> None:
        docs = tuple((str(t), lab) for t, lab in self.documents)
        if not docs:
            raise ValueError("empty corpus")
        object.__setattr__(self, "documents", docs)

    @property
    def labels(self) -> tuple[Hashable, ...]:
        return tuple(lab for _, lab in self.documents)

    def counted(self) -> CountedCorpus:
        return CountedCorpus(
            tuple(Counter(tokenize(text)) for text, _ in self.documents), self.labels, self.split
        )


@dataclass(frozen=True)
class CountedCorpus:
    """A corpus after tokenization: one token Counter per document."""

    counts: tuple[Counter, ...]
    labels: tuple[Hashable, ...]
    split: Literal["train", "test"] = "train"

    def __post_init__(self) -> None:
        if not self.counts:
            raise ValueError("empty corpus")
        if len(self.counts) != len(self.labels):
            raise ValueError("counts and labels differ in length")

    def __len__(self) -> int:
        return len(self.counts)

    def to_json(self) -> list[dict]:
        return [{"label": lab, "counts": dict(c)} for c, lab in zip(self.counts, self.labels)]

    @classmethod
    def from_json(cls, items: list[dict], split: str) -> CountedCorpus:
        return cls(
            tuple(Counter({str(k): int(v) for k, v in it["counts"].items()}) for it in items),
            tuple(it["label"] for it in items),
            split,  # type: ignore[arg-type]
        )


def _as_counted(corpus: RawCorpus | CountedCorpus) -> CountedCorpus:
    return corpus.counted() if isinstance(corpus, RawCorpus) else corpus


@dataclass(frozen=True)
class Vocabulary:
    terms: tuple[str, ...]

    def __post_init__(self) -> None:
        terms = tuple(self.terms)
        if len(set(terms)) != len(terms):
            raise ValueError("duplicate vocabulary terms")
        object.__setattr__(self, "terms", terms)

    @property
    def m(self) -> int:
        return len(self.terms)

    def __len__(self) -> int:
        return len(self.terms)

    @property
    def index(self) -> dict[str, int]:
        return {t: i for i, t in enumerate(self.terms)}

    def prefix(self, m: int) -> Vocabulary:
        return Vocabulary(self.terms[:m])

    def save(self, path: str | Path) -> None:
        Path(path).write_text("".join(t + "\n" for t in self.terms), encoding="utf-8")

    @classmethod
    def load(cls, path: str | Path) -> Vocabulary:
        text = Path(path).read_text(encoding="utf-8")
        return cls(tuple(line for line in text.split("\n") if line))


def build_vocabulary(train: RawCorpus | CountedCorpus, m: int) -> Vocabulary:
    """The m most frequent training tokens, ordered by (count desc, token asc)."""
    if m < 1:
        raise ValueError(f"vocabulary size must be >= 1, got {m}")
    totals: Counter = Counter()
    for c in _as_counted(train).counts:
        totals.update(c)
    ranked = sorted(totals.items(), key=lambda kv: (-kv[1], kv[0]))
    return Vocabulary(tuple(tok for tok, _ in ranked[:m]))


def vectorize(corpus: RawCorpus | CountedCorpus, vocab: Vocabulary) -> LabeledDataset:
    """Raw in-vocabulary token counts per document; unknown tokens are dropped."""
    counted = _as_counted(corpus)
    index = vocab.index
    indptr = [0]
    indices: list[int] = []
    data: list[float] = []
    for c in counted.counts:
        row = sorted((index[t], n) for t, n in c.items() if t in index)
        indices.extend(i for i, _ in row)
        data.extend(float(n) for _, n in row)
        indptr.append(len(indices))
    mat = sparse.csr_matrix(
        (np.array(data, dtype=np.float64), np.array(indices, dtype=np.int64), np.array(indptr)),
        shape=(len(counted), len(vocab)),
    )
    return LabeledDataset(mat, counted.labels, vocab.terms)


def load_corpus(
    path: str | Path, format: Literal["dir", "jsonl"], split: Literal["train", "test"] = "train"
) -> RawCorpus:
    """Read ``<root>/<label>/<docid>.txt`` trees or ``{"text", "label"}`` JSON lines."""
    path = Path(path)
    if format == "dir":
        docs = _load_dir(path)
    elif format == "jsonl":
        docs = _load_jsonl(path)
    else:
        raise ValueError(f"unknown corpus format {format!r}")
    if not docs:
        raise ValueError(f"empty corpus: {path}")
    return RawCorpus(tuple(docs), split)


def _load_dir(root: Path) -> list[tuple[str, str]]:
    if not root.is_dir():
        raise ValueError(f"not a directory: {root}")
    docs = []
    for label_dir in sorted(p for p in root.iterdir() if p.is_dir()):
        for f in sorted(label_dir.glob("*.txt")):
            try:
                docs.append((f.read_text(encoding="utf-8"), label_dir.name))
            except (OSError, UnicodeDecodeError) as exc:
                raise ValueError(f"unreadable document {f}: {exc}") from exc
    return docs


def _load_jsonl(path: Path) -> list[tuple[str, str]]:
    try:
        lines = path.read_text(encoding="utf-8").splitlines()
    except (OSError, UnicodeDecodeError) as exc:
        raise ValueError(f"unreadable corpus file {path}: {exc}") from exc
    docs = []
    for lineno, line in enumerate(lines, 1):
        if not line.strip():
            continue
        try:
            obj = json.loads(line)
        except json.JSONDecodeError as exc:
            raise ValueError(f"malformed line {lineno} in {path}: {exc.msg}") from exc
        if (
            not isinstance(obj, dict)
            or set(obj) != {"text", "label"}
            or not isinstance(obj["text"], str)
            or not isinstance(obj["label"], str)
        ):
            raise ValueError(f"malformed line {lineno} in {path}: expected string fields text, label")
        docs.append((obj["text"], obj["label"]))
    return docs


def save_counted(path: str | Path, train: CountedCorpus, test: CountedCorpus) -> None:
    """Write an ingested train/test pair as one JSON document."""
    payload = {"format": "angmink-counts/1", "train": train.to_json(), "test": test.to_json()}
    Path(path).write_text(json.dumps(payload, sort_keys=True), encoding="utf-8")


def load_counted(path: str | Path) -> tuple[CountedCorpus, CountedCorpus]:
    payload = json.loads(Path(path).read_text(encoding="utf-8"))
    if payload.get("format") != "angmink-counts/1":
        raise ValueError(f"{path} is not an ingested dataset")
    return (
        CountedCorpus.from_json(payload["train"], "train"),
        CountedCorpus.from_json(payload["test"], "test"),
    )


def ingest(
    train: RawCorpus | CountedCorpus, test: RawCorpus | CountedCorpus
) -> tuple[CountedCorpus, CountedCorpus]:
    return _as_counted(train), _as_counted(test)


def dataset_pair(
    train: CountedCorpus, test: CountedCorpus, m: int
) -> tuple[LabeledDataset, LabeledDataset]:
    vocab = build_vocabulary(train, m)
    return vectorize(train, vocab), vectorize(test, vocab)

