"""UEA-style ``.ts`` corpus parsing, normalization, and statistics.

The on-disk format is the plain-text one used by the UEA multivariate
archive: ``@``-prefixed header tags, a ``@data`` sentinel, then one series
per line with channels separated by ``:`` and values within a channel
separated by ``,``. When ``@classLabel true`` is declared, the final
``:``-field of each data line is the class label.
"""

from __future__ import annotations

from dataclasses import dataclass, replace
from pathlib import Path

import numpy as np

from .errors import ParseError, UnsupportedCorpus

# Tags accepted in the header section. Anything else starting with "@"
# is treated as malformed.
_KNOWN_TAGS = {
    "problemname",
    "timestamps",
    "missing",
    "univariate",
    "dimensions",
    "equallength",
    "serieslength",
    "classlabel",
    "targetlabel",
    "data",
}

# (N, T, F, classes) of the six UEA corpora this pipeline targets.
UEA_PROFILES: dict[str, tuple[int, int, int, int]] = {
    "AtrialFibrillation": (15, 640, 2, 3),
    "ERing": (30, 65, 4, 6),
    "RacketSports": (152, 30, 6, 4),
    "Libras": (180, 45, 2, 15),
    "StandWalkJump": (15, 2500, 4, 3),
    "NATOPS": (180, 51, 24, 6),
}


@dataclass(frozen=True)
class MTSDataset:
    """An equal-length multivariate time-series corpus.

    Attributes
    ----------
    name : str
        Problem name from the header (or assigned by the caller).
    samples : np.ndarray
        Shape (N, T, F): N series, T timesteps, F channels. float64.
    labels : np.ndarray | None
        Dense integer labels in [0, class_count), or None when the corpus
        is unlabeled.
    class_count : int | None
        Number of distinct labels observed, or None when unlabeled.
    label_names : tuple[str, ...] | None
        Original label tokens in first-appearance order; index i is the
        token mapped to dense label i.
    """

    name: str
    samples: np.ndarray
    labels: np.ndarray | None = None
    class_count: int | None = None
    label_names: tuple[str, ...] | None = None

    @property
    def n(self) -> int:
        return self.samples.shape[0]

    @property
    def t(self) -> int:
        return self.samples.shape[1]

    @property
    def f(self) -> int:
        return self.samples.shape[2]


def parse_ts(text: str, name: str = "") -> MTSDataset:
    """Parse UEA ``.ts`` text into an :class:`MTSDataset`.

    Labels are remapped to dense integers 0..K-1 in order of first
    appearance. Raises :class:`ParseError` for malformed headers or ragged
    channels within one series, and :class:`UnsupportedCorpus` when series
    lengths differ across the corpus (variable-length corpora are out of
    scope).
    """
    problem_name = name
    has_labels = False
    declared_dims: int | None = None
    in_data = False

    rows: list[np.ndarray] = []
    label_tokens: list[str] = []

    for lineno, raw in enumerate(text.splitlines(), start=1):
        line = raw.strip()
        if not line or line.startswith("#"):
            continue

        if not in_data and line.startswith("@"):
            parts = line.split(None, 1)
            tag = parts[0][1:].lower()
            value = parts[1].strip() if len(parts) > 1 else ""
            if tag not in _KNOWN_TAGS:
                raise ParseError(f"unknown header tag '@{tag}'", lineno)
            if tag == "data":
                if value:
                    raise ParseError("@data takes no value", lineno)
                in_data = True
            elif tag == "problemname":
                if not value:
                    raise ParseError("@problemName requires a value", lineno)
                problem_name = value
            elif tag == "dimensions":
                try:
                    declared_dims = int(value)
                except ValueError:
                    raise ParseError(f"@dimensions is not an integer: '{value}'", lineno) from None
            elif tag == "classlabel":
                toks = value.split()
                if not toks or toks[0].lower() not in ("true", "false"):
                    raise ParseError("@classLabel must start with true/false", lineno)
                has_labels = toks[0].lower() == "true"
            # Remaining known tags (univariate, equalLength, ...) are
            # informative only; the data section is authoritative.
            continue

        if not in_data:
            raise ParseError("data line before @data sentinel", lineno)

        fields = line.split(":")
        if has_labels:
            if len(fields) < 2:
                raise ParseError("labeled corpus but no label field", lineno)
            label_tokens.append(fields[-1].strip())
            fields = fields[:-1]
        try:
            channels = [
                np.array([float(v) for v in chan.split(",")], dtype=np.float64)
                for chan in fields
            ]
        except ValueError:
            raise ParseError("non-numeric value in series", lineno) from None
        lengths = {len(c) for c in channels}
        if len(lengths) != 1:
            raise ParseError("ragged channel lengths within one series", lineno)
        if declared_dims is not None and len(channels) != declared_dims:
            raise ParseError(
                f"series has {len(channels)} channels, header declares {declared_dims}", lineno
            )
        rows.append(np.stack(channels, axis=1))  # (T, F)

    if not in_data:
        raise ParseError("missing @data sentinel")
    if not rows:
        raise ParseError("corpus contains no series")

    t_lengths = {r.shape[0] for r in rows}
    if len(t_lengths) != 1:
        raise UnsupportedCorpus(
            f"variable-length corpus (series lengths {sorted(t_lengths)}); only "
            "equal-length corpora are supported"
        )
    f_counts = {r.shape[1] for r in rows}
    if len(f_counts) != 1:
        raise ParseError("inconsistent channel counts across series")

    samples = np.stack(rows, axis=0)

    labels = None
    class_count = None
    names: tuple[str, ...] | None = None
    if has_labels:
        vocab: dict[str, int] = {}
        for tok in label_tokens:
            if tok not in vocab:
                vocab[tok] = len(vocab)
        labels = np.array([vocab[tok] for tok in label_tokens], dtype=np.int64)
        class_count = len(vocab)
        names = tuple(vocab)

    return MTSDataset(
        name=problem_name,
        samples=samples,
        labels=labels,
        class_count=class_count,
        label_names=names,
    )


def format_ts(ds: MTSDataset) -> str:
    """Serialize a dataset to canonical ``.ts`` text.

    Values are written with ``repr`` so that parsing the output recovers
    bit-identical float64 samples.
    """
    lines = [
        f"@problemName {ds.name or 'corpus'}",
        f"@univariate {'true' if ds.f == 1 else 'false'}",
        f"@dimensions {ds.f}",
        "@equalLength true",
        f"@seriesLength {ds.t}",
    ]
    if ds.labels is not None:
        names = ds.label_names or tuple(str(i) for i in range(ds.class_count or 0))
        lines.append("@classLabel true " + " ".join(names))
    else:
        lines.append("@classLabel false")
    lines.append("@data")
    names = ds.label_names or ()
    for i in range(ds.n):
        chans = [",".join(repr(float(v)) for v in ds.samples[i, :, f]) for f in range(ds.f)]
        row = ":".join(chans)
        if ds.labels is not None:
            tok = names[ds.labels[i]] if names else str(int(ds.labels[i]))
            row += f":{tok}"
        lines.append(row)
    return "\n".join(lines) + "\n"


def load_ts_file(path: str | Path) -> MTSDataset:
    """Read and parse one ``.ts`` file; the stem names the corpus."""
    path = Path(path)
    text = path.read_text(encoding="utf-8")
    ds = parse_ts(text, name=path.stem)
    return ds


def load_corpus(path: str | Path, merge: bool = True) -> MTSDataset:
    """Load a corpus from a file or a directory of ``.ts`` files.

    For a directory, files are read in sorted name order. With
    ``merge=True`` (default) all of them are concatenated into one corpus,
    which is how train/test splits of an archive problem are combined; with
    ``merge=False`` only the first file is used.
    """
    path = Path(path)
    if path.is_dir():
        files = sorted(path.glob("*.ts"))
        if not files:
            raise ParseError(f"no .ts files in directory {path}")
        parts = [load_ts_file(f) for f in files]
        if not merge or len(parts) == 1:
            return parts[0]
        return merge_corpora(parts, name=_common_stem(files))
    return load_ts_file(path)


def _common_stem(files: list[Path]) -> str:
    # "ERing_TRAIN.ts" + "ERing_TEST.ts" -> "ERing"
    stems = [f.stem for f in files]
    stem = stems[0]
    for suffix in ("_TRAIN", "_TEST", "_train", "_test"):
        if stem.endswith(suffix):
            stem = stem[: -len(suffix)]
    return stem


def merge_corpora(parts: list[MTSDataset], name: str | None = None) -> MTSDataset:
    """Concatenate corpora that share T and F, re-unioning label vocabularies."""
    t_set = {p.t for p in parts}
    f_set = {p.f for p in parts}
    if len(t_set) != 1 or len(f_set) != 1:
        raise UnsupportedCorpus(
            f"cannot merge corpora with differing shapes: T={sorted(t_set)}, F={sorted(f_set)}"
        )
    samples = np.concatenate([p.samples for p in parts], axis=0)
    labeled = [p.labels is not None for p in parts]
    labels = None
    class_count = None
    vocab_tuple: tuple[str, ...] | None = None
    if all(labeled):
        vocab: dict[str, int] = {}
        merged: list[int] = []
        for p in parts:
            names = p.label_names or tuple(str(i) for i in range(p.class_count or 0))
            for lab in p.labels:  # type: ignore[union-attr]
                tok = names[int(lab)]
                if tok not in vocab:
                    vocab[tok] = len(vocab)
                merged.append(vocab[tok])
        labels = np.array(merged, dtype=np.int64)
        class_count = len(vocab)
        vocab_tuple = tuple(vocab)
    return MTSDataset(
        name=name or parts[0].name,
        samples=samples,
        labels=labels,
        class_count=class_count,
        label_names=vocab_tuple,
    )


def znormalize(ds: MTSDataset) -> MTSDataset:
    """Rescale each channel of each series to mean 0, population std 1.

    Channels with std below 1e-8 are set to all zeros. Idempotent up to
    floating-point error.
    """
    x = ds.samples
    mean = x.mean(axis=1, keepdims=True)
    std = x.std(axis=1, keepdims=True)
    out = np.where(std < 1e-8, 0.0, (x - mean) / np.where(std < 1e-8, 1.0, std))
    return replace(ds, samples=out)


def stats(ds: MTSDataset) -> tuple[int, int, int, int | None]:
    """``(N, T, F, class_count)`` of the corpus."""
    return ds.n, ds.t, ds.f, ds.class_count
