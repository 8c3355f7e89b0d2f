"""CSV ingestion, shingling and the synthetic benchmark generators."""

from __future__ import annotations

import csv
import json
import math
from dataclasses import dataclass, field
from pathlib import Path
from typing import Any, Sequence

import numpy as np

from pidforest.core import AttributeSpec, Dataset, Kind


class DataError(ValueError):
    """Input file does not conform to its schema."""


# ---------------------------------------------------------------------------
# schema + CSV
# ---------------------------------------------------------------------------


@dataclass(frozen=True)
class ColumnSchema:
    name: str
    kind: Kind
    domain_size: int = 0
    categories: tuple[str, ...] | None = None


@dataclass(frozen=True)
class Schema:
    """Which CSV columns to read and how.

    JSON form::

        {"columns": [{"name": "cpu", "kind": "continuous"},
                     {"name": "os", "kind": "categorical_unordered",
                      "categories": ["linux", "mac", "win"]}],
         "label": "anomaly"}

    Categorical columns list their ``categories`` (values in the file are
    matched as strings) or give a ``domain_size`` (values are integer codes).
    """

    columns: tuple[ColumnSchema, ...]
    label: str | None = None

    @classmethod
    def from_dict(cls, d: dict) -> Schema:
        cols = []
        for c in d["columns"]:
            kind = Kind(c.get("kind", "continuous"))
            cats = tuple(str(v) for v in c["categories"]) if "categories" in c else None
            size = len(cats) if cats is not None else int(c.get("domain_size", 0))
            if kind is not Kind.CONTINUOUS and size < 1:
                raise DataError(f"column {c['name']!r}: categorical needs categories or domain_size")
            cols.append(ColumnSchema(str(c["name"]), kind, size, cats))
        return cls(tuple(cols), d.get("label"))

    @classmethod
    def load(cls, path) -> Schema:
        with open(path) as fh:
            return cls.from_dict(json.load(fh))

    @classmethod
    def continuous(cls, names: Sequence[str], label: str | None = None) -> Schema:
        return cls(tuple(ColumnSchema(n, Kind.CONTINUOUS) for n in names), label)

    def to_dict(self) -> dict:
        cols = []
        for c in self.columns:
            entry: dict[str, Any] = {"name": c.name, "kind": c.kind.value}
            if c.categories is not None:
                entry["categories"] = list(c.categories)
            elif c.kind is not Kind.CONTINUOUS:
                entry["domain_size"] = c.domain_size
            cols.append(entry)
        out: dict[str, Any] = {"columns": cols}
        if self.label is not None:
            out["label"] = self.label
        return out


def _parse_category(raw: str, col: ColumnSchema, row: int) -> int:
    if col.categories is not None:
        try:
            return col.categories.index(raw)
        except ValueError:
            raise DataError(f"row {row}, column {col.name!r}: unknown category {raw!r}") from None
    try:
        code = int(raw)
    except ValueError:
        raise DataError(f"row {row}, column {col.name!r}: category code {raw!r} is not an integer") from None
    if not 0 <= code < col.domain_size:
        raise DataError(f"row {row}, column {col.name!r}: code {code} outside [0, {col.domain_size})")
    return code


def read_table(path, schema: Schema) -> tuple[np.ndarray, np.ndarray | None]:
    """Raw values and labels of the schema's columns; row numbers are 1-based data rows."""
    with open(path, newline="") as fh:
        reader = csv.reader(fh)
        try:
            header = [h.strip() for h in next(reader)]
        except StopIteration:
            raise DataError("empty input") from None
        positions = []
        for col in schema.columns:
            if col.name not in header:
                raise DataError(f"missing column {col.name!r}")
            positions.append(header.index(col.name))
        label_pos = None
        if schema.label is not None:
            if schema.label not in header:
                raise DataError(f"missing label column {schema.label!r}")
            label_pos = header.index(schema.label)

        rows, labels = [], []
        for r, record in enumerate(reader, start=1):
            if not record or all(not v.strip() for v in record):
                continue
            if len(record) != len(header):
                raise DataError(f"row {r}: expected {len(header)} fields, got {len(record)}")
            vals = []
            for col, pos in zip(schema.columns, positions):
                raw = record[pos].strip()
                if col.kind is Kind.CONTINUOUS:
                    try:
                        v = float(raw)
                    except ValueError:
                        raise DataError(f"row {r}, column {col.name!r}: {raw!r} is not numeric") from None
                    if not math.isfinite(v):
                        raise DataError(f"row {r}, column {col.name!r}: non-finite value")
                    vals.append(v)
                else:
                    vals.append(float(_parse_category(raw, col, r)))
            rows.append(vals)
            if label_pos is not None:
                raw = record[label_pos].strip()
                if raw not in ("0", "1"):
                    raise DataError(f"row {r}, column {schema.label!r}: label must be 0 or 1")
                labels.append(int(raw))
    if not rows:
        raise DataError("empty input")
    values = np.asarray(rows, dtype=np.float64)
    return values, (np.asarray(labels, dtype=np.int8) if label_pos is not None else None)


def load_csv(path, schema: Schema | None = None) -> Dataset:
    """Typed dataset from a CSV file with a header row.

    Without a schema every column except one named ``label`` or
    ``anomaly`` is read as continuous.
    """
    if schema is None:
        with open(path, newline="") as fh:
            header = [h.strip() for h in next(csv.reader(fh), [])]
        label = next((h for h in header if h in ("label", "anomaly")), None)
        schema = Schema.continuous([h for h in header if h != label], label)
    values, labels = read_table(path, schema)
    columns = []
    for j, col in enumerate(schema.columns):
        if col.kind is Kind.CONTINUOUS:
            columns.append(AttributeSpec.continuous(values[:, j].min(), values[:, j].max(), col.name))
        else:
            columns.append(
                AttributeSpec.categorical(
                    col.domain_size, col.kind is Kind.CATEGORICAL_ORDERED, col.name, col.categories
                )
            )
    return Dataset(tuple(columns), values, labels)


def write_csv(path, values: np.ndarray, names: Sequence[str], labels=None, label_name: str = "anomaly") -> None:
    values = np.asarray(values)
    with open(path, "w", newline="") as fh:
        writer = csv.writer(fh)
        writer.writerow(list(names) + ([label_name] if labels is not None else []))
        for i, row in enumerate(values):
            out = [repr(float(v)) for v in row]
            if labels is not None:
                out.append(str(int(labels[i])))
            writer.writerow(out)


# ---------------------------------------------------------------------------
# shingling
# ---------------------------------------------------------------------------


def shingle(series, width: int = 10, labels=None) -> Dataset:
    """Overlapping windows of ``width`` consecutive values.

    A window is anomalous if any timestep in it is.
    """
    x = np.asarray(series, dtype=np.float64).ravel()
    if width < 1:
        raise ValueError("width must be >= 1")
    if len(x) < width:
        raise ValueError(f"series of length {len(x)} is shorter than width {width}")
    windows = np.lib.stride_tricks.sliding_window_view(x, width)
    win_labels = None
    if labels is not None:
        y = np.asarray(labels).astype(bool).ravel()
        if y.shape != x.shape:
            raise ValueError("labels must match the series length")
        win_labels = np.lib.stride_tricks.sliding_window_view(y, width).any(axis=1)
    return Dataset.from_array(windows, win_labels, names=[f"lag{i}" for i in range(width)])


# ---------------------------------------------------------------------------
# synthetic generators
# ---------------------------------------------------------------------------


@dataclass(frozen=True)
class Synthetic:
    dataset: Dataset
    metadata: dict = field(default_factory=dict)


def gen_masking(seed: int = 0, n_normal: int = 970, n_masked: int = 30, d: int = 10) -> Synthetic:
    """Random corners of ``{-1, 1}^d`` plus a clump of identical zero vectors."""
    rng = np.random.default_rng(seed)
    corners = rng.choice(np.array([-1.0, 1.0]), size=(n_normal, d))
    values = np.vstack([corners, np.zeros((n_masked, d))])
    labels = np.r_[np.zeros(n_normal, np.int8), np.ones(n_masked, np.int8)]
    meta = {"generator": "masking", "seed": seed, "n_normal": n_normal, "n_masked": n_masked, "d": d}
    return Synthetic(Dataset.from_array(values, labels), meta)


def mixture_parameters(rng: np.random.Generator, separation: float = 5.0):
    """Two 2-d Gaussians with covariance eigenvalues {1, 2} and random eigenvectors."""
    direction = rng.uniform(0, 2 * np.pi)
    means = np.array([[0.0, 0.0], [separation * np.cos(direction), separation * np.sin(direction)]])
    covs = []
    for _ in range(2):
        theta = rng.uniform(0, np.pi)
        rot = np.array([[np.cos(theta), -np.sin(theta)], [np.sin(theta), np.cos(theta)]])
        covs.append(rot @ np.diag([1.0, 2.0]) @ rot.T)
    return means, np.array(covs), np.array([0.5, 0.5])


def mixture_density(x: np.ndarray, means, covs, weights) -> np.ndarray:
    from scipy.stats import multivariate_normal

    return sum(
        w * multivariate_normal(mean=mu, cov=cov).pdf(x) for mu, cov, w in zip(means, covs, weights)
    )


def gen_gaussian_mixture(
    d_noise: int = 0,
    noise_range: tuple[float, float] = (-2.0, 2.0),
    seed: int = 0,
    n: int = 1000,
    n_anomalies: int = 100,
    separation: float = 5.0,
) -> Synthetic:
    """Two-component 2-d mixture padded with uniform noise coordinates.

    The ``n_anomalies`` points of lowest mixture likelihood are labeled
    anomalous; the uniform coordinates do not change the ordering.
    """
    rng = np.random.default_rng(seed)
    means, covs, weights = mixture_parameters(rng, separation)
    comp = rng.choice(2, size=n, p=weights)
    signal = np.empty((n, 2))
    for c in range(2):
        idx = np.flatnonzero(comp == c)
        signal[idx] = rng.multivariate_normal(means[c], covs[c], size=len(idx))
    noise = rng.uniform(noise_range[0], noise_range[1], size=(n, d_noise))
    likelihood = mixture_density(signal, means, covs, weights)
    labels = np.zeros(n, np.int8)
    labels[np.argsort(likelihood, kind="stable")[:n_anomalies]] = 1
    values = np.hstack([signal, noise])
    meta = {
        "generator": "gaussian",
        "seed": seed,
        "d_noise": d_noise,
        "noise_range": list(noise_range),
        "means": means.tolist(),
        "covariances": covs.tolist(),
        "weights": weights.tolist(),
        "n_anomalies": n_anomalies,
    }
    return Synthetic(Dataset.from_array(values, labels), meta)


@dataclass(frozen=True)
class Series:
    values: np.ndarray
    labels: np.ndarray
    starts: np.ndarray
    metadata: dict


def gen_sine_anomalies(
    seed: int = 0,
    length: int = 4000,
    period: int = 40,
    n_anomalies: int = 10,
    segment: int = 20,
    sigma: float = 0.05,
) -> Series:
    """Sine wave with ``n_anomalies`` stretches frozen at their starting value.

    Segments do not overlap and are at least one period apart. Gaussian
    noise of standard deviation ``sigma`` (amplitude is 1) is added last.
    """
    rng = np.random.default_rng(seed)
    t = np.arange(length)
    clean = np.sin(2 * np.pi * t / period)
    gap = segment + period
    slack = length - segment - (n_anomalies - 1) * gap
    if n_anomalies and slack < 1:
        raise ValueError("series too short for the requested anomalies")
    starts = np.array([], dtype=np.int64)
    if n_anomalies:
        # sorted offsets plus a fixed stride of segment + period keep segments apart
        offsets = np.sort(rng.choice(slack, size=n_anomalies, replace=True))
        starts = offsets + np.arange(n_anomalies) * gap
    labels = np.zeros(length, np.int8)
    for s in starts:
        clean[s : s + segment] = clean[s]
        labels[s : s + segment] = 1
    values = clean + (rng.normal(0.0, sigma, size=length) if sigma > 0 else 0.0)
    meta = {
        "generator": "sine",
        "seed": seed,
        "length": length,
        "period": period,
        "segment": segment,
        "sigma": sigma,
        "starts": starts.tolist(),
    }
    return Series(values, labels, starts, meta)
