"""Domain types for heterogeneous points, intervals and subcubes.

All volume and sparsity arithmetic is carried in log2 space so that
products over many coordinates never underflow.
"""

from __future__ import annotations

import enum
import math
from dataclasses import dataclass, field
from typing import Sequence

import numpy as np


class Kind(str, enum.Enum):
    CONTINUOUS = "continuous"
    CATEGORICAL_ORDERED = "categorical_ordered"
    CATEGORICAL_UNORDERED = "categorical_unordered"

    @property
    def is_categorical(self) -> bool:
        return self is not Kind.CONTINUOUS


@dataclass(frozen=True)
class AttributeSpec:
    """Per-column metadata.

    Continuous columns carry their observed range, categorical columns the
    size of their domain. Category codes are integers in ``[0, domain_size)``.
    """

    kind: Kind
    observed_min: float = 0.0
    observed_max: float = 1.0
    domain_size: int = 0
    name: str = ""
    categories: tuple[str, ...] | None = None

    def __post_init__(self) -> None:
        if self.kind is Kind.CONTINUOUS:
            if not self.observed_min <= self.observed_max:
                raise ValueError(
                    f"column {self.name!r}: observed_min {self.observed_min} "
                    f"> observed_max {self.observed_max}"
                )
        else:
            if self.domain_size < 1:
                raise ValueError(f"column {self.name!r}: domain_size must be >= 1")
            if self.categories is not None and len(self.categories) != self.domain_size:
                raise ValueError(f"column {self.name!r}: categories do not match domain_size")

    @classmethod
    def continuous(cls, lo: float, hi: float, name: str = "") -> AttributeSpec:
        return cls(Kind.CONTINUOUS, observed_min=float(lo), observed_max=float(hi), name=name)

    @classmethod
    def categorical(
        cls,
        domain_size: int,
        ordered: bool = False,
        name: str = "",
        categories: Sequence[str] | None = None,
    ) -> AttributeSpec:
        kind = Kind.CATEGORICAL_ORDERED if ordered else Kind.CATEGORICAL_UNORDERED
        cats = tuple(categories) if categories is not None else None
        return cls(kind, domain_size=int(domain_size), name=name, categories=cats)

    def to_dict(self) -> dict:
        out: dict = {"name": self.name, "kind": self.kind.value}
        if self.kind is Kind.CONTINUOUS:
            out["observed_min"] = self.observed_min
            out["observed_max"] = self.observed_max
        else:
            out["domain_size"] = self.domain_size
            if self.categories is not None:
                out["categories"] = list(self.categories)
        return out

    @classmethod
    def from_dict(cls, d: dict) -> AttributeSpec:
        kind = Kind(d["kind"])
        if kind is Kind.CONTINUOUS:
            return cls.continuous(d["observed_min"], d["observed_max"], name=d.get("name", ""))
        return cls.categorical(
            d["domain_size"],
            ordered=kind is Kind.CATEGORICAL_ORDERED,
            name=d.get("name", ""),
            categories=d.get("categories"),
        )


@dataclass(frozen=True)
class Dataset:
    """An ``n x d`` table of points with typed columns.

    Continuous columns hold reals, categorical columns hold integer codes
    (stored as floats so the whole table is a single array).
    """

    columns: tuple[AttributeSpec, ...]
    values: np.ndarray
    labels: np.ndarray | None = None

    def __post_init__(self) -> None:
        values = np.asarray(self.values, dtype=np.float64)
        if values.ndim != 2:
            raise ValueError(f"values must be 2-d, got shape {values.shape}")
        if values.shape[1] != len(self.columns):
            raise ValueError(
                f"values have {values.shape[1]} columns but {len(self.columns)} specs given"
            )
        values = values.copy()
        values.flags.writeable = False
        object.__setattr__(self, "columns", tuple(self.columns))
        object.__setattr__(self, "values", values)
        if self.labels is not None:
            labels = np.asarray(self.labels).astype(np.int8)
            if labels.shape != (values.shape[0],):
                raise ValueError("labels must have one entry per point")
            labels.flags.writeable = False
            object.__setattr__(self, "labels", labels)
        self._validate()

    def _validate(self) -> None:
        for j, spec in enumerate(self.columns):
            col = self.values[:, j]
            if spec.kind is Kind.CONTINUOUS:
                if col.size and (col.min() < spec.observed_min or col.max() > spec.observed_max):
                    raise ValueError(f"column {spec.name or j!r}: values outside observed range")
            else:
                if col.size and (
                    np.any(col != np.floor(col)) or col.min() < 0 or col.max() >= spec.domain_size
                ):
                    raise ValueError(f"column {spec.name or j!r}: invalid category code")

    @property
    def n(self) -> int:
        return self.values.shape[0]

    @property
    def d(self) -> int:
        return self.values.shape[1]

    @property
    def names(self) -> list[str]:
        return [c.name or f"x{j}" for j, c in enumerate(self.columns)]

    @classmethod
    def from_array(
        cls,
        values: np.ndarray,
        labels: np.ndarray | None = None,
        names: Sequence[str] | None = None,
    ) -> Dataset:
        """All-continuous dataset whose column ranges are taken from the data."""
        values = np.asarray(values, dtype=np.float64)
        if values.ndim == 1:
            values = values[:, None]
        if values.shape[0] == 0:
            raise ValueError("empty input")
        names = list(names) if names is not None else [f"x{j}" for j in range(values.shape[1])]
        columns = tuple(
            AttributeSpec.continuous(values[:, j].min(), values[:, j].max(), name=names[j])
            for j in range(values.shape[1])
        )
        return cls(columns, values, labels)


@dataclass(frozen=True)
class Interval:
    """One coordinate of a subcube.

    Continuous and ordered categorical coordinates use ``[lo, hi]`` in the
    normalized unit interval. Unordered categorical coordinates use a set of
    codes out of ``domain_size``.
    """

    lo: float = 0.0
    hi: float = 1.0
    codes: frozenset[int] | None = None
    domain_size: int = 0

    def __post_init__(self) -> None:
        if self.codes is None:
            if not 0.0 <= self.lo <= self.hi <= 1.0:
                raise ValueError(f"invalid interval [{self.lo}, {self.hi}]")
        elif self.domain_size < 1 or any(c < 0 or c >= self.domain_size for c in self.codes):
            raise ValueError("invalid categorical interval")

    @classmethod
    def full(cls, spec: AttributeSpec | None = None) -> Interval:
        if spec is not None and spec.kind is Kind.CATEGORICAL_UNORDERED:
            return cls(codes=frozenset(range(spec.domain_size)), domain_size=spec.domain_size)
        return cls()

    @property
    def length(self) -> float:
        if self.codes is not None:
            return len(self.codes) / self.domain_size
        return self.hi - self.lo

    @property
    def is_full(self) -> bool:
        if self.codes is not None:
            return len(self.codes) == self.domain_size
        return self.lo == 0.0 and self.hi == 1.0

    def contains(self, value: float) -> bool:
        if self.codes is not None:
            return int(value) in self.codes
        return self.lo <= value <= self.hi

    def to_dict(self) -> dict:
        if self.codes is not None:
            return {"codes": sorted(self.codes), "domain_size": self.domain_size}
        return {"lo": self.lo, "hi": self.hi}

    @classmethod
    def from_dict(cls, d: dict) -> Interval:
        if "codes" in d:
            return cls(codes=frozenset(d["codes"]), domain_size=d["domain_size"])
        return cls(d["lo"], d["hi"])


def _log2_length(interval: Interval) -> float:
    length = interval.length
    return math.log2(length) if length > 0 else -math.inf


@dataclass(frozen=True)
class Subcube:
    intervals: tuple[Interval, ...]
    log2_volume: float = field(init=False)

    def __post_init__(self) -> None:
        object.__setattr__(self, "intervals", tuple(self.intervals))
        object.__setattr__(self, "log2_volume", math.fsum(_log2_length(i) for i in self.intervals))

    @classmethod
    def full(cls, columns: Sequence[AttributeSpec]) -> Subcube:
        return cls(tuple(Interval.full(c) for c in columns))

    @property
    def d(self) -> int:
        return len(self.intervals)

    @property
    def degenerate(self) -> bool:
        return any(i.length == 0 for i in self.intervals)

    @property
    def constrained(self) -> list[int]:
        """Coordinates whose interval is not the full range."""
        return [j for j, i in enumerate(self.intervals) if not i.is_full]

    def replace(self, j: int, interval: Interval) -> Subcube:
        ivs = list(self.intervals)
        ivs[j] = interval
        return Subcube(tuple(ivs))

    def contains(self, point: Sequence[float]) -> bool:
        return all(iv.contains(v) for iv, v in zip(self.intervals, point))


def sparsity(subcube: Subcube, count: int) -> float:
    """log2 of volume divided by point count."""
    if count < 1:
        raise ValueError("empty cell has undefined sparsity")
    if subcube.degenerate:
        raise ValueError("degenerate subcube has zero volume")
    return subcube.log2_volume - math.log2(count)


@dataclass(frozen=True)
class NormalizationTransform:
    """Per-column affine map into ``[0, 1]``.

    ``offset`` and ``span`` are only meaningful for continuous columns;
    ``constant`` marks continuous columns with zero span.
    """

    columns: tuple[AttributeSpec, ...]
    offset: np.ndarray
    span: np.ndarray
    constant: np.ndarray

    @property
    def splittable(self) -> np.ndarray:
        out = ~self.constant.copy()
        for j, c in enumerate(self.columns):
            if c.kind is not Kind.CONTINUOUS and c.domain_size < 2:
                out[j] = False
        return out

    def apply(self, values: np.ndarray) -> np.ndarray:
        """Map raw values into normalized space, clipping out-of-range reals."""
        values = np.asarray(values, dtype=np.float64)
        if values.ndim == 1:
            values = values[None, :]
        if values.shape[1] != len(self.columns):
            raise ValueError(
                f"schema mismatch: expected {len(self.columns)} columns, got {values.shape[1]}"
            )
        out = np.empty_like(values)
        for j, c in enumerate(self.columns):
            col = values[:, j]
            if c.kind is Kind.CONTINUOUS:
                if self.constant[j]:
                    out[:, j] = 0.5
                else:
                    out[:, j] = np.clip((col - self.offset[j]) / self.span[j], 0.0, 1.0)
            elif c.kind is Kind.CATEGORICAL_ORDERED:
                # each code owns the cell [c/D, (c+1)/D); points sit at the centre
                out[:, j] = (col + 0.5) / c.domain_size
            else:
                out[:, j] = col
        return out

    def invert(self, j: int, value: float) -> float:
        """Map a normalized continuous/ordered coordinate back to raw units."""
        c = self.columns[j]
        if c.kind is Kind.CONTINUOUS:
            if self.constant[j]:
                return float(self.offset[j])
            return float(self.offset[j] + value * self.span[j])
        if c.kind is Kind.CATEGORICAL_ORDERED:
            return float(value * c.domain_size)
        raise ValueError("unordered categorical coordinates have no affine inverse")

    def to_dict(self) -> dict:
        return {
            "offset": [float(v) for v in self.offset],
            "span": [float(v) for v in self.span],
            "constant": [bool(v) for v in self.constant],
        }

    @classmethod
    def from_dict(cls, d: dict, columns: Sequence[AttributeSpec]) -> NormalizationTransform:
        return cls(
            tuple(columns),
            np.asarray(d["offset"], dtype=np.float64),
            np.asarray(d["span"], dtype=np.float64),
            np.asarray(d["constant"], dtype=bool),
        )


def fit_transform(columns: Sequence[AttributeSpec]) -> NormalizationTransform:
    d = len(columns)
    if d == 0:
        raise ValueError("dataset has zero columns")
    offset = np.zeros(d)
    span = np.ones(d)
    constant = np.zeros(d, dtype=bool)
    for j, c in enumerate(columns):
        if c.kind is Kind.CONTINUOUS:
            offset[j] = c.observed_min
            span[j] = c.observed_max - c.observed_min
            if span[j] == 0:
                constant[j] = True
                span[j] = 1.0
    return NormalizationTransform(tuple(columns), offset, span, constant)


def normalize(dataset: Dataset) -> tuple[Dataset, NormalizationTransform]:
    """Map every continuous column affinely onto ``[0, 1]``.

    Constant columns map to 0.5 and are flagged as non-splittable in the
    returned transform. Categorical codes are kept; ordered codes are moved
    to the centre of their cell.
    """
    if dataset.n == 0:
        raise ValueError("empty input")
    transform = fit_transform(dataset.columns)
    values = transform.apply(dataset.values)
    columns = []
    for j, c in enumerate(dataset.columns):
        if c.kind is Kind.CONTINUOUS:
            lo_hi = 0.5 if transform.constant[j] else None
            columns.append(
                AttributeSpec.continuous(
                    lo_hi if lo_hi is not None else 0.0,
                    lo_hi if lo_hi is not None else 1.0,
                    name=c.name,
                )
            )
        elif c.kind is Kind.CATEGORICAL_ORDERED:
            columns.append(AttributeSpec.continuous(0.0, 1.0, name=c.name))
        else:
            columns.append(c)
    return Dataset(tuple(columns), values, dataset.labels), transform


class SchemaError(ValueError):
    """Points do not match the column schema a model was fit on."""


class ModelFormatError(ValueError):
    """A model document is malformed or has an unsupported version."""


def same_schema(a: Sequence[AttributeSpec], b: Sequence[AttributeSpec]) -> bool:
    """Column kinds, names and categorical domains agree (ranges may differ)."""
    if len(a) != len(b):
        return False
    for x, y in zip(a, b):
        if x.kind is not y.kind or x.name != y.name:
            return False
        if x.kind is not Kind.CONTINUOUS and (
            x.domain_size != y.domain_size or x.categories != y.categories
        ):
            return False
    return True
