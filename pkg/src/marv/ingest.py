"""Study loading: manifest + per-time-step tables, and a synthetic generator.

A study is a JSON manifest naming an ordered list of delimiter-separated
tables, one per time step. Manifest order is authoritative for temporal
order. Loading is strict: ragged rows, non-numeric cells, NaN/inf values,
duplicate attribute names, and attribute-list mismatches across steps all
abort the load. Silently dropping rows would corrupt the fiber counts that
the stacked-bins chart displays directly.
"""
from __future__ import annotations

import csv
import io
import json
import math
from dataclasses import dataclass
from pathlib import Path

import numpy as np


class IngestError(Exception):
    """Base class for study loading failures."""


class ManifestError(IngestError):
    pass


class TableParseError(IngestError):
    pass


class AttributeMismatchError(IngestError):
    pass


@dataclass(frozen=True)
class Attribute:
    name: str
    unit: str = ""


@dataclass(frozen=True, eq=False)
class Dataset:
    """One time step: an attribute table with one row per fiber."""

    label: str
    load_newtons: float
    attributes: tuple[Attribute, ...]
    values: np.ndarray  # shape (records, attributes), float64, all finite

    def __eq__(self, other: object) -> bool:
        if not isinstance(other, Dataset):
            return NotImplemented
        return (
            self.label == other.label
            and self.load_newtons == other.load_newtons
            and self.attributes == other.attributes
            and self.values.shape == other.values.shape
            and bool((self.values == other.values).all())
        )

    def __post_init__(self) -> None:
        names = [a.name for a in self.attributes]
        if len(set(names)) != len(names):
            raise IngestError(f"duplicate attribute names in {self.label!r}")
        if self.load_newtons < 0:
            raise IngestError(f"negative load for step {self.label!r}")
        if self.values.ndim != 2 or self.values.shape[1] != len(self.attributes):
            raise IngestError(
                f"step {self.label!r}: value matrix shape {self.values.shape} "
                f"does not match {len(self.attributes)} attributes"
            )
        if self.values.shape[0] < 1:
            raise IngestError(f"step {self.label!r} has no records")
        if not np.isfinite(self.values).all():
            raise IngestError(f"step {self.label!r} contains non-finite values")
        self.values.setflags(write=False)

    @property
    def record_count(self) -> int:
        return int(self.values.shape[0])

    def column(self, attribute: str) -> np.ndarray:
        return self.values[:, self.attribute_index(attribute)]

    def attribute_index(self, attribute: str) -> int:
        for i, a in enumerate(self.attributes):
            if a.name == attribute:
                return i
        raise KeyError(f"unknown attribute {attribute!r}")


@dataclass(frozen=True)
class StudySeries:
    """The ordered sequence of time steps of one in-situ experiment."""

    name: str
    time_steps: tuple[Dataset, ...]

    def __post_init__(self) -> None:
        if not self.time_steps:
            raise IngestError("a study needs at least one time step")
        first = self.time_steps[0].attributes
        for t, step in enumerate(self.time_steps[1:], start=1):
            if step.attributes != first:
                raise AttributeMismatchError(
                    f"step {t} ({step.label!r}) attribute list differs from step 0"
                )

    @property
    def attributes(self) -> tuple[Attribute, ...]:
        return self.time_steps[0].attributes

    def attribute_index(self, attribute: str) -> int:
        return self.time_steps[0].attribute_index(attribute)


@dataclass(frozen=True)
class GeometryBinding:
    """Names of the seven columns that define fiber cylinders."""

    start_x: str
    start_y: str
    start_z: str
    end_x: str
    end_y: str
    end_z: str
    diameter: str

    def fields(self) -> tuple[str, ...]:
        return (self.start_x, self.start_y, self.start_z,
                self.end_x, self.end_y, self.end_z, self.diameter)

    def validate(self, series: StudySeries) -> None:
        names = {a.name for a in series.attributes}
        for column in self.fields():
            if column not in names:
                raise ManifestError(
                    f"geometry binding column {column!r} missing from attributes"
                )


def parse_table(
    path: str | Path,
    expected: tuple[Attribute, ...] | None = None,
    *,
    label: str = "",
    load_newtons: float = 0.0,
    delimiter: str = ",",
    units: dict[str, str] | None = None,
) -> Dataset:
    """Parse one delimiter-separated table into a Dataset.

    The header row defines attribute order. Every data row must parse as
    finite numbers; the first offending cell is reported with its row
    number (1-based, excluding the header) and column name.
    """
    path = Path(path)
    try:
        text = path.read_text(encoding="utf-8")
    except OSError as exc:
        raise TableParseError(f"cannot read table {path}: {exc}") from exc
    rows = list(csv.reader(io.StringIO(text), delimiter=delimiter))
    rows = [row for row in rows if row]  # tolerate trailing blank lines
    if not rows:
        raise TableParseError(f"{path}: empty file")
    header = [cell.strip() for cell in rows[0]]
    if any(not name for name in header):
        raise TableParseError(f"{path}: empty column name in header")
    units = units or {}
    attributes = tuple(Attribute(name, units.get(name, "")) for name in header)
    if expected is not None:
        got = tuple(a.name for a in attributes)
        want = tuple(a.name for a in expected)
        if got != want:
            missing = [n for n in want if n not in got]
            detail = f"missing column {missing[0]!r}" if missing else f"order {got}"
            raise AttributeMismatchError(
                f"{path}: header does not match study attributes ({detail})"
            )
        attributes = expected
    if len(rows) == 1:
        raise TableParseError(f"{path}: no records")

    data = np.empty((len(rows) - 1, len(header)), dtype=np.float64)
    for r, row in enumerate(rows[1:], start=1):
        if len(row) != len(header):
            raise TableParseError(
                f"{path}: row {r} has {len(row)} cells, expected {len(header)}"
            )
        for c, cell in enumerate(row):
            try:
                value = float(cell)
            except ValueError:
                raise TableParseError(
                    f"{path}: non-numeric cell at row {r}, column {header[c]}"
                ) from None
            if not math.isfinite(value):
                raise TableParseError(
                    f"{path}: non-finite value at row {r}, column {header[c]}"
                )
            data[r - 1, c] = value
    return Dataset(label=label or path.stem, load_newtons=load_newtons,
                   attributes=attributes, values=data)


def load_manifest(
    path: str | Path, *, delimiter: str = ","
) -> tuple[StudySeries, GeometryBinding]:
    """Load a study manifest and all tables it lists.

    Manifest fields: ``name``, ``geometry_binding`` (seven attribute
    names), optional ``units`` (attribute name -> unit label), and
    ``time_steps``: an ordered list of ``{label, load_newtons,
    table_path}``. Table paths are resolved relative to the manifest.
    """
    path = Path(path)
    try:
        raw = json.loads(path.read_text(encoding="utf-8"))
    except OSError as exc:
        raise ManifestError(f"cannot read manifest {path}: {exc}") from exc
    except json.JSONDecodeError as exc:
        raise ManifestError(f"malformed manifest {path}: {exc}") from exc
    if not isinstance(raw, dict):
        raise ManifestError(f"{path}: manifest must be a JSON object")
    for key in ("name", "geometry_binding", "time_steps"):
        if key not in raw:
            raise ManifestError(f"{path}: manifest missing field {key!r}")
    binding_raw = raw["geometry_binding"]
    try:
        binding = GeometryBinding(**{k: str(v) for k, v in binding_raw.items()})
    except TypeError as exc:
        raise ManifestError(f"{path}: bad geometry_binding: {exc}") from exc
    steps_raw = raw["time_steps"]
    if not isinstance(steps_raw, list) or not steps_raw:
        raise ManifestError(f"{path}: time_steps must be a nonempty list")
    units = {str(k): str(v) for k, v in raw.get("units", {}).items()}

    datasets: list[Dataset] = []
    expected: tuple[Attribute, ...] | None = None
    for i, entry in enumerate(steps_raw):
        for key in ("label", "load_newtons", "table_path"):
            if key not in entry:
                raise ManifestError(f"{path}: time_steps[{i}] missing {key!r}")
        table = path.parent / entry["table_path"]
        try:
            dataset = parse_table(
                table,
                expected,
                label=str(entry["label"]),
                load_newtons=float(entry["load_newtons"]),
                delimiter=delimiter,
                units=units,
            )
        except AttributeMismatchError as exc:
            raise AttributeMismatchError(f"time step {i}: {exc}") from None
        if expected is None:
            expected = dataset.attributes
        datasets.append(dataset)
    series = StudySeries(name=str(raw["name"]), time_steps=tuple(datasets))
    binding.validate(series)
    return series, binding


def write_study(
    series: StudySeries,
    binding: GeometryBinding,
    out_dir: str | Path,
    *,
    delimiter: str = ",",
) -> Path:
    """Write a series to the manifest + table format; returns the manifest path.

    Values are written with repr-level precision so a re-load compares equal.
    """
    out_dir = Path(out_dir)
    out_dir.mkdir(parents=True, exist_ok=True)
    entries = []
    for t, step in enumerate(series.time_steps):
        table_name = f"step_{t:03d}.csv"
        with (out_dir / table_name).open("w", encoding="utf-8", newline="") as fh:
            writer = csv.writer(fh, delimiter=delimiter)
            writer.writerow([a.name for a in step.attributes])
            for row in step.values:
                writer.writerow([repr(float(v)) for v in row])
        entries.append({
            "label": step.label,
            "load_newtons": step.load_newtons,
            "table_path": table_name,
        })
    manifest = {
        "name": series.name,
        "geometry_binding": {
            "start_x": binding.start_x, "start_y": binding.start_y,
            "start_z": binding.start_z, "end_x": binding.end_x,
            "end_y": binding.end_y, "end_z": binding.end_z,
            "diameter": binding.diameter,
        },
        "units": {a.name: a.unit for a in series.attributes if a.unit},
        "time_steps": entries,
    }
    manifest_path = out_dir / "study.json"
    manifest_path.write_text(
        json.dumps(manifest, indent=2, ensure_ascii=False) + "\n", encoding="utf-8"
    )
    return manifest_path


# --- synthetic data -----------------------------------------------------

@dataclass(frozen=True)
class Normal:
    mean: float
    std: float

    def validate(self) -> None:
        if self.std < 0 or not math.isfinite(self.std) or not math.isfinite(self.mean):
            raise ValueError(f"invalid normal sampler: mean={self.mean}, std={self.std}")

    def draw(self, rng: np.random.Generator, n: int) -> np.ndarray:
        return rng.normal(self.mean, self.std, n)


@dataclass(frozen=True)
class Uniform:
    low: float
    high: float

    def validate(self) -> None:
        if self.high < self.low:
            raise ValueError(f"invalid uniform sampler: [{self.low}, {self.high}]")

    def draw(self, rng: np.random.Generator, n: int) -> np.ndarray:
        return rng.uniform(self.low, self.high, n)


@dataclass(frozen=True)
class Mixture:
    """Weighted mixture of samplers; weights are normalized over their sum."""

    parts: tuple[tuple[float, Normal | Uniform], ...]

    def validate(self) -> None:
        if not self.parts:
            raise ValueError("mixture needs at least one component")
        total = sum(w for w, _ in self.parts)
        if total <= 0 or any(w < 0 for w, _ in self.parts):
            raise ValueError("mixture weights must be nonnegative with positive sum")
        for _, sampler in self.parts:
            sampler.validate()

    def draw(self, rng: np.random.Generator, n: int) -> np.ndarray:
        weights = np.array([w for w, _ in self.parts], dtype=float)
        weights /= weights.sum()
        choices = rng.choice(len(self.parts), size=n, p=weights)
        out = np.empty(n, dtype=np.float64)
        for i, (_, sampler) in enumerate(self.parts):
            mask = choices == i
            count = int(mask.sum())
            if count:
                out[mask] = sampler.draw(rng, count)
        return out


Sampler = Normal | Uniform | Mixture


@dataclass(frozen=True)
class AttributeSpec:
    """One synthetic attribute: a unit and one sampler per time step."""

    name: str
    unit: str
    per_step: tuple[Sampler, ...]


@dataclass(frozen=True)
class SeriesSpec:
    name: str
    labels: tuple[str, ...]
    loads: tuple[float, ...]
    counts: tuple[int, ...]
    attributes: tuple[AttributeSpec, ...]

    def __post_init__(self) -> None:
        steps = len(self.labels)
        if not (steps == len(self.loads) == len(self.counts)):
            raise ValueError("labels, loads and counts must have equal length")
        for attr in self.attributes:
            if len(attr.per_step) != steps:
                raise ValueError(
                    f"attribute {attr.name!r} declares {len(attr.per_step)} "
                    f"samplers for {steps} steps"
                )


def generate_synthetic(spec: SeriesSpec, seed: int) -> StudySeries:
    """Deterministic synthetic study: one RNG stream, step-major draw order."""
    for attr in spec.attributes:
        for sampler in attr.per_step:
            sampler.validate()
    rng = np.random.default_rng(seed)
    attributes = tuple(Attribute(a.name, a.unit) for a in spec.attributes)
    steps = []
    for t, (label, load, count) in enumerate(zip(spec.labels, spec.loads, spec.counts)):
        if count < 1:
            raise ValueError(f"step {label!r} must have at least one record")
        columns = [attr.per_step[t].draw(rng, count) for attr in spec.attributes]
        values = np.column_stack(columns)
        steps.append(Dataset(label=label, load_newtons=load,
                             attributes=attributes, values=values))
    return StudySeries(name=spec.name, time_steps=tuple(steps))


def demo_spec(
    steps: int = 8,
    records: int = 2000,
    extra_attributes: int = 0,
) -> tuple[SeriesSpec, GeometryBinding]:
    """A fiber-like study spec used by the CLI demo and the test suite.

    Seven geometry columns plus diameter-style attributes; the diameter
    distribution drifts upward mid-series so drift charts have a signal.
    """
    labels = tuple(f"{int(58 * t)}N" for t in range(steps))
    loads = tuple(float(58 * t) for t in range(steps))
    counts = tuple(records for _ in range(steps))

    def flat(sampler: Sampler) -> tuple[Sampler, ...]:
        return tuple(sampler for _ in range(steps))

    attrs = [
        AttributeSpec("RealX1", "µm", flat(Normal(500.0, 120.0))),
        AttributeSpec("RealY1", "µm", flat(Normal(500.0, 120.0))),
        AttributeSpec("RealZ1", "µm", flat(Uniform(0.0, 1000.0))),
        AttributeSpec("RealX2", "µm", flat(Normal(520.0, 120.0))),
        AttributeSpec("RealY2", "µm", flat(Normal(520.0, 120.0))),
        AttributeSpec("RealZ2", "µm", flat(Uniform(0.0, 1000.0))),
        AttributeSpec(
            "Diameter", "µm",
            tuple(
                Normal(13.0 if t >= steps // 2 else 11.0, 1.5)
                for t in range(steps)
            ),
        ),
        AttributeSpec(
            "Length", "µm",
            flat(Mixture(((0.5, Normal(250.0, 40.0)), (0.5, Normal(450.0, 40.0))))),
        ),
        AttributeSpec("Angle", "deg", flat(Uniform(0.0, 90.0))),
    ]
    for i in range(extra_attributes):
        attrs.append(AttributeSpec(f"Extra{i:02d}", "", flat(Normal(float(i), 1.0))))
    spec = SeriesSpec(
        name="synthetic-study",
        labels=labels,
        loads=loads,
        counts=counts,
        attributes=tuple(attrs),
    )
    binding = GeometryBinding(
        start_x="RealX1", start_y="RealY1", start_z="RealZ1",
        end_x="RealX2", end_y="RealY2", end_z="RealZ2", diameter="Diameter",
    )
    return spec, binding
