"""Per-attribute statistics feeding every chart.

Quartile metrics, skewness/kurtosis, peak-count modality estimation,
log2-based bin counts, shared-edge histograms, symmetric chi-square
histogram distance, and the consecutive-step drift matrix. All functions
are pure; the `StudyStats` aggregate caches the full table for a series.
"""
from __future__ import annotations

import enum
import math
from dataclasses import dataclass

import numpy as np

from .config import MODALITY, ModalityConfig
from .ingest import StudySeries


class DegenerateDistributionError(ValueError):
    """Raised for zero-variance or zero-range inputs."""


class ModalityClass(enum.IntEnum):
    """Ordinal distribution-shape classes (uniform lowest)."""

    UNIFORM = 0
    UNIMODAL = 1
    BIMODAL = 2
    MULTIMODAL = 3


@dataclass(frozen=True)
class Histogram:
    """Uniform-bin histogram; bins are half-open with the last bin closed."""

    bin_edges: tuple[float, ...]
    counts: tuple[int, ...]

    def __post_init__(self) -> None:
        if len(self.bin_edges) != len(self.counts) + 1:
            raise ValueError("edge/count length mismatch")
        edges = np.asarray(self.bin_edges)
        if not (np.diff(edges) > 0).all():
            raise ValueError("bin edges must be strictly ascending")

    @property
    def total(self) -> int:
        return int(sum(self.counts))

    def frequencies(self) -> np.ndarray:
        total = self.total
        counts = np.asarray(self.counts, dtype=np.float64)
        return counts / total if total > 0 else counts


@dataclass(frozen=True)
class AttributeStats:
    """Summary of one attribute at one time step.

    norm_min/norm_max are global per-attribute bounds across all time
    steps so one y-axis can compare the attribute across steps. Zero
    variance marks the stats degenerate; such glyphs get the reserved
    neutral color and contribute nothing to drift normalization.
    """

    median: float
    iqr: float
    skewness: float | None
    kurtosis_excess: float | None
    modality: ModalityClass
    peak_count: int
    norm_min: float
    norm_max: float

    @property
    def degenerate(self) -> bool:
        return self.skewness is None


def quantile(values, q: float) -> float:
    """Sorted-position linear interpolation at index (n-1)*q."""
    v = np.asarray(values, dtype=np.float64)
    if v.size == 0:
        raise ValueError("quantile of empty input")
    if not 0.0 <= q <= 1.0:
        raise ValueError(f"q must be in [0, 1], got {q}")
    return float(np.quantile(v, q))


def skewness_kurtosis(values) -> tuple[float, float]:
    """Population-moment skewness g1 and excess kurtosis g2.

    Central moments divide by n (no small-sample correction; fiber tables
    have tens of thousands of rows, and the uncorrected form reproduces
    identically across implementations).
    """
    v = np.asarray(values, dtype=np.float64)
    if v.size < 2:
        raise ValueError("need at least two values")
    centered = v - v.mean()
    sq = centered * centered
    m2 = float(sq.mean())
    if m2 == 0.0:
        raise DegenerateDistributionError("zero variance")
    cubed = sq * centered
    m3 = float(cubed.mean())
    m4 = float((cubed * centered).mean())
    return m3 / m2 ** 1.5, m4 / (m2 * m2) - 3.0


def _peak_count(frequencies: np.ndarray, floor: float) -> int:
    """Count local maxima (plateaus collapse to one peak) above the floor."""
    fmax = frequencies.max()
    if fmax <= 0:
        return 0
    threshold = floor * fmax
    peaks = 0
    i = 0
    n = len(frequencies)
    while i < n:
        j = i
        while j + 1 < n and frequencies[j + 1] == frequencies[i]:
            j += 1
        rising = i == 0 or frequencies[i - 1] < frequencies[i]
        falling = j == n - 1 or frequencies[j + 1] < frequencies[i]
        if rising and falling and frequencies[i] >= threshold:
            peaks += 1
        i = j + 1
    return peaks


def estimate_modality(
    values, config: ModalityConfig = MODALITY
) -> tuple[int, ModalityClass]:
    """Peak count and shape class via bin-difference roughness maximization.

    For each bin count k in the scan set, build a uniform histogram over
    [min, max], normalize to frequencies, and score the roughness
    R(k) = sum |f[i+1] - f[i]|. The k maximizing R (smallest on ties)
    selects the histogram whose qualifying local maxima are counted.
    Near-flat winners (R below the uniformity threshold) classify as
    uniform regardless of peak count.
    """
    v = np.asarray(values, dtype=np.float64)
    if v.size < 10:
        raise ValueError("need at least 10 values to estimate modality")
    lo, hi = float(v.min()), float(v.max())
    if hi <= lo:
        raise DegenerateDistributionError("constant input")
    # one sort, then O(k log n) searchsorted counting per candidate k
    u = np.sort((v - lo) / (hi - lo))
    n = v.size

    def frequencies(k: int) -> np.ndarray:
        cuts = np.searchsorted(u, np.arange(1, k) / k, side="left")
        counts = np.diff(np.concatenate(([0], cuts, [n])))
        return counts / n

    best_k = 0
    best_r = -1.0
    for k in config.scan_set(n):
        roughness = float(np.abs(np.diff(frequencies(k))).sum())
        if roughness > best_r:
            best_r = roughness
            best_k = k
    peaks = _peak_count(frequencies(best_k), config.peak_floor)
    if best_r < config.uniformity_threshold:
        return peaks, ModalityClass.UNIFORM
    if peaks <= 1:
        return peaks, ModalityClass.UNIMODAL
    if peaks == 2:
        return peaks, ModalityClass.BIMODAL
    return peaks, ModalityClass.MULTIMODAL


def sturges_bins(n: int) -> int:
    """ceil(log2(n)) + 1 bins for a sample of size n."""
    if n < 1:
        raise ValueError("n must be >= 1")
    return math.ceil(math.log2(n)) + 1


def shared_binning(series: StudySeries, attribute: str) -> tuple[float, ...]:
    """Bin edges shared by all time steps of one attribute.

    The bin count is the maximum of the per-step log2-rule counts; edges
    span the attribute's global [min, max] so every chart and the drift
    measure bin identically.
    """
    index = series.attribute_index(attribute)
    bins = max(sturges_bins(step.record_count) for step in series.time_steps)
    lo = min(float(step.values[:, index].min()) for step in series.time_steps)
    hi = max(float(step.values[:, index].max()) for step in series.time_steps)
    if hi <= lo:
        raise DegenerateDistributionError(
            f"attribute {attribute!r} is constant across the study"
        )
    return tuple(float(e) for e in np.linspace(lo, hi, bins + 1))


def histogram(values, bin_edges) -> Histogram:
    """Count values into bins [e_i, e_{i+1}), last bin closed."""
    edges = np.asarray(bin_edges, dtype=np.float64)
    counts, _ = np.histogram(np.asarray(values, dtype=np.float64), bins=edges)
    return Histogram(
        bin_edges=tuple(float(e) for e in edges),
        counts=tuple(int(c) for c in counts),
    )


def chi_square_distance(p: Histogram, q: Histogram) -> float:
    """Symmetric chi-square distance between two same-edge histograms.

    Counts normalize to frequencies first, so differing record counts per
    step compare fairly; zero-mass bins are skipped. The result is
    symmetric and bounded by 2.
    """
    if p.bin_edges != q.bin_edges:
        raise ValueError("histograms must share bin edges")
    fp = p.frequencies()
    fq = q.frequencies()
    mass = fp + fq
    keep = mass > 0
    if not keep.any():
        return 0.0
    diff = fp[keep] - fq[keep]
    return float(np.sum(diff * diff / mass[keep]))


@dataclass(frozen=True)
class DriftMatrix:
    """Chi-square distances between consecutive steps, (T-1) x A.

    `normalized` divides by the single global maximum (all pairs, all
    attributes) so magnitudes stay comparable when attributes are
    juxtaposed on one chart; `per_attribute` normalization is available
    behind a flag for the alternate reading.
    """

    raw: tuple[tuple[float, ...], ...]
    normalized: tuple[tuple[float, ...], ...]

    @property
    def shape(self) -> tuple[int, int]:
        return (len(self.raw), len(self.raw[0]) if self.raw else 0)


def drift_matrix(series: StudySeries, *, norm: str = "global") -> DriftMatrix:
    """Drift of every attribute between every pair of consecutive steps.

    Degenerate (constant) attributes contribute zero drift and therefore
    never drive the normalization maximum.
    """
    if len(series.time_steps) < 2:
        raise ValueError("drift needs at least 2 time steps")
    if norm not in ("global", "per-attribute"):
        raise ValueError(f"unknown drift normalization {norm!r}")
    pairs = len(series.time_steps) - 1
    names = [a.name for a in series.attributes]
    raw = np.zeros((pairs, len(names)), dtype=np.float64)
    for a, name in enumerate(names):
        try:
            edges = shared_binning(series, name)
        except DegenerateDistributionError:
            continue
        hists = [histogram(step.column(name), edges) for step in series.time_steps]
        for t in range(pairs):
            raw[t, a] = chi_square_distance(hists[t], hists[t + 1])
    if norm == "global":
        peak = raw.max()
        normalized = raw / peak if peak > 0 else np.zeros_like(raw)
    else:
        peaks = raw.max(axis=0, keepdims=True)
        with np.errstate(invalid="ignore", divide="ignore"):
            normalized = np.where(peaks > 0, raw / np.where(peaks > 0, peaks, 1.0), 0.0)
    return DriftMatrix(
        raw=tuple(tuple(float(x) for x in row) for row in raw),
        normalized=tuple(tuple(float(x) for x in row) for row in normalized),
    )


def normalize_value(x: float, norm_min: float, norm_max: float) -> float:
    """Map x into [0, 1] over the given bounds; degenerate bounds map to 0."""
    if norm_min > norm_max:
        raise ValueError("norm_min must not exceed norm_max")
    if norm_max == norm_min:
        return 0.0
    return (x - norm_min) / (norm_max - norm_min)


@dataclass(frozen=True)
class StudyStats:
    """The full per-step, per-attribute stats table plus shared bin edges."""

    per_step: tuple[tuple[AttributeStats, ...], ...]  # [time][attribute]
    edges: tuple[tuple[float, ...] | None, ...]       # per attribute, None if degenerate
    drift: DriftMatrix | None                          # None for single-step studies

    def stats_for(self, time_step: int, attribute_index: int) -> AttributeStats:
        return self.per_step[time_step][attribute_index]


def attribute_stats(
    series: StudySeries,
    *,
    config: ModalityConfig = MODALITY,
    drift_norm: str = "global",
) -> StudyStats:
    """Compute every chart input for a series in one pass."""
    names = [a.name for a in series.attributes]
    norm_lo = [min(float(s.values[:, a].min()) for s in series.time_steps)
               for a in range(len(names))]
    norm_hi = [max(float(s.values[:, a].max()) for s in series.time_steps)
               for a in range(len(names))]
    table: list[tuple[AttributeStats, ...]] = []
    for step in series.time_steps:
        row: list[AttributeStats] = []
        for a in range(len(names)):
            column = step.values[:, a]
            q25, median, q75 = (float(x) for x in
                                np.quantile(column, (0.25, 0.5, 0.75)))
            iqr = q75 - q25
            try:
                skew, kurt = skewness_kurtosis(column)
            except DegenerateDistributionError:
                skew = kurt = None
            if skew is None or column.size < 10 or column.max() <= column.min():
                peaks, modality = 0, ModalityClass.UNIFORM
            else:
                peaks, modality = estimate_modality(column, config)
            row.append(AttributeStats(
                median=median, iqr=iqr, skewness=skew, kurtosis_excess=kurt,
                modality=modality, peak_count=peaks,
                norm_min=norm_lo[a], norm_max=norm_hi[a],
            ))
        table.append(tuple(row))
    edges: list[tuple[float, ...] | None] = []
    for name in names:
        try:
            edges.append(shared_binning(series, name))
        except DegenerateDistributionError:
            edges.append(None)
    drift = drift_matrix(series, norm=drift_norm) if len(series.time_steps) > 1 else None
    return StudyStats(per_step=tuple(table), edges=tuple(edges), drift=drift)
