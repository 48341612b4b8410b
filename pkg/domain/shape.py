"""
Adaptive vehicle length and width estimation for Ladartrack

Occlusion only ever makes a visible edge look shorter than the vehicle, so each
dimension is tracked with an exponentially decayed histogram and the estimate is
the longest well-supported peak after discarding the extreme long tail.
"""

import math
from dataclasses import dataclass, field, replace
from typing import Any, Dict, List, Optional

from typing_extensions import Self

from .entities import ShapeEstimate, _known_keys
from .exceptions import ImmatureHistogramError, InvalidArgumentError


@dataclass(frozen=True)
class ShapeConfig:
    """Histogram settings shared by the length and width estimators."""

    bin_width: float = 0.2
    half_life: float = 50.0
    maturity: float = 3.0
    peak_fraction: float = 0.2
    trim_fraction: float = 0.05
    default_length: float = 4.5
    default_width: float = 2.0

    def __post_init__(self):
        for name in ('bin_width', 'half_life', 'maturity', 'default_length', 'default_width'):
            value = getattr(self, name)
            if not (math.isfinite(value) and value > 0):
                raise InvalidArgumentError(f"ShapeConfig.{name} must be > 0 (got {value!r})")
        if not 0 < self.peak_fraction <= 1:
            raise InvalidArgumentError("ShapeConfig.peak_fraction must be in (0, 1]")
        if not 0 <= self.trim_fraction < 1:
            raise InvalidArgumentError("ShapeConfig.trim_fraction must be in [0, 1)")

    def to_dict(self) -> Dict[str, Any]:
        return {
            'bin_width': self.bin_width,
            'half_life': self.half_life,
            'maturity': self.maturity,
            'peak_fraction': self.peak_fraction,
            'trim_fraction': self.trim_fraction,
            'default_length': self.default_length,
            'default_width': self.default_width,
        }

    @classmethod
    def from_dict(cls, data: Dict[str, Any]) -> Self:
        return cls(**_known_keys(cls, data))


@dataclass(frozen=True)
class DimensionHistogram:
    """Decayed histogram of one dimension; bins maps bin index to weight."""

    bin_width: float = 0.2
    half_life: float = 50.0
    bins: Dict[int, float] = field(default_factory=dict)
    total_weight: float = 0.0

    @property
    def decay(self) -> float:
        return 2.0 ** (-1.0 / self.half_life)

    def bin_index(self, value: float) -> int:
        return int(math.floor(value / self.bin_width))

    def bin_center(self, index: int) -> float:
        return (index + 0.5) * self.bin_width


def observe_dimension(hist: DimensionHistogram, value: float) -> DimensionHistogram:
    """Decay every bin and add unit weight to the bin holding ``value``.

    Raises:
        InvalidArgumentError: if value is not a positive finite number
    """
    if not (math.isfinite(value) and value > 0):
        raise InvalidArgumentError(f"Dimension observation must be positive and finite (got {value!r})")
    decay = hist.decay
    bins = {index: weight * decay for index, weight in hist.bins.items()}
    index = hist.bin_index(value)
    bins[index] = bins.get(index, 0.0) + 1.0
    return replace(hist, bins=bins, total_weight=math.fsum(bins.values()))


def trimmed_bins(hist: DimensionHistogram, trim_fraction: float = 0.05) -> Dict[int, float]:
    """Bins left after dropping the longest ones holding at most ``trim_fraction`` of the weight."""
    ordered = sorted(hist.bins)
    budget = trim_fraction * hist.total_weight
    removed = 0.0
    while len(ordered) > 1 and removed + hist.bins[ordered[-1]] <= budget:
        removed += hist.bins[ordered.pop()]
    return {index: hist.bins[index] for index in ordered}


def estimate_dimension(hist: DimensionHistogram, config: Optional[ShapeConfig] = None) -> float:
    """Centre of the longest peak holding at least peak_fraction of the strongest one.

    Raises:
        ImmatureHistogramError: while the accumulated weight is below maturity
    """
    config = config or ShapeConfig()
    if hist.total_weight < config.maturity:
        raise ImmatureHistogramError(
            f"Histogram weight {hist.total_weight:.3f} is below maturity {config.maturity}")
    kept = trimmed_bins(hist, config.trim_fraction)
    peaks: List[int] = [
        index for index, weight in kept.items()
        if weight >= kept.get(index - 1, 0.0) and weight >= kept.get(index + 1, 0.0)
    ]
    strongest = max(kept[index] for index in peaks)
    eligible = [index for index in peaks if kept[index] >= config.peak_fraction * strongest]
    return hist.bin_center(max(eligible))


class ShapeModel:
    """Length and width histograms owned by a single track.

    Until a histogram matures its dimension falls back to the configured
    default, or to the extent seen when the track was spawned if
    ``seed_dimensions`` was called.
    """

    def __init__(self, config: Optional[ShapeConfig] = None):
        self.config = config or ShapeConfig()
        self.length_hist = DimensionHistogram(self.config.bin_width, self.config.half_life)
        self.width_hist = DimensionHistogram(self.config.bin_width, self.config.half_life)
        self.fallback_length = self.config.default_length
        self.fallback_width = self.config.default_width
        self._cached: Optional[ShapeEstimate] = None

    def copy(self) -> 'ShapeModel':
        clone = ShapeModel(self.config)
        clone.length_hist = self.length_hist
        clone.width_hist = self.width_hist
        clone.fallback_length = self.fallback_length
        clone.fallback_width = self.fallback_width
        clone._cached = self._cached
        return clone

    def seed_dimensions(self, length: float, width: float) -> None:
        """Replace the immature fallbacks with dimensions seen at spawn time."""
        if not (math.isfinite(length) and length > 0 and math.isfinite(width) and width > 0):
            raise InvalidArgumentError(f"Seed dimensions must be positive (got {length!r}, {width!r})")
        self.fallback_length = length
        self.fallback_width = width
        self._cached = None

    def observe(self, length: Optional[float] = None, width: Optional[float] = None) -> None:
        """Record visible edge lengths; missing or non-positive values are skipped."""
        if length is not None and length > 0:
            self.length_hist = observe_dimension(self.length_hist, length)
            self._cached = None
        if width is not None and width > 0:
            self.width_hist = observe_dimension(self.width_hist, width)
            self._cached = None

    def _dimension(self, hist: DimensionHistogram) -> Optional[float]:
        try:
            return estimate_dimension(hist, self.config)
        except ImmatureHistogramError:
            return None

    def estimate(self) -> ShapeEstimate:
        """Current dimensions, always ordered so length >= width."""
        if self._cached is not None:
            return self._cached
        length = self._dimension(self.length_hist)
        width = self._dimension(self.width_hist)
        length_confidence = self.length_hist.total_weight
        width_confidence = self.width_hist.total_weight
        if length is None:
            length = self.fallback_length
        if width is None:
            width = self.fallback_width
        if width > length:
            length, width = width, length
            length_confidence, width_confidence = width_confidence, length_confidence
        self._cached = ShapeEstimate(
            length=length,
            width=width,
            length_confidence=length_confidence,
            width_confidence=width_confidence,
        )
        return self._cached
