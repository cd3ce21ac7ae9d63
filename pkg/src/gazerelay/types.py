"""Shared domain types: samples, edges, tiles, layouts."""

from __future__ import annotations

from dataclasses import dataclass, field

ClientId = str


class OrderingError(ValueError):
    """Timestamp went backwards (or repeated) within one stream."""


class LayoutInfeasibleError(ValueError):
    """Screen too small to honor minimum tile size and spacing."""


class InsufficientDataError(ValueError):
    """An operation needs at least one sample and got none."""


class ConfigError(ValueError):
    """Configuration values violate a documented precondition."""


@dataclass(frozen=True)
class GazeSample:
    """One gaze point in viewer screen space, raw or smoothed.

    ``t`` is in milliseconds and must increase strictly within one
    client stream.
    """

    t: float
    x: float
    y: float
    screen_w: float
    screen_h: float

    def __post_init__(self) -> None:
        if self.screen_w <= 0 or self.screen_h <= 0:
            raise ConfigError("screen dimensions must be positive")


@dataclass(frozen=True)
class GazeEdge:
    """Directed who-looks-at-whom pair; ``target is None`` means looking at no one."""

    source: ClientId
    target: ClientId | None
    t: float

    def __post_init__(self) -> None:
        if self.target is not None and self.target == self.source:
            raise ValueError("self-directed edges must be normalized to target=None")


@dataclass(frozen=True)
class TileRect:
    """One participant's video tile, in viewer screen pixels."""

    owner: ClientId
    x: float
    y: float
    w: float
    h: float

    def __post_init__(self) -> None:
        if self.w <= 0 or self.h <= 0:
            raise ConfigError("tile size must be positive")

    @property
    def center(self) -> tuple[float, float]:
        return (self.x + self.w / 2.0, self.y + self.h / 2.0)

    def contains(self, px: float, py: float) -> bool:
        return self.x <= px <= self.x + self.w and self.y <= py <= self.y + self.h

    def central_rect(self) -> tuple[float, float, float, float]:
        """Concentric half-width x half-height region used for gaze classification.

        Returned as (x1, y1, x2, y2).
        """
        return (
            self.x + self.w / 4.0,
            self.y + self.h / 4.0,
            self.x + 3.0 * self.w / 4.0,
            self.y + 3.0 * self.h / 4.0,
        )

    def contains_central(self, px: float, py: float) -> bool:
        x1, y1, x2, y2 = self.central_rect()
        return x1 <= px <= x2 and y1 <= py <= y2


@dataclass(frozen=True)
class TileLayout:
    """Per-viewer geometry of all participant tiles."""

    viewer: ClientId
    tiles: tuple[TileRect, ...]
    spacing: float
    screen_w: float
    screen_h: float
    _by_owner: dict = field(init=False, repr=False, compare=False, hash=False)

    def __post_init__(self) -> None:
        object.__setattr__(self, "_by_owner", {t.owner: t for t in self.tiles})
        if len(self._by_owner) != len(self.tiles):
            raise ValueError("duplicate tile owners in layout")

    def tile_of(self, owner: ClientId) -> TileRect | None:
        return self._by_owner.get(owner)

    @property
    def owners(self) -> tuple[ClientId, ...]:
        return tuple(t.owner for t in self.tiles)


def rects_disjoint(a: TileRect, b: TileRect) -> bool:
    """True when the two tiles have no overlapping interior."""
    return (
        a.x + a.w <= b.x
        or b.x + b.w <= a.x
        or a.y + a.h <= b.y
        or b.y + b.h <= a.y
    )
