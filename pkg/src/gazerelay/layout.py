"""Tile grid geometry, focus-driven sizing, and gaze-share aggregation."""

from __future__ import annotations

import math
from dataclasses import dataclass, field, replace

from .types import (
    ClientId,
    ConfigError,
    GazeEdge,
    LayoutInfeasibleError,
    TileLayout,
    TileRect,
)

SIZE_SMALL, SIZE_MEDIUM, SIZE_LARGE = 0, 1, 2


@dataclass(frozen=True)
class LayoutConfig:
    """Grid geometry knobs, expressed relative to the screen so the same
    config behaves identically across screen sizes."""

    aspect: float = 4.0 / 3.0
    spacing_frac: float = 0.02  # gap between tiles, fraction of screen width
    min_tile_w: float = 96.0
    min_tile_h: float = 72.0
    include_self: bool = True
    # tile fill factor of its grid cell per size class (small, medium, large)
    class_fills: tuple[float, float, float] = (0.7, 0.85, 1.0)
    grow_ms: float = 3000.0
    shrink_idle_ms: float = 5000.0

    def __post_init__(self) -> None:
        if self.aspect <= 0 or self.spacing_frac < 0:
            raise ConfigError("bad aspect or spacing")
        if not all(0 < f <= 1 for f in self.class_fills):
            raise ConfigError("class fills must be in (0, 1]")


DEFAULT_LAYOUT = LayoutConfig()


def grid_shape(n: int) -> tuple[int, int]:
    """(cols, rows) of the near-square grid for n tiles."""
    cols = math.ceil(math.sqrt(n))
    rows = math.ceil(n / cols)
    return cols, rows


def compute_tile_layout(
    members: list[ClientId],
    viewer: ClientId,
    screen_w: float,
    screen_h: float,
    config: LayoutConfig = DEFAULT_LAYOUT,
    fills: dict[ClientId, float] | None = None,
) -> TileLayout:
    """Deterministic row-major grid of one tile per member.

    ``members`` must already be in join order; the viewer's own tile is
    included unless the config says otherwise. A short final row is
    centered. ``fills`` scales individual tiles within their grid cell
    (used by the focus layout); cells are disjoint and tiles stay inside
    their cells, so the layout is disjoint for any fill <= 1.
    """
    if len(members) < 2:
        raise ValueError("a session layout needs at least 2 members")
    tiled = [m for m in members if config.include_self or m != viewer]
    n = len(tiled)
    if n == 0:
        return TileLayout(viewer=viewer, tiles=(), spacing=0.0,
                          screen_w=screen_w, screen_h=screen_h)
    cols, rows = grid_shape(n)
    spacing = config.spacing_frac * screen_w
    cell_w = (screen_w - spacing * (cols + 1)) / cols
    cell_h = (screen_h - spacing * (rows + 1)) / rows
    if cell_w <= 0 or cell_h <= 0:
        raise LayoutInfeasibleError(
            f"screen {screen_w}x{screen_h} cannot fit a {cols}x{rows} grid"
        )
    # largest tile inscribed in a cell at the configured aspect ratio
    base_w = min(cell_w, cell_h * config.aspect)
    base_h = base_w / config.aspect
    if base_w < config.min_tile_w or base_h < config.min_tile_h:
        raise LayoutInfeasibleError(
            f"tiles {base_w:.0f}x{base_h:.0f} fall below the configured minimum"
        )
    tiles = []
    for i, owner in enumerate(tiled):
        row, col = divmod(i, cols)
        in_row = cols if row < rows - 1 else n - cols * (rows - 1)
        row_w = in_row * cell_w + (in_row + 1) * spacing
        x0 = (screen_w - row_w) / 2.0 + spacing + col * (cell_w + spacing)
        y0 = spacing + row * (cell_h + spacing)
        fill = fills.get(owner, 1.0) if fills else 1.0
        tw = base_w * fill
        th = base_h * fill
        tiles.append(
            TileRect(
                owner=owner,
                x=x0 + (cell_w - tw) / 2.0,
                y=y0 + (cell_h - th) / 2.0,
                w=tw,
                h=th,
            )
        )
    return TileLayout(
        viewer=viewer, tiles=tuple(tiles), spacing=spacing,
        screen_w=screen_w, screen_h=screen_h,
    )


@dataclass(frozen=True)
class TileFocus:
    """Focus bookkeeping for one tile."""

    total_focus_ms: float = 0.0  # monotone within a session
    streak_ms: float = 0.0       # continuous focus, resets when focus leaves
    idle_ms: float = 0.0
    size_class: int = SIZE_MEDIUM


@dataclass(frozen=True)
class FocusLedger:
    """Accumulated focus per tile plus the current display order."""

    entries: dict[ClientId, TileFocus] = field(default_factory=dict)
    order: tuple[ClientId, ...] = ()

    @staticmethod
    def for_members(members: list[ClientId]) -> "FocusLedger":
        return FocusLedger(
            entries={m: TileFocus() for m in members}, order=tuple(members)
        )


def _center_index(n: int) -> int:
    return (n - 1) // 2


def update_focus_layout(
    ledger: FocusLedger,
    viewer_target: ClientId | None,
    dt_ms: float,
    config: LayoutConfig = DEFAULT_LAYOUT,
) -> tuple[FocusLedger, dict[ClientId, int]]:
    """Accrue ``dt_ms`` of focus and apply grow/shrink/migrate rules.

    The focused tile grows one size class per ``grow_ms`` of continuous
    focus; tiles reaching the largest class move one slot toward the
    grid center per crossing. Unfocused tiles shrink one class per
    ``shrink_idle_ms`` idle. Returns the new ledger and the per-owner
    size classes.
    """
    if dt_ms <= 0:
        raise ValueError("dt_ms must be positive")
    entries = dict(ledger.entries)
    order = list(ledger.order)
    # iterate the incoming order: migration reshuffles ``order`` mid-loop,
    # which must not skip or double-process anyone this round
    for owner in ledger.order:
        e = entries[owner]
        if owner == viewer_target:
            e = replace(
                e,
                total_focus_ms=e.total_focus_ms + dt_ms,
                streak_ms=e.streak_ms + dt_ms,
                idle_ms=0.0,
            )
            while e.streak_ms >= config.grow_ms:
                e = replace(
                    e,
                    streak_ms=e.streak_ms - config.grow_ms,
                    size_class=min(SIZE_LARGE, e.size_class + 1),
                )
                if e.size_class == SIZE_LARGE:
                    pos = order.index(owner)
                    center = _center_index(len(order))
                    if pos != center:
                        step = 1 if pos < center else -1
                        order[pos], order[pos + step] = order[pos + step], order[pos]
        else:
            e = replace(e, streak_ms=0.0, idle_ms=e.idle_ms + dt_ms)
            while e.idle_ms >= config.shrink_idle_ms:
                e = replace(
                    e,
                    idle_ms=e.idle_ms - config.shrink_idle_ms,
                    size_class=max(SIZE_SMALL, e.size_class - 1),
                )
        entries[owner] = e
    new_ledger = FocusLedger(entries=entries, order=tuple(order))
    classes = {owner: entries[owner].size_class for owner in order}
    return new_ledger, classes


def focus_layout(
    ledger: FocusLedger,
    viewer: ClientId,
    screen_w: float,
    screen_h: float,
    config: LayoutConfig = DEFAULT_LAYOUT,
) -> TileLayout:
    """Tile layout honoring the ledger's display order and size classes."""
    fills = {
        owner: config.class_fills[e.size_class] for owner, e in ledger.entries.items()
    }
    return compute_tile_layout(
        list(ledger.order), viewer, screen_w, screen_h, config, fills=fills
    )


def aggregate_gaze_share(
    edges: list[GazeEdge], target: ClientId, members: int
) -> float:
    """Fraction of the other members currently looking at ``target``.

    This is the headline number a lecturer sees in the large-audience
    setting.
    """
    if members < 2:
        raise ValueError("gaze share needs at least 2 members")
    sources = {e.source for e in edges if e.target == target}
    sources.discard(target)
    return len(sources) / (members - 1)
