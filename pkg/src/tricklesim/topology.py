"""Network layouts for the simulator.

Two layouts are enough for the experiments here: a single cell in which
everyone hears everyone, and a toroidal square grid with unit spacing where
a broadcast reaches every node within Euclidean distance R (distances wrap
around both axes).
"""

from dataclasses import dataclass, field
from functools import cached_property

import numpy as np

from .exceptions import ParameterError

SINGLE_CELL = "single_cell"
GRID = "grid"


@dataclass
class Topology:
    kind: str
    n_nodes: int
    side: int | None = None
    radius: float | None = None
    _neighbors: list | None = field(default=None, repr=False)

    @cached_property
    def neighbors(self) -> list[np.ndarray]:
        """Per-node arrays of neighbor ids (symmetric, never includes self)."""
        if self._neighbors is not None:
            return self._neighbors
        if self.kind == SINGLE_CELL:
            ids = np.arange(self.n_nodes)
            return [np.delete(ids, i) for i in range(self.n_nodes)]
        return _grid_neighbors(self.side, self.radius)

    def describe(self) -> dict:
        d = {"kind": self.kind, "n_nodes": self.n_nodes}
        if self.kind == GRID:
            d["side"] = self.side
            d["radius"] = self.radius
        return d


def toroidal_offsets(side: int, radius: float) -> list[tuple[int, int]]:
    """Nonzero lattice offsets within toroidal Euclidean distance ``radius``."""
    offs = []
    r2 = radius * radius
    for dx in range(side):
        wx = min(dx, side - dx)
        for dy in range(side):
            if dx == 0 and dy == 0:
                continue
            wy = min(dy, side - dy)
            if wx * wx + wy * wy <= r2:
                offs.append((dx, dy))
    return offs


def _grid_neighbors(side: int, radius: float) -> list[np.ndarray]:
    offs = toroidal_offsets(side, radius)
    n = side * side
    if not offs:
        return [np.empty(0, dtype=np.int64) for _ in range(n)]
    dx = np.array([o[0] for o in offs])
    dy = np.array([o[1] for o in offs])
    out = []
    for i in range(n):
        x, y = divmod(i, side)
        out.append(((x + dx) % side) * side + (y + dy) % side)
    return out


def build_topology(kind: str, *, n_nodes: int | None = None, side: int | None = None,
                   radius: float | None = None) -> Topology:
    """Validated constructor for both layout kinds."""
    if kind == SINGLE_CELL:
        if n_nodes is None or n_nodes < 1:
            raise ParameterError(f"single_cell topology needs n_nodes >= 1, got {n_nodes!r}")
        return Topology(kind=SINGLE_CELL, n_nodes=int(n_nodes))
    if kind == GRID:
        if side is None or side < 1:
            raise ParameterError(f"grid topology needs side >= 1, got {side!r}")
        if radius is None or radius < 0:
            raise ParameterError(f"grid topology needs a broadcast radius >= 0, got {radius!r}")
        return Topology(kind=GRID, n_nodes=int(side) * int(side), side=int(side),
                        radius=float(radius))
    raise ParameterError(f"unknown topology kind {kind!r}")


def single_cell(n_nodes: int) -> Topology:
    return build_topology(SINGLE_CELL, n_nodes=n_nodes)


def grid(side: int, radius: float) -> Topology:
    return build_topology(GRID, side=side, radius=radius)


def cell_size(side: int, radius: float, include_self: bool = True) -> int:
    """Number of nodes a grid broadcast reaches.

    By convention the transmitter itself is included, so this is the n to
    plug into single-cell formulas.  Pass include_self=False for the bare
    neighbor count; the distinction matters when comparing against coverage
    based on pi R^2.
    """
    if side < 1 or radius < 0:
        raise ParameterError(f"cell_size needs side >= 1 and radius >= 0, got {side!r}, {radius!r}")
    count = len(toroidal_offsets(side, radius))
    return count + 1 if include_self else count
