"""Staggered-grid geometry, field storage and snapshot I/O.

The layout places the D/E components at the centers of the low-side cell
faces and the B/H components on the low-side cell edges, with both material
tensors piecewise constant over the primary cell.  For cell (i, j, k):

    Dx, Ex at (x_i,      y_j+1/2,  z_k+1/2)     Bx, Hx at (x_i+1/2,  y_j,      z_k)
    Dy, Ey at (x_i+1/2,  y_j,      z_k+1/2)     By, Hy at (x_i,      y_j+1/2,  z_k)
    Dz, Ez at (x_i+1/2,  y_j+1/2,  z_k)         Bz, Hz at (x_i,      y_j,      z_k+1/2)

Note this swaps E and H relative to the classic Yee convention (E on faces,
H on edges); comparisons against textbook Yee codes must account for it.

Internally everything is in normalized units (c = eps0 = mu0 = 1).
"""

from __future__ import annotations

import struct
from dataclasses import dataclass, field

import numpy as np

BOUNDARY_KINDS = ("periodic", "pec", "upml")

FIELD_COMPONENTS = (
    "Dx", "Dy", "Dz", "Ex", "Ey", "Ez",
    "Bx", "By", "Bz", "Hx", "Hy", "Hz",
)

# Staggering offsets in units of the cell spacing.
_FACE_OFFSETS = {
    "x": (0.0, 0.5, 0.5),
    "y": (0.5, 0.0, 0.5),
    "z": (0.5, 0.5, 0.0),
}
_EDGE_OFFSETS = {
    "x": (0.5, 0.0, 0.0),
    "y": (0.0, 0.5, 0.0),
    "z": (0.0, 0.0, 0.5),
}

COMPONENT_OFFSETS = {}
for _ax in "xyz":
    for _f in ("D", "E"):
        COMPONENT_OFFSETS[_f + _ax] = _FACE_OFFSETS[_ax]
    for _f in ("B", "H"):
        COMPONENT_OFFSETS[_f + _ax] = _EDGE_OFFSETS[_ax]


@dataclass(frozen=True)
class YeeGrid:
    """Uniform grid metadata: cell counts, spacings and boundary kinds."""

    nx: int
    ny: int
    nz: int
    dx: float
    dy: float
    dz: float
    boundaries: tuple[str, str, str] = ("periodic", "periodic", "periodic")

    def __post_init__(self):
        for n in (self.nx, self.ny, self.nz):
            if not isinstance(n, (int, np.integer)) or n < 2:
                raise ValueError(f"cell counts must be integers >= 2, got {n}")
        for d in (self.dx, self.dy, self.dz):
            if not d > 0:
                raise ValueError(f"cell spacings must be positive, got {d}")
        if len(self.boundaries) != 3:
            raise ValueError("one boundary kind per axis is required")
        for b in self.boundaries:
            if b not in BOUNDARY_KINDS:
                raise ValueError(f"unknown boundary kind {b!r}")

    @property
    def shape(self) -> tuple[int, int, int]:
        return (self.nx, self.ny, self.nz)

    @property
    def spacing(self) -> tuple[float, float, float]:
        return (self.dx, self.dy, self.dz)

    @property
    def n_cells(self) -> int:
        return self.nx * self.ny * self.nz

    def axis_extent(self, axis: int) -> float:
        return self.shape[axis] * self.spacing[axis]

    def is_periodic(self, axis: int) -> bool:
        return self.boundaries[axis] == "periodic"

    def cell_center(self, i: int, j: int, k: int) -> tuple[float, float, float]:
        return ((i + 0.5) * self.dx, (j + 0.5) * self.dy, (k + 0.5) * self.dz)


@dataclass
class FieldSet:
    """The twelve staggered scalar field arrays of one simulation state.

    All arrays share the grid shape; entry (i, j, k) belongs to cell
    (i, j, k).  E is co-located with D and H with B.  ``time_level`` tracks
    the integer step count n: D/E live at t = n*dt, B/H at t = (n - 1/2)*dt.
    """

    Dx: np.ndarray
    Dy: np.ndarray
    Dz: np.ndarray
    Ex: np.ndarray
    Ey: np.ndarray
    Ez: np.ndarray
    Bx: np.ndarray
    By: np.ndarray
    Bz: np.ndarray
    Hx: np.ndarray
    Hy: np.ndarray
    Hz: np.ndarray
    time_level: float = 0.0

    @classmethod
    def zeros(cls, shape: tuple[int, int, int]) -> "FieldSet":
        return cls(*[np.zeros(shape, dtype=np.float64) for _ in range(12)])

    def get(self, name: str) -> np.ndarray:
        if name not in FIELD_COMPONENTS:
            raise KeyError(f"unknown field component {name!r}")
        return getattr(self, name)

    def d_vector(self) -> tuple[np.ndarray, np.ndarray, np.ndarray]:
        return (self.Dx, self.Dy, self.Dz)

    def b_vector(self) -> tuple[np.ndarray, np.ndarray, np.ndarray]:
        return (self.Bx, self.By, self.Bz)

    def copy(self) -> "FieldSet":
        return FieldSet(*[self.get(n).copy() for n in FIELD_COMPONENTS],
                        time_level=self.time_level)

    def is_finite(self) -> bool:
        return all(np.isfinite(self.get(n)).all() for n in FIELD_COMPONENTS)


def create_lattice(dims, spacing, boundaries=("periodic", "periodic", "periodic")):
    """Build a YeeGrid and a zero-initialized FieldSet.

    ``boundaries`` may give one kind per axis, or per-face pairs
    ((lo, hi), ...); the two faces of an axis must agree.
    """
    norm = []
    for b in boundaries:
        if isinstance(b, str):
            norm.append(b)
        else:
            lo, hi = b
            if lo != hi:
                raise ValueError(
                    f"boundary kinds must match on both faces of an axis, got {b!r}")
            norm.append(lo)
    grid = YeeGrid(int(dims[0]), int(dims[1]), int(dims[2]),
                   float(spacing[0]), float(spacing[1]), float(spacing[2]),
                   tuple(norm))
    return grid, FieldSet.zeros(grid.shape)


def field_position(component: str, cell, grid: YeeGrid):
    """Physical coordinates of one field component of one cell."""
    i, j, k = cell
    if not (0 <= i < grid.nx and 0 <= j < grid.ny and 0 <= k < grid.nz):
        raise IndexError(f"cell {cell} outside grid {grid.shape}")
    try:
        ox, oy, oz = COMPONENT_OFFSETS[component]
    except KeyError:
        raise KeyError(f"unknown field component {component!r}") from None
    return ((i + ox) * grid.dx, (j + oy) * grid.dy, (k + oz) * grid.dz)


def component_positions(component: str, grid: YeeGrid):
    """Coordinate axes (1D arrays x, y, z) for a whole component array."""
    ox, oy, oz = COMPONENT_OFFSETS[component]
    return ((np.arange(grid.nx) + ox) * grid.dx,
            (np.arange(grid.ny) + oy) * grid.dy,
            (np.arange(grid.nz) + oz) * grid.dz)


# ---------------------------------------------------------------------------
# Snapshot export: flat float64 binary with a small self-describing header.

_SNAP_MAGIC = b"AFSNAP01"


def save_field_snapshot(path, grid: YeeGrid, component: str,
                        array: np.ndarray, time_level: float) -> None:
    if array.shape != grid.shape:
        raise ValueError("array shape does not match grid")
    name = component.encode("ascii")
    if len(name) > 16:
        raise ValueError("component name too long")
    header = struct.pack(
        "<8s3q3d16sd", _SNAP_MAGIC, grid.nx, grid.ny, grid.nz,
        grid.dx, grid.dy, grid.dz, name.ljust(16, b"\0"), float(time_level))
    with open(path, "wb") as fh:
        fh.write(header)
        fh.write(np.ascontiguousarray(array, dtype=np.float64).tobytes())


def load_field_snapshot(path):
    """Return (dims, spacing, component, time_level, array)."""
    with open(path, "rb") as fh:
        head = fh.read(struct.calcsize("<8s3q3d16sd"))
        magic, nx, ny, nz, dx, dy, dz, name, tl = struct.unpack("<8s3q3d16sd", head)
        if magic != _SNAP_MAGIC:
            raise ValueError(f"{path}: not a field snapshot file")
        data = np.frombuffer(fh.read(), dtype=np.float64)
    if data.size != nx * ny * nz:
        raise ValueError(f"{path}: truncated snapshot payload")
    arr = data.reshape((nx, ny, nz)).copy()
    return (nx, ny, nz), (dx, dy, dz), name.rstrip(b"\0").decode(), tl, arr


def export_slice_csv(path, grid: YeeGrid, component: str, array: np.ndarray,
                     axis: int, index: int) -> None:
    """Write a 2D cut of one component as CSV (u, v, value) rows."""
    if array.shape != grid.shape:
        raise ValueError("array shape does not match grid")
    coords = component_positions(component, grid)
    sl = [slice(None)] * 3
    sl[axis] = index
    plane = array[tuple(sl)]
    rem = [a for a in range(3) if a != axis]
    cu, cv = coords[rem[0]], coords[rem[1]]
    with open(path, "w") as fh:
        fh.write(f"# component={component} axis={axis} index={index}\n")
        fh.write("u,v,value\n")
        for a in range(plane.shape[0]):
            for b in range(plane.shape[1]):
                fh.write(f"{cu[a]:.17g},{cv[b]:.17g},{plane[a, b]:.17g}\n")
