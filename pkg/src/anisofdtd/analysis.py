"""Verification machinery: one-step operator spectra, global material
matrices, error norms and convergence fits.

Global vectors use the fixed cell ordering with the x index fastest, then
y, then z; each cell contributes a consecutive (x, y, z) component triplet.
The state vector of the one-step operator is the concatenation (D, B),
dimension 6 nx ny nz.
"""

from __future__ import annotations

import hashlib
from dataclasses import dataclass, field

import numpy as np
import scipy.sparse as sp

from . import _kernels
from .lattice import FieldSet, YeeGrid, component_positions
from .materials import MaterialGrid
from .solver import SCHEMES, StepState, step

SIZE_GUARD_DIM = 6 * 16 ** 3


# ---------------------------------------------------------------------------
# Global ordering helpers

def flatten_triplets(ax, ay, az) -> np.ndarray:
    """Three (nx,ny,nz) arrays -> interleaved per-cell triplet vector."""
    cols = [np.asarray(a).ravel(order="F") for a in (ax, ay, az)]
    return np.stack(cols, axis=1).ravel()


def unflatten_triplets(vec, shape):
    comps = vec.reshape(-1, 3)
    return tuple(np.ascontiguousarray(comps[:, p].reshape(shape, order="F"))
                 for p in range(3))


def cells_x_fastest(tensor_field: np.ndarray) -> np.ndarray:
    """(nx,ny,nz,3,3) tensor field -> (N,3,3) blocks in global cell order."""
    return np.ascontiguousarray(tensor_field.transpose(2, 1, 0, 3, 4)).reshape(-1, 3, 3)


def state_vector(fields: FieldSet) -> np.ndarray:
    return np.concatenate([flatten_triplets(*fields.d_vector()),
                           flatten_triplets(*fields.b_vector())])


def load_state_vector(fields: FieldSet, vec: np.ndarray) -> None:
    n = vec.size // 2
    dx, dy, dz = unflatten_triplets(vec[:n], fields.Dx.shape)
    bx, by, bz = unflatten_triplets(vec[n:], fields.Dx.shape)
    fields.Dx[:], fields.Dy[:], fields.Dz[:] = dx, dy, dz
    fields.Bx[:], fields.By[:], fields.Bz[:] = bx, by, bz


# ---------------------------------------------------------------------------
# One-step update matrix and its spectrum

@dataclass
class UpdateMatrix:
    matrix: np.ndarray
    scheme: str
    dt: float
    boundaries: tuple
    dims: tuple
    material_digest: str

    @property
    def dim(self) -> int:
        return self.matrix.shape[0]


@dataclass
class SpectrumReport:
    eigenvalues: np.ndarray
    max_deviation: float
    backend: str


def material_digest(material: MaterialGrid) -> str:
    h = hashlib.sha256()
    h.update(np.ascontiguousarray(material.eps).tobytes())
    h.update(np.ascontiguousarray(material.mu).tobytes())
    return h.hexdigest()[:16]


def build_update_matrix(grid: YeeGrid, material: MaterialGrid, scheme: str,
                        dt: float, force: bool = False) -> UpdateMatrix:
    """Probe the one-step operator column by column with canonical basis states.

    Sources must be absent and the grid must not use UPML (its auxiliary
    variables would make the (D, B) operator non-closed).  Dimension is
    guarded at 6*16^3 unless force=True.
    """
    if "upml" in grid.boundaries:
        raise ValueError("update-matrix probing requires a UPML-free grid")
    dim = 6 * grid.n_cells
    if dim > SIZE_GUARD_DIM and not force:
        raise ValueError(
            f"update matrix dimension {dim} exceeds the guard {SIZE_GUARD_DIM}; "
            "pass force=True for an extended run")
    state = StepState(grid, FieldSet.zeros(grid.shape), material, dt, scheme)
    A = np.empty((dim, dim))
    basis = np.zeros(dim)
    for col in range(dim):
        basis[col] = 1.0
        _reset_from_vector(state, basis)
        step(state)
        A[:, col] = state_vector(state.fields)
        basis[col] = 0.0
    return UpdateMatrix(A, scheme, dt, grid.boundaries, grid.shape,
                        material_digest(material))


def _reset_from_vector(state: StepState, vec: np.ndarray) -> None:
    f = state.fields
    load_state_vector(f, vec)
    # E^n drives the first curl; derive it from D with the state's scheme.
    from .solver import _constitutive
    _constitutive("E", state, state.scheme)
    f.Hx[:] = 0.0
    f.Hy[:] = 0.0
    f.Hz[:] = 0.0
    f.time_level = 0.0


def apply_update(state: StepState, vec: np.ndarray) -> np.ndarray:
    """One direct step on the state encoded by vec (oracle for A @ vec)."""
    _reset_from_vector(state, vec)
    step(state)
    return state_vector(state.fields)


def eigen_spectrum(A: UpdateMatrix | np.ndarray) -> SpectrumReport:
    mat = A.matrix if isinstance(A, UpdateMatrix) else np.asarray(A)
    if not np.isfinite(mat).all():
        raise ValueError("update matrix contains non-finite entries")
    eig = np.linalg.eigvals(mat)
    dev = float(np.abs(np.abs(eig) - 1.0).max())
    return SpectrumReport(eig, dev, "numpy.linalg.eigvals (LAPACK dgeev)")


def save_spectrum_csv(path, report: SpectrumReport) -> None:
    with open(path, "w") as fh:
        fh.write("re,im,abs\n")
        for lam in report.eigenvalues:
            fh.write(f"{lam.real:.17g},{lam.imag:.17g},{abs(lam):.17g}\n")


# ---------------------------------------------------------------------------
# Global material matrices

def assemble_global_material_matrix(scheme: str, field_kind: str,
                                    material: MaterialGrid,
                                    grid: YeeGrid | None = None) -> sp.csr_matrix:
    """Sparse global constitutive operator under periodic boundaries.

    Non-averaged: block diagonal of the per-cell 3x3 inverse tensors in the
    global cell ordering.  Averaged: the operator M with
    flatten(constitutive(F)) = M @ flatten(F) in the same ordering.
    """
    if scheme not in SCHEMES:
        raise ValueError(f"scheme must be one of {SCHEMES}, got {scheme!r}")
    if field_kind not in ("E", "H"):
        raise ValueError(f"field_kind must be 'E' or 'H', got {field_kind!r}")
    if grid is not None and any(b != "periodic" for b in grid.boundaries):
        raise ValueError("global material assembly is defined for periodic "
                         "boundaries only")
    tensor = material.xi if field_kind == "E" else material.zeta

    if scheme == "non_averaged":
        blocks = cells_x_fastest(tensor)
        n = blocks.shape[0]
        return sp.bsr_matrix((blocks, np.arange(n), np.arange(n + 1)),
                             shape=(3 * n, 3 * n)).tocsr()

    if field_kind == "E":
        return _assemble_avg_e(tensor)
    return _assemble_avg_h(tensor)


def _grids_and_gidx(shape):
    nx, ny, nz = shape
    I, J, K = np.meshgrid(np.arange(nx), np.arange(ny), np.arange(nz),
                          indexing="ij")

    def gidx(p, ii, jj, kk):
        return 3 * ((ii % nx) + nx * ((jj % ny) + ny * (kk % nz))) + p

    return I, J, K, gidx


def _assemble_avg_e(xi: np.ndarray) -> sp.csr_matrix:
    shape = xi.shape[:3]
    I, J, K, gidx = _grids_and_gidx(shape)
    rows, cols, vals = [], [], []

    def add(r, c, v):
        rows.append(r.ravel())
        cols.append(c.ravel())
        vals.append(np.broadcast_to(v, r.shape).ravel())

    def comp(p, q):
        return xi[..., p, q]

    def sh(arr, di, dj, dk):
        return np.roll(arr, shift=(-di, -dj, -dk), axis=(0, 1, 2))

    # Ex row: cells (i,j,k) and (i-1,j,k)
    r = gidx(0, I, J, K)
    add(r, gidx(0, I, J, K), 0.5 * (comp(0, 0) + sh(comp(0, 0), -1, 0, 0)))
    for dj in (0, 1):
        add(r, gidx(1, I, J + dj, K), 0.25 * comp(0, 1))
        add(r, gidx(1, I - 1, J + dj, K), 0.25 * sh(comp(0, 1), -1, 0, 0))
    for dk in (0, 1):
        add(r, gidx(2, I, J, K + dk), 0.25 * comp(0, 2))
        add(r, gidx(2, I - 1, J, K + dk), 0.25 * sh(comp(0, 2), -1, 0, 0))

    # Ey row: cells (i,j,k) and (i,j-1,k)
    r = gidx(1, I, J, K)
    add(r, gidx(1, I, J, K), 0.5 * (comp(1, 1) + sh(comp(1, 1), 0, -1, 0)))
    for di in (0, 1):
        add(r, gidx(0, I + di, J, K), 0.25 * comp(1, 0))
        add(r, gidx(0, I + di, J - 1, K), 0.25 * sh(comp(1, 0), 0, -1, 0))
    for dk in (0, 1):
        add(r, gidx(2, I, J, K + dk), 0.25 * comp(1, 2))
        add(r, gidx(2, I, J - 1, K + dk), 0.25 * sh(comp(1, 2), 0, -1, 0))

    # Ez row: cells (i,j,k) and (i,j,k-1)
    r = gidx(2, I, J, K)
    add(r, gidx(2, I, J, K), 0.5 * (comp(2, 2) + sh(comp(2, 2), 0, 0, -1)))
    for di in (0, 1):
        add(r, gidx(0, I + di, J, K), 0.25 * comp(2, 0))
        add(r, gidx(0, I + di, J, K - 1), 0.25 * sh(comp(2, 0), 0, 0, -1))
    for dj in (0, 1):
        add(r, gidx(1, I, J + dj, K), 0.25 * comp(2, 1))
        add(r, gidx(1, I, J + dj, K - 1), 0.25 * sh(comp(2, 1), 0, 0, -1))

    n = 3 * np.prod(shape)
    m = sp.coo_matrix((np.concatenate(vals),
                       (np.concatenate(rows), np.concatenate(cols))),
                      shape=(n, n))
    return m.tocsr()


def _assemble_avg_h(zeta: np.ndarray) -> sp.csr_matrix:
    shape = zeta.shape[:3]
    I, J, K, gidx = _grids_and_gidx(shape)
    rows, cols, vals = [], [], []

    def add(r, c, v):
        rows.append(r.ravel())
        cols.append(c.ravel())
        vals.append(np.broadcast_to(v, r.shape).ravel())

    def comp(p, q):
        return zeta[..., p, q]

    def sh(arr, di, dj, dk):
        return np.roll(arr, shift=(-di, -dj, -dk), axis=(0, 1, 2))

    # Hx row: cells (i,j,k), (i,j-1,k), (i,j,k-1), (i,j-1,k-1)
    r = gidx(0, I, J, K)
    add(r, gidx(0, I, J, K),
        0.25 * (comp(0, 0) + sh(comp(0, 0), 0, -1, 0)
                + sh(comp(0, 0), 0, 0, -1) + sh(comp(0, 0), 0, -1, -1)))
    cy_a = 0.125 * (comp(0, 1) + sh(comp(0, 1), 0, 0, -1))
    cy_b = 0.125 * (sh(comp(0, 1), 0, -1, 0) + sh(comp(0, 1), 0, -1, -1))
    for di in (0, 1):
        add(r, gidx(1, I + di, J, K), cy_a)
        add(r, gidx(1, I + di, J - 1, K), cy_b)
    cz_a = 0.125 * (comp(0, 2) + sh(comp(0, 2), 0, -1, 0))
    cz_b = 0.125 * (sh(comp(0, 2), 0, 0, -1) + sh(comp(0, 2), 0, -1, -1))
    for di in (0, 1):
        add(r, gidx(2, I + di, J, K), cz_a)
        add(r, gidx(2, I + di, J, K - 1), cz_b)

    # Hy row: cells (i,j,k), (i-1,j,k), (i,j,k-1), (i-1,j,k-1)
    r = gidx(1, I, J, K)
    add(r, gidx(1, I, J, K),
        0.25 * (comp(1, 1) + sh(comp(1, 1), -1, 0, 0)
                + sh(comp(1, 1), 0, 0, -1) + sh(comp(1, 1), -1, 0, -1)))
    cx_a = 0.125 * (comp(1, 0) + sh(comp(1, 0), 0, 0, -1))
    cx_b = 0.125 * (sh(comp(1, 0), -1, 0, 0) + sh(comp(1, 0), -1, 0, -1))
    for dj in (0, 1):
        add(r, gidx(0, I, J + dj, K), cx_a)
        add(r, gidx(0, I - 1, J + dj, K), cx_b)
    cz_a = 0.125 * (comp(1, 2) + sh(comp(1, 2), -1, 0, 0))
    cz_b = 0.125 * (sh(comp(1, 2), 0, 0, -1) + sh(comp(1, 2), -1, 0, -1))
    for dj in (0, 1):
        add(r, gidx(2, I, J + dj, K), cz_a)
        add(r, gidx(2, I, J + dj, K - 1), cz_b)

    # Hz row: cells (i,j,k), (i-1,j,k), (i,j-1,k), (i-1,j-1,k)
    r = gidx(2, I, J, K)
    add(r, gidx(2, I, J, K),
        0.25 * (comp(2, 2) + sh(comp(2, 2), -1, 0, 0)
                + sh(comp(2, 2), 0, -1, 0) + sh(comp(2, 2), -1, -1, 0)))
    cx_a = 0.125 * (comp(2, 0) + sh(comp(2, 0), 0, -1, 0))
    cx_b = 0.125 * (sh(comp(2, 0), -1, 0, 0) + sh(comp(2, 0), -1, -1, 0))
    for dk in (0, 1):
        add(r, gidx(0, I, J, K + dk), cx_a)
        add(r, gidx(0, I - 1, J, K + dk), cx_b)
    cy_a = 0.125 * (comp(2, 1) + sh(comp(2, 1), -1, 0, 0))
    cy_b = 0.125 * (sh(comp(2, 1), 0, -1, 0) + sh(comp(2, 1), -1, -1, 0))
    for dk in (0, 1):
        add(r, gidx(1, I, J, K + dk), cy_a)
        add(r, gidx(1, I, J - 1, K + dk), cy_b)

    n = 3 * np.prod(shape)
    m = sp.coo_matrix((np.concatenate(vals),
                       (np.concatenate(rows), np.concatenate(cols))),
                      shape=(n, n))
    return m.tocsr()


@dataclass
class SpdReport:
    symmetry_defect: float
    min_eigenvalue: float
    method: str


def spd_check_global(M) -> SpdReport:
    """Max-norm symmetry defect and smallest eigenvalue of a global matrix."""
    M = sp.csr_matrix(M)
    defect = float(abs(M - M.T).max()) if M.nnz else 0.0
    dim = M.shape[0]
    sym = 0.5 * (M + M.T)
    if dim <= 4000:
        lo = float(np.linalg.eigvalsh(sym.toarray())[0])
        method = "dense eigvalsh"
    else:
        from scipy.sparse.linalg import eigsh
        lo = float(eigsh(sym, k=1, which="SA",
                         return_eigenvectors=False)[0])
        method = "sparse Lanczos (SA)"
    return SpdReport(defect, lo, method)


def save_matrix_coo(path, M) -> None:
    """Coordinate-format text export: 'row col value' per line."""
    coo = sp.coo_matrix(M)
    with open(path, "w") as fh:
        fh.write(f"# shape {coo.shape[0]} {coo.shape[1]} nnz {coo.nnz}\n")
        for r, c, v in zip(coo.row, coo.col, coo.data):
            fh.write(f"{r} {c} {v:.17g}\n")


# ---------------------------------------------------------------------------
# Relative error over a sampling box, and convergence fits

@dataclass(frozen=True)
class SamplingBox:
    """Axis-aligned physical box; components sampled at native positions."""

    lo: tuple[float, float, float]
    hi: tuple[float, float, float]
    components: tuple[str, ...] = ("Ex", "Ey", "Ez")

    def describe(self) -> str:
        return (f"box {self.lo} -> {self.hi}, components {','.join(self.components)}")


@dataclass
class RelativeErrorResult:
    value: float
    n_points: int
    n_excluded: int
    box: str


class ReferenceFloorError(ValueError):
    pass


def box_values(fields: FieldSet, box: SamplingBox, grid: YeeGrid) -> np.ndarray:
    """Concatenated component samples at native staggered positions in the box."""
    chunks = []
    for comp in box.components:
        xs, ys, zs = component_positions(comp, grid)
        mx = (xs >= box.lo[0]) & (xs <= box.hi[0])
        my = (ys >= box.lo[1]) & (ys <= box.hi[1])
        mz = (zs >= box.lo[2]) & (zs <= box.hi[2])
        chunks.append(fields.get(comp)[np.ix_(mx, my, mz)].ravel())
    if not chunks or sum(c.size for c in chunks) == 0:
        raise ValueError("sampling box contains no field samples")
    return np.concatenate(chunks)


def relative_error(test_fields, reference_fields, box: SamplingBox,
                   grid: YeeGrid, floor_frac: float = 1e-6,
                   max_excluded_frac: float = 0.1) -> RelativeErrorResult:
    """Scaled L1 norm of the relative error, (1/N) sum |E - Ehat| / |E|.

    Reference points with magnitude below floor_frac times the peak
    reference magnitude are excluded and counted; more than
    max_excluded_frac of them is an error.
    """
    ref = box_values(reference_fields, box, grid)
    tst = box_values(test_fields, box, grid)
    peak = np.abs(ref).max()
    if peak == 0.0:
        raise ReferenceFloorError("reference field is identically zero in the box")
    keep = np.abs(ref) >= floor_frac * peak
    n_excluded = int((~keep).sum())
    if n_excluded > max_excluded_frac * ref.size:
        raise ReferenceFloorError(
            f"{n_excluded}/{ref.size} sampling points fall below the reference "
            "magnitude floor")
    err = np.abs(tst[keep] - ref[keep]) / np.abs(ref[keep])
    return RelativeErrorResult(float(err.mean()), int(keep.sum()), n_excluded,
                               box.describe())


@dataclass
class ErrorReport:
    points: list            # (ppw, relative_error) pairs, coarse to fine
    order: float
    box: str
    excluded_coarsest: bool = False


def convergence_order(points, pre_asymptotic_cutoff: float = 0.5):
    """Least-squares slope of log(error) vs log(1/ppw); positive = order.

    The coarsest point is dropped from the fit when its error exceeds the
    pre-asymptotic cutoff.
    """
    pts = sorted((float(p), float(e)) for p, e in points)
    if len(pts) < 3:
        raise ValueError("need at least 3 resolutions for a convergence fit")
    if any(e <= 0 for _, e in pts):
        raise ValueError("errors must be positive for a log-log fit")
    fit_pts = pts
    excluded = False
    if pts[0][1] > pre_asymptotic_cutoff:
        fit_pts = pts[1:]
        excluded = True
    x = np.log([1.0 / p for p, _ in fit_pts])
    y = np.log([e for _, e in fit_pts])
    slope = float(np.polyfit(x, y, 1)[0])
    return slope, excluded


def save_convergence_csv(path, report: ErrorReport) -> None:
    with open(path, "w") as fh:
        fh.write(f"# {report.box}\n")
        fh.write(f"# fitted order {report.order:.6g}\n")
        fh.write("ppw,relative_error\n")
        for p, e in report.points:
            fh.write(f"{p:.17g},{e:.17g}\n")


# ---------------------------------------------------------------------------
# Energy monitor

def energy_norm(fields: FieldSet, material: MaterialGrid, region=None) -> float:
    """0.5 (D . xi D + B . zeta B) summed over cells (or a region slice)."""
    if region is None:
        return _kernels.quadratic_energy(fields.Dx, fields.Dy, fields.Dz,
                                         fields.Bx, fields.By, fields.Bz,
                                         material.xi, material.zeta)
    c = lambda a: np.ascontiguousarray(a[region])
    return _kernels.quadratic_energy(
        c(fields.Dx), c(fields.Dy), c(fields.Dz),
        c(fields.Bx), c(fields.By), c(fields.Bz),
        np.ascontiguousarray(material.xi[region]),
        np.ascontiguousarray(material.zeta[region]))
