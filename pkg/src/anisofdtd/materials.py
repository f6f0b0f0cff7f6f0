"""Anisotropic material tensors: per-cell eps/mu grids, inverses, layouts.

Tensors are plain (3, 3) float64 arrays, symmetric positive definite for
material use, in multiples of eps0/mu0 (normalized units).  A MaterialGrid
holds the per-cell eps and mu plus their precomputed inverses xi = eps^-1
and zeta = mu^-1, co-located at the primary cells.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from .lattice import YeeGrid

IDENTITY3 = np.eye(3)

_SYM_TOL = 1e-12
INVERSE_TOL = 1e-13

# High-contrast fully anisotropic presets (gamma = 1), used by the stability
# test layouts.  Entries are exact as published.
_E13 = 0.55 * np.sqrt(1.5)
_M13 = 0.5 * np.sqrt(1.5)

EPS_BASE = np.array([
    [10.225, -0.825, -_E13],
    [-0.825, 10.225, _E13],
    [-_E13, _E13, 9.95],
])

MU_BASE = np.array([
    [3.75, 0.75, -_M13],
    [0.75, 3.75, -_M13],
    [-_M13, -_M13, 3.5],
])


def tensor3(entries) -> np.ndarray:
    """Validate and return a symmetric 3x3 tensor (exact-symmetrized)."""
    t = np.asarray(entries, dtype=np.float64)
    if t.shape != (3, 3):
        raise ValueError(f"expected a 3x3 tensor, got shape {t.shape}")
    scale = max(np.abs(t).max(), 1.0)
    if np.abs(t - t.T).max() > _SYM_TOL * scale:
        raise ValueError("tensor is not symmetric")
    return 0.5 * (t + t.T)


def check_spd(t) -> tuple[bool, float]:
    """Whether t is symmetric positive definite, plus its smallest eigenvalue.

    Total function: asymmetric input returns (False, nan) instead of raising.
    """
    t = np.asarray(t, dtype=np.float64)
    if t.shape != (3, 3):
        raise ValueError(f"expected a 3x3 tensor, got shape {t.shape}")
    scale = max(np.abs(t).max(), 1.0)
    if np.abs(t - t.T).max() > _SYM_TOL * scale:
        return False, float("nan")
    lo = float(np.linalg.eigvalsh(0.5 * (t + t.T))[0])
    return lo > 0.0, lo


def invert_tensor(t) -> np.ndarray:
    """Inverse of an SPD tensor; exact-symmetrized, t @ inv = I to 1e-13."""
    t = tensor3(t)
    ok, lo = check_spd(t)
    if not ok:
        raise ValueError(f"tensor is not SPD (min eigenvalue {lo})")
    inv = np.linalg.inv(t)
    inv = 0.5 * (inv + inv.T)
    resid = np.abs(t @ inv - IDENTITY3).max()
    if resid > INVERSE_TOL * max(1.0, np.abs(t).max() * np.abs(inv).max()):
        raise ValueError(f"inversion residual {resid:.3e} too large")
    return inv


def preset_tensor(kind: str, gamma: float) -> np.ndarray:
    """Gamma-scaled high-contrast preset, kind 'eps' or 'mu'."""
    if not gamma > 0:
        raise ValueError(f"gamma must be positive, got {gamma}")
    if kind == "eps":
        return gamma * EPS_BASE
    if kind == "mu":
        return gamma * MU_BASE
    raise ValueError(f"preset kind must be 'eps' or 'mu', got {kind!r}")


def random_spd_tensor(rng: np.random.Generator, scale: float = 1.0) -> np.ndarray:
    """Well-conditioned random SPD tensor for tests and layouts."""
    a = rng.standard_normal((3, 3))
    t = a @ a.T + 0.5 * IDENTITY3
    return tensor3(scale * t)


# ---------------------------------------------------------------------------
# Cell averaging of analytic distributions.

_GAUSS_NODES, _GAUSS_WEIGHTS = np.polynomial.legendre.leggauss(4)
# map from [-1, 1] to [0, 1]
_GAUSS_NODES01 = 0.5 * (_GAUSS_NODES + 1.0)
_GAUSS_WEIGHTS01 = 0.5 * _GAUSS_WEIGHTS


def cell_quadrature_points(cell, grid: YeeGrid):
    """(64, 3) Gauss points and (64,) weights over one primary cell."""
    i, j, k = cell
    xs = (i + _GAUSS_NODES01) * grid.dx
    ys = (j + _GAUSS_NODES01) * grid.dy
    zs = (k + _GAUSS_NODES01) * grid.dz
    px, py, pz = np.meshgrid(xs, ys, zs, indexing="ij")
    pts = np.stack([px.ravel(), py.ravel(), pz.ravel()], axis=1)
    w = (_GAUSS_WEIGHTS01[:, None, None]
         * _GAUSS_WEIGHTS01[None, :, None]
         * _GAUSS_WEIGHTS01[None, None, :]).ravel()
    return pts, w


def average_analytic(material_fn, cell, grid: YeeGrid, validate: bool = True):
    """Componentwise volume average of an analytic tensor field over a cell.

    Fixed tensor-product 4-point Gauss rule per axis (64 samples).  Non-SPD
    samples raise, since a convex combination of SPD tensors is the contract.
    """
    pts, w = cell_quadrature_points(cell, grid)
    samples = np.empty((len(pts), 3, 3))
    for n, p in enumerate(pts):
        samples[n] = material_fn(p[0], p[1], p[2])
    if validate:
        sym = 0.5 * (samples + np.swapaxes(samples, -1, -2))
        if np.abs(samples - sym).max() > _SYM_TOL * max(1.0, np.abs(samples).max()):
            raise ValueError("material_fn returned a non-symmetric tensor")
        eigs = np.linalg.eigvalsh(sym)
        if eigs[..., 0].min() <= 0:
            raise ValueError("material_fn returned a non-SPD tensor inside the cell")
    avg = np.tensordot(w, samples, axes=(0, 0))
    return tensor3(avg)


# ---------------------------------------------------------------------------
# MaterialGrid

@dataclass
class MaterialGrid:
    """Per-cell eps/mu tensors with precomputed inverses, immutable by use.

    Arrays have shape (nx, ny, nz, 3, 3); eps @ xi = I and mu @ zeta = I to
    1e-13 per cell, all four symmetric, eps and mu SPD.
    """

    eps: np.ndarray
    mu: np.ndarray
    xi: np.ndarray
    zeta: np.ndarray

    @property
    def shape(self):
        return self.eps.shape[:3]

    @classmethod
    def from_tensor_fields(cls, eps: np.ndarray, mu: np.ndarray) -> "MaterialGrid":
        eps = _validated_tensor_field(eps, "eps")
        mu = _validated_tensor_field(mu, "mu")
        xi = _inverse_field(eps, "eps")
        zeta = _inverse_field(mu, "mu")
        return cls(eps, mu, xi, zeta)

    @classmethod
    def uniform(cls, grid: YeeGrid, eps, mu) -> "MaterialGrid":
        shape = grid.shape + (3, 3)
        return cls.from_tensor_fields(
            np.broadcast_to(tensor3(eps), shape).copy(),
            np.broadcast_to(tensor3(mu), shape).copy())

    @classmethod
    def vacuum(cls, grid: YeeGrid) -> "MaterialGrid":
        return cls.uniform(grid, IDENTITY3, IDENTITY3)

    def is_vacuum(self, tol: float = 0.0) -> bool:
        ident = np.broadcast_to(IDENTITY3, self.eps.shape)
        return (np.abs(self.eps - ident).max() <= tol
                and np.abs(self.mu - ident).max() <= tol)

    def scaled(self, gamma: float) -> "MaterialGrid":
        """Uniformly gamma-scaled copy (eps -> gamma*eps, mu -> gamma*mu)."""
        return MaterialGrid.from_tensor_fields(gamma * self.eps, gamma * self.mu)


def _validated_tensor_field(t: np.ndarray, name: str) -> np.ndarray:
    t = np.ascontiguousarray(t, dtype=np.float64)
    if t.ndim != 5 or t.shape[3:] != (3, 3):
        raise ValueError(f"{name} must have shape (nx, ny, nz, 3, 3)")
    tt = np.swapaxes(t, -1, -2)
    scale = max(1.0, np.abs(t).max())
    if np.abs(t - tt).max() > _SYM_TOL * scale:
        raise ValueError(f"{name} contains non-symmetric cells")
    t = 0.5 * (t + tt)
    lo = np.linalg.eigvalsh(t)[..., 0]
    if lo.min() <= 0:
        bad = np.unravel_index(int(np.argmin(lo)), lo.shape)
        raise ValueError(
            f"{name} is not SPD at cell {bad} (min eigenvalue {lo.min():.3e})")
    return t


def _inverse_field(t: np.ndarray, name: str) -> np.ndarray:
    inv = np.linalg.inv(t)
    inv = 0.5 * (inv + np.swapaxes(inv, -1, -2))
    resid = np.abs(t @ inv - IDENTITY3).max()
    if resid > 10 * INVERSE_TOL * max(1.0, float(np.abs(t).max() * np.abs(inv).max())):
        raise ValueError(f"{name} inversion residual {resid:.3e} too large")
    return np.ascontiguousarray(inv)


# ---------------------------------------------------------------------------
# Test layouts (paper's stability-study geometries).

def build_layout(kind: str, params, grid: YeeGrid, seed=None) -> MaterialGrid:
    """Construct one of the stability-test material layouts.

    kinds: 'vacuum'; 'sphere' (center, radius, gamma); 'cube' (lo, hi,
    gamma); 'random' (gamma, seed) assigning each cell independently and
    uniformly to aniso-eps / aniso-mu / both / vacuum.  Cell membership for
    the shapes is by cell-center position.
    """
    params = dict(params or {})
    shape = grid.shape + (3, 3)
    eps = np.empty(shape)
    mu = np.empty(shape)
    eps[:] = IDENTITY3
    mu[:] = IDENTITY3

    if kind == "vacuum":
        pass
    elif kind in ("sphere", "cube"):
        gamma = float(params.get("gamma", 1.0))
        mask = _shape_mask(kind, params, grid)
        eps[mask] = preset_tensor("eps", gamma)
        mu[mask] = preset_tensor("mu", gamma)
    elif kind == "random":
        if seed is None:
            raise ValueError("random layout requires a seed")
        gamma = float(params.get("gamma", 1.0))
        rng = np.random.default_rng(seed)
        cats = rng.integers(0, 4, size=grid.shape)
        eps[(cats == 0) | (cats == 2)] = preset_tensor("eps", gamma)
        mu[(cats == 1) | (cats == 2)] = preset_tensor("mu", gamma)
    else:
        raise ValueError(f"unknown layout kind {kind!r}")

    return MaterialGrid.from_tensor_fields(eps, mu)


def _shape_mask(kind: str, params, grid: YeeGrid) -> np.ndarray:
    cx = (np.arange(grid.nx) + 0.5) * grid.dx
    cy = (np.arange(grid.ny) + 0.5) * grid.dy
    cz = (np.arange(grid.nz) + 0.5) * grid.dz
    X, Y, Z = np.meshgrid(cx, cy, cz, indexing="ij")
    ext = [grid.axis_extent(a) for a in range(3)]
    if kind == "sphere":
        center = np.asarray(params["center"], dtype=float)
        radius = float(params["radius"])
        for a in range(3):
            if not (radius <= center[a] <= ext[a] - radius):
                raise ValueError("sphere does not fit inside the grid")
        r2 = (X - center[0]) ** 2 + (Y - center[1]) ** 2 + (Z - center[2]) ** 2
        return r2 <= radius * radius
    lo = np.asarray(params["lo"], dtype=float)
    hi = np.asarray(params["hi"], dtype=float)
    if (lo >= hi).any() or (lo < 0).any() or (hi > np.asarray(ext)).any():
        raise ValueError("cube does not fit inside the grid")
    return ((X >= lo[0]) & (X <= hi[0]) & (Y >= lo[1]) & (Y <= hi[1])
            & (Z >= lo[2]) & (Z <= hi[2]))


def random_spd_field(grid: YeeGrid, seed, scale: float = 1.0) -> MaterialGrid:
    """MaterialGrid with independent random SPD eps and mu in every cell."""
    rng = np.random.default_rng(seed)
    shape = grid.shape + (3, 3)
    a = rng.standard_normal(shape)
    eps = scale * (a @ np.swapaxes(a, -1, -2) + 0.5 * IDENTITY3)
    b = rng.standard_normal(shape)
    mu = scale * (b @ np.swapaxes(b, -1, -2) + 0.5 * IDENTITY3)
    return MaterialGrid.from_tensor_fields(eps, mu)


# ---------------------------------------------------------------------------
# Material grid file format: header + per-cell 9 eps and 9 mu entries,
# row-major symmetric-redundant.

_MGRID_MAGIC = b"AFMGRID1"


def save_material_grid(path, material: MaterialGrid, normalized: bool = True) -> None:
    import struct

    nx, ny, nz = material.shape
    header = struct.pack("<8s3qB", _MGRID_MAGIC, nx, ny, nz, 1 if normalized else 0)
    with open(path, "wb") as fh:
        fh.write(header)
        fh.write(np.ascontiguousarray(material.eps).tobytes())
        fh.write(np.ascontiguousarray(material.mu).tobytes())


def load_material_grid(path) -> MaterialGrid:
    import struct

    hsize = struct.calcsize("<8s3qB")
    with open(path, "rb") as fh:
        magic, nx, ny, nz, _units = struct.unpack("<8s3qB", fh.read(hsize))
        if magic != _MGRID_MAGIC:
            raise ValueError(f"{path}: not a material grid file")
        count = nx * ny * nz * 9
        eps = np.frombuffer(fh.read(count * 8), dtype=np.float64)
        mu = np.frombuffer(fh.read(count * 8), dtype=np.float64)
    if eps.size != count or mu.size != count:
        raise ValueError(f"{path}: truncated material payload")
    shape = (nx, ny, nz, 3, 3)
    # from_tensor_fields re-validates symmetry/SPD on read
    return MaterialGrid.from_tensor_fields(eps.reshape(shape).copy(),
                                           mu.reshape(shape).copy())
