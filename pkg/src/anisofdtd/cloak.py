"""Transformation-optics cloak material generation.

A radial coordinate map about the cloak center pulls ray paths out of the
central region; the material that realizes the mapped geometry is

    eps' = |det L| L^{-1} eps L^{-T},     mu' = |det L| L^{-1} mu L^{-T},

with L the Jacobian of the map from physical coordinates to the uniform
(virtual) coordinates, computed numerically by central differences.  Two
map flavors are provided: a smooth radial contraction

    r_phys = (1 - depth * exp(-(r/sigma)^n)) * r

(inverted numerically when the physical -> virtual direction is needed) and
a non-smooth piecewise-linear map r_virt = f(r_phys) with three branches
meeting at R1' and R2.  The non-ideal piecewise map keeps all material
entries finite; under plane-wave illumination the downstream solution is
still the incident plane wave, which is what the accuracy study measures.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from .lattice import YeeGrid
from .materials import (IDENTITY3, MaterialGrid, cell_quadrature_points,
                        tensor3)


@dataclass(frozen=True)
class CloakSpec:
    """Parameters of one cloak; lengths in normalized (grid) units.

    smooth: needs n >= 1, 0 < depth < 1, sigma > 0.
    nonsmooth: needs 0 < R1 < R1prime < R2.
    """

    kind: str
    center: tuple[float, float, float]
    n: float = 3.0
    depth: float = 0.8
    sigma: float = 80.0
    R1: float = 8.0
    R2: float = 130.0
    R1prime: float = 40.0
    eps_background: np.ndarray = None
    mu_background: np.ndarray = None

    def __post_init__(self):
        if self.kind not in ("smooth", "nonsmooth"):
            raise ValueError(f"cloak kind must be smooth|nonsmooth, got {self.kind!r}")
        if self.kind == "smooth":
            if not (0.0 < self.depth < 1.0):
                raise ValueError("smooth cloak needs 0 < depth < 1")
            if not self.sigma > 0:
                raise ValueError("smooth cloak needs sigma > 0")
            if not self.n >= 1:
                raise ValueError("smooth cloak needs n >= 1")
        else:
            if not (0.0 < self.R1 < self.R1prime < self.R2):
                raise ValueError("nonsmooth cloak needs 0 < R1 < R1' < R2")
        for name in ("eps_background", "mu_background"):
            if getattr(self, name) is None:
                object.__setattr__(self, name, IDENTITY3.copy())
            else:
                object.__setattr__(self, name, tensor3(getattr(self, name)))

    def influence_radius(self) -> float:
        """Radius beyond which the map is identity to working precision."""
        if self.kind == "nonsmooth":
            return self.R2
        # depth * exp(-(r/sigma)^n) < 1e-7
        return self.sigma * (np.log(self.depth / 1e-7)) ** (1.0 / self.n)


def smooth_map(r, spec: CloakSpec):
    """Forward smooth map r -> r' = (1 - depth exp(-(r/sigma)^n)) r."""
    if spec.kind != "smooth":
        raise ValueError("smooth_map needs a smooth CloakSpec")
    r = np.asarray(r, dtype=float)
    if (r < 0).any():
        raise ValueError("radius must be nonnegative")
    return (1.0 - spec.depth * np.exp(-((r / spec.sigma) ** spec.n))) * r


def smooth_map_inverse(r_phys, spec: CloakSpec, tol: float = 1e-13,
                       max_iter: int = 80):
    """Invert the smooth map by Newton iteration (it is strictly monotone:
    the radial derivative is bounded below by 1 - depth > 0)."""
    rp = np.asarray(r_phys, dtype=float)
    if (rp < 0).any():
        raise ValueError("radius must be nonnegative")
    r = rp / (1.0 - spec.depth)          # start above the root
    scale = max(float(np.max(rp)), spec.sigma)
    for _ in range(max_iter):
        u = (r / spec.sigma) ** spec.n
        e = np.exp(-u)
        f = (1.0 - spec.depth * e) * r - rp
        df = 1.0 - spec.depth * e * (1.0 - spec.n * u)
        rn = r - f / df
        rn = np.maximum(rn, 0.0)
        if np.abs(rn - r).max() <= tol * scale:
            r = rn
            break
        r = rn
    resid = np.abs(smooth_map(r, spec) - rp).max()
    if resid > 1e-9 * scale:
        raise RuntimeError(f"smooth map inversion stalled (residual {resid:.3e})")
    return r


def nonsmooth_map(r_phys, spec: CloakSpec):
    """Piecewise-linear map from transformed (physical) radius back to the
    original radius: linear compression below R1', a linear blend on
    [R1', R2], identity outside."""
    if spec.kind != "nonsmooth":
        raise ValueError("nonsmooth_map needs a nonsmooth CloakSpec")
    rp = np.asarray(r_phys, dtype=float)
    if (rp < 0).any():
        raise ValueError("radius must be nonnegative")
    inner = spec.R1 * rp / spec.R1prime
    middle = (spec.R1 - spec.R2) / (spec.R1prime - spec.R2) * (rp - spec.R1prime) + spec.R1
    out = np.where(rp < spec.R1prime, inner, np.where(rp <= spec.R2, middle, rp))
    return out if out.shape else float(out)


def radial_to_virtual_map(spec: CloakSpec):
    """The full 3D physical -> virtual coordinate map about spec.center."""
    center = np.asarray(spec.center, dtype=float)

    def vmap(pts):
        pts = np.atleast_2d(np.asarray(pts, dtype=float))
        rel = pts - center
        r = np.sqrt((rel * rel).sum(axis=1))
        if spec.kind == "smooth":
            rv = smooth_map_inverse(r, spec)
        else:
            rv = nonsmooth_map(r, spec)
        with np.errstate(invalid="ignore", divide="ignore"):
            fac = np.where(r > 0, rv / np.where(r > 0, r, 1.0), 1.0)
        return center + rel * fac[:, None]

    return vmap


def numerical_jacobian(vmap, point, step: float) -> np.ndarray:
    """Central-difference Jacobian of a position -> position map."""
    if not step > 0:
        raise ValueError("step must be positive")
    point = np.asarray(point, dtype=float)
    probes = np.repeat(point[None, :], 6, axis=0)
    for a in range(3):
        probes[2 * a, a] += step
        probes[2 * a + 1, a] -= step
    vals = np.asarray(vmap(probes))
    jac = np.empty((3, 3))
    for a in range(3):
        jac[:, a] = (vals[2 * a] - vals[2 * a + 1]) / (2.0 * step)
    return jac


def _jacobians_batch(vmap, points, step):
    pts = np.asarray(points, dtype=float)
    m = len(pts)
    probes = np.repeat(pts, 6, axis=0)
    for a in range(3):
        probes[2 * a::6, a] += step
        probes[2 * a + 1::6, a] -= step
    vals = np.asarray(vmap(probes)).reshape(m, 6, 3)
    jac = np.empty((m, 3, 3))
    for a in range(3):
        jac[:, :, a] = (vals[:, 2 * a] - vals[:, 2 * a + 1]) / (2.0 * step)
    return jac


def transform_material(lam: np.ndarray, base: np.ndarray) -> np.ndarray:
    """|det L| L^{-1} base L^{-T}; SPD-preserving for invertible L."""
    lam = np.asarray(lam, dtype=float)
    det = np.linalg.det(lam)
    scale = np.abs(lam).max()
    if abs(det) < 1e-12 * max(scale, 1.0) ** 3:
        raise ValueError(f"Jacobian is numerically singular (det {det:.3e})")
    inv = np.linalg.inv(lam)
    out = abs(det) * inv @ np.asarray(base, dtype=float) @ inv.T
    return 0.5 * (out + out.T)


def _transform_batch(lams, base):
    det = np.abs(np.linalg.det(lams))
    inv = np.linalg.inv(lams)
    out = det[:, None, None] * inv @ base @ np.swapaxes(inv, -1, -2)
    return 0.5 * (out + np.swapaxes(out, -1, -2))


def build_cloak(spec: CloakSpec, grid: YeeGrid, averaging: str = "cell_average",
                jacobian_step: float | None = None) -> MaterialGrid:
    """Material grid realizing the cloak.

    Per cell inside the region of influence the Jacobian is evaluated
    either at the 64 Gauss points with the transformed tensors volume
    averaged (default, the analytic-distribution averaging rule) or at the
    cell center only (averaging='center').  Evaluation points closer than
    the finite-difference step to a branch radius of the non-smooth map are
    nudged inward so the one-sided derivative ambiguity never enters.
    """
    if averaging not in ("cell_average", "center"):
        raise ValueError(f"unknown averaging mode {averaging!r}")
    center = np.asarray(spec.center, dtype=float)
    extent = np.array([grid.axis_extent(a) for a in range(3)])
    if (center < 0).any() or (center > extent).any():
        raise ValueError("cloak center lies outside the grid")

    h = (1e-3 * min(grid.spacing)) if jacobian_step is None else float(jacobian_step)
    vmap = radial_to_virtual_map(spec)
    r_inf = spec.influence_radius()

    shape = grid.shape + (3, 3)
    eps = np.empty(shape)
    mu = np.empty(shape)
    eps[:] = spec.eps_background
    mu[:] = spec.mu_background

    cx = (np.arange(grid.nx) + 0.5) * grid.dx
    cy = (np.arange(grid.ny) + 0.5) * grid.dy
    cz = (np.arange(grid.nz) + 0.5) * grid.dz
    X, Y, Z = np.meshgrid(cx, cy, cz, indexing="ij")
    centers = np.stack([X, Y, Z], axis=-1).reshape(-1, 3)
    half_diag = 0.5 * np.linalg.norm(grid.spacing)
    r_cells = np.linalg.norm(centers - center, axis=1)
    active = np.flatnonzero(r_cells <= r_inf + half_diag + 2 * h)
    if active.size == 0:
        return MaterialGrid.from_tensor_fields(eps, mu)

    if averaging == "center":
        pts = centers[active]
        w = None
    else:
        offs, w = _unit_cell_quadrature(grid)
        pts = (centers[active][:, None, :] + offs[None, :, :]).reshape(-1, 3)

    pts = _nudge_off_branches(pts, spec, center, h)
    lams = _jacobians_batch(vmap, pts, h)
    eps_t = _transform_batch(lams, spec.eps_background)
    mu_t = _transform_batch(lams, spec.mu_background)

    if w is not None:
        nq = len(w)
        eps_t = np.tensordot(eps_t.reshape(-1, nq, 3, 3), w, axes=(1, 0))
        mu_t = np.tensordot(mu_t.reshape(-1, nq, 3, 3), w, axes=(1, 0))

    flat_eps = eps.reshape(-1, 3, 3)
    flat_mu = mu.reshape(-1, 3, 3)
    flat_eps[active] = eps_t
    flat_mu[active] = mu_t
    return MaterialGrid.from_tensor_fields(eps, mu)


def _unit_cell_quadrature(grid: YeeGrid):
    """Gauss offsets relative to the cell center, plus weights."""
    tiny = YeeGrid(2, 2, 2, grid.dx, grid.dy, grid.dz)
    pts, w = cell_quadrature_points((0, 0, 0), tiny)
    return pts - 0.5 * np.asarray(grid.spacing), w


def _nudge_off_branches(pts, spec: CloakSpec, center, h):
    if spec.kind != "nonsmooth":
        return pts
    rel = pts - center
    r = np.linalg.norm(rel, axis=1)
    for radius in (spec.R1prime, spec.R2):
        near = np.abs(r - radius) < h
        if near.any():
            safe = np.where(r[near] > 0, r[near], 1.0)
            pts = pts.copy()
            pts[near] = center + rel[near] * ((radius - h) / safe)[:, None]
            rel = pts - center
            r = np.linalg.norm(rel, axis=1)
    return pts


def axis_cut(material: MaterialGrid, grid: YeeGrid, axis: int = 2,
             through=None):
    """1D cut of eps_xx and eps_xy along one axis through a given point.

    Returns (positions, eps_xx, eps_xy) sampled at cell centers.
    """
    if through is None:
        through = [grid.shape[a] // 2 for a in range(3)]
    idx = [int(t) for t in through]
    take = [slice(None)] * 3
    for a in range(3):
        if a != axis:
            take[a] = idx[a]
    take = tuple(take)
    pos = (np.arange(grid.shape[axis]) + 0.5) * grid.spacing[axis]
    return pos, material.eps[take + (0, 0)], material.eps[take + (0, 1)]


def save_cut_csv(path, positions, eps_xx, eps_xy) -> None:
    with open(path, "w") as fh:
        fh.write("position,eps_xx,eps_xy\n")
        for p, a, b in zip(positions, eps_xx, eps_xy):
            fh.write(f"{p:.17g},{a:.17g},{b:.17g}\n")
