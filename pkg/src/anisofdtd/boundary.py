"""Boundary handling: periodic wrap, PEC mirror, uniaxial PML layers.

No ghost layers are stored.  Neighbor access goes through per-axis index
maps: periodic axes wrap; on pec/upml axes an out-of-domain *field* index
maps to the sentinel -1 (the value is treated as zero in the stencils)
while an out-of-domain *material* index clamps to the nearest in-domain
cell.  The zero-outside rule keeps the assembled discrete curls exact
transposes of each other on every supported boundary kind.

For PEC the effective mirror walls sit at the half-offset planes
x_{-1/2} and x_{n-1/2}: the low side needs no action (the dropped
neighbors are the wall values), the high side is enforced by zeroing the
tangential E and D layer after each E update.  Anisotropic material flush
against a PEC wall is not supported; keep a vacuum standoff.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from .lattice import FieldSet, YeeGrid


def periodic_index(i: int, n: int) -> int:
    """Wrap a signed index into [0, n)."""
    return i % n


@dataclass(frozen=True)
class IndexMaps:
    """Per-axis neighbor index tables for field and material lookups."""

    # field neighbors: -1 means outside the domain (value treated as zero)
    fxm: np.ndarray
    fxp: np.ndarray
    fym: np.ndarray
    fyp: np.ndarray
    fzm: np.ndarray
    fzp: np.ndarray
    # material neighbors: clamped, always valid
    mxm: np.ndarray
    mxp: np.ndarray
    mym: np.ndarray
    myp: np.ndarray
    mzm: np.ndarray
    mzp: np.ndarray


def _axis_maps(n: int, periodic: bool):
    idx = np.arange(n, dtype=np.int64)
    if periodic:
        fm = (idx - 1) % n
        fp = (idx + 1) % n
        return fm, fp, fm.copy(), fp.copy()
    fm = idx - 1                      # -1 sentinel at the low face
    fp = idx + 1
    fp[-1] = -1                       # sentinel at the high face
    mm = np.maximum(idx - 1, 0)
    mp = np.minimum(idx + 1, n - 1)
    return fm, fp, mm, mp


def build_index_maps(grid: YeeGrid) -> IndexMaps:
    fxm, fxp, mxm, mxp = _axis_maps(grid.nx, grid.is_periodic(0))
    fym, fyp, mym, myp = _axis_maps(grid.ny, grid.is_periodic(1))
    fzm, fzp, mzm, mzp = _axis_maps(grid.nz, grid.is_periodic(2))
    return IndexMaps(fxm, fxp, fym, fyp, fzm, fzp,
                     mxm, mxp, mym, myp, mzm, mzp)


def periodic_index_maps(grid: YeeGrid) -> IndexMaps:
    """Index maps with every axis wrapped, regardless of the grid's kinds."""
    fxm, fxp, mxm, mxp = _axis_maps(grid.nx, True)
    fym, fyp, mym, myp = _axis_maps(grid.ny, True)
    fzm, fzp, mzm, mzp = _axis_maps(grid.nz, True)
    return IndexMaps(fxm, fxp, fym, fyp, fzm, fzp,
                     mxm, mxp, mym, myp, mzm, mzp)


_TANGENTIAL = {0: ("y", "z"), 1: ("x", "z"), 2: ("x", "y")}


def apply_pec(fields: FieldSet, grid: YeeGrid) -> FieldSet:
    """Zero tangential E (and D) on the high-side layer of each PEC axis."""
    for axis in range(3):
        if grid.boundaries[axis] != "pec":
            continue
        sl = [slice(None)] * 3
        sl[axis] = grid.shape[axis] - 1
        sl = tuple(sl)
        for comp in _TANGENTIAL[axis]:
            fields.get("E" + comp)[sl] = 0.0
            fields.get("D" + comp)[sl] = 0.0
    return fields


# ---------------------------------------------------------------------------
# Uniaxial PML

@dataclass
class PmlProfile:
    """Polynomial-graded UPML description for one terminated axis.

    sigma(d) = sigma_max * (d/L)^m and kappa(d) = 1 + (kappa_max-1)*(d/L)^m
    with d the depth into the layer from the inner interface and
    L = n_pml * spacing.  sigma(0) = 0, sigma(L) = sigma_max; kappa(0) = 1.
    """

    axis: int
    m: int
    n_pml: int
    sigma_max: float
    kappa_max: float
    spacing: float
    n_axis: int

    def __post_init__(self):
        if self.n_pml < 1:
            raise ValueError("n_pml must be >= 1")
        if 2 * self.n_pml > self.n_axis:
            raise ValueError(
                f"PML layers ({self.n_pml} cells each side) thicker than half "
                f"the axis ({self.n_axis} cells)")
        if self.kappa_max < 1.0:
            raise ValueError("kappa_max must be >= 1")
        if self.sigma_max < 0.0:
            raise ValueError("sigma_max must be >= 0")

    @property
    def thickness(self) -> float:
        return self.n_pml * self.spacing

    def depth(self, pos) -> np.ndarray:
        """Depth into the nearer layer for positions along the axis (0 outside)."""
        pos = np.asarray(pos, dtype=float)
        lo = self.thickness - pos
        hi = pos - (self.n_axis - self.n_pml) * self.spacing
        return np.maximum(0.0, np.maximum(lo, hi))

    def sigma(self, pos) -> np.ndarray:
        return self.sigma_max * (self.depth(pos) / self.thickness) ** self.m

    def kappa(self, pos) -> np.ndarray:
        return 1.0 + (self.kappa_max - 1.0) * (self.depth(pos) / self.thickness) ** self.m

    def cell_sigmas(self) -> np.ndarray:
        """sigma sampled at the n_pml cell centers of one layer, interface first."""
        d = (np.arange(self.n_pml) + 0.5) * self.spacing
        return self.sigma_max * (d / self.thickness) ** self.m


def default_sigma_max(m: int, n_pml: int, spacing: float) -> float:
    """Graded-PML peak conductivity, 8 (m+1) / (n_pml * spacing)."""
    return 8.0 * (m + 1) / (n_pml * spacing)


def build_pml(m: int, n_pml: int, sigma_max, kappa_max, grid: YeeGrid,
              axis: int = 2) -> PmlProfile:
    """Build the graded profile for the single UPML-terminated axis.

    sigma_max=None picks the default grading peak; kappa_max=None means 1
    (no real-part stretching).
    """
    if grid.boundaries[axis] != "upml":
        raise ValueError(f"axis {axis} is not configured as upml")
    spacing = grid.spacing[axis]
    if sigma_max is None:
        sigma_max = default_sigma_max(m, n_pml, spacing)
    if kappa_max is None:
        kappa_max = 1.0
    return PmlProfile(axis, int(m), int(n_pml), float(sigma_max),
                      float(kappa_max), spacing, grid.shape[axis])


class PmlState:
    """Auxiliary state and update coefficients for one UPML axis.

    Inside the layers the vacuum constitutive relations are replaced by the
    stretched ones.  With s = kappa + sigma/(i w) on the PML axis a, the
    transverse E/H components obey kappa dE/dt + sigma E = dD/dt (a lossy
    division by s), while the axial components obey E = kappa D + sigma
    Int(D dt) (a multiplication by s).  The fluxes D and B are time-stepped
    by the ordinary curls everywhere, so the interior scheme is untouched.
    """

    def __init__(self, profile: PmlProfile, grid: YeeGrid, dt: float):
        self.profile = profile
        self.grid = grid
        self.dt = float(dt)
        axis = profile.axis
        n = grid.shape[axis]
        self.axis = axis
        self.slabs = (slice(0, profile.n_pml), slice(n - profile.n_pml, n))

        names = "xyz"
        self.trans = tuple(c for c in names if c != names[axis])
        self.axial = names[axis]

        spacing = grid.spacing[axis]
        idx = np.arange(n, dtype=float)
        pos_int = idx * spacing            # integer-offset component positions
        pos_half = (idx + 0.5) * spacing   # half-offset component positions

        # Positions along the PML axis: E transverse at half offsets, E axial
        # at integer; H transverse at integer, H axial at half offsets.
        self._coef = {}
        for tag, pos in (("e_t", pos_half), ("h_t", pos_int)):
            sig = profile.sigma(pos)
            kap = profile.kappa(pos)
            denom = kap / dt + 0.5 * sig
            a = (kap / dt - 0.5 * sig) / denom
            b = (1.0 / dt) / denom
            self._coef[tag] = (self._shape(a), self._shape(b))
        for tag, pos in (("e_a", pos_int), ("h_a", pos_half)):
            sig = profile.sigma(pos)
            kap = profile.kappa(pos)
            self._coef[tag] = (self._shape(kap), self._shape(sig))

        shape = grid.shape
        slab_shapes = [tuple(shape[a] if a != axis else profile.n_pml for a in range(3))
                       for _ in self.slabs]
        zeros = lambda: [np.zeros(s) for s in slab_shapes]
        self.prev_e = {c: zeros() for c in self.trans}
        self.prev_h = {c: zeros() for c in self.trans}
        self.prev_d = {c: zeros() for c in (*self.trans, self.axial)}
        self.prev_b = {c: zeros() for c in (*self.trans, self.axial)}
        self.q_e = zeros()
        self.q_h = zeros()

    def _shape(self, arr1d):
        shape = [1, 1, 1]
        shape[self.axis] = len(arr1d)
        return arr1d.reshape(shape)

    def _slab(self, arr, s):
        sl = [slice(None)] * 3
        sl[self.axis] = self.slabs[s]
        return arr[tuple(sl)]

    def _coef_slab(self, tag, which, s):
        return self._slab(self._coef[tag][which], s)

    def save_pre_curl_e(self, fields: FieldSet) -> None:
        for c in (*self.trans, self.axial):
            arr = fields.get("B" + c)
            for s in range(2):
                self.prev_b[c][s][:] = self._slab(arr, s)

    def apply_after_const_h(self, fields: FieldSet) -> None:
        dt = self.dt
        for c in self.trans:
            B = fields.get("B" + c)
            H = fields.get("H" + c)
            for s in range(2):
                a = self._coef_slab("h_t", 0, s)
                b = self._coef_slab("h_t", 1, s)
                new = a * self.prev_h[c][s] + b * (self._slab(B, s) - self.prev_b[c][s])
                self._slab(H, s)[:] = new
                self.prev_h[c][s][:] = new
        c = self.axial
        B = fields.get("B" + c)
        H = fields.get("H" + c)
        for s in range(2):
            kap = self._coef_slab("h_a", 0, s)
            sig = self._coef_slab("h_a", 1, s)
            bnew = self._slab(B, s)
            self.q_h[s] += 0.5 * dt * (bnew + self.prev_b[c][s])
            self._slab(H, s)[:] = kap * bnew + sig * self.q_h[s]

    def save_pre_curl_h(self, fields: FieldSet) -> None:
        for c in (*self.trans, self.axial):
            arr = fields.get("D" + c)
            for s in range(2):
                self.prev_d[c][s][:] = self._slab(arr, s)

    def apply_after_const_e(self, fields: FieldSet) -> None:
        dt = self.dt
        for c in self.trans:
            D = fields.get("D" + c)
            E = fields.get("E" + c)
            for s in range(2):
                a = self._coef_slab("e_t", 0, s)
                b = self._coef_slab("e_t", 1, s)
                new = a * self.prev_e[c][s] + b * (self._slab(D, s) - self.prev_d[c][s])
                self._slab(E, s)[:] = new
                self.prev_e[c][s][:] = new
        c = self.axial
        D = fields.get("D" + c)
        E = fields.get("E" + c)
        for s in range(2):
            kap = self._coef_slab("e_a", 0, s)
            sig = self._coef_slab("e_a", 1, s)
            dnew = self._slab(D, s)
            self.q_e[s] += 0.5 * dt * (dnew + self.prev_d[c][s])
            self._slab(E, s)[:] = kap * dnew + sig * self.q_e[s]

    def interior_slice(self):
        """Slice tuple selecting the non-PML interior along the PML axis."""
        sl = [slice(None)] * 3
        sl[self.axis] = slice(self.profile.n_pml,
                              self.grid.shape[self.axis] - self.profile.n_pml)
        return tuple(sl)
