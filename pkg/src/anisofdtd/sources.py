"""Excitations: broadband Gaussian point source and a single-plane
unidirectional total-field/scattered-field plane wave.

The TFSF source injects the consistency corrections of the analytic
incident wave on one z-plane, so the wave exists only downstream of it.
The incident wave uses the grid's discrete-dispersion wavenumber (the
exact 1D eigenmode of the vacuum update), which makes the upstream
cancellation exact once the temporal ramp is over; the residual upstream
leakage is then ramp transient plus roundoff.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from .lattice import FieldSet, YeeGrid


def gaussian_amplitude(t: float, amplitude: float, t0: float, tau: float) -> float:
    """amplitude * exp(-((t - t0)/tau)^2)."""
    if not tau > 0:
        raise ValueError("tau must be positive")
    return amplitude * np.exp(-(((t - t0) / tau) ** 2))


@dataclass(frozen=True)
class SourceSpec:
    """Configuration of one excitation (normalized units)."""

    kind: str                       # gaussian_point | tfsf_plane
    amplitude: float = 1.0
    # gaussian_point
    t0: float = 0.0
    tau: float = 1.0
    component: str = "Ey"
    cell: tuple[int, int, int] = (0, 0, 0)
    # tfsf_plane
    wavelength: float = 0.0
    axis: int = 2
    direction: int = -1
    plane_index: int = 0
    polarization: str = "y"
    ramp_periods: float = 3.0

    def __post_init__(self):
        if self.kind not in ("gaussian_point", "tfsf_plane"):
            raise ValueError(f"unknown source kind {self.kind!r}")
        if self.kind == "gaussian_point" and not self.tau > 0:
            raise ValueError("gaussian source needs tau > 0")
        if self.kind == "tfsf_plane":
            if self.axis != 2:
                raise ValueError("TFSF injection is implemented for the z axis")
            if self.direction not in (-1, 1):
                raise ValueError("direction must be -1 or +1")
            if self.polarization not in ("x", "y"):
                raise ValueError("polarization must be 'x' or 'y'")
            if not self.wavelength > 0:
                raise ValueError("tfsf source needs a positive wavelength")


def make_source(spec: SourceSpec, grid: YeeGrid, dt: float, n_pml: int = 0):
    if spec.kind == "gaussian_point":
        return GaussianPointSource(spec, grid)
    return TfsfPlane(spec, grid, dt, n_pml)


class GaussianPointSource:
    """Soft source: adds the pulse to one E component of one cell."""

    def __init__(self, spec: SourceSpec, grid: YeeGrid):
        self.spec = spec
        i, j, k = spec.cell
        if not (0 <= i < grid.nx and 0 <= j < grid.ny and 0 <= k < grid.nz):
            raise ValueError(f"source cell {spec.cell} outside the grid")
        if spec.component not in ("Ex", "Ey", "Ez"):
            raise ValueError("gaussian point source drives an E component")

    def correct_b(self, fields, state, t):
        pass

    def correct_d(self, fields, state, t):
        pass

    def add_soft(self, fields: FieldSet, state, t: float):
        s = self.spec
        fields.get(s.component)[s.cell] += gaussian_amplitude(t, s.amplitude,
                                                              s.t0, s.tau)


def discrete_wavenumber(omega: float, dz: float, dt: float) -> float:
    """Wavenumber of the discrete 1D vacuum mode at angular frequency omega,
    from sin(omega dt / 2) = (dt / dz) sin(k dz / 2)."""
    arg = (dz / dt) * np.sin(0.5 * omega * dt)
    if abs(arg) >= 1.0:
        raise ValueError("frequency not resolvable at this dt/dz")
    return (2.0 / dz) * np.arcsin(arg)


class TfsfPlane:
    """Unidirectional plane-wave injector on one z-plane.

    For propagation direction -z the total-field region is k <= plane_index;
    the scattered-field region upstream of the plane stays dark.  The two
    touched cell layers must be vacuum.
    """

    def __init__(self, spec: SourceSpec, grid: YeeGrid, dt: float, n_pml: int = 0):
        if spec.kind != "tfsf_plane":
            raise ValueError("spec is not a tfsf_plane source")
        self.spec = spec
        self.grid = grid
        self.dt = float(dt)
        k0 = int(spec.plane_index)
        lo = n_pml if grid.boundaries[2] == "upml" else 0
        hi = grid.nz - (n_pml if grid.boundaries[2] == "upml" else 0)
        if not (lo <= k0 and k0 + 1 <= hi - 1):
            raise ValueError(
                f"TFSF plane index {k0} not strictly inside the non-PML interior "
                f"[{lo}, {hi})")
        self.k0 = k0
        self.omega = 2.0 * np.pi / spec.wavelength
        self.k_num = discrete_wavenumber(self.omega, grid.dz, dt)
        self.t_ramp = spec.ramp_periods * spec.wavelength  # c = 1
        s = spec.direction
        # sign conventions of the exact discrete mode (see tests for the
        # leakage check): E_pol and its partner H amplitude, plus the
        # correction signs on the two interface layers.
        if spec.polarization == "y":
            self.b_comp, self.d_comp = "Bx", "Dy"
            self.h_sign = -float(s)
            self.corr_sign = -float(s)
        else:
            self.b_comp, self.d_comp = "By", "Dx"
            self.h_sign = float(s)
            self.corr_sign = float(s)

    def validate_materials(self, material, tol: float = 1e-5) -> None:
        """The injection plane layers must be (numerically) vacuum."""
        from .materials import IDENTITY3
        for k in (self.k0, self.k0 + 1):
            for t in (material.eps[:, :, k], material.mu[:, :, k]):
                if np.abs(t - IDENTITY3).max() > tol:
                    raise ValueError(
                        "anisotropic material at the TFSF injection plane")

    def _ramp(self, t: float) -> float:
        if t <= 0.0:
            return 0.0
        if t >= self.t_ramp:
            return 1.0
        return float(np.sin(0.5 * np.pi * t / self.t_ramp) ** 2)

    def _phase(self, z: float, t: float) -> float:
        return self.omega * t - self.spec.direction * self.k_num * z

    def e_inc(self, z: float, t: float) -> float:
        return self.spec.amplitude * self._ramp(t) * np.cos(self._phase(z, t))

    def h_inc(self, z: float, t: float) -> float:
        return self.h_sign * self.spec.amplitude * self._ramp(t) * np.cos(
            self._phase(z, t))

    def correct_b(self, fields: FieldSet, state, t: float):
        # consistency fix for the scattered-side B layer, driven by the
        # incident E at the last total-field E position z_{k0+1/2}
        if self.spec.amplitude == 0.0:
            return
        g = self.grid
        z_e = (self.k0 + 0.5) * g.dz
        val = self.corr_sign * state.dt / g.dz * self.e_inc(z_e, t)
        fields.get(self.b_comp)[:, :, self.k0 + 1] += val

    def correct_d(self, fields: FieldSet, state, t: float):
        # consistency fix for the last total-field D layer, driven by the
        # incident H at the first scattered-side H position z_{k0+1}
        if self.spec.amplitude == 0.0:
            return
        g = self.grid
        z_h = (self.k0 + 1) * g.dz
        val = self.corr_sign * state.dt / g.dz * self.h_inc(z_h, t)
        fields.get(self.d_comp)[:, :, self.k0] += val

    def add_soft(self, fields, state, t):
        pass

    def inject(self, fields: FieldSet, state, t_e: float, t_h: float):
        """Both corrections at explicitly given field times (manual driving)."""
        self.correct_b(fields, state, t_e)
        self.correct_d(fields, state, t_h)
