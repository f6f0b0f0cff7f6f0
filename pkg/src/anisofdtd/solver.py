"""Leapfrog time stepper for the anisotropic constitutive schemes.

One step advances the (D, B) pair through

    B^{n+1/2} = B^{n-1/2} - dt * curl E^n
    H^{n+1/2} = zeta (*) B^{n+1/2}
    D^{n+1}   = D^n     + dt * curl H^{n+1/2}
    E^{n+1}   = xi  (*) D^{n+1}

where (*) is either the non-averaged (same-cell, first-order) or the
averaged (face/edge-sharing, second-order) constitutive inversion.  The
update order is fixed; reordering would change the one-step operator that
the eigenvalue analysis probes.

The time step bound is dt <= 2 / sqrt(rho(C_h M_zeta C_e M_xi)), estimated
matrix-free by power iteration on the composed operator.
"""

from __future__ import annotations

from dataclasses import dataclass, field

import numpy as np

from . import _kernels
from .boundary import (IndexMaps, PmlState, apply_pec, build_index_maps,
                       periodic_index_maps)
from .lattice import FieldSet, YeeGrid
from .materials import MaterialGrid

SCHEMES = ("non_averaged", "averaged")

DEFAULT_CFL_FACTOR = 0.4


class CflConvergenceError(RuntimeError):
    """Power iteration did not settle; carries the last estimate."""

    def __init__(self, message, last_dt_max, last_rho):
        super().__init__(message)
        self.last_dt_max = last_dt_max
        self.last_rho = last_rho


@dataclass
class StepState:
    """Everything one leapfrog step needs, bundled.

    Sources are objects with correct_b(fields, state, t) / correct_d(...) /
    add_soft(...) hooks; the TFSF plane and the Gaussian point source in
    sources.py implement them.
    """

    grid: YeeGrid
    fields: FieldSet
    material: MaterialGrid
    dt: float
    scheme: str = "averaged"
    maps: IndexMaps = None
    pml: PmlState | None = None
    sources: list = field(default_factory=list)

    def __post_init__(self):
        if self.scheme not in SCHEMES:
            raise ValueError(f"scheme must be one of {SCHEMES}, got {self.scheme!r}")
        if self.material.shape != self.grid.shape:
            raise ValueError("material grid shape does not match the lattice")
        if self.maps is None:
            self.maps = build_index_maps(self.grid)
        if not self.dt > 0:
            raise ValueError("dt must be positive")

    @property
    def n(self) -> int:
        return int(self.fields.time_level)

    @property
    def time(self) -> float:
        return self.fields.time_level * self.dt


def make_state(grid, material, scheme="averaged", dt=None, cfl_factor=None,
               pml_profile=None, sources=None, fields=None) -> StepState:
    """Convenience constructor; dt defaults to 0.4x the computed CFL bound."""
    if dt is None:
        factor = DEFAULT_CFL_FACTOR if cfl_factor is None else cfl_factor
        dt = factor * compute_cfl(material, grid, scheme).dt_max
    fields = FieldSet.zeros(grid.shape) if fields is None else fields
    pml = PmlState(pml_profile, grid, dt) if pml_profile is not None else None
    return StepState(grid, fields, material, float(dt), scheme,
                     pml=pml, sources=list(sources or ()))


# ---------------------------------------------------------------------------
# Individual update passes (operate in place on state.fields).

def curl_E_update_B(state: StepState) -> tuple[np.ndarray, np.ndarray, np.ndarray]:
    f, g, m = state.fields, state.grid, state.maps
    _kernels.curl_e_update_b(f.Bx, f.By, f.Bz, f.Ex, f.Ey, f.Ez,
                             state.dt, g.dx, g.dy, g.dz, m.fxm, m.fym, m.fzm)
    return f.b_vector()


def curl_H_update_D(state: StepState) -> tuple[np.ndarray, np.ndarray, np.ndarray]:
    f, g, m = state.fields, state.grid, state.maps
    _kernels.curl_h_update_d(f.Dx, f.Dy, f.Dz, f.Hx, f.Hy, f.Hz,
                             state.dt, g.dx, g.dy, g.dz, m.fxp, m.fyp, m.fzp)
    return f.d_vector()


def constitutive_nonavg(kind: str, state: StepState):
    f = state.fields
    if kind == "E":
        _kernels.const_nonavg(f.Ex, f.Ey, f.Ez, f.Dx, f.Dy, f.Dz,
                              state.material.xi)
        return f.Ex, f.Ey, f.Ez
    if kind == "H":
        _kernels.const_nonavg(f.Hx, f.Hy, f.Hz, f.Bx, f.By, f.Bz,
                              state.material.zeta)
        return f.Hx, f.Hy, f.Hz
    raise ValueError(f"kind must be 'E' or 'H', got {kind!r}")


def constitutive_avg_E(state: StepState):
    f, m = state.fields, state.maps
    _kernels.const_avg_e(f.Ex, f.Ey, f.Ez, f.Dx, f.Dy, f.Dz, state.material.xi,
                         m.fxm, m.fym, m.fzm, m.fxp, m.fyp, m.fzp,
                         m.mxm, m.mym, m.mzm)
    return f.Ex, f.Ey, f.Ez


def constitutive_avg_H(state: StepState):
    f, m = state.fields, state.maps
    _kernels.const_avg_h(f.Hx, f.Hy, f.Hz, f.Bx, f.By, f.Bz, state.material.zeta,
                         m.fxm, m.fym, m.fzm, m.fxp, m.fyp, m.fzp,
                         m.mxm, m.mym, m.mzm)
    return f.Hx, f.Hy, f.Hz


def _constitutive(kind: str, state: StepState, scheme: str):
    if scheme == "non_averaged":
        return constitutive_nonavg(kind, state)
    if kind == "E":
        return constitutive_avg_E(state)
    return constitutive_avg_H(state)


def step(state: StepState, scheme: str | None = None) -> StepState:
    """Advance the state by one full leapfrog step (in place)."""
    scheme = state.scheme if scheme is None else scheme
    if scheme not in SCHEMES:
        raise ValueError(f"scheme must be one of {SCHEMES}, got {scheme!r}")
    f = state.fields
    n = state.n
    t_e = n * state.dt                # time of the E field driving curl_E
    t_h = (n + 0.5) * state.dt        # time of the H field driving curl_H

    if state.pml is not None:
        state.pml.save_pre_curl_e(f)
    curl_E_update_B(state)
    for src in state.sources:
        src.correct_b(f, state, t_e)
    _constitutive("H", state, scheme)
    if state.pml is not None:
        state.pml.apply_after_const_h(f)

    if state.pml is not None:
        state.pml.save_pre_curl_h(f)
    curl_H_update_D(state)
    for src in state.sources:
        src.correct_d(f, state, t_h)
    _constitutive("E", state, scheme)
    if state.pml is not None:
        state.pml.apply_after_const_e(f)

    apply_pec(f, state.grid)
    for src in state.sources:
        src.add_soft(f, state, (n + 1) * state.dt)

    f.time_level += 1.0
    return state


def run(state: StepState, n_steps: int, on_step=None, check_every: int = 0) -> StepState:
    """Run n_steps; optional per-step callback and non-finite sentinel."""
    for _ in range(n_steps):
        step(state)
        if on_step is not None:
            on_step(state)
        if check_every and state.n % check_every == 0:
            if not np.isfinite(state.fields.Ex).all():
                raise FloatingPointError(
                    f"non-finite field detected at step {state.n}")
    return state


# ---------------------------------------------------------------------------
# CFL bound via the spectral radius of C_h M_zeta C_e M_xi.

@dataclass(frozen=True)
class CflResult:
    dt_max: float
    rho: float
    iterations: int
    residual: float
    converged: bool


def _apply_curl_curl(d_triple, grid, material, scheme, maps):
    """K d = C_h M_zeta C_e M_xi d, all passes matrix-free."""
    shape = grid.shape
    z = np.zeros(shape)
    work = FieldSet(d_triple[0].copy(), d_triple[1].copy(), d_triple[2].copy(),
                    z.copy(), z.copy(), z.copy(), z.copy(), z.copy(), z.copy(),
                    z.copy(), z.copy(), z.copy())
    st = StepState(grid, work, material, 1.0, scheme, maps=maps)
    _constitutive("E", st, scheme)                       # E = M_xi d
    # B = + curl E  (kernel computes B -= dt curl E, so dt = -1 on zero B)
    _kernels.curl_e_update_b(work.Bx, work.By, work.Bz, work.Ex, work.Ey, work.Ez,
                             -1.0, grid.dx, grid.dy, grid.dz,
                             maps.fxm, maps.fym, maps.fzm)
    _constitutive("H", st, scheme)                       # H = M_zeta B
    out = [np.zeros(shape) for _ in range(3)]
    _kernels.curl_h_update_d(out[0], out[1], out[2], work.Hx, work.Hy, work.Hz,
                             1.0, grid.dx, grid.dy, grid.dz,
                             maps.fxp, maps.fyp, maps.fzp)
    return out, (work.Ex, work.Ey, work.Ez)


def compute_cfl(material: MaterialGrid, grid: YeeGrid, scheme: str = "averaged",
                max_iter: int = 600, rtol: float = 1e-8, seed: int = 7) -> CflResult:
    """Largest stable dt, 2/sqrt(rho), via power iteration.

    The composed operator is self-adjoint in the M_xi inner product, so the
    weighted Rayleigh quotient increases monotonically toward rho.  Because
    the leading eigenvalues can cluster (anisotropic spacings, mixed
    layouts), the geometric tail of the quotient sequence is Aitken
    extrapolated and convergence is declared when the extrapolated limit is
    stable to rtol.  The spectral radius is evaluated under periodic
    closure of the grid (the setting of the stability theory); PEC/UPML
    runs apply the same bound.
    """
    if scheme not in SCHEMES:
        raise ValueError(f"scheme must be one of {SCHEMES}, got {scheme!r}")
    maps = periodic_index_maps(grid)
    rng = np.random.default_rng(seed)
    u = [rng.standard_normal(grid.shape) for _ in range(3)]
    norm = np.sqrt(sum(np.vdot(c, c).real for c in u))
    u = [c / norm for c in u]

    rhos = []
    acc_prev = None
    for it in range(1, max_iter + 1):
        ku, mu_ = _apply_curl_curl(u, grid, material, scheme, maps)
        num = sum(float(np.vdot(m, k)) for m, k in zip(mu_, ku))
        den = sum(float(np.vdot(m, c)) for m, c in zip(mu_, u))
        rho = num / den
        norm = np.sqrt(sum(float(np.vdot(c, c)) for c in ku))
        if norm == 0.0:
            raise CflConvergenceError("power iteration collapsed to the null space",
                                      np.inf, 0.0)
        u = [c / norm for c in ku]
        rhos.append(rho)

        if len(rhos) < 3:
            continue
        d1 = rhos[-1] - rhos[-2]
        d0 = rhos[-2] - rhos[-3]
        resid = abs(d1) / max(abs(rho), 1e-300)
        if resid < 1e-13:
            return CflResult(2.0 / np.sqrt(rho), rho, it, resid, True)
        q = d1 / d0 if d0 != 0.0 else 0.0
        if not (0.0 < q < 1.0):
            acc_prev = None
            continue
        acc = rho + d1 * q / (1.0 - q)
        if acc_prev is not None:
            acc_resid = abs(acc - acc_prev) / max(abs(acc), 1e-300)
            if acc_resid < rtol:
                return CflResult(2.0 / np.sqrt(acc), acc, it, acc_resid, True)
        acc_prev = acc

    resid = abs(rhos[-1] - rhos[-2]) / max(abs(rhos[-1]), 1e-300)
    raise CflConvergenceError(
        f"power iteration did not converge in {max_iter} iterations "
        f"(last dt_max {2.0 / np.sqrt(rhos[-1]):.6g}, residual {resid:.2e})",
        2.0 / np.sqrt(rhos[-1]), rhos[-1])
