"""Compiled inner loops for the field updates.

All kernels take C-contiguous float64 arrays of shape (nx, ny, nz) plus the
per-axis neighbor index tables from boundary.build_index_maps.  A field
index of -1 means "outside the domain": the value is taken as zero.
Material index tables are pre-clamped and always valid.

Kernels are sequential (no numba parallel) so runs are bit-reproducible.
"""

import numpy as np
from numba import njit

_SIG_CURL = "void(f8[:,:,::1], f8[:,:,::1], f8[:,:,::1], f8[:,:,::1], f8[:,:,::1], f8[:,:,::1], f8, f8, f8, f8, i8[::1], i8[::1], i8[::1])"
_SIG_NONAVG = "void(f8[:,:,::1], f8[:,:,::1], f8[:,:,::1], f8[:,:,::1], f8[:,:,::1], f8[:,:,::1], f8[:,:,:,:,::1])"
_SIG_AVG = "void(f8[:,:,::1], f8[:,:,::1], f8[:,:,::1], f8[:,:,::1], f8[:,:,::1], f8[:,:,::1], f8[:,:,:,:,::1], i8[::1], i8[::1], i8[::1], i8[::1], i8[::1], i8[::1], i8[::1], i8[::1], i8[::1])"


@njit(_SIG_CURL, cache=True)
def curl_e_update_b(Bx, By, Bz, Ex, Ey, Ez, dt, dx, dy, dz, fxm, fym, fzm):
    # B^{n+1/2} = B^{n-1/2} - dt * curl E^n   (edge-centered from face-centered E)
    nx, ny, nz = Bx.shape
    for i in range(nx):
        im = fxm[i]
        for j in range(ny):
            jm = fym[j]
            for k in range(nz):
                km = fzm[k]
                ez0 = Ez[i, j, k]
                ey0 = Ey[i, j, k]
                ex0 = Ex[i, j, k]
                ez_jm = Ez[i, jm, k] if jm >= 0 else 0.0
                ey_km = Ey[i, j, km] if km >= 0 else 0.0
                ex_km = Ex[i, j, km] if km >= 0 else 0.0
                ez_im = Ez[im, j, k] if im >= 0 else 0.0
                ey_im = Ey[im, j, k] if im >= 0 else 0.0
                ex_jm = Ex[i, jm, k] if jm >= 0 else 0.0
                Bx[i, j, k] -= dt * ((ez0 - ez_jm) / dy - (ey0 - ey_km) / dz)
                By[i, j, k] -= dt * ((ex0 - ex_km) / dz - (ez0 - ez_im) / dx)
                Bz[i, j, k] -= dt * ((ey0 - ey_im) / dx - (ex0 - ex_jm) / dy)


@njit(_SIG_CURL, cache=True)
def curl_h_update_d(Dx, Dy, Dz, Hx, Hy, Hz, dt, dx, dy, dz, fxp, fyp, fzp):
    # D^{n+1} = D^n + dt * curl H^{n+1/2}   (face-centered from edge-centered H)
    nx, ny, nz = Dx.shape
    for i in range(nx):
        ip = fxp[i]
        for j in range(ny):
            jp = fyp[j]
            for k in range(nz):
                kp = fzp[k]
                hz0 = Hz[i, j, k]
                hy0 = Hy[i, j, k]
                hx0 = Hx[i, j, k]
                hz_jp = Hz[i, jp, k] if jp >= 0 else 0.0
                hy_kp = Hy[i, j, kp] if kp >= 0 else 0.0
                hx_kp = Hx[i, j, kp] if kp >= 0 else 0.0
                hz_ip = Hz[ip, j, k] if ip >= 0 else 0.0
                hy_ip = Hy[ip, j, k] if ip >= 0 else 0.0
                hx_jp = Hx[i, jp, k] if jp >= 0 else 0.0
                Dx[i, j, k] += dt * ((hz_jp - hz0) / dy - (hy_kp - hy0) / dz)
                Dy[i, j, k] += dt * ((hx_kp - hx0) / dz - (hz_ip - hz0) / dx)
                Dz[i, j, k] += dt * ((hy_ip - hy0) / dx - (hx_jp - hx0) / dy)


@njit(_SIG_NONAVG, cache=True)
def const_nonavg(Fx, Fy, Fz, Gx, Gy, Gz, T):
    # F = T G per cell: same-cell, non-co-located components (first order)
    nx, ny, nz = Fx.shape
    for i in range(nx):
        for j in range(ny):
            for k in range(nz):
                gx = Gx[i, j, k]
                gy = Gy[i, j, k]
                gz = Gz[i, j, k]
                Fx[i, j, k] = T[i, j, k, 0, 0] * gx + T[i, j, k, 0, 1] * gy + T[i, j, k, 0, 2] * gz
                Fy[i, j, k] = T[i, j, k, 1, 0] * gx + T[i, j, k, 1, 1] * gy + T[i, j, k, 1, 2] * gz
                Fz[i, j, k] = T[i, j, k, 2, 0] * gx + T[i, j, k, 2, 1] * gy + T[i, j, k, 2, 2] * gz


@njit(_SIG_AVG, cache=True)
def const_avg_e(Ex, Ey, Ez, Dx, Dy, Dz, xi,
                fxm, fym, fzm, fxp, fyp, fzp, mxm, mym, mzm):
    # Two-cell face-sharing average: for each E component, average the D
    # pairs inside the two cells sharing its face, apply each cell's xi row,
    # average the results (1/4, 1/4, 1/2 grouped weights).
    nx, ny, nz = Ex.shape
    for i in range(nx):
        imf = fxm[i]
        imm = mxm[i]
        ipf = fxp[i]
        for j in range(ny):
            jmf = fym[j]
            jmm = mym[j]
            jpf = fyp[j]
            for k in range(nz):
                kmf = fzm[k]
                kmm = mzm[k]
                kpf = fzp[k]

                dx0 = Dx[i, j, k]
                dy0 = Dy[i, j, k]
                dz0 = Dz[i, j, k]
                dx_ip = Dx[ipf, j, k] if ipf >= 0 else 0.0
                dy_jp = Dy[i, jpf, k] if jpf >= 0 else 0.0
                dz_kp = Dz[i, j, kpf] if kpf >= 0 else 0.0

                # --- Ex: cells (i,j,k) and (i-1,j,k) share the x-face
                sy_a = dy0 + dy_jp
                sz_a = dz0 + dz_kp
                if imf >= 0:
                    sy_b = Dy[imf, j, k] + (Dy[imf, jpf, k] if jpf >= 0 else 0.0)
                    sz_b = Dz[imf, j, k] + (Dz[imf, j, kpf] if kpf >= 0 else 0.0)
                else:
                    sy_b = 0.0
                    sz_b = 0.0
                Ex[i, j, k] = (0.5 * (xi[i, j, k, 0, 0] + xi[imm, j, k, 0, 0]) * dx0
                               + 0.25 * (xi[i, j, k, 0, 1] * sy_a + xi[imm, j, k, 0, 1] * sy_b)
                               + 0.25 * (xi[i, j, k, 0, 2] * sz_a + xi[imm, j, k, 0, 2] * sz_b))

                # --- Ey: cells (i,j,k) and (i,j-1,k) share the y-face
                sx_a = dx0 + dx_ip
                sz_a = dz0 + dz_kp
                if jmf >= 0:
                    sx_b = Dx[i, jmf, k] + (Dx[ipf, jmf, k] if ipf >= 0 else 0.0)
                    sz_b = Dz[i, jmf, k] + (Dz[i, jmf, kpf] if kpf >= 0 else 0.0)
                else:
                    sx_b = 0.0
                    sz_b = 0.0
                Ey[i, j, k] = (0.5 * (xi[i, j, k, 1, 1] + xi[i, jmm, k, 1, 1]) * dy0
                               + 0.25 * (xi[i, j, k, 1, 0] * sx_a + xi[i, jmm, k, 1, 0] * sx_b)
                               + 0.25 * (xi[i, j, k, 1, 2] * sz_a + xi[i, jmm, k, 1, 2] * sz_b))

                # --- Ez: cells (i,j,k) and (i,j,k-1) share the z-face
                sx_a = dx0 + dx_ip
                sy_a = dy0 + dy_jp
                if kmf >= 0:
                    sx_b = Dx[i, j, kmf] + (Dx[ipf, j, kmf] if ipf >= 0 else 0.0)
                    sy_b = Dy[i, j, kmf] + (Dy[i, jpf, kmf] if jpf >= 0 else 0.0)
                else:
                    sx_b = 0.0
                    sy_b = 0.0
                Ez[i, j, k] = (0.5 * (xi[i, j, k, 2, 2] + xi[i, j, kmm, 2, 2]) * dz0
                               + 0.25 * (xi[i, j, k, 2, 0] * sx_a + xi[i, j, kmm, 2, 0] * sx_b)
                               + 0.25 * (xi[i, j, k, 2, 1] * sy_a + xi[i, j, kmm, 2, 1] * sy_b))


@njit(_SIG_AVG, cache=True)
def const_avg_h(Hx, Hy, Hz, Bx, By, Bz, zeta,
                fxm, fym, fzm, fxp, fyp, fzp, mxm, mym, mzm):
    # Four-cell edge-sharing average: 1/4 diagonal and 1/8 off-diagonal
    # grouped weights over the cells around each edge.
    nx, ny, nz = Hx.shape
    for i in range(nx):
        imf = fxm[i]
        imm = mxm[i]
        ipf = fxp[i]
        for j in range(ny):
            jmf = fym[j]
            jmm = mym[j]
            jpf = fyp[j]
            for k in range(nz):
                kmf = fzm[k]
                kmm = mzm[k]
                kpf = fzp[k]

                bx0 = Bx[i, j, k]
                by0 = By[i, j, k]
                bz0 = Bz[i, j, k]

                # --- Hx: edge shared by (i,j,k), (i,j-1,k), (i,j,k-1), (i,j-1,k-1)
                sy_a = by0 + (By[ipf, j, k] if ipf >= 0 else 0.0)
                sz_a = bz0 + (Bz[ipf, j, k] if ipf >= 0 else 0.0)
                if jmf >= 0:
                    sy_b = By[i, jmf, k] + (By[ipf, jmf, k] if ipf >= 0 else 0.0)
                else:
                    sy_b = 0.0
                if kmf >= 0:
                    sz_b = Bz[i, j, kmf] + (Bz[ipf, j, kmf] if ipf >= 0 else 0.0)
                else:
                    sz_b = 0.0
                Hx[i, j, k] = (
                    0.25 * (zeta[i, j, k, 0, 0] + zeta[i, jmm, k, 0, 0]
                            + zeta[i, j, kmm, 0, 0] + zeta[i, jmm, kmm, 0, 0]) * bx0
                    + 0.125 * ((zeta[i, j, k, 0, 1] + zeta[i, j, kmm, 0, 1]) * sy_a
                               + (zeta[i, jmm, k, 0, 1] + zeta[i, jmm, kmm, 0, 1]) * sy_b)
                    + 0.125 * ((zeta[i, j, k, 0, 2] + zeta[i, jmm, k, 0, 2]) * sz_a
                               + (zeta[i, j, kmm, 0, 2] + zeta[i, jmm, kmm, 0, 2]) * sz_b))

                # --- Hy: edge shared by (i,j,k), (i-1,j,k), (i,j,k-1), (i-1,j,k-1)
                sx_a = bx0 + (Bx[i, jpf, k] if jpf >= 0 else 0.0)
                sz_a = bz0 + (Bz[i, jpf, k] if jpf >= 0 else 0.0)
                if imf >= 0:
                    sx_b = Bx[imf, j, k] + (Bx[imf, jpf, k] if jpf >= 0 else 0.0)
                else:
                    sx_b = 0.0
                if kmf >= 0:
                    sz_b = Bz[i, j, kmf] + (Bz[i, jpf, kmf] if jpf >= 0 else 0.0)
                else:
                    sz_b = 0.0
                Hy[i, j, k] = (
                    0.25 * (zeta[i, j, k, 1, 1] + zeta[imm, j, k, 1, 1]
                            + zeta[i, j, kmm, 1, 1] + zeta[imm, j, kmm, 1, 1]) * by0
                    + 0.125 * ((zeta[i, j, k, 1, 0] + zeta[i, j, kmm, 1, 0]) * sx_a
                               + (zeta[imm, j, k, 1, 0] + zeta[imm, j, kmm, 1, 0]) * sx_b)
                    + 0.125 * ((zeta[i, j, k, 1, 2] + zeta[imm, j, k, 1, 2]) * sz_a
                               + (zeta[i, j, kmm, 1, 2] + zeta[imm, j, kmm, 1, 2]) * sz_b))

                # --- Hz: edge shared by (i,j,k), (i-1,j,k), (i,j-1,k), (i-1,j-1,k)
                sx_a = bx0 + (Bx[i, j, kpf] if kpf >= 0 else 0.0)
                sy_a = by0 + (By[i, j, kpf] if kpf >= 0 else 0.0)
                if imf >= 0:
                    sx_b = Bx[imf, j, k] + (Bx[imf, j, kpf] if kpf >= 0 else 0.0)
                else:
                    sx_b = 0.0
                if jmf >= 0:
                    sy_b = By[i, jmf, k] + (By[i, jmf, kpf] if kpf >= 0 else 0.0)
                else:
                    sy_b = 0.0
                Hz[i, j, k] = (
                    0.25 * (zeta[i, j, k, 2, 2] + zeta[imm, j, k, 2, 2]
                            + zeta[i, jmm, k, 2, 2] + zeta[imm, jmm, k, 2, 2]) * bz0
                    + 0.125 * ((zeta[i, j, k, 2, 0] + zeta[i, jmm, k, 2, 0]) * sx_a
                               + (zeta[imm, j, k, 2, 0] + zeta[imm, jmm, k, 2, 0]) * sx_b)
                    + 0.125 * ((zeta[i, j, k, 2, 1] + zeta[imm, j, k, 2, 1]) * sy_a
                               + (zeta[i, jmm, k, 2, 1] + zeta[imm, jmm, k, 2, 1]) * sy_b))


@njit("f8(f8[:,:,::1], f8[:,:,::1], f8[:,:,::1], f8[:,:,::1], f8[:,:,::1], f8[:,:,::1], f8[:,:,:,:,::1], f8[:,:,:,:,::1])", cache=True)
def quadratic_energy(Dx, Dy, Dz, Bx, By, Bz, xi, zeta):
    # 0.5 * sum_cells (D . xi D + B . zeta B)
    nx, ny, nz = Dx.shape
    total = 0.0
    for i in range(nx):
        for j in range(ny):
            for k in range(nz):
                dx0 = Dx[i, j, k]
                dy0 = Dy[i, j, k]
                dz0 = Dz[i, j, k]
                bx0 = Bx[i, j, k]
                by0 = By[i, j, k]
                bz0 = Bz[i, j, k]
                ed = (dx0 * (xi[i, j, k, 0, 0] * dx0 + xi[i, j, k, 0, 1] * dy0 + xi[i, j, k, 0, 2] * dz0)
                      + dy0 * (xi[i, j, k, 1, 0] * dx0 + xi[i, j, k, 1, 1] * dy0 + xi[i, j, k, 1, 2] * dz0)
                      + dz0 * (xi[i, j, k, 2, 0] * dx0 + xi[i, j, k, 2, 1] * dy0 + xi[i, j, k, 2, 2] * dz0))
                eb = (bx0 * (zeta[i, j, k, 0, 0] * bx0 + zeta[i, j, k, 0, 1] * by0 + zeta[i, j, k, 0, 2] * bz0)
                      + by0 * (zeta[i, j, k, 1, 0] * bx0 + zeta[i, j, k, 1, 1] * by0 + zeta[i, j, k, 1, 2] * bz0)
                      + bz0 * (zeta[i, j, k, 2, 0] * bx0 + zeta[i, j, k, 2, 1] * by0 + zeta[i, j, k, 2, 2] * bz0))
                total += ed + eb
    return 0.5 * total
