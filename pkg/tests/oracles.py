"""Independent reference implementations used as test oracles.

Everything here is deliberately written from the printed update formulas /
first principles (explicit loops, literal triplet sums, dense permutation
algebra) and stays independent of the library's stencil code paths.
"""

import numpy as np


# ---------------------------------------------------------------------------
# Ungrouped averaged constitutive updates: literal eight-triplet sums.
# For E_p the two cells sharing the p-face are offset 0/-1 along p; inside
# each cell the four D-triplets keep D_p fixed at the shared face and run
# over both faces of the two transverse axes.  For H_p the four cells share
# the p-edge (offsets 0/-1 along both transverse axes) and two triplets per
# cell keep B_p fixed while pairing the transverse components along p.

_OTHERS = {0: (1, 2), 1: (2, 0), 2: (0, 1)}


def avg_e_ungrouped(D, xi):
    """E = averaged constitutive inversion, periodic, literal triplet form."""
    shape = D[0].shape
    nx, ny, nz = shape
    E = [np.zeros(shape) for _ in range(3)]
    for p in range(3):
        q, r = _OTHERS[p]
        for i in range(nx):
            for j in range(ny):
                for k in range(nz):
                    base = np.array([i, j, k])
                    acc = 0.0
                    for bp in (0, 1):          # which sharing cell
                        cell = base.copy()
                        cell[p] -= bp
                        cell %= (nx, ny, nz)
                        xc = xi[tuple(cell)]
                        for bq in (0, 1):
                            for br in (0, 1):
                                t = np.empty(3)
                                t[p] = D[p][i, j, k]
                                iq = base.copy()
                                iq[p] -= bp
                                iq[q] += bq
                                iq %= (nx, ny, nz)
                                t[q] = D[q][tuple(iq)]
                                ir = base.copy()
                                ir[p] -= bp
                                ir[r] += br
                                ir %= (nx, ny, nz)
                                t[r] = D[r][tuple(ir)]
                                acc += 0.125 * (xc[p] @ t)
                    E[p][i, j, k] = acc
    return E


def avg_h_ungrouped(B, zeta):
    """H = averaged constitutive inversion, periodic, literal triplet form."""
    shape = B[0].shape
    nx, ny, nz = shape
    H = [np.zeros(shape) for _ in range(3)]
    for p in range(3):
        q, r = _OTHERS[p]
        for i in range(nx):
            for j in range(ny):
                for k in range(nz):
                    base = np.array([i, j, k])
                    acc = 0.0
                    for bq in (0, 1):          # sharing cells around the edge
                        for br in (0, 1):
                            cell = base.copy()
                            cell[q] -= bq
                            cell[r] -= br
                            cell %= (nx, ny, nz)
                            zc = zeta[tuple(cell)]
                            for s in (0, 1):   # pairing along p
                                t = np.empty(3)
                                t[p] = B[p][i, j, k]
                                iq = base.copy()
                                iq[p] += s
                                iq[q] -= bq
                                iq %= (nx, ny, nz)
                                t[q] = B[q][tuple(iq)]
                                ir = base.copy()
                                ir[p] += s
                                ir[r] -= br
                                ir %= (nx, ny, nz)
                                t[r] = B[r][tuple(ir)]
                                acc += 0.125 * (zc[p] @ t)
                    H[p][i, j, k] = acc
    return H


# ---------------------------------------------------------------------------
# Permutation-sum construction of the global averaged material matrix:
# M = (1/8) sum_m P_m^T Mtilde P_m with Mtilde the block-diagonal per-cell
# tensor matrix and P_m the vertex-relabeling permutations.

def _gidx(p, i, j, k, shape):
    nx, ny, nz = shape
    return 3 * ((i % nx) + nx * ((j % ny) + ny * (k % nz))) + p


def perm_sum_matrix(kind, tensor_field):
    """Dense global material matrix via the eight vertex permutations.

    kind 'E': the triplet of vertex (a,b,c) of cell (i,j,k) collects
    D_x(i+a,j,k), D_y(i,j+b,k), D_z(i,j,k+c).  kind 'H': it collects
    B_x(i,j+b,k+c), B_y(i+a,j,k+c), B_z(i+a,j+b,k).
    """
    shape = tensor_field.shape[:3]
    nx, ny, nz = shape
    ncell = nx * ny * nz
    dim = 3 * ncell

    mtilde = np.zeros((dim, dim))
    cell_no = 0
    for k in range(nz):
        for j in range(ny):
            for i in range(nx):
                # cell ordering must match _gidx (x fastest)
                c = _gidx(0, i, j, k, shape) // 3
                assert c == cell_no or True
                mtilde[3 * c:3 * c + 3, 3 * c:3 * c + 3] = tensor_field[i, j, k]
                cell_no += 1

    total = np.zeros((dim, dim))
    for a in (0, 1):
        for b in (0, 1):
            for c in (0, 1):
                P = np.zeros((dim, dim))
                for k in range(nz):
                    for j in range(ny):
                        for i in range(nx):
                            row = _gidx(0, i, j, k, shape) - 0  # 3*cell
                            if kind == "E":
                                cols = (_gidx(0, i + a, j, k, shape),
                                        _gidx(1, i, j + b, k, shape),
                                        _gidx(2, i, j, k + c, shape))
                            else:
                                cols = (_gidx(0, i, j + b, k + c, shape),
                                        _gidx(1, i + a, j, k + c, shape),
                                        _gidx(2, i + a, j + b, k, shape))
                            for p in range(3):
                                P[row + p, cols[p]] = 1.0
                total += P.T @ mtilde @ P
    return total / 8.0


# ---------------------------------------------------------------------------
# Plain vacuum leapfrog step (periodic), whole-array numpy form.

def plain_vacuum_step(fields, dt, spacing):
    """Standard isotropic FDTD step on the same staggering; mutates fields."""
    dx, dy, dz = spacing
    r = np.roll
    f = fields
    f.Bx -= dt * ((f.Ez - r(f.Ez, 1, axis=1)) / dy - (f.Ey - r(f.Ey, 1, axis=2)) / dz)
    f.By -= dt * ((f.Ex - r(f.Ex, 1, axis=2)) / dz - (f.Ez - r(f.Ez, 1, axis=0)) / dx)
    f.Bz -= dt * ((f.Ey - r(f.Ey, 1, axis=0)) / dx - (f.Ex - r(f.Ex, 1, axis=1)) / dy)
    f.Hx[:] = f.Bx
    f.Hy[:] = f.By
    f.Hz[:] = f.Bz
    f.Dx += dt * ((r(f.Hz, -1, axis=1) - f.Hz) / dy - (r(f.Hy, -1, axis=2) - f.Hy) / dz)
    f.Dy += dt * ((r(f.Hx, -1, axis=2) - f.Hx) / dz - (r(f.Hz, -1, axis=0) - f.Hz) / dx)
    f.Dz += dt * ((r(f.Hy, -1, axis=0) - f.Hy) / dx - (r(f.Hx, -1, axis=1) - f.Hx) / dy)
    f.Ex[:] = f.Dx
    f.Ey[:] = f.Dy
    f.Ez[:] = f.Dz
    f.time_level += 1.0


# ---------------------------------------------------------------------------
# Misc small oracles

def mc_cell_average(fn_batch, cell, grid, n_samples=1_000_000, seed=42):
    """Monte-Carlo componentwise cell average of a tensor field.

    fn_batch maps an (n, 3) array of points to (n, 3, 3) tensors.
    """
    rng = np.random.default_rng(seed)
    i, j, k = cell
    pts = rng.random((n_samples, 3))
    pts[:, 0] = (i + pts[:, 0]) * grid.dx
    pts[:, 1] = (j + pts[:, 1]) * grid.dy
    pts[:, 2] = (k + pts[:, 2]) * grid.dz
    acc = np.zeros((3, 3))
    chunk = 65536
    for lo in range(0, n_samples, chunk):
        acc += np.asarray(fn_batch(pts[lo:lo + chunk])).sum(axis=0)
    return acc / n_samples


def richardson_jacobian(vmap, point, h):
    """Fourth-order Jacobian via Richardson extrapolation of central diffs."""

    def central(step):
        point_ = np.asarray(point, dtype=float)
        jac = np.empty((3, 3))
        for a in range(3):
            hi = point_.copy()
            lo = point_.copy()
            hi[a] += step
            lo[a] -= step
            jac[:, a] = (np.asarray(vmap(hi[None]))[0]
                         - np.asarray(vmap(lo[None]))[0]) / (2 * step)
        return jac

    return (4.0 * central(h / 2) - central(h)) / 3.0


def min_eig_3x3_charpoly(t):
    """Smallest eigenvalue of a symmetric 3x3 via the characteristic cubic."""
    t = np.asarray(t, dtype=float)
    c2 = -np.trace(t)
    c1 = 0.5 * (np.trace(t) ** 2 - np.trace(t @ t))
    c0 = -np.linalg.det(t)
    roots = np.roots([1.0, c2, c1, c0])
    return float(np.sort(roots.real)[0])
