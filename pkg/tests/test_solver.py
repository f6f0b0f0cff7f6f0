import numpy as np
import pytest

from anisofdtd import _kernels
from anisofdtd.analysis import (apply_update, flatten_triplets, state_vector)
from anisofdtd.boundary import build_index_maps
from anisofdtd.lattice import FieldSet, YeeGrid, create_lattice
from anisofdtd.materials import (MaterialGrid, preset_tensor,
                                 random_spd_field, build_layout)
from anisofdtd.solver import (CflResult, StepState, compute_cfl,
                              constitutive_avg_E, constitutive_avg_H,
                              constitutive_nonavg, curl_E_update_B,
                              curl_H_update_D, make_state, step)
from oracles import avg_e_ungrouped, avg_h_ungrouped, plain_vacuum_step


def vacuum_state(n=4, scheme="non_averaged", dt=0.1, boundaries=("periodic",) * 3):
    grid, fields = create_lattice((n, n, n), (1.0, 1.0, 1.0), boundaries)
    mat = MaterialGrid.vacuum(grid)
    return StepState(grid, fields, mat, dt, scheme)


# --- discrete curls ----------------------------------------------------------

def test_curl_of_constant_e_is_zero(rng):
    st = vacuum_state()
    for name in ("Ex", "Ey", "Ez"):
        st.fields.get(name)[:] = rng.standard_normal()   # one constant per comp
    before = [a.copy() for a in st.fields.b_vector()]
    curl_E_update_B(st)
    for old, new in zip(before, st.fields.b_vector()):
        np.testing.assert_array_equal(old, new)


def test_curl_e_unit_ex_impulse_hand_stencil():
    # unit Ex at cell (1,1,1), unit spacings, dt = 0.1: the stencil writes
    # -dt/dz and +dt/dz into By at k and k+1, +dt/dy and -dt/dy into Bz at
    # j and j+1.
    st = vacuum_state(dt=0.1)
    st.fields.Ex[1, 1, 1] = 1.0
    curl_E_update_B(st)
    expected_by = np.zeros((4, 4, 4))
    expected_by[1, 1, 1] = -0.1
    expected_by[1, 1, 2] = +0.1
    expected_bz = np.zeros((4, 4, 4))
    expected_bz[1, 1, 1] = +0.1
    expected_bz[1, 2, 1] = -0.1
    np.testing.assert_allclose(st.fields.By, expected_by, atol=1e-16)
    np.testing.assert_allclose(st.fields.Bz, expected_bz, atol=1e-16)
    np.testing.assert_array_equal(st.fields.Bx, 0.0)


def test_curl_h_unit_hz_impulse_hand_stencil():
    st = vacuum_state(dt=0.1)
    st.fields.Hz[1, 1, 1] = 1.0
    curl_H_update_D(st)
    expected_dx = np.zeros((4, 4, 4))
    expected_dx[1, 0, 1] = +0.1
    expected_dx[1, 1, 1] = -0.1
    expected_dy = np.zeros((4, 4, 4))
    expected_dy[0, 1, 1] = -0.1
    expected_dy[1, 1, 1] = +0.1
    np.testing.assert_allclose(st.fields.Dx, expected_dx, atol=1e-16)
    np.testing.assert_allclose(st.fields.Dy, expected_dy, atol=1e-16)
    np.testing.assert_array_equal(st.fields.Dz, 0.0)


def test_curl_e_matches_fourier_symbol(rng):
    # a discrete plane wave is an eigenfunction of the shift stencils; the
    # symbol follows from substituting exp(i k . x) into the differences
    n = 6
    grid = YeeGrid(n, n, n, 0.5, 0.8, 1.1)
    mode = np.array([1, 2, 5])
    kvec = 2 * np.pi * mode / (n * np.array(grid.spacing))
    I, J, K = np.meshgrid(*[np.arange(n)] * 3, indexing="ij")
    phase = np.exp(1j * (kvec[0] * I * grid.dx + kvec[1] * J * grid.dy
                         + kvec[2] * K * grid.dz))
    v = rng.standard_normal(3) + 1j * rng.standard_normal(3)

    def curl_on(part):
        st = StepState(grid, FieldSet.zeros(grid.shape),
                       MaterialGrid.vacuum(grid), 1.0, "non_averaged")
        st.fields.Ex[:] = part(v[0] * phase)
        st.fields.Ey[:] = part(v[1] * phase)
        st.fields.Ez[:] = part(v[2] * phase)
        maps = st.maps
        out = [np.zeros(grid.shape) for _ in range(3)]
        _kernels.curl_e_update_b(out[0], out[1], out[2], st.fields.Ex,
                                 st.fields.Ey, st.fields.Ez, -1.0,
                                 grid.dx, grid.dy, grid.dz,
                                 maps.fxm, maps.fym, maps.fzm)
        return out

    got = [re + 1j * im for re, im in zip(curl_on(np.real), curl_on(np.imag))]
    # backward-difference symbol per axis
    d = [(1.0 - np.exp(-1j * kvec[a] * grid.spacing[a])) / grid.spacing[a]
         for a in range(3)]
    expect = [(d[1] * v[2] - d[2] * v[1]) * phase,
              (d[2] * v[0] - d[0] * v[2]) * phase,
              (d[0] * v[1] - d[1] * v[0]) * phase]
    for g, e in zip(got, expect):
        assert np.abs(g - e).max() < 1e-13


def _probe_curls(grid):
    """Assemble C_e and C_h as dense matrices by probing the kernels."""
    maps = build_index_maps(grid)
    n3 = 3 * grid.n_cells
    Ce = np.zeros((n3, n3))
    Ch = np.zeros((n3, n3))
    shape = grid.shape
    for col in range(n3):
        basis = np.zeros(n3)
        basis[col] = 1.0
        from anisofdtd.analysis import unflatten_triplets
        ex, ey, ez = unflatten_triplets(basis, shape)
        out = [np.zeros(shape) for _ in range(3)]
        _kernels.curl_e_update_b(out[0], out[1], out[2], ex, ey, ez, -1.0,
                                 grid.dx, grid.dy, grid.dz,
                                 maps.fxm, maps.fym, maps.fzm)
        Ce[:, col] = flatten_triplets(*out)
        out = [np.zeros(shape) for _ in range(3)]
        _kernels.curl_h_update_d(out[0], out[1], out[2], ex, ey, ez, 1.0,
                                 grid.dx, grid.dy, grid.dz,
                                 maps.fxp, maps.fyp, maps.fzp)
        Ch[:, col] = flatten_triplets(*out)
    return Ce, Ch


@pytest.mark.parametrize("boundaries", [
    ("periodic",) * 3,
    ("pec",) * 3,
    ("pec", "periodic", "pec"),
])
def test_curl_adjointness(boundaries):
    grid = YeeGrid(3, 3, 3, 0.7, 1.0, 1.3, boundaries)
    Ce, Ch = _probe_curls(grid)
    np.testing.assert_array_equal(Ch, Ce.T)


def test_div_b_invariant_under_curl_e(rng):
    # discrete divergence of edge B at the vertices is untouched by curl E
    st = vacuum_state(n=5, dt=0.3)
    f = st.fields
    for name in ("Ex", "Ey", "Ez", "Bx", "By", "Bz"):
        f.get(name)[:] = rng.standard_normal(f.Dx.shape)

    def div_b():
        r = np.roll
        return ((f.Bx - r(f.Bx, 1, axis=0))
                + (f.By - r(f.By, 1, axis=1))
                + (f.Bz - r(f.Bz, 1, axis=2)))

    before = div_b()
    scale = np.abs(f.Bx).max()
    for _ in range(5):
        curl_E_update_B(st)
        assert np.abs(div_b() - before).max() < 1e-13 * scale


# --- constitutive updates ----------------------------------------------------

def test_nonavg_identity_exact(rng):
    st = vacuum_state()
    st.fields.Dx[:] = rng.standard_normal(st.fields.Dx.shape)
    st.fields.Dy[:] = rng.standard_normal(st.fields.Dx.shape)
    st.fields.Dz[:] = rng.standard_normal(st.fields.Dx.shape)
    constitutive_nonavg("E", st)
    np.testing.assert_array_equal(st.fields.Ex, st.fields.Dx)
    np.testing.assert_array_equal(st.fields.Ey, st.fields.Dy)
    np.testing.assert_array_equal(st.fields.Ez, st.fields.Dz)


def test_nonavg_single_cell_matrix_vector():
    grid = YeeGrid(2, 2, 2, 1.0, 1.0, 1.0)
    xi = np.linalg.inv(preset_tensor("eps", 1.0))
    mat = MaterialGrid.uniform(grid, preset_tensor("eps", 1.0),
                               preset_tensor("mu", 1.0))
    st = StepState(grid, FieldSet.zeros(grid.shape), mat, 1.0, "non_averaged")
    st.fields.Dx[0, 0, 0] = 1.0
    constitutive_nonavg("E", st)
    got = np.array([st.fields.Ex[0, 0, 0], st.fields.Ey[0, 0, 0],
                    st.fields.Ez[0, 0, 0]])
    np.testing.assert_allclose(got, mat.xi[0, 0, 0] @ [1.0, 0.0, 0.0],
                               rtol=1e-14)
    np.testing.assert_allclose(got, xi[:, 0], rtol=1e-12)


def test_nonavg_matches_block_diagonal_matrix(rng):
    grid = YeeGrid(3, 3, 3, 1.0, 1.0, 1.0)
    mat = random_spd_field(grid, seed=21)
    st = StepState(grid, FieldSet.zeros(grid.shape), mat, 1.0, "non_averaged")
    d = rng.standard_normal((3,) + grid.shape)
    st.fields.Dx[:], st.fields.Dy[:], st.fields.Dz[:] = d
    constitutive_nonavg("E", st)
    from anisofdtd.analysis import assemble_global_material_matrix
    M = assemble_global_material_matrix("non_averaged", "E", mat)
    expect = M @ flatten_triplets(*d)
    got = flatten_triplets(st.fields.Ex, st.fields.Ey, st.fields.Ez)
    np.testing.assert_allclose(got, expect, atol=1e-13 * np.abs(expect).max())


def test_avg_e_identity_exact(rng):
    st = vacuum_state(scheme="averaged")
    arr = rng.standard_normal((3,) + st.fields.Dx.shape)
    st.fields.Dx[:], st.fields.Dy[:], st.fields.Dz[:] = arr
    constitutive_avg_E(st)
    np.testing.assert_array_equal(st.fields.Ex, st.fields.Dx)
    np.testing.assert_array_equal(st.fields.Ey, st.fields.Dy)
    np.testing.assert_array_equal(st.fields.Ez, st.fields.Dz)


def test_avg_uniform_material_constant_field():
    grid = YeeGrid(4, 4, 4, 1.0, 1.0, 1.0)
    eps = preset_tensor("eps", 2.0)
    mat = MaterialGrid.uniform(grid, eps, preset_tensor("mu", 1.0))
    st = StepState(grid, FieldSet.zeros(grid.shape), mat, 1.0, "averaged")
    d = np.array([0.3, -1.2, 0.7])
    st.fields.Dx[:], st.fields.Dy[:], st.fields.Dz[:] = d[:, None, None, None]
    constitutive_avg_E(st)
    expect = mat.xi[0, 0, 0] @ d
    for p, name in enumerate(("Ex", "Ey", "Ez")):
        np.testing.assert_allclose(st.fields.get(name), expect[p], rtol=1e-13)


def test_avg_e_matches_ungrouped_triplet_oracle(rng):
    grid = YeeGrid(4, 4, 4, 1.0, 1.0, 1.0)
    mat = random_spd_field(grid, seed=31)
    st = StepState(grid, FieldSet.zeros(grid.shape), mat, 1.0, "averaged")
    d = rng.standard_normal((3,) + grid.shape)
    st.fields.Dx[:], st.fields.Dy[:], st.fields.Dz[:] = d
    constitutive_avg_E(st)
    oracle = avg_e_ungrouped(list(d), mat.xi)
    scale = max(np.abs(o).max() for o in oracle)
    for got, exp in zip((st.fields.Ex, st.fields.Ey, st.fields.Ez), oracle):
        assert np.abs(got - exp).max() < 1e-14 * scale


def test_avg_e_two_cell_configuration(rng):
    # distinct tensors in the two sharing cells only
    grid = YeeGrid(4, 4, 4, 1.0, 1.0, 1.0)
    eps = np.broadcast_to(np.eye(3), grid.shape + (3, 3)).copy()
    from anisofdtd.materials import random_spd_tensor
    eps[1, 1, 1] = random_spd_tensor(rng)
    eps[1, 1, 0] = random_spd_tensor(rng)
    mat = MaterialGrid.from_tensor_fields(
        eps, np.broadcast_to(np.eye(3), grid.shape + (3, 3)).copy())
    st = StepState(grid, FieldSet.zeros(grid.shape), mat, 1.0, "averaged")
    d = rng.standard_normal((3,) + grid.shape)
    st.fields.Dx[:], st.fields.Dy[:], st.fields.Dz[:] = d
    constitutive_avg_E(st)
    oracle = avg_e_ungrouped(list(d), mat.xi)
    scale = max(np.abs(o).max() for o in oracle)
    for got, exp in zip((st.fields.Ex, st.fields.Ey, st.fields.Ez), oracle):
        assert np.abs(got - exp).max() < 1e-14 * scale


def test_avg_h_identity_exact(rng):
    st = vacuum_state(scheme="averaged")
    arr = rng.standard_normal((3,) + st.fields.Bx.shape)
    st.fields.Bx[:], st.fields.By[:], st.fields.Bz[:] = arr
    constitutive_avg_H(st)
    np.testing.assert_array_equal(st.fields.Hx, st.fields.Bx)
    np.testing.assert_array_equal(st.fields.Hy, st.fields.By)
    np.testing.assert_array_equal(st.fields.Hz, st.fields.Bz)


def test_avg_h_uniform_constant():
    grid = YeeGrid(4, 4, 4, 1.0, 1.0, 1.0)
    mat = MaterialGrid.uniform(grid, np.eye(3), preset_tensor("mu", 3.0))
    st = StepState(grid, FieldSet.zeros(grid.shape), mat, 1.0, "averaged")
    b = np.array([1.1, 0.4, -0.6])
    st.fields.Bx[:], st.fields.By[:], st.fields.Bz[:] = b[:, None, None, None]
    constitutive_avg_H(st)
    expect = mat.zeta[0, 0, 0] @ b
    for p, name in enumerate(("Hx", "Hy", "Hz")):
        np.testing.assert_allclose(st.fields.get(name), expect[p], rtol=1e-13)


def test_avg_h_matches_ungrouped_triplet_oracle(rng):
    grid = YeeGrid(4, 4, 4, 1.0, 1.0, 1.0)
    mat = random_spd_field(grid, seed=41)
    st = StepState(grid, FieldSet.zeros(grid.shape), mat, 1.0, "averaged")
    b = rng.standard_normal((3,) + grid.shape)
    st.fields.Bx[:], st.fields.By[:], st.fields.Bz[:] = b
    constitutive_avg_H(st)
    oracle = avg_h_ungrouped(list(b), mat.zeta)
    scale = max(np.abs(o).max() for o in oracle)
    for got, exp in zip((st.fields.Hx, st.fields.Hy, st.fields.Hz), oracle):
        assert np.abs(got - exp).max() < 1e-14 * scale


# --- full step ---------------------------------------------------------------

def test_step_zero_stays_zero():
    st = vacuum_state(scheme="averaged")
    step(st)
    assert state_vector(st.fields).max() == 0.0


@pytest.mark.parametrize("scheme", ["non_averaged", "averaged"])
def test_vacuum_step_bitwise_matches_plain_fdtd(rng, scheme):
    st = vacuum_state(n=6, scheme=scheme, dt=0.23)
    ref = st.fields.copy()
    for name in ("Dx", "Dy", "Dz", "Bx", "By", "Bz"):
        v = rng.standard_normal(st.fields.Dx.shape)
        st.fields.get(name)[:] = v
        ref.get(name)[:] = v
    # co-located derived fields
    for a, b in (("Ex", "Dx"), ("Ey", "Dy"), ("Ez", "Dz"),
                 ("Hx", "Bx"), ("Hy", "By"), ("Hz", "Bz")):
        st.fields.get(a)[:] = st.fields.get(b)
        ref.get(a)[:] = ref.get(b)
    for _ in range(7):
        step(st)
        plain_vacuum_step(ref, st.dt, st.grid.spacing)
        for name in ("Dx", "Ey", "Bz", "Hx"):
            np.testing.assert_array_equal(st.fields.get(name), ref.get(name))


def test_identity_material_scheme_equivalence(rng):
    grid = YeeGrid(5, 5, 5, 1.0, 1.0, 1.0)
    states = {}
    for scheme in ("non_averaged", "averaged"):
        st = StepState(grid, FieldSet.zeros(grid.shape),
                       MaterialGrid.vacuum(grid), 0.2, scheme)
        states[scheme] = st
    init = rng.standard_normal((6,) + grid.shape)
    for st in states.values():
        for arr, name in zip(init, ("Dx", "Dy", "Dz", "Bx", "By", "Bz")):
            st.fields.get(name)[:] = arr
        for a, b in (("Ex", "Dx"), ("Ey", "Dy"), ("Ez", "Dz")):
            st.fields.get(a)[:] = st.fields.get(b)
    scale = np.abs(init).max()
    for n in range(20):
        for st in states.values():
            step(st)
        for name in ("Dx", "Dy", "Dz", "Bx", "By", "Bz"):
            a = states["non_averaged"].fields.get(name)
            b = states["averaged"].fields.get(name)
            assert np.abs(a - b).max() <= 1e-15 * scale, (name, n)


@pytest.mark.parametrize("scheme", ["non_averaged", "averaged"])
def test_one_step_linearity(rng, scheme):
    grid = YeeGrid(4, 4, 4, 1.0, 1.0, 1.0)
    mat = random_spd_field(grid, seed=11)
    dt = 0.4 * compute_cfl(mat, grid, scheme).dt_max
    st = StepState(grid, FieldSet.zeros(grid.shape), mat, dt, scheme)
    dim = 6 * grid.n_cells
    u = rng.standard_normal(dim)
    v = rng.standard_normal(dim)
    alpha, beta = 0.7, -1.3
    lhs = apply_update(st, alpha * u + beta * v)
    rhs = alpha * apply_update(st, u) + beta * apply_update(st, v)
    assert np.abs(lhs - rhs).max() < 1e-13 * np.abs(rhs).max()


# --- CFL ---------------------------------------------------------------------

def test_cfl_vacuum_courant_limit():
    grid = YeeGrid(8, 8, 8, 1.0, 1.0, 1.0)
    res = compute_cfl(MaterialGrid.vacuum(grid), grid, "non_averaged")
    assert isinstance(res, CflResult)
    assert res.converged
    assert abs(res.dt_max - 1 / np.sqrt(3)) < 0.01 / np.sqrt(3)


def test_cfl_anisotropic_spacing_vacuum():
    grid = YeeGrid(8, 8, 8, 0.5, 1.0, 2.0)
    res = compute_cfl(MaterialGrid.vacuum(grid), grid, "non_averaged")
    expect = 2.0 / np.sqrt(4 * (1 / 0.25 + 1 / 1.0 + 1 / 4.0))
    assert abs(res.dt_max - expect) < 0.01 * expect


def test_cfl_gamma_scaling_linear():
    grid = YeeGrid(6, 6, 6, 1.0, 1.0, 1.0)
    layout = build_layout("random", {"gamma": 1.0}, grid, seed=3)
    b1 = compute_cfl(layout, grid, "averaged").dt_max
    b2 = compute_cfl(layout.scaled(100.0), grid, "averaged").dt_max
    assert abs(b2 / b1 - 100.0) < 1e-10 * 100.0


def test_cfl_averaged_vs_nonavg_both_positive():
    grid = YeeGrid(6, 6, 6, 1.0, 1.0, 1.0)
    layout = build_layout("random", {"gamma": 100.0}, grid, seed=3)
    for scheme in ("non_averaged", "averaged"):
        res = compute_cfl(layout, grid, scheme)
        assert res.dt_max > 0 and np.isfinite(res.dt_max)
