import numpy as np
import pytest

from conftest import ko2_generator, random_hermitian_field, spin_y
from dkpair.grid_alg import (AlgElement, Derivation, RealStructureSpec,
                             apply_real_structure, direct_sum)
from dkpair.kclass import (BasePoint, GapClosedError, OsuValidationError,
                           bott_loop, exp_projection_loop, flatten,
                           make_osu_from_hamiltonian, osu_validate,
                           torsion_loop)
from dkpair.models import (decoupled_tri_symbol, quaternionic_structure,
                           qwz_symbol, spin_double)


def test_flatten_sign_function(point_grid):
    h = AlgElement.from_matrix_field(point_grid, np.diag([2.0, -0.5]))
    s = flatten(h)
    assert np.allclose(s.data[0], np.diag([1.0, -1.0]))


def test_flatten_idempotent_and_fixed_points(grid16, rng):
    h = random_hermitian_field(rng, grid16, 2, shift=4.0)
    s = flatten(h)
    assert (flatten(s) - s).norm_inf() < 1e-12
    one = AlgElement.unit(grid16, 2, 0)
    assert (s * s - one).norm_inf() < 1e-12
    assert (s - s.star()).norm_inf() < 1e-12
    # commutes with h pointwise
    assert (s * h - h * s).norm_inf() < 1e-11


def test_flatten_gap_error(grid16):
    h = AlgElement.from_matrix_field(
        grid16, np.broadcast_to(np.diag([1.0, 0.0]), (16, 16, 2, 2)).copy())
    with pytest.raises(GapClosedError) as err:
        flatten(h)
    assert err.value.smallest is not None


def test_flatten_commutes_with_real_structure(grid16, rng):
    rs = quaternionic_structure(k=0)
    h1 = random_hermitian_field(rng, grid16, 2, shift=4.0)
    h = spin_double(h1)
    s = flatten(h)
    ok = (apply_real_structure(rs, s) - s).norm_inf()
    assert ok < 1e-12


def test_osu_validate(point_grid):
    one_rho = AlgElement.unit(point_grid, 2, 0).append_generator()
    osu_validate(one_rho, 1e-12)
    with pytest.raises(OsuValidationError):
        osu_validate(one_rho.scale(0.5), 1e-10)
    even = AlgElement.unit(point_grid, 2, 1)
    with pytest.raises(OsuValidationError):
        osu_validate(even, 1e-10)


def test_osu_midpoint_of_anticommuting_pair(point_grid):
    x = AlgElement(point_grid, 1, 2)
    x.data[1] = np.eye(1)
    z = AlgElement(point_grid, 1, 2)
    z.data[2] = np.eye(1)
    t = 0.3
    mid = x.scale(np.cos(np.pi * t / 2)) + z.scale(np.sin(np.pi * t / 2))
    osu_validate(mid, 1e-12)


def test_make_osu_examples(point_grid):
    one = AlgElement.unit(point_grid, 2, 0)
    x = make_osu_from_hamiltonian(one)
    expect = one.append_generator()
    assert (x.body - expect).norm_inf() == 0.0


def test_bott_loop_constant_at_base(point_grid):
    e = BasePoint.standard_rho(point_grid, 2, 1, sign=-1)
    x = osu_validate(e.e, 1e-12)
    loop = bott_loop(x, e, order=16)
    seg = loop.segments[0]
    rho_new = AlgElement.unit(point_grid, 2, 1).append_generator()
    for j in range(seg.nodes.size):
        assert (seg.element(j) - rho_new).norm_inf() < 1e-13
        assert np.max(np.abs(seg.derivs[:, j])) < 1e-13


def test_bott_loop_osu_samples_and_closure(qwz_osu):
    x, e = qwz_osu
    loop = bott_loop(x, e, order=24)
    assert loop.sample_osu_residual(stride=3) < 1e-10
    a, b = loop.endpoints[0]
    assert (a - b).norm_inf() < 1e-12


def test_bott_loop_matches_exponential_form(grid16):
    # for x = h (x) rho against e = -1 (x) rho the loop reduces exactly to
    # cos(2 pi t q)(1 (x) rho') - sin(2 pi t q) e (x) 1 with q = (1 + h)/2
    h = qwz_symbol(grid16, 1.0)
    x = make_osu_from_hamiltonian(h)
    e = BasePoint.standard_rho(grid16, 2, 1, sign=-1)
    loop = bott_loop(x, e, order=12)
    seg = loop.segments[0]
    s = flatten(h)
    q = (s.data[0] + np.eye(2)) / 2
    wq, vq = np.linalg.eigh(q)
    for j in (0, 5, 11):
        t = seg.nodes[j]
        c = np.einsum("...ij,...j,...kj->...ik", vq,
                      np.cos(2 * np.pi * t * wq), np.conj(vq))
        sn = np.einsum("...ij,...j,...kj->...ik", vq,
                       np.sin(2 * np.pi * t * wq), np.conj(vq))
        expect = AlgElement(grid16, 2, 2)
        expect.data[2] = c          # 1 (x) rho_new
        expect.data[1] = sn         # -sin * e (x) 1, e = -1 (x) rho_1
        assert (seg.element(j) - expect).norm_inf() < 1e-10


def test_torsion_loop_structure(point_grid):
    x, e, y = ko2_generator(point_grid)
    rs = RealStructureSpec(fiber="c", clifford_signs=(-1,))
    loop = torsion_loop(x, e, y, rs=rs, order=12)
    assert len(loop.segments) == 4
    start = loop.endpoints[0][0]
    assert (start - e.e.append_generator(on_new=False)).norm_inf() < 1e-13
    half = loop.endpoints[2][0]
    assert (half - x.body.append_generator(on_new=False)).norm_inf() < 1e-13
    assert loop.sample_osu_residual(stride=2) < 1e-12


def test_torsion_loop_corner_products(point_grid):
    x, e, y = ko2_generator(point_grid)
    xb, eb = x.body, e.e
    a0 = eb.append_generator(on_new=False)
    a1 = AlgElement.unit(point_grid, 2, 1).append_generator()
    a2 = xb.append_generator(on_new=False)
    a3 = y.append_generator(coeff=1j)
    rho = AlgElement.unit(point_grid, 2, 1).append_generator()
    assert ((a0 * a1) - eb.append_generator()).norm_inf() == 0.0
    assert ((a1 * a2) + xb.append_generator()).norm_inf() == 0.0
    assert ((a2 * a3) - (y * xb).scale(1j).append_generator()).norm_inf() == 0.0
    assert ((a3 * a0) + (y * eb).scale(1j).append_generator()).norm_inf() == 0.0


def test_torsion_loop_precondition_failures(point_grid):
    x, e, y = ko2_generator(point_grid)
    bad_y = y.scale(0.5)
    with pytest.raises(ValueError, match="unitary"):
        torsion_loop(x, e, bad_y, order=8)
    askew = AlgElement(point_grid, 2, 1)
    askew.data[0] = np.diag([1j, 2j])
    with pytest.raises(ValueError):
        torsion_loop(x, e, askew, order=8)


def test_torsion_loop_half_symmetries(grid16):
    h = decoupled_tri_symbol(grid16, 1.0)
    x = make_osu_from_hamiltonian(h)
    e = BasePoint.standard_rho(grid16, 4, 1, sign=-1)
    y = spin_y(grid16, 4)
    rs = quaternionic_structure(k=1)
    loop = torsion_loop(x, e, y, rs=rs,
                        derivations=(Derivation(0), Derivation(1)), order=16)
    # first half invariant with the extra generator fixed, second negated
    from dkpair.grid_alg import check_invariance
    for seg, sign in ((loop.segments[0], 1), (loop.segments[3], -1)):
        ext = rs.extend(sign)
        mid = seg.element(seg.nodes.size // 2)
        ok, res = check_invariance(ext, mid, 1e-12)
        assert ok, res
        wrong = rs.extend(-sign)
        _, res_wrong = check_invariance(wrong, mid, 1e-12)
        assert res_wrong > 1e-3


def test_doubled_class_satisfies_property_y(grid16):
    h = decoupled_tri_symbol(grid16, 1.0)
    x = make_osu_from_hamiltonian(h)
    e = BasePoint.standard_rho(grid16, 4, 1, sign=-1)
    xx = osu_validate(direct_sum(x.body, x.body), 1e-10)
    ee = BasePoint(direct_sum(e.e, e.e))
    y = AlgElement(grid16, 8, 1)
    y.data[0][..., :4, 4:] = np.eye(4)
    y.data[0][..., 4:, :4] = -np.eye(4)
    rs = quaternionic_structure(k=1, fiber_block=4)
    loop = torsion_loop(xx, ee, y, rs=rs,
                        derivations=(Derivation(0), Derivation(1)), order=12)
    assert loop.sample_osu_residual() < 1e-12


def test_exp_projection_loop_periodic(grid16):
    s = flatten(qwz_symbol(grid16, 1.0))
    p = (s + AlgElement.unit(grid16, 2, 0)).scale(0.5)
    loop = exp_projection_loop(p, 32)
    seg = loop.segments[0]
    assert (seg.element(0) - AlgElement.unit(grid16, 2, 0)).norm_inf() < 1e-13


def test_flatten_with_clifford_factor(point_grid):
    x = AlgElement(point_grid, 2, 1)
    x.data[1] = np.diag([2.0, -0.5])
    s = flatten(x)
    expect = AlgElement(point_grid, 2, 1)
    expect.data[1] = np.diag([1.0, -1.0])
    assert (s - expect).norm_inf() < 1e-12
    assert s.homogeneous_part(0).norm_inf() < 1e-13
